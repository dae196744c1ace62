use std::path::Path;
use std::process::{Command, Output};

use ptspike::codec::GrayImage;
use ptspike::dataset;

fn ptspike(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptspike"))
        .args(args)
        .env("RUST_LOG", "off")
        .output()
        .unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn write_fixture(dir: &Path, n: usize) -> (String, String) {
    let images: Vec<GrayImage> = (0..n)
        .map(|i| {
            let mut img = GrayImage::filled(28, 0);
            for c in 0..28 {
                img.pixels_mut()[(i % 28) * 28 + c] = 200;
            }
            img
        })
        .collect();
    let labels: Vec<u8> = (0..n).map(|i| (i % 10) as u8).collect();
    let (ip, lp) = (dir.join("img.idx"), dir.join("lbl.idx"));
    dataset::write_idx_images(&ip, &images).unwrap();
    dataset::write_idx_labels(&lp, &labels).unwrap();
    (ip.to_string_lossy().into_owned(), lp.to_string_lossy().into_owned())
}

#[test]
fn info_prints_structure() {
    let out = ptspike(&["info"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out).trim(), "169 inputs, 10 outputs, 1690 synapses, T=16ms");
    let out = ptspike(&["info", "--set", "encoder=per_pixel", "--set", "T=256"]);
    assert_eq!(stdout(&out).trim(), "784 inputs, 10 outputs, 7840 synapses, T=256ms");
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# desk run\nR = 25\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    assert_eq!(stdout(&ptspike(&["info", "--config", cfg])).trim(), "144 inputs, 10 outputs, 1440 synapses, T=25ms");
    let out = ptspike(&["info", "--config", cfg, "--set", "R=100"]);
    assert_eq!(stdout(&out).trim(), "100 inputs, 10 outputs, 1000 synapses, T=100ms");
}

#[test]
fn usage_and_config_errors_exit_1() {
    assert_eq!(code(&ptspike(&[])), 1);
    assert_eq!(code(&ptspike(&["frobnicate"])), 1);
    assert_eq!(code(&ptspike(&["info", "--set", "R=15"])), 1);
    assert_eq!(code(&ptspike(&["info", "--set", "nonsense=1"])), 1);
    assert_eq!(code(&ptspike(&["info", "--set", "kernel=cubic"])), 1);
    assert_eq!(code(&ptspike(&["info", "--config", "/nonexistent/run.cfg"])), 1);
    // Missing required paths are usage errors, not data errors.
    assert_eq!(code(&ptspike(&["train"])), 1);
    let out = ptspike(&["info", "--set", "R=15"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains('R'));
}

#[test]
fn help_exits_0() {
    assert_eq!(code(&ptspike(&["--help"])), 0);
    assert_eq!(code(&ptspike(&["--version"])), 0);
}

#[test]
fn data_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.idx");
    std::fs::write(&bad, [0u8, 0, 8, 3, 0, 0, 0, 5]).unwrap();
    let bad = bad.to_str().unwrap();
    assert_eq!(code(&ptspike(&["encode", "--images", bad])), 2);
    assert_eq!(code(&ptspike(&["encode", "--images", "/nonexistent/images.idx"])), 2);

    let (images, labels) = write_fixture(dir.path(), 12);
    assert_eq!(code(&ptspike(&["encode", "--images", &images, "--index", "12"])), 2);
    // Too few training images for the requested subset.
    let w = dir.path().join("w.txt");
    let w = w.to_str().unwrap();
    let out = ptspike(&["train", "--images", &images, "--labels", &labels, "--weights", w, "--set", "train_n=50"]);
    assert_eq!(code(&out), 2);
    // Weights of the wrong shape.
    std::fs::write(w, "PTSPIKE-WEIGHTS v1\n2 1\n0.5\n0.5\n").unwrap();
    let out = ptspike(&["eval", "--images", &images, "--labels", &labels, "--weights", w, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn encode_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (images, _) = write_fixture(dir.path(), 3);
    let out = ptspike(&["encode", "--images", &images, "--index", "1"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("neuron,delay"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 169);
    // Row 1 is lit; the first patch row covers it, the last does not.
    assert_ne!(rows[0], "0,");
    assert_eq!(rows[168], "168,");

    let csv = dir.path().join("spikes.csv");
    let out = ptspike(&["encode", "--images", &images, "--index", "1", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert_eq!(std::fs::read_to_string(csv).unwrap(), text);
}

#[test]
fn train_then_eval_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (images, labels) = write_fixture(dir.path(), 40);
    let out_dir = dir.path().join("out");
    let w = dir.path().join("w.txt");
    let (w, out_dir) = (w.to_str().unwrap(), out_dir.to_str().unwrap());
    let common = ["--images", &images, "--labels", &labels, "--weights", w, "--out", out_dir, "--set", "epochs=2"];
    let out = ptspike(&[&["train"], &common[..]].concat());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let epochs = std::fs::read_to_string(Path::new(out_dir).join("epochs.csv")).unwrap();
    assert!(epochs.starts_with("epoch,images,false_fire,false_missing,updates,weighting_ops,train_acc\n"));
    assert_eq!(epochs.lines().count(), 3);
    assert!(std::fs::read_to_string(w).unwrap().starts_with("PTSPIKE-WEIGHTS v1\n169 10\n"));

    let out = ptspike(&[&["eval"], &common[..]].concat());
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("accuracy"));
    let eval = std::fs::read_to_string(Path::new(out_dir).join("eval.csv")).unwrap();
    assert!(eval.starts_with("index,true_label,pred_label,decision_tick,fallback\n"));
    assert_eq!(eval.lines().count(), 41);
    let metrics = std::fs::read_to_string(Path::new(out_dir).join("eval_metrics.csv")).unwrap();
    assert!(metrics.starts_with("metric,value\n"));
    assert!(metrics.contains("\npe_cycles,"));
}
