//! End-to-end runs: training, evaluation and the artifacts they write.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::codec::SpikeTrain;
use crate::config::RunConfig;
use crate::dataset::{self, LabeledImage};
use crate::decoding::{self, EvalMode, EvalSummary, Prediction};
use crate::error::{Error, Result};
use crate::metrics::{self, OpCounters, ReportFormat};
use crate::network::WeightMatrix;
use crate::plasticity::{self, EpochStats};
use crate::rng::{self, Stream};

/// First `n` items of `data` in file order, or all of them.
pub fn select(data: &[LabeledImage], n: Option<usize>) -> Result<&[LabeledImage]> {
    match n {
        None => Ok(data),
        Some(n) if n <= data.len() => Ok(&data[..n]),
        Some(n) => Err(Error::Dimension(format!(
            "asked for {n} images but the file holds {}",
            data.len()
        ))),
    }
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub weights: WeightMatrix,
    pub epochs: Vec<EpochStats>,
    pub counters: OpCounters,
    /// Counters of the first epoch alone.
    pub first_epoch: OpCounters,
}

/// Initializes weights and runs `cfg.epochs` online epochs over `data`.
pub fn train(
    cfg: &RunConfig,
    data: &[LabeledImage],
    mut on_epoch: impl FnMut(u32, &EpochStats),
) -> Result<TrainRun> {
    let pipeline = cfg.pipeline()?;
    let lp = cfg.learning()?;
    let mut weights = plasticity::init_weights(pipeline.inputs(), pipeline.outputs(), &lp)?;
    let mut counters = OpCounters::default();
    let mut first_epoch = OpCounters::default();
    let mut epochs = Vec::with_capacity(lp.epochs as usize);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..lp.epochs {
        if cfg.shuffle {
            order.sort_unstable();
            order.shuffle(&mut rng::stream(lp.seed, Stream::Epoch(epoch)));
        }
        let stats = plasticity::train_epoch(
            &mut weights,
            order.iter().map(|&i| &data[i]),
            &pipeline,
            &lp,
            &mut counters,
        )?;
        if epoch == 0 {
            first_epoch = counters;
        }
        on_epoch(epoch, &stats);
        epochs.push(stats);
    }
    Ok(TrainRun {
        weights,
        epochs,
        counters,
        first_epoch,
    })
}

pub fn epochs_csv(epochs: &[EpochStats]) -> String {
    let mut out = String::from("epoch,images,false_fire,false_missing,updates,weighting_ops,train_acc\n");
    for (e, s) in epochs.iter().enumerate() {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            e + 1,
            s.images,
            s.false_fire,
            s.false_missing,
            s.updates,
            s.weighting_ops,
            s.train_acc()
        )
        .unwrap();
    }
    out
}

/// `metric,value` report followed by the processing-element cycle estimate.
pub fn metrics_csv(cfg: &RunConfig, counters: &OpCounters) -> Result<String> {
    let mut out = metrics::report(counters, &cfg.energy_model()?, ReportFormat::Csv);
    let cycles = metrics::pe_cycles(counters.weighting_ops, cfg.multipliers)?;
    writeln!(out, "pe_cycles,{cycles}").unwrap();
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct EvalRun {
    pub predictions: Vec<Prediction>,
    pub counters: OpCounters,
    pub summary: EvalSummary,
}

pub fn evaluate(
    cfg: &RunConfig,
    weights: &WeightMatrix,
    data: &[LabeledImage],
    mode: EvalMode,
) -> Result<EvalRun> {
    let pipeline = cfg.pipeline()?;
    let mut counters = OpCounters::default();
    let predictions = decoding::evaluate(weights, data, &pipeline, mode, &mut counters)?;
    Ok(EvalRun {
        summary: EvalSummary::of(&predictions),
        predictions,
        counters,
    })
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// Loads the training subset, trains, and writes `weights_out` together with
/// `epochs.csv` and `train_metrics.csv` in `out_dir`.
pub fn run_train(
    cfg: &RunConfig,
    images: &Path,
    labels: &Path,
    weights_out: &Path,
    out_dir: &Path,
    on_epoch: impl FnMut(u32, &EpochStats),
) -> Result<TrainRun> {
    let all = dataset::load_labeled(images, labels)?;
    let data = select(&all, cfg.train_n)?;
    let run = train(cfg, data, on_epoch)?;
    ensure_dir(out_dir)?;
    run.weights.save(weights_out)?;
    write(&out_dir.join("epochs.csv"), &epochs_csv(&run.epochs))?;
    write(&out_dir.join("train_metrics.csv"), &metrics_csv(cfg, &run.counters)?)?;
    Ok(run)
}

/// Fire&Cut evaluation of saved weights; writes `eval.csv` and
/// `eval_metrics.csv` in `out_dir`.
pub fn run_eval(
    cfg: &RunConfig,
    weights: &Path,
    images: &Path,
    labels: &Path,
    out_dir: &Path,
) -> Result<EvalRun> {
    let weights = WeightMatrix::load(weights)?;
    let all = dataset::load_labeled(images, labels)?;
    let data = select(&all, cfg.test_n)?;
    let run = evaluate(cfg, &weights, data, EvalMode::FireAndCut)?;
    ensure_dir(out_dir)?;
    write(&out_dir.join("eval.csv"), &decoding::predictions_csv(&run.predictions))?;
    write(&out_dir.join("eval_metrics.csv"), &metrics_csv(cfg, &run.counters)?)?;
    Ok(run)
}

/// Spike train of image `index` of an IDX image file.
pub fn encode_one(cfg: &RunConfig, images: &Path, index: usize) -> Result<SpikeTrain> {
    let all = dataset::load_idx_images(images)?;
    let image = all.get(index).ok_or_else(|| {
        Error::Dimension(format!("image index {index} is out of range (file holds {})", all.len()))
    })?;
    cfg.encoder_stage()?.encode(image)
}

/// Structural summary: input and output counts, synapses and frame length.
pub fn info(cfg: &RunConfig) -> Result<String> {
    let encoder = cfg.encoder_stage()?;
    let inputs = encoder.neuron_count();
    Ok(format!(
        "{inputs} inputs, {} outputs, {} synapses, T={}ms",
        cfg.outputs,
        inputs * cfg.outputs,
        encoder.frame() * crate::codec::TICK_MS
    ))
}
