//! Run configuration: `key = value` lines with `#` comments. Flag overrides
//! beat the file, the file beats the defaults.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::codec::{Encoder, EncoderConfig};
use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::metrics::EnergyModel;
use crate::network::{IfcParams, Readout};
use crate::pipeline::{ClassOrder, Participation, Pipeline};
use crate::plasticity::{default_init_scale, LearningParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    Linear,
    DualExp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncoderKind {
    Kernel,
    PerPixel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub image_width: usize,
    pub kernel_pixels: usize,
    pub stride: usize,
    /// Frame override; only the per-pixel encoder may differ from `R`.
    pub frame: Option<u32>,
    pub kernel: KernelKind,
    pub tau: Option<f64>,
    pub tau1: Option<f64>,
    pub tau2: Option<f64>,
    pub v_th: f64,
    pub lambda: f64,
    pub epochs: u32,
    pub seed: u64,
    pub outputs: usize,
    pub participation: Participation,
    pub readout: Readout,
    pub encoder: EncoderKind,
    pub train_n: Option<usize>,
    pub test_n: Option<usize>,
    pub alpha: f64,
    pub multipliers: u32,
    pub init_scale: Option<f64>,
    pub margin: f64,
    pub class_order: Option<Vec<usize>>,
    /// Reshuffle the training images before every epoch.
    pub shuffle: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            image_width: 28,
            kernel_pixels: 16,
            stride: 2,
            frame: None,
            kernel: KernelKind::Linear,
            tau: None,
            tau1: None,
            tau2: None,
            v_th: 1.0,
            lambda: 0.01,
            epochs: 20,
            seed: 42,
            outputs: 10,
            participation: Participation::Huffman,
            readout: Readout::Huffman,
            encoder: EncoderKind::Kernel,
            train_n: None,
            test_n: None,
            alpha: 1.0,
            multipliers: 4,
            init_scale: None,
            margin: 0.3,
            class_order: None,
            shuffle: true,
        }
    }
}

pub const KEYS: &[&str] = &[
    "P",
    "R",
    "S",
    "T",
    "kernel",
    "tau",
    "tau1",
    "tau2",
    "v_th",
    "lambda",
    "epochs",
    "seed",
    "outputs",
    "participation",
    "readout",
    "encoder",
    "train_n",
    "test_n",
    "alpha",
    "multipliers",
    "init_scale",
    "margin",
    "class_order",
    "shuffle",
];

/// Where a setting came from, for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
enum Origin {
    Line(usize),
    Flag,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "config line {n}"),
            Origin::Flag => f.write_str("--set override"),
        }
    }
}

fn entry_error(origin: &Origin, key: &str, reason: impl Into<String>) -> Error {
    Error::ConfigEntry {
        location: origin.to_string(),
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn parse_value<T: FromStr>(origin: &Origin, key: &str, raw: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    raw.parse()
        .map_err(|e| entry_error(origin, key, format!("cannot parse `{raw}`: {e}")))
}

fn parse_optional<T: FromStr>(origin: &Origin, key: &str, raw: &str) -> Result<Option<T>>
where
    T::Err: fmt::Display,
{
    if matches!(raw, "auto" | "all") {
        Ok(None)
    } else {
        parse_value(origin, key, raw).map(Some)
    }
}

fn parse_bool(origin: &Origin, key: &str, raw: &str) -> Result<bool> {
    match raw {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(entry_error(origin, key, format!("expected true or false, got `{raw}`"))),
    }
}

/// The fully resolved configuration plus any warnings raised while reading.
#[derive(Debug, Clone)]
pub struct Loaded {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

pub fn parse_config(file_text: Option<&str>, overrides: &[String]) -> Result<Loaded> {
    let mut settings: BTreeMap<String, (String, Origin)> = BTreeMap::new();
    let mut warnings = Vec::new();
    let mut record = |key: &str, value: &str, origin: Origin| -> Result<()> {
        if !KEYS.contains(&key) {
            return Err(entry_error(&origin, key, "unknown key"));
        }
        if let Some((_, prev)) = settings.get(key) {
            if origin != Origin::Flag {
                warnings.push(format!("{origin}: `{key}` overrides the value from {prev}"));
            }
        }
        settings.insert(key.to_string(), (value.to_string(), origin));
        Ok(())
    };

    for (i, raw) in file_text.unwrap_or("").lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let origin = Origin::Line(i + 1);
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| entry_error(&origin, line, "expected `key = value`"))?;
        record(key.trim(), value.trim(), origin)?;
    }
    for ov in overrides {
        let (key, value) = ov
            .split_once('=')
            .ok_or_else(|| entry_error(&Origin::Flag, ov, "expected `key=value`"))?;
        record(key.trim(), value.trim(), Origin::Flag)?;
    }

    let mut c = RunConfig::default();
    for (key, (raw, origin)) in &settings {
        let o = origin;
        let v = raw.as_str();
        let k = key.as_str();
        match k {
            "P" => c.image_width = parse_value(o, k, v)?,
            "R" => c.kernel_pixels = parse_value(o, k, v)?,
            "S" => c.stride = parse_value(o, k, v)?,
            "T" => c.frame = parse_optional(o, k, v)?,
            "kernel" => {
                c.kernel = match v {
                    "linear" => KernelKind::Linear,
                    "dual_exp" | "exponential" => KernelKind::DualExp,
                    _ => return Err(entry_error(o, k, format!("expected linear or dual_exp, got `{v}`"))),
                }
            }
            "tau" => c.tau = parse_optional(o, k, v)?,
            "tau1" => c.tau1 = parse_optional(o, k, v)?,
            "tau2" => c.tau2 = parse_optional(o, k, v)?,
            "v_th" => c.v_th = parse_value(o, k, v)?,
            "lambda" => c.lambda = parse_value(o, k, v)?,
            "epochs" => c.epochs = parse_value(o, k, v)?,
            "seed" => c.seed = parse_value(o, k, v)?,
            "outputs" => c.outputs = parse_value(o, k, v)?,
            "participation" => {
                c.participation = match v {
                    "huffman" => Participation::Huffman,
                    "literal" => Participation::Literal,
                    _ => return Err(entry_error(o, k, format!("expected huffman or literal, got `{v}`"))),
                }
            }
            "readout" => {
                c.readout = match v {
                    "huffman" => Readout::Huffman,
                    "temporal" => Readout::Temporal,
                    _ => return Err(entry_error(o, k, format!("expected huffman or temporal, got `{v}`"))),
                }
            }
            "encoder" => {
                c.encoder = match v {
                    "kernel" => EncoderKind::Kernel,
                    "per_pixel" => EncoderKind::PerPixel,
                    _ => return Err(entry_error(o, k, format!("expected kernel or per_pixel, got `{v}`"))),
                }
            }
            "train_n" => c.train_n = parse_optional(o, k, v)?,
            "test_n" => c.test_n = parse_optional(o, k, v)?,
            "alpha" => c.alpha = parse_value(o, k, v)?,
            "multipliers" => c.multipliers = parse_value(o, k, v)?,
            "init_scale" => c.init_scale = parse_optional(o, k, v)?,
            "margin" => c.margin = parse_value(o, k, v)?,
            "class_order" => {
                c.class_order = if v == "identity" {
                    None
                } else {
                    Some(
                        v.split(',')
                            .map(|s| parse_value(o, k, s.trim()))
                            .collect::<Result<_>>()?,
                    )
                }
            }
            "shuffle" => c.shuffle = parse_bool(o, k, v)?,
            _ => unreachable!("keys are checked on entry"),
        }
    }

    c.validate().map_err(|e| match e {
        Error::Config { field, reason } => {
            let origin = settings
                .get(field)
                .map(|(_, o)| o.to_string())
                .unwrap_or_else(|| "resolved config".to_string());
            Error::ConfigEntry {
                location: origin,
                key: field.to_string(),
                reason,
            }
        }
        other => other,
    })?;
    Ok(Loaded {
        config: c,
        warnings,
    })
}

impl RunConfig {
    pub fn structure(&self) -> Result<EncoderConfig> {
        EncoderConfig::derive(self.image_width, self.kernel_pixels, self.stride)
    }

    pub fn encoder_stage(&self) -> Result<Encoder> {
        let structure = self.structure()?;
        match self.encoder {
            EncoderKind::Kernel => {
                if let Some(t) = self.frame.filter(|&t| t != structure.frame()) {
                    return Err(Error::config(
                        "T",
                        format!("the kernel encoder fixes T = R = {}, got {t}", structure.frame()),
                    ));
                }
                Ok(Encoder::Kernel(structure))
            }
            EncoderKind::PerPixel => {
                let frame = self.frame.unwrap_or(structure.frame());
                if frame == 0 {
                    return Err(Error::config("T", "frame must be at least one tick"));
                }
                Ok(Encoder::PerPixel {
                    image_width: self.image_width,
                    frame,
                })
            }
        }
    }

    pub fn frame_ticks(&self) -> Result<u32> {
        Ok(self.encoder_stage()?.frame())
    }

    pub fn spike_kernel(&self) -> Result<Kernel> {
        let frame = self.frame_ticks()?;
        let t = f64::from(frame);
        match self.kernel {
            KernelKind::Linear => Kernel::linear(self.tau.unwrap_or(1.0 / t)),
            KernelKind::DualExp => {
                Kernel::dual_exp(self.tau1.unwrap_or(t / 4.0), self.tau2.unwrap_or(t / 16.0), frame)
            }
        }
    }

    pub fn ifc(&self) -> Result<IfcParams> {
        IfcParams::new(self.v_th)
    }

    pub fn class_order(&self) -> Result<ClassOrder> {
        match &self.class_order {
            None => Ok(ClassOrder::identity(self.outputs)),
            Some(order) => {
                if order.len() != self.outputs {
                    return Err(Error::config(
                        "class_order",
                        format!("lists {} classes but outputs = {}", order.len(), self.outputs),
                    ));
                }
                ClassOrder::new(order.clone())
            }
        }
    }

    pub fn pipeline(&self) -> Result<Pipeline> {
        Ok(Pipeline::new(
            self.encoder_stage()?,
            self.spike_kernel()?,
            self.ifc()?,
            self.class_order()?,
        )
        .with_participation(self.participation)
        .with_readout(self.readout))
    }

    pub fn learning(&self) -> Result<LearningParams> {
        let inputs = self.encoder_stage()?.neuron_count();
        let lp = LearningParams {
            lambda: self.lambda,
            epochs: self.epochs,
            seed: self.seed,
            init_scale: self.init_scale.unwrap_or(default_init_scale(self.v_th, inputs)),
            margin: self.margin,
        };
        lp.validate()?;
        Ok(lp)
    }

    pub fn energy_model(&self) -> Result<EnergyModel> {
        EnergyModel::new(self.alpha)
    }

    pub fn validate(&self) -> Result<()> {
        self.pipeline()?;
        self.learning()?;
        self.energy_model()?;
        if self.outputs == 0 {
            return Err(Error::config("outputs", "need at least one output neuron"));
        }
        if self.multipliers == 0 {
            return Err(Error::config("multipliers", "need at least one multiplier"));
        }
        Ok(())
    }

    /// Resolved configuration in the same `key = value` syntax it is read in.
    pub fn to_text(&self) -> String {
        let opt = |v: Option<String>| v.unwrap_or_else(|| "auto".into());
        let mut out = String::new();
        let mut kv = |k: &str, v: String| writeln!(out, "{k} = {v}").unwrap();
        kv("P", self.image_width.to_string());
        kv("R", self.kernel_pixels.to_string());
        kv("S", self.stride.to_string());
        kv("T", opt(self.frame.map(|t| t.to_string())));
        kv(
            "kernel",
            match self.kernel {
                KernelKind::Linear => "linear",
                KernelKind::DualExp => "dual_exp",
            }
            .into(),
        );
        kv("tau", opt(self.tau.map(|t| t.to_string())));
        kv("tau1", opt(self.tau1.map(|t| t.to_string())));
        kv("tau2", opt(self.tau2.map(|t| t.to_string())));
        kv("v_th", self.v_th.to_string());
        kv("lambda", self.lambda.to_string());
        kv("epochs", self.epochs.to_string());
        kv("seed", self.seed.to_string());
        kv("outputs", self.outputs.to_string());
        kv(
            "participation",
            match self.participation {
                Participation::Huffman => "huffman",
                Participation::Literal => "literal",
            }
            .into(),
        );
        kv(
            "readout",
            match self.readout {
                Readout::Huffman => "huffman",
                Readout::Temporal => "temporal",
            }
            .into(),
        );
        kv(
            "encoder",
            match self.encoder {
                EncoderKind::Kernel => "kernel",
                EncoderKind::PerPixel => "per_pixel",
            }
            .into(),
        );
        kv("train_n", self.train_n.map_or("all".into(), |n| n.to_string()));
        kv("test_n", self.test_n.map_or("all".into(), |n| n.to_string()));
        kv("alpha", self.alpha.to_string());
        kv("multipliers", self.multipliers.to_string());
        kv("init_scale", opt(self.init_scale.map(|s| s.to_string())));
        kv("margin", self.margin.to_string());
        kv(
            "class_order",
            self.class_order.as_ref().map_or("identity".into(), |o| {
                o.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(",")
            }),
        );
        kv("shuffle", self.shuffle.to_string());
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<Loaded> {
        parse_config(Some(text), &[])
    }

    fn key_of(e: Error) -> (String, String) {
        match e {
            Error::ConfigEntry { location, key, .. } => (location, key),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_file_gives_defaults() {
        assert_eq!(load("").unwrap().config, RunConfig::default());
        assert_eq!(load("# nothing\n\n").unwrap().config, RunConfig::default());
    }

    #[test]
    fn kernel_size_drives_structure() {
        let c = load("R = 25\n").unwrap().config;
        let s = c.structure().unwrap();
        assert_eq!((s.neuron_count(), s.frame()), (144, 25));
    }

    #[test]
    fn duplicate_key_last_wins_with_warning() {
        let l = load("seed = 1\nseed = 2 # again\n").unwrap();
        assert_eq!(l.config.seed, 2);
        assert_eq!(l.warnings.len(), 1);
        assert!(l.warnings[0].contains("line 2"));
    }

    #[test]
    fn flags_override_file() {
        let l = parse_config(Some("R = 25\n"), &["R=100".into(), "kernel=dual_exp".into()]).unwrap();
        assert_eq!(l.config.kernel_pixels, 100);
        assert_eq!(l.config.kernel, KernelKind::DualExp);
        assert!(l.warnings.is_empty());
    }

    #[test]
    fn errors_name_key_and_line() {
        assert_eq!(key_of(load("R = 16\nbogus = 3\n").unwrap_err()), ("config line 2".into(), "bogus".into()));
        assert_eq!(key_of(load("lambda = fast\n").unwrap_err()), ("config line 1".into(), "lambda".into()));
        assert_eq!(key_of(load("\nR = 15\n").unwrap_err()), ("config line 2".into(), "R".into()));
        assert_eq!(key_of(load("v_th = -1\n").unwrap_err()), ("config line 1".into(), "v_th".into()));
        assert_eq!(key_of(load("S = 0\n").unwrap_err()).1, "S");
        assert_eq!(key_of(load("just words\n").unwrap_err()).0, "config line 1");
        assert_eq!(
            key_of(parse_config(None, &["tau1=1".into(), "tau2=2".into(), "kernel=dual_exp".into()]).unwrap_err()).1,
            "tau1"
        );
        assert_eq!(key_of(parse_config(None, &["oops".into()]).unwrap_err()).0, "--set override");
    }

    #[test]
    fn kernel_encoder_pins_frame() {
        assert!(load("T = 20\n").is_err());
        assert!(load("T = 16\n").is_ok());
        let c = load("encoder = per_pixel\nT = 256\n").unwrap().config;
        assert_eq!(c.encoder_stage().unwrap().neuron_count(), 784);
        assert_eq!(c.frame_ticks().unwrap(), 256);
    }

    #[test]
    fn class_order_must_be_permutation() {
        assert!(load("class_order = 9,8,7,6,5,4,3,2,1,0\n").is_ok());
        assert!(load("class_order = 0,1\n").is_err());
        assert!(load("class_order = 0,0,1,2,3,4,5,6,7,8\n").is_err());
    }

    #[test]
    fn resolved_text_reparses_to_same_config() {
        let c = load("R = 25\nkernel = dual_exp\nreadout = temporal\ntrain_n = 100\nclass_order = 1,0,2,3,4,5,6,7,8,9\nshuffle = false\n")
            .unwrap()
            .config;
        assert_eq!(load(&c.to_text()).unwrap().config, c);
    }

    #[test]
    fn derived_defaults() {
        let c = RunConfig::default();
        assert_eq!(c.spike_kernel().unwrap(), Kernel::linear(1.0 / 16.0).unwrap());
        let lp = c.learning().unwrap();
        assert!((lp.init_scale - 2.0 / 169.0).abs() < 1e-15);
    }
}
