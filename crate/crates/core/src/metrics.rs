//! Event accounting: synaptic weighting operations, weight updates and spike
//! counts, plus the spike-linear energy proxy and a multiplier-bound cycle
//! estimate derived from them.

use std::fmt::Write as _;
use std::ops::{Add, AddAssign};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OpCounters {
    /// Multiplications of a positive kernel value by a weight.
    pub weighting_ops: u64,
    pub weight_updates: u64,
    pub input_spikes: u64,
    pub output_spikes: u64,
    pub errors_false_fire: u64,
    pub errors_false_missing: u64,
    pub images: u64,
}

impl OpCounters {
    pub fn errors(&self) -> u64 {
        self.errors_false_fire + self.errors_false_missing
    }

    pub fn weighting_ops_per_image(&self) -> f64 {
        ratio(self.weighting_ops, self.images)
    }

    pub fn updates_per_image(&self) -> f64 {
        ratio(self.weight_updates, self.images)
    }

    pub fn updates_per_error(&self) -> f64 {
        ratio(self.weight_updates, self.errors())
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl AddAssign for OpCounters {
    fn add_assign(&mut self, rhs: Self) {
        self.weighting_ops += rhs.weighting_ops;
        self.weight_updates += rhs.weight_updates;
        self.input_spikes += rhs.input_spikes;
        self.output_spikes += rhs.output_spikes;
        self.errors_false_fire += rhs.errors_false_fire;
        self.errors_false_missing += rhs.errors_false_missing;
        self.images += rhs.images;
    }
}

impl Add for OpCounters {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl std::iter::Sum for OpCounters {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::default(), Add::add)
    }
}

/// Spike-count power model: every input or output spike costs `alpha` joules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyModel {
    alpha: f64,
}

impl EnergyModel {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::config("alpha", format!("must be positive, got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

pub fn energy(counters: &OpCounters, model: &EnergyModel) -> f64 {
    model.alpha * (counters.input_spikes + counters.output_spikes) as f64
}

/// Idealized cycle count for a processing element with `multipliers`
/// parallel multipliers.
pub fn pe_cycles(weighting_ops: u64, multipliers: u32) -> Result<u64> {
    if multipliers == 0 {
        return Err(Error::config("multipliers", "need at least one multiplier"));
    }
    Ok(weighting_ops.div_ceil(u64::from(multipliers)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Text,
}

/// Column order of the CSV report.
pub const REPORT_METRICS: [&str; 12] = [
    "images",
    "weighting_ops",
    "weight_updates",
    "input_spikes",
    "output_spikes",
    "errors_false_fire",
    "errors_false_missing",
    "weighting_ops_per_image",
    "updates_per_image",
    "updates_per_error",
    "energy_per_image",
    "energy",
];

fn report_values(c: &OpCounters, model: &EnergyModel) -> [String; 12] {
    let e = energy(c, model);
    [
        c.images.to_string(),
        c.weighting_ops.to_string(),
        c.weight_updates.to_string(),
        c.input_spikes.to_string(),
        c.output_spikes.to_string(),
        c.errors_false_fire.to_string(),
        c.errors_false_missing.to_string(),
        c.weighting_ops_per_image().to_string(),
        c.updates_per_image().to_string(),
        c.updates_per_error().to_string(),
        (if c.images == 0 { 0.0 } else { e / c.images as f64 }).to_string(),
        e.to_string(),
    ]
}

pub fn report(counters: &OpCounters, model: &EnergyModel, format: ReportFormat) -> String {
    let values = report_values(counters, model);
    let mut out = String::new();
    match format {
        ReportFormat::Csv => {
            out.push_str("metric,value\n");
            for (name, value) in REPORT_METRICS.iter().zip(&values) {
                writeln!(out, "{name},{value}").unwrap();
            }
        }
        ReportFormat::Text => {
            let width = REPORT_METRICS.iter().map(|n| n.len()).max().unwrap_or(0);
            for (name, value) in REPORT_METRICS.iter().zip(&values) {
                writeln!(out, "{name:<width$}  {value}").unwrap();
            }
        }
    }
    out
}
