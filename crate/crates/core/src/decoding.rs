//! Testing-mode readout: the first output to fire names the pattern.

use std::fmt::Write as _;

use crate::dataset::LabeledImage;
use crate::error::{Error, Result};
use crate::metrics::OpCounters;
use crate::network::{self, Readout, WeightMatrix};
use crate::pipeline::Pipeline;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Decision {
    /// Output pattern index.
    pub label: Option<usize>,
    pub decision_tick: Option<u32>,
    /// No output crossed threshold; `label` is the highest peak instead.
    pub fallback_used: bool,
}

/// Maps a winner to a decision, consulting the per-output peak potentials
/// only when nobody fired. Peak ties go to the lowest index.
pub fn decode(
    winner: Option<usize>,
    decision_tick: Option<u32>,
    peaks: impl FnOnce() -> Vec<f64>,
) -> Decision {
    match winner {
        Some(n) => Decision {
            label: Some(n),
            decision_tick,
            fallback_used: false,
        },
        None => {
            let peaks = peaks();
            let mut best: Option<(usize, f64)> = None;
            for (n, &v) in peaks.iter().enumerate() {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((n, v));
                }
            }
            Decision {
                label: best.map(|(n, _)| n),
                decision_tick: None,
                fallback_used: true,
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    /// Stop every image as soon as the winner is known.
    FireAndCut,
    /// Integrate every output over the whole frame, then decide.
    FullTrace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    pub index: usize,
    pub true_label: u8,
    pub pred_label: Option<u8>,
    pub decision_tick: Option<u32>,
    pub fallback: bool,
}

impl Prediction {
    pub fn correct(&self) -> bool {
        self.pred_label == Some(self.true_label)
    }
}

/// Classifies one image.
pub fn classify(
    item: &LabeledImage,
    weights: &WeightMatrix,
    pipeline: &Pipeline,
    mode: EvalMode,
    counters: &mut OpCounters,
) -> Result<Decision> {
    let train = pipeline.encoder.encode(&item.image)?;
    counters.images += 1;
    counters.input_spikes += train.spike_count() as u64;
    let decision = match mode {
        EvalMode::FireAndCut => {
            let out = network::fire_and_cut(
                &train,
                weights,
                &pipeline.kernel,
                &pipeline.ifc,
                pipeline.readout,
                counters,
            );
            decode(out.winner, out.decision_tick, || out.peaks)
        }
        EvalMode::FullTrace => {
            let traces = network::trace_all(&train, weights, &pipeline.kernel, &pipeline.ifc, counters);
            let fired = traces
                .iter()
                .enumerate()
                .filter_map(|(n, t)| t.t_fire.map(|tick| (tick, n)));
            let first = match pipeline.readout {
                Readout::Huffman => fired.min_by_key(|&(_, n)| n),
                Readout::Temporal => fired.min(),
            };
            decode(first.map(|(_, n)| n), first.map(|(t, _)| t), || {
                traces.iter().map(|t| t.v_max).collect()
            })
        }
    };
    if !decision.fallback_used {
        counters.output_spikes += 1;
    }
    Ok(decision)
}

pub fn evaluate(
    weights: &WeightMatrix,
    data: &[LabeledImage],
    pipeline: &Pipeline,
    mode: EvalMode,
    counters: &mut OpCounters,
) -> Result<Vec<Prediction>> {
    pipeline.check_weights(weights)?;
    data.iter()
        .enumerate()
        .map(|(index, item)| {
            let d = classify(item, weights, pipeline, mode, counters).map_err(|e| match e {
                Error::Dimension(msg) => Error::Dimension(format!("image {index}: {msg}")),
                other => other,
            })?;
            Ok(Prediction {
                index,
                true_label: item.label,
                pred_label: d.label.map(|p| pipeline.classes.class_of(p) as u8),
                decision_tick: d.decision_tick,
                fallback: d.fallback_used,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EvalSummary {
    pub images: usize,
    pub correct: usize,
    pub fallbacks: usize,
    /// Correct predictions that needed the no-spike fallback.
    pub correct_fallbacks: usize,
}

impl EvalSummary {
    pub fn of(predictions: &[Prediction]) -> Self {
        let mut s = Self {
            images: predictions.len(),
            ..Self::default()
        };
        for p in predictions {
            s.correct += usize::from(p.correct());
            s.fallbacks += usize::from(p.fallback);
            s.correct_fallbacks += usize::from(p.fallback && p.correct());
        }
        s
    }

    fn frac(&self, n: usize) -> f64 {
        if self.images == 0 {
            0.0
        } else {
            n as f64 / self.images as f64
        }
    }

    pub fn accuracy(&self) -> f64 {
        self.frac(self.correct)
    }

    /// Accuracy with every fallback decision scored as wrong.
    pub fn strict_accuracy(&self) -> f64 {
        self.frac(self.correct - self.correct_fallbacks)
    }

    pub fn fallback_rate(&self) -> f64 {
        self.frac(self.fallbacks)
    }
}

pub fn predictions_csv(predictions: &[Prediction]) -> String {
    let mut out = String::from("index,true_label,pred_label,decision_tick,fallback\n");
    for p in predictions {
        let pred = p.pred_label.map(|l| l.to_string()).unwrap_or_default();
        let tick = p.decision_tick.map(|t| t.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{pred},{tick},{}", p.index, p.true_label, u8::from(p.fallback)).unwrap();
    }
    out
}
