//! Supervised learning of first-spike patterns.
//!
//! Each class maps to a target output `i`. Under the Huffman rule outputs
//! before `i` must stay silent for that class, output `i` must fire, and the
//! rest are left out of the update entirely. An output that misbehaves gets
//! `Err = V_th − V_max` and every input that spiked in time to influence the
//! peak moves by `λ · Err · K(T_max − T_c)`.

use rand::Rng;

use crate::codec::SpikeTrain;
use crate::dataset::LabeledImage;
use crate::error::{Error, Result};
use crate::kernels::SpikeKernel;
use crate::metrics::OpCounters;
use crate::network::{self, IfcParams, NeuronTrace, WeightMatrix};
use crate::pipeline::{Participation, Pipeline};
use crate::rng::{self, Stream};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningParams {
    pub lambda: f64,
    pub epochs: u32,
    pub seed: u64,
    /// Upper bound of the uniform weight initialization.
    pub init_scale: f64,
    /// Training-only safety band as a fraction of `V_th`: a target output
    /// must reach `V_th·(1+margin)` and a silenced one stay under
    /// `V_th·(1−margin)`. Zero gives the plain threshold rule.
    pub margin: f64,
}

impl LearningParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::config("lambda", format!("must be positive, got {}", self.lambda)));
        }
        if !(self.init_scale.is_finite() && self.init_scale > 0.0) {
            return Err(Error::config(
                "init_scale",
                format!("must be positive, got {}", self.init_scale),
            ));
        }
        if !(0.0..1.0).contains(&self.margin) {
            return Err(Error::config("margin", format!("must be in [0, 1), got {}", self.margin)));
        }
        Ok(())
    }
}

/// Conventional initialization bound, `2·V_th/M`.
pub fn default_init_scale(v_th: f64, inputs: usize) -> f64 {
    2.0 * v_th / inputs.max(1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    MustFire,
    MustNotFire,
    Independent,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DesiredPattern {
    statuses: Vec<Status>,
}

impl DesiredPattern {
    pub fn statuses(&self) -> &[Status] {
        &self.statuses
    }

    pub fn target(&self) -> usize {
        self.statuses
            .iter()
            .position(|s| *s == Status::MustFire)
            .expect("a pattern always has one firing neuron")
    }

    /// Indices of outputs whose behaviour is constrained, in order.
    pub fn participants(&self) -> impl Iterator<Item = (usize, Status)> + '_ {
        self.statuses
            .iter()
            .copied()
            .enumerate()
            .filter(|(_, s)| *s != Status::Independent)
    }

    pub fn for_rule(rule: Participation, target: usize, outputs: usize) -> Result<Self> {
        if target >= outputs {
            return Err(Error::Dimension(format!(
                "target output {target} does not exist among {outputs}"
            )));
        }
        let statuses = (0..outputs)
            .map(|n| match (rule, n.cmp(&target)) {
                (_, std::cmp::Ordering::Equal) => Status::MustFire,
                (Participation::Huffman, std::cmp::Ordering::Less) => Status::MustNotFire,
                _ => Status::Independent,
            })
            .collect();
        Ok(Self { statuses })
    }
}

/// Huffman-style desired pattern for target output `label`.
pub fn desired_pattern(label: usize, outputs: usize) -> Result<DesiredPattern> {
    DesiredPattern::for_rule(Participation::Huffman, label, outputs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    FalseFire,
    FalseMissing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorRecord {
    pub neuron: usize,
    /// `V_th − V_max`, with `V_th` shifted by the margin when one is used.
    pub err: f64,
    pub t_fal: u32,
    pub kind: ErrorKind,
}

/// The error, if any, of one participating output. With a nonzero `margin`
/// an output that only just meets its constraint still counts as wrong.
pub fn check_neuron(
    neuron: usize,
    status: Status,
    trace: &NeuronTrace,
    ifc: &IfcParams,
    margin: f64,
) -> Option<ErrorRecord> {
    let (kind, goal) = match status {
        Status::MustFire => (ErrorKind::FalseMissing, ifc.v_th() * (1.0 + margin)),
        Status::MustNotFire => (ErrorKind::FalseFire, ifc.v_th() * (1.0 - margin)),
        Status::Independent => return None,
    };
    // With no margin these reduce to `!fired` and `fired`.
    let wrong = match kind {
        ErrorKind::FalseMissing => trace.v_max < goal,
        ErrorKind::FalseFire => trace.v_max >= goal,
    };
    if !wrong {
        return None;
    }
    Some(ErrorRecord {
        neuron,
        err: goal - trace.v_max,
        t_fal: trace.t_max,
        kind,
    })
}

pub fn detect_errors(
    traces: &[NeuronTrace],
    desired: &DesiredPattern,
    ifc: &IfcParams,
) -> Result<Vec<ErrorRecord>> {
    if traces.len() != desired.statuses.len() {
        return Err(Error::Dimension(format!(
            "{} traces for a {}-output pattern",
            traces.len(),
            desired.statuses.len()
        )));
    }
    Ok(desired
        .participants()
        .filter_map(|(n, status)| check_neuron(n, status, &traces[n], ifc, 0.0))
        .collect())
}

/// Applies the learning rule for one error to column `rec.neuron` and
/// returns how many weights changed.
pub fn apply_update(
    weights: &mut WeightMatrix,
    train: &SpikeTrain,
    rec: &ErrorRecord,
    kernel: &impl SpikeKernel,
    lp: &LearningParams,
    counters: &mut OpCounters,
) -> usize {
    let column = weights.column_mut(rec.neuron);
    let mut applied = 0;
    for (c, t_c) in train.spikes() {
        let k = kernel.eval(i64::from(rec.t_fal) - i64::from(t_c));
        if k <= 0.0 {
            continue;
        }
        column[c] += lp.lambda * rec.err * k;
        applied += 1;
    }
    counters.weight_updates += applied as u64;
    applied
}

pub fn init_weights(inputs: usize, outputs: usize, lp: &LearningParams) -> Result<WeightMatrix> {
    if inputs == 0 || outputs == 0 {
        return Err(Error::Dimension(format!(
            "cannot build a {inputs}x{outputs} weight matrix"
        )));
    }
    lp.validate()?;
    let mut rng = rng::stream(lp.seed, Stream::InitWeights);
    Ok(WeightMatrix::from_fn(inputs, outputs, |_, _| {
        rng.random_range(0.0..=lp.init_scale)
    }))
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EpochStats {
    pub images: u64,
    pub false_fire: u64,
    pub false_missing: u64,
    pub updates: u64,
    pub weighting_ops: u64,
    /// Images whose desired pattern already held before any update, judged
    /// at the plain threshold.
    pub satisfied: u64,
}

impl EpochStats {
    pub fn errors(&self) -> u64 {
        self.false_fire + self.false_missing
    }

    pub fn train_acc(&self) -> f64 {
        if self.images == 0 {
            0.0
        } else {
            self.satisfied as f64 / self.images as f64
        }
    }
}

/// Per-image learning outcome.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ImageUpdate {
    /// Every participant met its constraint at the plain threshold.
    pub satisfied: bool,
    pub errors: Vec<ErrorRecord>,
    /// Weights changed by each error, aligned with `errors`.
    pub applied: Vec<usize>,
}

/// Traces only the participating outputs of `train`, and applies an update
/// for each one that breaks its constraint, in output order.
pub fn learn_image(
    weights: &mut WeightMatrix,
    train: &SpikeTrain,
    desired: &DesiredPattern,
    pipeline: &Pipeline,
    lp: &LearningParams,
    counters: &mut OpCounters,
) -> ImageUpdate {
    let mut out = ImageUpdate {
        satisfied: true,
        ..ImageUpdate::default()
    };
    for (n, status) in desired.participants() {
        let tr = network::trace(train, weights.column(n), &pipeline.kernel, &pipeline.ifc, counters);
        if tr.fired {
            counters.output_spikes += 1;
        }
        if check_neuron(n, status, &tr, &pipeline.ifc, 0.0).is_some() {
            out.satisfied = false;
        }
        if let Some(rec) = check_neuron(n, status, &tr, &pipeline.ifc, lp.margin) {
            match rec.kind {
                ErrorKind::FalseFire => counters.errors_false_fire += 1,
                ErrorKind::FalseMissing => counters.errors_false_missing += 1,
            }
            let applied = apply_update(weights, train, &rec, &pipeline.kernel, lp, counters);
            out.errors.push(rec);
            out.applied.push(applied);
        }
    }
    out
}

/// One online pass over `data` in the given order.
pub fn train_epoch<'a>(
    weights: &mut WeightMatrix,
    data: impl IntoIterator<Item = &'a LabeledImage>,
    pipeline: &Pipeline,
    lp: &LearningParams,
    counters: &mut OpCounters,
) -> Result<EpochStats> {
    pipeline.check_weights(weights)?;
    lp.validate()?;
    let before = *counters;
    let mut satisfied = 0;
    for (index, item) in data.into_iter().enumerate() {
        let target = pipeline.classes.pattern_of(usize::from(item.label)).ok_or_else(|| {
            Error::Dimension(format!(
                "image {index} has label {} but only {} classes are configured",
                item.label,
                pipeline.outputs()
            ))
        })?;
        let train = pipeline.encoder.encode(&item.image).map_err(|e| match e {
            Error::Dimension(msg) => Error::Dimension(format!("image {index}: {msg}")),
            other => other,
        })?;
        counters.images += 1;
        counters.input_spikes += train.spike_count() as u64;
        let desired = DesiredPattern::for_rule(pipeline.participation, target, pipeline.outputs())?;
        let update = learn_image(weights, &train, &desired, pipeline, lp, counters);
        if update.satisfied {
            satisfied += 1;
        }
    }
    Ok(EpochStats {
        images: counters.images - before.images,
        false_fire: counters.errors_false_fire - before.errors_false_fire,
        false_missing: counters.errors_false_missing - before.errors_false_missing,
        updates: counters.weight_updates - before.weight_updates,
        weighting_ops: counters.weighting_ops - before.weighting_ops,
        satisfied,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Kernel;
    use Status::*;

    fn lp(lambda: f64) -> LearningParams {
        LearningParams {
            lambda,
            epochs: 1,
            seed: 1,
            init_scale: 0.1,
            margin: 0.0,
        }
    }

    #[test]
    fn huffman_patterns() {
        let p = desired_pattern(2, 10).unwrap();
        assert_eq!(&p.statuses()[..3], &[MustNotFire, MustNotFire, MustFire]);
        assert!(p.statuses()[3..].iter().all(|s| *s == Independent));
        assert_eq!(p.target(), 2);

        let first = desired_pattern(0, 10).unwrap();
        assert_eq!(first.statuses()[0], MustFire);
        assert_eq!(first.participants().count(), 1);

        let last = desired_pattern(9, 10).unwrap();
        assert_eq!(last.participants().count(), 10);
        assert!(desired_pattern(10, 10).is_err());
    }

    #[test]
    fn literal_pattern_has_one_participant() {
        let p = DesiredPattern::for_rule(Participation::Literal, 4, 10).unwrap();
        assert_eq!(p.participants().collect::<Vec<_>>(), vec![(4, MustFire)]);
    }

    fn tr(v_max: f64, t_max: u32, v_th: f64) -> NeuronTrace {
        NeuronTrace {
            v_max,
            t_max,
            fired: v_max >= v_th,
            t_fire: (v_max >= v_th).then_some(t_max),
        }
    }

    #[test]
    fn missing_fire_record() {
        let ifc = IfcParams::new(1.0).unwrap();
        let traces = [tr(0.9, 5, 1.0)];
        let recs = detect_errors(&traces, &desired_pattern(0, 1).unwrap(), &ifc).unwrap();
        assert_eq!(recs.len(), 1);
        assert!((recs[0].err - 0.1).abs() < 1e-12);
        assert_eq!((recs[0].t_fal, recs[0].kind), (5, ErrorKind::FalseMissing));
    }

    #[test]
    fn satisfied_and_independent_produce_nothing() {
        let ifc = IfcParams::new(1.0).unwrap();
        // target 1: neuron 0 silent, neuron 1 fires, neuron 2 independent but fires.
        let traces = [tr(0.5, 1, 1.0), tr(1.2, 3, 1.0), tr(5.0, 0, 1.0)];
        let recs = detect_errors(&traces, &desired_pattern(1, 3).unwrap(), &ifc).unwrap();
        assert!(recs.is_empty());
    }

    #[test]
    fn false_fire_record_is_negative() {
        let ifc = IfcParams::new(1.0).unwrap();
        let traces = [tr(1.25, 7, 1.0), tr(1.2, 3, 1.0)];
        let recs = detect_errors(&traces, &desired_pattern(1, 2).unwrap(), &ifc).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!((recs[0].neuron, recs[0].kind), (0, ErrorKind::FalseFire));
        assert!((recs[0].err + 0.25).abs() < 1e-12);
    }

    #[test]
    fn margin_widens_both_constraints() {
        let ifc = IfcParams::new(1.0).unwrap();
        // Fired, but not by enough.
        let rec = check_neuron(0, Status::MustFire, &tr(1.05, 3, 1.0), &ifc, 0.1).unwrap();
        assert_eq!(rec.kind, ErrorKind::FalseMissing);
        assert!((rec.err - 0.05).abs() < 1e-12);
        // Silent, but too close to threshold.
        let rec = check_neuron(0, Status::MustNotFire, &tr(0.95, 3, 1.0), &ifc, 0.1).unwrap();
        assert_eq!(rec.kind, ErrorKind::FalseFire);
        assert!((rec.err + 0.05).abs() < 1e-12);
        assert!(check_neuron(0, Status::MustFire, &tr(1.05, 3, 1.0), &ifc, 0.0).is_none());
        assert!(check_neuron(0, Status::MustNotFire, &tr(0.95, 3, 1.0), &ifc, 0.0).is_none());
        assert!(check_neuron(0, Status::Independent, &tr(5.0, 3, 1.0), &ifc, 0.1).is_none());
    }

    #[test]
    fn update_arithmetic() {
        let k = Kernel::linear(0.25).unwrap();
        let train = SpikeTrain::new(vec![Some(0), Some(3), None], 4).unwrap();
        let mut w = WeightMatrix::zeros(3, 2);
        let rec = ErrorRecord {
            neuron: 1,
            err: 0.1,
            t_fal: 2,
            kind: ErrorKind::FalseMissing,
        };
        let mut c = OpCounters::default();
        let n = apply_update(&mut w, &train, &rec, &k, &lp(0.1), &mut c);
        assert_eq!(n, 1);
        assert_eq!(c.weight_updates, 1);
        assert!((w.get(0, 1) - 0.005).abs() < 1e-15);
        // Spike after T_fal and the silent input are untouched.
        assert_eq!(w.get(1, 1), 0.0);
        assert_eq!(w.get(2, 1), 0.0);
        assert!(w.column(0).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn false_fire_depresses() {
        let k = Kernel::linear(1.0 / 8.0).unwrap();
        let train = SpikeTrain::new(vec![Some(0), Some(2), Some(5), Some(7)], 8).unwrap();
        let mut w = WeightMatrix::from_fn(4, 1, |_, _| 0.3);
        let rec = ErrorRecord {
            neuron: 0,
            err: -0.2,
            t_fal: 6,
            kind: ErrorKind::FalseFire,
        };
        apply_update(&mut w, &train, &rec, &k, &lp(0.5), &mut OpCounters::default());
        assert!(w.column(0).iter().all(|&x| x <= 0.3));
        assert_eq!(w.get(3, 0), 0.3);
    }

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = init_weights(50, 10, &lp(0.1)).unwrap();
        assert_eq!(a, init_weights(50, 10, &lp(0.1)).unwrap());
        assert!(a.column(3).iter().all(|&x| (0.0..=0.1).contains(&x)));
        let b = init_weights(50, 10, &LearningParams { seed: 2, ..lp(0.1) }).unwrap();
        assert_ne!(a, b);
        assert!(init_weights(0, 10, &lp(0.1)).is_err());
    }

    #[test]
    fn invalid_learning_params() {
        assert!(lp(0.0).validate().is_err());
        assert!(LearningParams { init_scale: -1.0, ..lp(0.1) }.validate().is_err());
    }
}
