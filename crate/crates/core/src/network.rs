//! Single-layer synaptic network with integrate-and-fire outputs.
//!
//! The membrane of output `n` at tick `t` is `Σ_m w_mn · K(t − t_s(m))` over
//! the inputs that fired. There is no leak, reset or refractory period; each
//! image is an independent frame of `T` ticks.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::codec::SpikeTrain;
use crate::error::{Error, Result};
use crate::kernels::SpikeKernel;
use crate::metrics::OpCounters;

const WEIGHTS_MAGIC: &str = "PTSPIKE-WEIGHTS v1";

/// Synaptic efficacies between `M` inputs and `I` outputs, stored one output
/// column at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    inputs: usize,
    outputs: usize,
    columns: Vec<f64>,
}

impl WeightMatrix {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            columns: vec![0.0; inputs * outputs],
        }
    }

    /// Builds from a closure evaluated in row-major `(m, n)` order.
    pub fn from_fn(inputs: usize, outputs: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut w = Self::zeros(inputs, outputs);
        for m in 0..inputs {
            for n in 0..outputs {
                w.set(m, n, f(m, n));
            }
        }
        w
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn get(&self, m: usize, n: usize) -> f64 {
        self.columns[n * self.inputs + m]
    }

    pub fn set(&mut self, m: usize, n: usize, value: f64) {
        self.columns[n * self.inputs + m] = value;
    }

    /// Incoming weights of output neuron `n`, indexed by input.
    pub fn column(&self, n: usize) -> &[f64] {
        &self.columns[n * self.inputs..(n + 1) * self.inputs]
    }

    pub fn column_mut(&mut self, n: usize) -> &mut [f64] {
        &mut self.columns[n * self.inputs..(n + 1) * self.inputs]
    }

    pub fn is_finite(&self) -> bool {
        self.columns.iter().all(|w| w.is_finite())
    }

    /// Text form: magic line, `M I`, then one row of `I` weights per input.
    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(32 + self.columns.len() * 24);
        writeln!(out, "{WEIGHTS_MAGIC}").unwrap();
        writeln!(out, "{} {}", self.inputs, self.outputs).unwrap();
        for m in 0..self.inputs {
            for n in 0..self.outputs {
                if n > 0 {
                    out.push(' ');
                }
                write!(out, "{}", self.get(m, n)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let bad = |line: usize, reason: String| Error::Weights { line, reason };
        let mut lines = text.split('\n');
        if lines.next() != Some(WEIGHTS_MAGIC) {
            return Err(bad(1, format!("expected `{WEIGHTS_MAGIC}`")));
        }
        let dims = lines.next().ok_or_else(|| bad(2, "missing dimensions".into()))?;
        let dims: Vec<usize> = dims
            .split(' ')
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| bad(2, format!("bad dimensions `{dims}`: {e}")))?;
        let [inputs, outputs] = dims[..] else {
            return Err(bad(2, "expected `M I`".into()));
        };
        let mut w = Self::zeros(inputs, outputs);
        for m in 0..inputs {
            let lineno = m + 3;
            let row = lines
                .next()
                .ok_or_else(|| bad(lineno, "unexpected end of file".into()))?;
            let mut fields = row.split(' ');
            for n in 0..outputs {
                let field = fields
                    .next()
                    .ok_or_else(|| bad(lineno, format!("expected {outputs} values")))?;
                let value: f64 = field
                    .parse()
                    .map_err(|e| bad(lineno, format!("bad value `{field}`: {e}")))?;
                if !value.is_finite() {
                    return Err(bad(lineno, format!("non-finite weight `{field}`")));
                }
                w.set(m, n, value);
            }
            if fields.next().is_some() {
                return Err(bad(lineno, format!("more than {outputs} values")));
            }
        }
        match (lines.next(), lines.next()) {
            (Some(""), None) => Ok(w),
            _ => Err(bad(inputs + 3, "trailing content after the last row".into())),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IfcParams {
    v_th: f64,
}

impl IfcParams {
    pub fn new(v_th: f64) -> Result<Self> {
        if !(v_th.is_finite() && v_th > 0.0) {
            return Err(Error::config("v_th", format!("threshold must be positive, got {v_th}")));
        }
        Ok(Self { v_th })
    }

    pub fn v_th(&self) -> f64 {
        self.v_th
    }
}

/// Summary of one output neuron's membrane over a whole frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronTrace {
    pub v_max: f64,
    /// Earliest tick at which `v_max` is reached.
    pub t_max: u32,
    pub fired: bool,
    /// First tick with `V ≥ V_th`.
    pub t_fire: Option<u32>,
}

fn check_column(train: &SpikeTrain, w_col: &[f64]) {
    assert_eq!(
        train.len(),
        w_col.len(),
        "spike train has {} inputs but the weight column has {}",
        train.len(),
        w_col.len()
    );
}

/// Membrane potential of one output at tick `t`.
pub fn membrane_at(
    train: &SpikeTrain,
    w_col: &[f64],
    kernel: &impl SpikeKernel,
    t: u32,
    counters: &mut OpCounters,
) -> f64 {
    check_column(train, w_col);
    let mut v = 0.0;
    for (m, ts) in train.spikes() {
        let k = kernel.eval(i64::from(t) - i64::from(ts));
        if k > 0.0 {
            v += w_col[m] * k;
            counters.weighting_ops += 1;
        }
    }
    v
}

/// Membrane potential at every tick of the frame.
///
/// Terms are accumulated input by input, so each `V(t)` sums in the same
/// order as [`membrane_at`] and the two agree bit for bit.
pub fn voltages(
    train: &SpikeTrain,
    w_col: &[f64],
    kernel: &impl SpikeKernel,
    counters: &mut OpCounters,
) -> Vec<f64> {
    check_column(train, w_col);
    let frame = train.frame();
    let mut v = vec![0.0; frame as usize];
    let mut ops = 0;
    for (m, ts) in train.spikes() {
        let w = w_col[m];
        for t in ts..frame {
            let k = kernel.eval(i64::from(t - ts));
            if k > 0.0 {
                v[t as usize] += w * k;
                ops += 1;
            }
        }
    }
    counters.weighting_ops += ops;
    v
}

fn summarize(v: &[f64], ifc: &IfcParams) -> NeuronTrace {
    let mut t_max = 0;
    let mut v_max = v.first().copied().unwrap_or(0.0);
    for (t, &x) in v.iter().enumerate() {
        if x > v_max {
            v_max = x;
            t_max = t;
        }
    }
    let t_fire = v.iter().position(|&x| x >= ifc.v_th).map(|t| t as u32);
    NeuronTrace {
        v_max,
        t_max: t_max as u32,
        fired: t_fire.is_some(),
        t_fire,
    }
}

/// Learning-mode evaluation of one output over the full frame, without reset.
pub fn trace(
    train: &SpikeTrain,
    w_col: &[f64],
    kernel: &impl SpikeKernel,
    ifc: &IfcParams,
    counters: &mut OpCounters,
) -> NeuronTrace {
    summarize(&voltages(train, w_col, kernel, counters), ifc)
}

/// Full traces for every output neuron.
pub fn trace_all(
    train: &SpikeTrain,
    weights: &WeightMatrix,
    kernel: &impl SpikeKernel,
    ifc: &IfcParams,
    counters: &mut OpCounters,
) -> Vec<NeuronTrace> {
    (0..weights.outputs())
        .map(|n| trace(train, weights.column(n), kernel, ifc, counters))
        .collect()
}

/// How the testing-mode readout picks a winner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Readout {
    /// Outputs are scanned in index order; the first one that fires anywhere
    /// in the frame wins and nothing after it is simulated.
    #[default]
    Huffman,
    /// All outputs race in parallel; the first tick with any crossing ends
    /// the frame and the lowest crossing index wins.
    Temporal,
}

/// Result of a Fire&Cut run.
#[derive(Debug, Clone, PartialEq)]
pub struct FireOutcome {
    pub winner: Option<usize>,
    pub decision_tick: Option<u32>,
    /// `(output, tick)` membrane evaluations actually performed.
    pub evaluations: u32,
    /// Highest potential each output reached over its simulated ticks, or
    /// `-inf` for outputs that were never simulated. Equal to the full-trace
    /// `v_max` of every output whenever nobody fired.
    pub peaks: Vec<f64>,
}

#[inline]
fn potential(spikes: &[(usize, u32)], col: &[f64], kernel: &impl SpikeKernel, t: u32, ops: &mut u64) -> f64 {
    let mut v = 0.0;
    for &(m, ts) in spikes {
        if ts > t {
            continue;
        }
        let k = kernel.eval(i64::from(t - ts));
        if k > 0.0 {
            v += col[m] * k;
            *ops += 1;
        }
    }
    v
}

/// Testing-mode evaluation with early termination. Simulation stops as soon
/// as the winner under `readout` is known; see [`Readout`].
pub fn fire_and_cut(
    train: &SpikeTrain,
    weights: &WeightMatrix,
    kernel: &impl SpikeKernel,
    ifc: &IfcParams,
    readout: Readout,
    counters: &mut OpCounters,
) -> FireOutcome {
    assert_eq!(
        train.len(),
        weights.inputs(),
        "spike train has {} inputs but the weights expect {}",
        train.len(),
        weights.inputs()
    );
    let spikes: Vec<(usize, u32)> = train.spikes().collect();
    let mut peaks = vec![f64::NEG_INFINITY; weights.outputs()];
    let mut ops = 0;
    let mut evaluations = 0;
    let mut outcome = None;
    match readout {
        Readout::Huffman => {
            'scan: for (n, peak) in peaks.iter_mut().enumerate() {
                let col = weights.column(n);
                for t in 0..train.frame() {
                    evaluations += 1;
                    let v = potential(&spikes, col, kernel, t, &mut ops);
                    *peak = peak.max(v);
                    if v >= ifc.v_th() {
                        outcome = Some((n, t));
                        break 'scan;
                    }
                }
            }
        }
        Readout::Temporal => {
            for t in 0..train.frame() {
                let mut winner = None;
                for (n, peak) in peaks.iter_mut().enumerate() {
                    evaluations += 1;
                    let v = potential(&spikes, weights.column(n), kernel, t, &mut ops);
                    *peak = peak.max(v);
                    if winner.is_none() && v >= ifc.v_th() {
                        winner = Some(n);
                    }
                }
                if let Some(n) = winner {
                    outcome = Some((n, t));
                    break;
                }
            }
        }
    }
    counters.weighting_ops += ops;
    FireOutcome {
        winner: outcome.map(|(n, _)| n),
        decision_tick: outcome.map(|(_, t)| t),
        evaluations,
        peaks,
    }
}
