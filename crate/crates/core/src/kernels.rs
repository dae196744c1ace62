//! Spike-response kernels.
//!
//! `Linear` is the hardware-friendly ramp `1 − τ·dt`, clamped at zero.
//! `DualExp` is the classic difference of exponentials, scaled by `μ` so its
//! largest value on the integer tick grid is exactly one.

use crate::error::{Error, Result};

/// Anything that maps a tick offset `t − t_s` to a post-synaptic contribution.
pub trait SpikeKernel {
    fn eval(&self, dt: i64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Kernel {
    Linear { decay: f64 },
    DualExp { tau1: f64, tau2: f64, mu: f64 },
}

impl Kernel {
    pub fn linear(decay: f64) -> Result<Self> {
        if !(decay.is_finite() && decay > 0.0) {
            return Err(Error::config("tau", format!("slope must be positive, got {decay}")));
        }
        Ok(Kernel::Linear { decay })
    }

    /// Linear ramp reaching zero exactly at the end of a `frame`-tick window.
    pub fn linear_for_frame(frame: u32) -> Result<Self> {
        Self::linear(1.0 / f64::from(frame.max(1)))
    }

    /// Dual exponential normalized to unit peak over ticks `0..frame`.
    pub fn dual_exp(tau1: f64, tau2: f64, frame: u32) -> Result<Self> {
        let mu = normalize_mu(tau1, tau2, frame)?;
        Ok(Kernel::DualExp { tau1, tau2, mu })
    }

    /// Dual exponential with `τ1 = T/4`, `τ2 = T/16`.
    pub fn dual_exp_for_frame(frame: u32) -> Result<Self> {
        let t = f64::from(frame);
        Self::dual_exp(t / 4.0, t / 16.0, frame)
    }

    /// Precomputes the kernel over one coding frame.
    pub fn table(&self, frame: u32) -> KernelTable {
        KernelTable {
            kernel: *self,
            values: (0..i64::from(frame)).map(|dt| self.eval(dt)).collect(),
        }
    }
}

impl SpikeKernel for Kernel {
    fn eval(&self, dt: i64) -> f64 {
        if dt < 0 {
            return 0.0;
        }
        let dt = dt as f64;
        match *self {
            Kernel::Linear { decay } => {
                let v = 1.0 - decay * dt;
                // The zero crossing at dt = 1/τ can land a few ulps off zero.
                if v <= 4.0 * f64::EPSILON {
                    0.0
                } else {
                    v
                }
            }
            Kernel::DualExp { tau1, tau2, mu } => mu * ((-dt / tau1).exp() - (-dt / tau2).exp()),
        }
    }
}

/// `μ` such that `max_{dt ∈ 0..T} μ(e^{−dt/τ1} − e^{−dt/τ2}) = 1`.
pub fn normalize_mu(tau1: f64, tau2: f64, frame: u32) -> Result<f64> {
    if !(tau2.is_finite() && tau2 > 0.0) {
        return Err(Error::config("tau2", format!("must be positive, got {tau2}")));
    }
    if !(tau1.is_finite() && tau1 > tau2) {
        return Err(Error::config(
            "tau1",
            format!("must exceed tau2 ({tau2}), got {tau1}"),
        ));
    }
    let peak = (0..frame)
        .map(|dt| {
            let dt = f64::from(dt);
            (-dt / tau1).exp() - (-dt / tau2).exp()
        })
        .fold(0.0_f64, f64::max);
    if peak <= 0.0 {
        return Err(Error::config(
            "T",
            format!("a {frame}-tick frame never reaches the kernel's rising edge"),
        ));
    }
    Ok(1.0 / peak)
}

/// A kernel sampled at `dt = 0..T`; offsets outside the table defer to the
/// underlying kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelTable {
    kernel: Kernel,
    values: Vec<f64>,
}

impl KernelTable {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

impl SpikeKernel for KernelTable {
    #[inline]
    fn eval(&self, dt: i64) -> f64 {
        match usize::try_from(dt) {
            Ok(i) if i < self.values.len() => self.values[i],
            _ => self.kernel.eval(dt),
        }
    }
}

impl<K: SpikeKernel + ?Sized> SpikeKernel for &K {
    fn eval(&self, dt: i64) -> f64 {
        (**self).eval(dt)
    }
}
