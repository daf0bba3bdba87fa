//! Shared numerical kernels: ODE propagation, bracketed root finding,
//! quadrature of step and sampled functions, and Abelian extrapolation.

mod abel;
mod ode;
mod quadrature;
mod roots;

pub use abel::{abel_limit, AbelIntegrand, AbelResult, AbelSchedule, Sampled, Smooth};
pub use ode::{
    dopri5, integrate_ode, propagate, propagate_log_derivative, OdeOptions, ScaledState,
    TrajectoryPoint, RENORM_THRESHOLD,
};
pub use quadrature::{
    integrate_adaptive, integrate_piecewise_constant, trapezoid, StepFunction,
};
pub use roots::{find_root_bracketed, maximize_bracketed};

use crate::error::{Error, Result};

/// Closed real interval `[lo, hi]` with finite endpoints and `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RealInterval {
    lo: f64,
    hi: f64,
}

impl RealInterval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() {
            return Err(Error::invalid(format!("interval endpoints must be finite: [{lo}, {hi}]")));
        }
        if lo >= hi {
            return Err(Error::invalid(format!("interval requires lo < hi: [{lo}, {hi}]")));
        }
        Ok(Self { lo, hi })
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lo && x <= self.hi
    }
}

/// `n` equally spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let step = (hi - lo) / (n - 1) as f64;
            (0..n)
                .map(|i| if i == n - 1 { hi } else { lo + step * i as f64 })
                .collect()
        }
    }
}
