//! The spectral shift function `xi(x, .)` as data: either samples on a
//! lambda grid or an exact step function, plus the shared machinery that
//! turns boundary values of a diagonal Green's function into `xi`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{trapezoid, AbelIntegrand, Sampled, StepFunction};

/// Where the Dirichlet decoupling sits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum BasePoint {
    Position(f64),
    Site(i64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum XiRepr {
    Grid { lambdas: Vec<f64>, values: Vec<f64> },
    Steps(StepFunction),
}

const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    base: BasePoint,
    repr: XiRepr,
    /// Values are trusted on `(-inf, covered_hi]` for steps and on the grid
    /// span for samples.
    covered_hi: f64,
    /// Declared value beyond the last grid point.
    #[serde(default)]
    tail: Option<f64>,
}

impl XiGrid {
    /// Exact step representation, known up to `covered_hi`. The function
    /// must vanish below its first jump.
    pub fn from_steps(base: BasePoint, steps: StepFunction, covered_hi: f64) -> Result<Self> {
        if steps.values()[0] != 0.0 {
            return Err(Error::invalid("xi must vanish below the spectrum"));
        }
        if steps.values().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::invalid("xi plateau outside [0, 1]"));
        }
        Ok(Self { base, repr: XiRepr::Steps(steps), covered_hi, tail: None })
    }

    /// Sampled representation. Values within 1e-9 of `[0, 1]` are clamped.
    pub fn from_samples(base: BasePoint, lambdas: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if lambdas.len() != values.len() || lambdas.len() < 2 {
            return Err(Error::invalid("xi samples need matching grids with at least two points"));
        }
        if lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("xi lambda grid must be strictly increasing"));
        }
        let mut clamped = Vec::with_capacity(values.len());
        for (l, v) in lambdas.iter().zip(&values) {
            if !(*v >= -RANGE_SLACK && *v <= 1.0 + RANGE_SLACK) {
                return Err(Error::invalid(format!("xi({l}) = {v} outside [0, 1]")));
            }
            clamped.push(v.clamp(0.0, 1.0));
        }
        let covered_hi = *lambdas.last().unwrap();
        Ok(Self { base, repr: XiRepr::Grid { lambdas, values: clamped }, covered_hi, tail: None })
    }

    pub fn base(&self) -> BasePoint {
        self.base
    }

    pub fn repr(&self) -> &XiRepr {
        &self.repr
    }

    pub fn steps(&self) -> Option<&StepFunction> {
        match &self.repr {
            XiRepr::Steps(s) => Some(s),
            XiRepr::Grid { .. } => None,
        }
    }

    pub fn covered_lo(&self) -> f64 {
        match &self.repr {
            XiRepr::Steps(_) => f64::NEG_INFINITY,
            XiRepr::Grid { lambdas, .. } => lambdas[0],
        }
    }

    pub fn covered_hi(&self) -> f64 {
        self.covered_hi
    }

    /// Declares that `xi = value` beyond the covered range, which then
    /// extends to `+inf`.
    pub fn with_tail(mut self, value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::invalid("tail value outside [0, 1]"));
        }
        match &self.repr {
            XiRepr::Steps(steps) => {
                let mut deltas: Vec<(f64, f64)> = steps
                    .jumps()
                    .iter()
                    .zip(steps.values().windows(2))
                    .map(|(x, w)| (*x, w[1] - w[0]))
                    .filter(|(x, _)| *x < self.covered_hi)
                    .collect();
                let current: f64 = deltas.iter().map(|d| d.1).sum();
                if current != value || *steps.values().last().unwrap() != value {
                    deltas.push((self.covered_hi, value - current));
                    self.repr = XiRepr::Steps(StepFunction::from_jumps(0.0, deltas, 0.0));
                }
            }
            XiRepr::Grid { .. } => self.tail = Some(value),
        }
        self.covered_hi = f64::INFINITY;
        Ok(self)
    }

    /// `xi(lambda)`, or `None` outside the covered range.
    pub fn eval(&self, lambda: f64) -> Option<f64> {
        if lambda > self.covered_hi || lambda < self.covered_lo() {
            return None;
        }
        Some(match &self.repr {
            XiRepr::Steps(s) => s.eval(lambda),
            XiRepr::Grid { lambdas, values } => match self.tail {
                Some(t) if lambda > *lambdas.last().unwrap() => t,
                _ => Sampled { xs: lambdas, ys: values }.value_at(lambda),
            },
        })
    }

    /// Shifts the energy axis: the result is `lambda -> xi(lambda - c)`.
    pub fn shifted(&self, c: f64) -> Self {
        let repr = match &self.repr {
            XiRepr::Steps(s) => XiRepr::Steps(s.shifted(c)),
            XiRepr::Grid { lambdas, values } => XiRepr::Grid {
                lambdas: lambdas.iter().map(|l| l + c).collect(),
                values: values.clone(),
            },
        };
        Self { base: self.base, repr, covered_hi: self.covered_hi + c, tail: self.tail }
    }

    /// The function `lambda -> g(xi(lambda))` in a form the Abel machinery
    /// and the quadratures accept.
    pub fn integrand(&self, g: impl Fn(f64) -> f64) -> XiIntegrand {
        match &self.repr {
            XiRepr::Steps(s) => XiIntegrand::Steps { f: s.map(g), hi: self.covered_hi },
            XiRepr::Grid { lambdas, values } => XiIntegrand::Samples {
                xs: lambdas.clone(),
                ys: values.iter().map(|v| g(*v)).collect(),
                tail: self.tail.map(g),
            },
        }
    }
}

/// `g(xi)` for a fixed pointwise transformation `g`.
#[derive(Debug, Clone, PartialEq)]
pub enum XiIntegrand {
    Steps { f: StepFunction, hi: f64 },
    /// Linear interpolation between samples, then the constant `tail`.
    Samples { xs: Vec<f64>, ys: Vec<f64>, tail: Option<f64> },
}

impl XiIntegrand {
    /// Plain integral over `[lo, hi]`: exact for steps, trapezoid on samples.
    pub fn integral(&self, lo: f64, hi: f64) -> Result<f64> {
        if hi > self.covered_up_to() {
            return Err(Error::InsufficientCoverage { covered: self.covered_up_to(), required: hi });
        }
        match self {
            XiIntegrand::Steps { f, .. } => Ok(f.integral(lo, hi)),
            XiIntegrand::Samples { xs, ys, tail } => {
                let (first, last) = (xs[0], *xs.last().unwrap());
                if lo < first {
                    return Err(Error::InsufficientCoverage { covered: first, required: lo });
                }
                let s = Sampled { xs, ys };
                let top = hi.min(last);
                let mut total = 0.0;
                if top > lo {
                    let mut nodes = vec![lo];
                    nodes.extend(xs.iter().copied().filter(|&x| x > lo && x < top));
                    nodes.push(top);
                    let vals: Vec<f64> = nodes.iter().map(|&x| s.value_at(x)).collect();
                    total += trapezoid(&nodes, &vals);
                }
                if hi > last {
                    total += tail.unwrap_or(0.0) * (hi - last.max(lo));
                }
                Ok(total)
            }
        }
    }

    /// Breakpoints of the integrand inside `[lo, hi]` where cumulative
    /// quantities should be reported.
    pub fn nodes(&self, lo: f64, hi: f64) -> Vec<f64> {
        let inner: Vec<f64> = match self {
            XiIntegrand::Steps { f, .. } => f.jumps().to_vec(),
            XiIntegrand::Samples { xs, .. } => xs.clone(),
        };
        let mut nodes = vec![lo];
        nodes.extend(inner.into_iter().filter(|&x| x > lo && x < hi));
        nodes.push(hi);
        nodes
    }
}

impl AbelIntegrand for XiIntegrand {
    fn damped_integral(&self, alpha: f64, lo: f64, hi: f64) -> f64 {
        match self {
            XiIntegrand::Steps { f, .. } => f.damped_integral(alpha, lo, hi),
            XiIntegrand::Samples { xs, ys, tail } => {
                let last = *xs.last().unwrap();
                let body = Sampled { xs, ys }.damped_integral(alpha, lo, hi.min(last));
                match tail {
                    Some(t) if hi > last && *t != 0.0 => {
                        let a = last.max(lo);
                        body + t * ((-alpha * (a - lo)).exp() - (-alpha * (hi - lo)).exp()) / alpha
                    }
                    _ => body,
                }
            }
        }
    }

    fn covered_up_to(&self) -> f64 {
        match self {
            XiIntegrand::Steps { hi, .. } => *hi,
            XiIntegrand::Samples { xs, tail, .. } => {
                if tail.is_some() {
                    f64::INFINITY
                } else {
                    *xs.last().unwrap()
                }
            }
        }
    }
}

/// Default damping schedule for boundary values `lambda + i eps`.
pub const DEFAULT_EPS_SCHEDULE: [f64; 5] = [1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

/// Diagonal Green's function value at a point of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreensValue {
    pub z: Complex64,
    pub value: Complex64,
}

/// `(1/pi) Arg g` with the argument taken in `[0, pi]`.
pub fn arg_fraction(g: Complex64) -> f64 {
    g.im.max(0.0).atan2(g.re) / PI
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct XiEstimate {
    pub value: f64,
    pub uncertainty: f64,
    pub converged: bool,
    /// `(eps, (1/pi) Arg G(lambda + i eps))`
    pub samples: Vec<(f64, f64)>,
}

pub(crate) fn check_eps_schedule(eps: &[f64]) -> Result<()> {
    if eps.len() < 2 {
        return Err(Error::invalid("eps schedule needs at least two values"));
    }
    if eps.iter().any(|e| !(*e > 0.0)) || eps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid("eps schedule must be positive and strictly decreasing"));
    }
    Ok(())
}

/// Linear extrapolation to `eps = 0` of `(1/pi) Arg G(lambda + i eps)`
/// sampled along a decreasing schedule. Growing differences between
/// consecutive samples mark `lambda` as (close to) a jump.
pub fn extrapolate_arg(samples: Vec<(f64, f64)>) -> XiEstimate {
    let k = samples.len() - 1;
    let (e1, f1) = samples[k - 1];
    let (e2, f2) = samples[k];
    let d = f2 - f1;
    let value = (f2 + d * e2 / (e1 - e2)).clamp(0.0, 1.0);
    let prev = if k >= 2 { (samples[k - 1].1 - samples[k - 2].1).abs() } else { f64::INFINITY };
    let converged = d.abs() <= prev.max(1e-9) && d.abs() < 1e-2;
    XiEstimate { value, uncertainty: d.abs(), converged, samples }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{abel_limit, AbelSchedule};

    fn harmonic_steps() -> StepFunction {
        StepFunction::new(vec![0.0, 2.0, 4.0, 6.0], vec![0.0, 1.0, 0.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn step_invariants_enforced() {
        let bad = StepFunction::new(vec![0.0], vec![0.5, 1.0]).unwrap();
        assert!(XiGrid::from_steps(BasePoint::Position(0.0), bad, 1.0).is_err());
        let over = StepFunction::new(vec![0.0], vec![0.0, 2.0]).unwrap();
        assert!(XiGrid::from_steps(BasePoint::Position(0.0), over, 1.0).is_err());
    }

    #[test]
    fn samples_are_checked_and_clamped() {
        let xi = XiGrid::from_samples(BasePoint::Site(0), vec![0.0, 1.0, 2.0], vec![-1e-12, 0.5, 1.0 + 1e-12]).unwrap();
        assert_eq!(xi.eval(0.0), Some(0.0));
        assert_eq!(xi.eval(0.5), Some(0.25));
        assert_eq!(xi.eval(2.0), Some(1.0));
        assert_eq!(xi.eval(2.5), None);
        assert!(XiGrid::from_samples(BasePoint::Site(0), vec![0.0, 0.0], vec![0.0, 0.0]).is_err());
        assert!(XiGrid::from_samples(BasePoint::Site(0), vec![0.0, 1.0], vec![0.0, 1.5]).is_err());
    }

    #[test]
    fn tail_extends_coverage() {
        let xi = XiGrid::from_steps(BasePoint::Position(0.0), harmonic_steps(), 7.0).unwrap();
        assert_eq!(xi.eval(7.5), None);
        let xi = xi.with_tail(0.5).unwrap();
        assert_eq!(xi.eval(6.5), Some(0.0));
        assert_eq!(xi.eval(7.0), Some(0.5));
        assert_eq!(xi.eval(1e6), Some(0.5));
    }

    #[test]
    fn grid_tail_integrates_and_damps() {
        let xi = XiGrid::from_samples(BasePoint::Position(0.0), vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 1.0])
            .unwrap()
            .with_tail(0.5)
            .unwrap();
        assert_eq!(xi.eval(10.0), Some(0.5));
        let g = xi.integrand(|v| v);
        assert!((g.integral(0.0, 4.0).unwrap() - (1.5 + 1.0)).abs() < 1e-15);
        // damped tail: 0.5 * int_2^inf e^{-a l} = 0.5 e^{-2a}/a
        let a = 0.3;
        let direct = g.damped_integral(a, 0.0, f64::INFINITY);
        let body = Sampled { xs: &[0.0, 1.0, 2.0], ys: &[0.0, 1.0, 1.0] }.damped_integral(a, 0.0, 2.0);
        assert!((direct - body - 0.5 * (-2.0 * a).exp() / a).abs() < 1e-14);
        let zero_tail = xi.integrand(|v| 1.0 - 2.0 * v);
        let r = abel_limit(&zero_tail, 0.0, &AbelSchedule::default_for(0.0)).unwrap();
        // 1 - 2 xi integrates to 2 - 2 * 1.5 = -1 on [0, 2] and vanishes beyond
        assert!((r.value + 1.0).abs() < 1e-4, "{}", r.value);
    }

    #[test]
    fn integrand_transforms_and_integrates() {
        let xi = XiGrid::from_steps(BasePoint::Position(0.0), harmonic_steps(), 8.0).unwrap();
        let g = xi.integrand(|v| 1.0 - 2.0 * v);
        assert_eq!(g.integral(0.0, 8.0).unwrap(), 0.0);
        assert_eq!(g.integral(0.0, 2.0).unwrap(), -2.0);
        assert!(g.integral(0.0, 9.0).is_err());
        assert_eq!(xi.shifted(1.0).eval(1.5), Some(1.0));
    }

    #[test]
    fn arg_fraction_range() {
        assert_eq!(arg_fraction(Complex64::new(1.0, 0.0)), 0.0);
        assert_eq!(arg_fraction(Complex64::new(-1.0, 0.0)), 1.0);
        assert_eq!(arg_fraction(Complex64::new(0.0, 2.0)), 0.5);
        // rounding below the axis is clamped onto it
        assert_eq!(arg_fraction(Complex64::new(-1.0, -1e-18)), 1.0);
    }

    #[test]
    fn linear_extrapolation_is_exact_for_linear_data() {
        let samples: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-4].iter().map(|&e| (e, 0.25 + 3.0 * e)).collect();
        let est = extrapolate_arg(samples);
        assert!((est.value - 0.25).abs() < 1e-14 && est.converged);
        let jumpy = vec![(1e-2, 0.5), (1e-3, 0.51), (1e-4, 0.9)];
        assert!(!extrapolate_arg(jumpy).converged);
        assert!(check_eps_schedule(&[1e-3]).is_err());
        assert!(check_eps_schedule(&[1e-3, -1e-4]).is_err());
    }
}
