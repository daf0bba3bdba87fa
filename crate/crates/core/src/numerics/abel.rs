//! Abel-regularized integrals `lim_{a -> 0} int e^{-a (l - E0)} g(l) dl`
//! evaluated on a decreasing schedule of damping parameters and
//! extrapolated to zero.

use serde::{Deserialize, Serialize};

use super::quadrature::{integrate_adaptive, StepFunction};
use crate::error::{Error, Result};

/// Damping level left at the cutoff by the default schedule.
const TRUNCATION_LEVEL: f64 = 1e-8;
const DEFAULT_ALPHAS: [f64; 5] = [0.2, 0.1, 0.05, 0.025, 0.0125];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbelSchedule {
    alphas: Vec<f64>,
    cutoff: f64,
}

impl AbelSchedule {
    pub fn new(alphas: Vec<f64>, cutoff: f64) -> Result<Self> {
        if alphas.len() < 3 {
            return Err(Error::invalid("Abel schedule needs at least 3 damping values"));
        }
        if alphas.iter().any(|a| !(*a > 0.0) || !a.is_finite()) {
            return Err(Error::invalid("Abel damping values must be positive"));
        }
        if alphas.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("Abel damping values must be strictly decreasing"));
        }
        if !(cutoff.is_finite()) {
            return Err(Error::invalid("Abel cutoff must be finite"));
        }
        Ok(Self { alphas, cutoff })
    }

    /// Default damping values, with the cutoff placed so the weakest
    /// damping has fallen below 1e-8.
    pub fn default_for(e0: f64) -> Self {
        let alpha_min = DEFAULT_ALPHAS[DEFAULT_ALPHAS.len() - 1];
        Self {
            alphas: DEFAULT_ALPHAS.to_vec(),
            cutoff: e0 + (-TRUNCATION_LEVEL.ln() / alpha_min).ceil(),
        }
    }

    /// Default schedule rescaled so that its cutoff is exactly `hi`.
    pub fn covering(e0: f64, hi: f64) -> Result<Self> {
        if !(hi > e0) {
            return Err(Error::invalid(format!("cannot cover [{e0}, {hi}]")));
        }
        let alpha_min = -TRUNCATION_LEVEL.ln() / (hi - e0);
        let base = DEFAULT_ALPHAS[DEFAULT_ALPHAS.len() - 1];
        let alphas = DEFAULT_ALPHAS.iter().map(|a| a * alpha_min / base).collect();
        Self::new(alphas, hi)
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }
}

/// Functions that can be integrated against `e^{-alpha (l - lo)}`.
pub trait AbelIntegrand {
    /// `int_lo^hi e^{-alpha (l - lo)} g(l) dl`
    fn damped_integral(&self, alpha: f64, lo: f64, hi: f64) -> f64;

    /// Largest `l` up to which `g` is known.
    fn covered_up_to(&self) -> f64 {
        f64::INFINITY
    }
}

/// `int_a^b e^{-alpha t} dt` for `0 <= a <= b`, stable as `alpha -> 0`.
fn damped_length(alpha: f64, a: f64, b: f64) -> f64 {
    if alpha == 0.0 {
        return b - a;
    }
    (-alpha * a).exp() * -(-alpha * (b - a)).exp_m1() / alpha
}

impl AbelIntegrand for StepFunction {
    fn damped_integral(&self, alpha: f64, lo: f64, hi: f64) -> f64 {
        self.plateaus(lo, hi)
            .into_iter()
            .filter(|p| p.2 != 0.0)
            .map(|(a, b, v)| v * damped_length(alpha, a - lo, b - lo))
            .sum()
    }
}

/// Sampled integrand, integrated by the trapezoid rule on its own grid.
#[derive(Debug, Clone, Copy)]
pub struct Sampled<'a> {
    pub xs: &'a [f64],
    pub ys: &'a [f64],
}

impl Sampled<'_> {
    pub fn value_at(&self, x: f64) -> f64 {
        let i = self.xs.partition_point(|&t| t <= x).clamp(1, self.xs.len() - 1);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let t = (x - x0) / (x1 - x0);
        self.ys[i - 1] * (1.0 - t) + self.ys[i] * t
    }
}

impl AbelIntegrand for Sampled<'_> {
    fn damped_integral(&self, alpha: f64, lo: f64, hi: f64) -> f64 {
        let mut nodes = vec![lo];
        nodes.extend(self.xs.iter().copied().filter(|&x| x > lo && x < hi));
        nodes.push(hi);
        let weighted: Vec<f64> = nodes
            .iter()
            .map(|&x| (-alpha * (x - lo)).exp() * self.value_at(x))
            .collect();
        super::trapezoid(&nodes, &weighted)
    }

    fn covered_up_to(&self) -> f64 {
        *self.xs.last().unwrap_or(&f64::NEG_INFINITY)
    }
}

/// Smooth closure integrand; `breaks` lists known discontinuities.
pub struct Smooth<F> {
    f: F,
    breaks: Vec<f64>,
    tol: f64,
}

impl<F: Fn(f64) -> f64> Smooth<F> {
    pub fn new(f: F) -> Self {
        Self { f, breaks: Vec::new(), tol: 1e-12 }
    }

    pub fn with_breaks(mut self, mut breaks: Vec<f64>) -> Self {
        breaks.sort_by(|a, b| a.total_cmp(b));
        self.breaks = breaks;
        self
    }
}

impl<F: Fn(f64) -> f64> AbelIntegrand for Smooth<F> {
    fn damped_integral(&self, alpha: f64, lo: f64, hi: f64) -> f64 {
        let mut nodes = vec![lo];
        nodes.extend(self.breaks.iter().copied().filter(|&x| x > lo && x < hi));
        nodes.push(hi);
        // panels of a few damping lengths keep the quadrature well resolved
        let panel = (4.0 / alpha).min(hi - lo).max(1e-6);
        let mut total = 0.0;
        for w in nodes.windows(2) {
            let n = ((w[1] - w[0]) / panel).ceil().max(1.0) as usize;
            let h = (w[1] - w[0]) / n as f64;
            for k in 0..n {
                let a = w[0] + h * k as f64;
                let b = if k + 1 == n { w[1] } else { a + h };
                total += integrate_adaptive(|x| (-alpha * (x - lo)).exp() * (self.f)(x), a, b, self.tol);
            }
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AbelResult {
    /// Extrapolated `alpha -> 0` value.
    pub value: f64,
    /// `(alpha, I(alpha))` for every schedule entry.
    pub raw: Vec<(f64, f64)>,
    /// Extrapolations from each consecutive triple of the schedule.
    pub extrapolations: Vec<f64>,
    /// Difference between the last two extrapolations.
    pub error_estimate: f64,
    /// False when successive extrapolations drift apart.
    pub converged: bool,
}

/// Value at 0 of the quadratic through three points.
fn quadratic_at_zero(p: [(f64, f64); 3]) -> f64 {
    let mut total = 0.0;
    for i in 0..3 {
        let mut w = 1.0;
        for j in 0..3 {
            if i != j {
                w *= p[j].0 / (p[j].0 - p[i].0);
            }
        }
        total += w * p[i].1;
    }
    total
}

/// Abel limit of `int_{e0}^{cutoff} e^{-alpha (l - e0)} g(l) dl` with a
/// quadratic Richardson fit on the last three damping values.
pub fn abel_limit<G: AbelIntegrand + ?Sized>(integrand: &G, e0: f64, schedule: &AbelSchedule) -> Result<AbelResult> {
    let cutoff = schedule.cutoff();
    if cutoff <= e0 {
        return Err(Error::invalid(format!("Abel cutoff {cutoff} must exceed E0 = {e0}")));
    }
    let covered = integrand.covered_up_to();
    if covered < cutoff {
        return Err(Error::InsufficientCoverage { covered, required: cutoff });
    }
    let raw: Vec<(f64, f64)> = schedule
        .alphas()
        .iter()
        .map(|&a| (a, integrand.damped_integral(a, e0, cutoff)))
        .collect();
    let extrapolations: Vec<f64> = raw
        .windows(3)
        .map(|w| quadratic_at_zero([w[0], w[1], w[2]]))
        .collect();
    let value = *extrapolations.last().expect("schedule has at least 3 entries");
    let diffs: Vec<f64> = extrapolations.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let error_estimate = diffs.last().copied().unwrap_or(0.0);
    let scale = 1e-12 * (1.0 + value.abs());
    let converged = diffs
        .windows(2)
        .all(|w| w[1] <= w[0] + scale);
    Ok(AbelResult { value, raw, extrapolations, error_estimate, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn alternating_pattern(periods: usize) -> StepFunction {
        // 1 - 2 xi for the harmonic oscillator at x = 0
        let mut jumps = vec![0.0];
        let mut values = vec![0.0, -1.0];
        for k in 1..(2 * periods) {
            jumps.push(2.0 * k as f64);
            values.push(if k % 2 == 1 { 1.0 } else { -1.0 });
        }
        StepFunction::new(jumps, values).unwrap()
    }

    #[test]
    fn default_schedule_cutoff() {
        let s = AbelSchedule::default_for(0.0);
        let a_min = *s.alphas().last().unwrap();
        assert!((-a_min * s.cutoff()).exp() < 1e-8);
        assert!((-a_min * (s.cutoff() - 1.0)).exp() > 1e-8);
        assert!(AbelSchedule::new(vec![0.1, 0.2, 0.05], 10.0).is_err());
        assert!(AbelSchedule::new(vec![0.2, 0.1], 10.0).is_err());
    }

    #[test]
    fn zero_integrand() {
        let r = abel_limit(&StepFunction::constant(0.0), 0.0, &AbelSchedule::default_for(0.0)).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.raw.iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn alternating_steps_sum_to_minus_one() {
        let g = alternating_pattern(400);
        let r = abel_limit(&g, 0.0, &AbelSchedule::default_for(0.0)).unwrap();
        assert!((r.value + 1.0).abs() < 1e-6, "{r:?}");
        // closed form of the raw sequence: -tanh(a)/a
        for (a, v) in &r.raw {
            assert!((v + a.tanh() / a).abs() < 1e-8);
        }
    }

    #[test]
    fn absolutely_integrable_needs_no_regularization() {
        let g = StepFunction::new(vec![0.0, 1.0], vec![0.0, 1.0, 0.0]).unwrap();
        let r = abel_limit(&g, 0.0, &AbelSchedule::default_for(0.0)).unwrap();
        // remainder of the quadratic fit: a1*a2*a3/24 ~ 6.5e-7
        assert!((r.value - 1.0).abs() < 1e-6);
        assert!(r.converged);
    }

    #[test]
    fn smooth_and_sampled_integrands() {
        let schedule = AbelSchedule::default_for(0.0);
        let f = Smooth::new(|x: f64| (-x).exp() * x.cos());
        let r = abel_limit(&f, 0.0, &schedule).unwrap();
        // cubic moment term: 0.25 * a1*a2*a3 ~ 4e-6
        assert!((r.value - 0.5).abs() < 1e-5, "{}", r.value);

        let xs = crate::numerics::linspace(0.0, schedule.cutoff(), 400_001);
        let ys: Vec<f64> = xs.iter().map(|x| (-x * x).exp()).collect();
        let r = abel_limit(&Sampled { xs: &xs, ys: &ys }, 0.0, &schedule).unwrap();
        // a1*a2*a3/12 ~ 1.3e-6
        assert!((r.value - std::f64::consts::PI.sqrt() / 2.0).abs() < 3e-6, "{r:?}");
    }

    #[test]
    fn coverage_checked() {
        let xs = [0.0, 1.0, 2.0];
        let ys = [1.0, 1.0, 1.0];
        let err = abel_limit(&Sampled { xs: &xs, ys: &ys }, 0.0, &AbelSchedule::default_for(0.0));
        assert!(matches!(err, Err(Error::InsufficientCoverage { .. })));
    }

    #[test]
    fn covering_schedule_reaches_target() {
        let s = AbelSchedule::covering(-1.0, 79.0).unwrap();
        assert_eq!(s.cutoff(), 79.0);
        let a = *s.alphas().last().unwrap();
        assert!(((-a * 80.0).exp() - 1e-8).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn linear_in_integrand(a in -3.0f64..3.0, b in -3.0f64..3.0, j1 in 0.1f64..5.0) {
            let f = StepFunction::new(vec![0.0, j1], vec![0.0, 1.0, 0.0]).unwrap();
            let g = alternating_pattern(300);
            let deltas = |h: &StepFunction, w: f64| -> Vec<(f64, f64)> {
                h.jumps().iter().zip(h.values().windows(2)).map(|(x, v)| (*x, w * (v[1] - v[0]))).collect()
            };
            let mut all = deltas(&f, a);
            all.extend(deltas(&g, b));
            let combo = StepFunction::from_jumps(0.0, all, 0.0);
            let s = AbelSchedule::default_for(0.0);
            let lf = abel_limit(&f, 0.0, &s).unwrap().value;
            let lg = abel_limit(&g, 0.0, &s).unwrap().value;
            let lc = abel_limit(&combo, 0.0, &s).unwrap().value;
            prop_assert!((lc - (a * lf + b * lg)).abs() < 1e-10);
        }

        #[test]
        fn integrable_steps_agree_with_plain_integral(cuts in proptest::collection::vec(0.0f64..3.0, 2..8), vals in proptest::collection::vec(-1.0f64..1.0, 8)) {
            let mut jumps = cuts.clone();
            jumps.sort_by(|a, b| a.total_cmp(b));
            let mut values = vec![0.0];
            values.extend(vals.iter().take(jumps.len() - 1));
            values.push(0.0);
            let f = StepFunction::new(jumps.clone(), values).unwrap();
            let plain = f.integral(0.0, 10.0);
            let r = abel_limit(&f, 0.0, &AbelSchedule::default_for(0.0)).unwrap();
            // quadratic Richardson leaves an a^3 moment term, here below 1e-4
            prop_assert!((r.value - plain).abs() < 1e-4, "{} vs {}", r.value, plain);
        }
    }
}
