//! Trace formulas recovering `V(x)` from spectral data.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numerics::{abel_limit, AbelResult, AbelSchedule};
use crate::xi::XiGrid;

pub use crate::jacobi::trace_formula_jacobi;

/// Verdict on `int |xi - 1/2|` over the covered range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Summability {
    /// The profile has flattened out; the plain integral can be trusted.
    Plateau,
    /// The profile keeps growing at a rate bounded away from zero.
    Growing,
    Undetermined,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reconstruction {
    pub value: f64,
    pub abel: AbelResult,
    /// `E0 + int (1 - 2 xi)` without damping, up to the schedule cutoff.
    pub plain: f64,
    pub summability: Summability,
    /// `int_{E0}^{cutoff} |xi - 1/2|`.
    pub profile_total: f64,
}

/// Cumulative `int_{E0}^{Lambda} |xi - 1/2|` at each breakpoint of the data
/// up to `hi` (the end of the covered range when `None`).
pub fn summability_profile(xi: &XiGrid, e0: f64, hi: Option<f64>) -> Result<Vec<(f64, f64)>> {
    let hi = hi.unwrap_or(xi.covered_hi());
    if !hi.is_finite() {
        return Err(Error::invalid("profile needs a finite upper limit"));
    }
    if xi.covered_lo() > e0 {
        return Err(Error::InsufficientCoverage { covered: xi.covered_lo(), required: e0 });
    }
    if !(hi > e0) {
        return Err(Error::invalid(format!("profile range [{e0}, {hi}] is empty")));
    }
    let f = xi.integrand(|v| (v - 0.5).abs());
    let nodes = f.nodes(e0, hi);
    let mut out = Vec::with_capacity(nodes.len());
    let mut total = 0.0;
    out.push((e0, 0.0));
    for w in nodes.windows(2) {
        total += f.integral(w[0], w[1])?;
        out.push((w[1], total));
    }
    Ok(out)
}

/// Reads the profile's behaviour on the upper half of its range.
fn classify(profile: &[(f64, f64)]) -> Summability {
    let (lo, hi) = (profile[0].0, profile[profile.len() - 1].0);
    let mid = 0.5 * (lo + hi);
    let total = profile[profile.len() - 1].1;
    let at_mid = profile
        .windows(2)
        .find(|w| w[1].0 >= mid)
        .map(|w| {
            let t = if w[1].0 > w[0].0 { (mid - w[0].0) / (w[1].0 - w[0].0) } else { 1.0 };
            w[0].1 + t * (w[1].1 - w[0].1)
        })
        .unwrap_or(total);
    let growth = total - at_mid;
    if growth <= 1e-3 * (1.0 + total) {
        Summability::Plateau
    } else if growth / (hi - mid) >= 0.1 {
        Summability::Growing
    } else {
        Summability::Undetermined
    }
}

/// `V(x) = E0 + lim_{a -> 0} int e^{-a (l - E0)} (1 - 2 xi(x, l)) dl`.
///
/// `e0` must not exceed the bottom of the spectrum. For data that stop
/// short of the schedule cutoff, declare a tail with [`XiGrid::with_tail`].
pub fn reconstruct_v(xi: &XiGrid, e0: f64, schedule: &AbelSchedule) -> Result<Reconstruction> {
    if !e0.is_finite() {
        return Err(Error::invalid("E0 must be finite"));
    }
    if xi.covered_lo() > e0 {
        return Err(Error::InsufficientCoverage { covered: xi.covered_lo(), required: e0 });
    }
    if xi.covered_hi() < schedule.cutoff() {
        return Err(Error::InsufficientCoverage { covered: xi.covered_hi(), required: schedule.cutoff() });
    }
    if let Some(below) = xi.eval(e0 - 1e-9 * (1.0 + e0.abs())) {
        if below != 0.0 {
            return Err(Error::invalid(format!("xi = {below} below E0 = {e0}; E0 is above the spectrum bottom")));
        }
    }
    let g = xi.integrand(|v| 1.0 - 2.0 * v);
    let abel = abel_limit(&g, e0, schedule)?;
    let plain = e0 + g.integral(e0, schedule.cutoff())?;
    let profile = summability_profile(xi, e0, Some(schedule.cutoff()))?;
    let profile_total = profile[profile.len() - 1].1;
    Ok(Reconstruction {
        value: e0 + abel.value,
        abel,
        plain,
        summability: classify(&profile),
        profile_total,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodicReconstruction {
    pub value: f64,
    /// `E_0 + sum_{m <= n} (E_{2m} + E_{2m-1} - 2 mu_m)` for `n = 0, 1, ...`.
    pub partial_sums: Vec<f64>,
    /// Gap lengths `E_{2n} - E_{2n-1}`.
    pub gaps: Vec<f64>,
    /// Bound on `|V(x) - value|`: the unused gaps plus the data error of
    /// the used terms.
    pub tail_bound: f64,
}

/// `V(x) = E_0 + sum_n (E_{2n} + E_{2n-1} - 2 mu_n(x))` from band edges
/// `E_0 <= E_1 <= ...` (an odd count, ending at a gap top) and
/// `mu_1, mu_2, ...`. `data_tol` is the absolute accuracy of every input
/// value.
pub fn reconstruct_v_periodic(edges: &[f64], mu: &[f64], data_tol: f64) -> Result<PeriodicReconstruction> {
    if edges.len() % 2 == 0 {
        return Err(Error::invalid("band edges must run from E_0 to some E_{2n}"));
    }
    if !(data_tol >= 0.0) {
        return Err(Error::invalid("data tolerance must be non-negative"));
    }
    if edges.windows(2).any(|w| w[1] < w[0] - data_tol) {
        return Err(Error::invalid("band edges must be ascending"));
    }
    let n = (edges.len() - 1) / 2;
    if mu.len() < n {
        return Err(Error::invalid(format!("{n} gaps need {n} Dirichlet eigenvalues, got {}", mu.len())));
    }
    let slack = 2.0 * data_tol;
    let mut partial_sums = vec![edges[0]];
    let mut gaps = Vec::with_capacity(n);
    for k in 1..=n {
        let (lo, hi, m) = (edges[2 * k - 1], edges[2 * k], mu[k - 1]);
        if m < lo - slack || m > hi + slack {
            return Err(Error::Interlacing(format!("mu_{k} = {m} outside gap [{lo}, {hi}]")));
        }
        gaps.push(hi - lo);
        partial_sums.push(partial_sums[k - 1] + hi + lo - 2.0 * m);
    }
    let value = *partial_sums.last().unwrap();
    Ok(PeriodicReconstruction { value, tail_bound: tail_bound(&gaps, data_tol), partial_sums, gaps })
}

/// Geometric continuation of the last two gaps, floored at the data
/// resolution, plus `4 data_tol` per used term.
fn tail_bound(gaps: &[f64], data_tol: f64) -> f64 {
    let floor = 2.0 * data_tol;
    let n = gaps.len();
    let data = 4.0 * data_tol * n as f64;
    if n == 0 {
        return f64::INFINITY;
    }
    let last = gaps[n - 1].max(floor);
    let ratio = if n >= 2 && gaps[n - 2] > floor && gaps[n - 1] > floor {
        gaps[n - 1] / gaps[n - 2]
    } else {
        0.5
    };
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    last * ratio / (1.0 - ratio) + data
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::StepFunction;
    use crate::schrodinger::{xi_confining, xi_schrodinger_grid, Potential};
    use crate::xi::{BasePoint, DEFAULT_EPS_SCHEDULE};
    use proptest::prelude::*;

    fn free_xi() -> XiGrid {
        let s = StepFunction::new(vec![0.0], vec![0.0, 0.5]).unwrap();
        XiGrid::from_steps(BasePoint::Position(0.0), s, f64::INFINITY).unwrap()
    }

    fn harmonic_xi(levels: usize) -> XiGrid {
        let e: Vec<f64> = (0..=levels).map(|n| 2.0 * n as f64).collect();
        let mu: Vec<f64> = (1..=levels).map(|n| if n % 2 == 1 { 2.0 * n as f64 } else { 2.0 * (n - 1) as f64 }).collect();
        xi_confining(0.0, &e, &mu).unwrap()
    }

    #[test]
    fn free_case() {
        let r = reconstruct_v(&free_xi(), 0.0, &AbelSchedule::default_for(0.0)).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.summability, Summability::Plateau);
        let p = summability_profile(&free_xi(), 0.0, Some(50.0)).unwrap();
        assert!(p.iter().all(|(_, v)| *v == 0.0));
    }

    #[test]
    fn harmonic_abel_limit() {
        let xi = harmonic_xi(80);
        let schedule = AbelSchedule::covering(0.0, 160.0).unwrap();
        let r = reconstruct_v(&xi, 0.0, &schedule).unwrap();
        // I(a) = -tanh(a)/a; the quadratic fit leaves ~ (2/15) a1 a2 a3 (a1+a2+a3)
        let a = schedule.alphas();
        let k = a.len();
        let bound = 2.0 / 15.0 * a[k - 3] * a[k - 2] * a[k - 1] * (a[k - 3] + a[k - 2] + a[k - 1]) * 1.5 + 1e-9;
        assert!((r.value + 1.0).abs() < bound, "{} (bound {bound})", r.value);
        assert_eq!(r.summability, Summability::Growing);
        let p = summability_profile(&xi, 0.0, Some(40.0)).unwrap();
        assert!((p.last().unwrap().1 - 20.0).abs() < 1e-12);
    }

    #[test]
    fn coverage_and_e0_checks() {
        let xi = harmonic_xi(10);
        assert!(matches!(
            reconstruct_v(&xi, 0.0, &AbelSchedule::covering(0.0, 160.0).unwrap()),
            Err(Error::InsufficientCoverage { .. })
        ));
        let padded = harmonic_xi(10).with_tail(0.5).unwrap();
        assert!(reconstruct_v(&padded, 1.0, &AbelSchedule::default_for(1.0)).is_err());
    }

    #[test]
    fn shift_equivariance_on_steps() {
        let xi = harmonic_xi(80);
        let schedule = AbelSchedule::covering(0.0, 160.0).unwrap();
        let base = reconstruct_v(&xi, 0.0, &schedule).unwrap().value;
        for c in [-3.5, 0.25, 7.0] {
            let moved = AbelSchedule::new(schedule.alphas().to_vec(), schedule.cutoff() + c).unwrap();
            let r = reconstruct_v(&xi.shifted(c), c, &moved).unwrap().value;
            assert!((r - base - c).abs() < 1e-12, "{c}: {r} vs {}", base + c);
        }
    }

    #[test]
    fn short_range_plain_and_abel_agree() {
        // a smooth barrier has exponentially small reflection, so xi - 1/2
        // is integrable
        let v = Potential::sech2(1.0).unwrap();
        let x = 0.3;
        let lambdas: Vec<f64> = (0..=1200).map(|i| 60.0 * (i as f64 / 1200.0).powi(2)).collect();
        let xi = xi_schrodinger_grid(&v, x, &lambdas, &DEFAULT_EPS_SCHEDULE).unwrap().with_tail(0.5).unwrap();
        let r = reconstruct_v(&xi, 0.0, &AbelSchedule::default_for(0.0)).unwrap();
        assert_eq!(r.summability, Summability::Plateau);
        assert!((r.value - r.plain).abs() < 1e-3, "{} vs {}", r.value, r.plain);
        assert!((r.value - v.value(x)).abs() < 2e-2, "{} vs {}", r.value, v.value(x));
    }

    #[test]
    fn periodic_closed_gaps() {
        let l: f64 = 2.0;
        let band = |n: usize| (n as f64 * std::f64::consts::PI / l).powi(2);
        let mut edges = vec![0.0];
        let mut mu = Vec::new();
        for n in 1..=6 {
            edges.extend([band(n), band(n)]);
            mu.push(band(n));
        }
        let r = reconstruct_v_periodic(&edges, &mu, 0.0).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.partial_sums.iter().all(|p| *p == 0.0));
        assert_eq!(r.tail_bound, 0.0);
    }

    #[test]
    fn periodic_errors() {
        assert!(reconstruct_v_periodic(&[0.0, 1.0], &[0.5], 0.0).is_err());
        assert!(matches!(reconstruct_v_periodic(&[0.0, 1.0, 2.0], &[3.0], 0.0), Err(Error::Interlacing(_))));
        assert!(reconstruct_v_periodic(&[0.0, 1.0, 2.0], &[], 0.0).is_err());
    }

    proptest! {
        #[test]
        fn periodic_shift_and_partial_sum_bounds(
            data in prop::collection::vec((0.5f64..3.0, 0.0f64..1.0, 0.0f64..1.0), 1..10),
            c in -5.0f64..5.0,
        ) {
            let mut edges = vec![-1.0];
            let mut mu = Vec::new();
            for (band, gap_frac, pos) in &data {
                let lo = edges.last().unwrap() + band;
                let hi = lo + gap_frac * 0.5;
                edges.extend([lo, hi]);
                mu.push(lo + pos * (hi - lo));
            }
            let r = reconstruct_v_periodic(&edges, &mu, 0.0).unwrap();
            let shifted_edges: Vec<f64> = edges.iter().map(|e| e + c).collect();
            let shifted_mu: Vec<f64> = mu.iter().map(|m| m + c).collect();
            let s = reconstruct_v_periodic(&shifted_edges, &shifted_mu, 0.0).unwrap();
            prop_assert!((s.value - r.value - c).abs() < 1e-12);
            // each term is bounded by its gap
            for (n, g) in r.gaps.iter().enumerate() {
                let term = r.partial_sums[n + 1] - r.partial_sums[n];
                prop_assert!(term.abs() <= g + 1e-12);
                let rest: f64 = r.gaps[n + 1..].iter().sum();
                prop_assert!((r.value - r.partial_sums[n + 1]).abs() <= rest + 1e-12);
            }
        }
    }
}
