//! `xi` for confining potentials as a counting difference: `+1` at every
//! eigenvalue `E_n` of `H`, `-1` at every eigenvalue `mu_n(x)` of the
//! decoupled operator.

use crate::error::{Error, Result};
use crate::numerics::StepFunction;
use crate::xi::{BasePoint, XiGrid};

/// Slack on the interlacing check and on merging coincident jumps.
pub const INTERLACING_TOL: f64 = 1e-8;

/// `e_list` holds `E_0 < E_1 < ...`, `mu_list` holds `mu_1 <= mu_2 <= ...`.
/// The result is exact up to the first eigenvalue whose partner is missing.
pub fn xi_confining(x: f64, e_list: &[f64], mu_list: &[f64]) -> Result<XiGrid> {
    if e_list.is_empty() {
        return Err(Error::invalid("need at least one eigenvalue"));
    }
    if e_list.iter().chain(mu_list).any(|v| !v.is_finite()) {
        return Err(Error::invalid("spectral data must be finite"));
    }
    if e_list.windows(2).any(|w| w[1] <= w[0]) || mu_list.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("spectral data must be ascending"));
    }
    for (i, mu) in mu_list.iter().enumerate() {
        let below = e_list.get(i).copied();
        let above = e_list.get(i + 1).copied();
        let ok_below = below.map_or(false, |e| *mu >= e - INTERLACING_TOL * (1.0 + e.abs()));
        let ok_above = above.map_or(true, |e| *mu <= e + INTERLACING_TOL * (1.0 + e.abs()));
        if !(ok_below && ok_above) {
            return Err(Error::Interlacing(format!(
                "mu_{} = {mu} not in [E_{i}, E_{}] = [{:?}, {:?}]",
                i + 1,
                i + 1,
                below,
                above
            )));
        }
    }
    let scale = e_list.iter().chain(mu_list).fold(1.0f64, |m, v| m.max(v.abs()));
    let deltas = e_list.iter().map(|e| (*e, 1.0)).chain(mu_list.iter().map(|m| (*m, -1.0)));
    let steps = StepFunction::from_jumps(0.0, deltas, INTERLACING_TOL * scale);
    if steps.values().iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(Error::Interlacing("counting difference left {0, 1}".into()));
    }
    let covered_hi = e_list[mu_list.len().min(e_list.len() - 1)];
    XiGrid::from_steps(BasePoint::Position(x), steps, covered_hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{abel_limit, AbelSchedule};
    use proptest::prelude::*;

    #[test]
    fn harmonic_pattern() {
        let e: Vec<f64> = (0..6).map(|n| 2.0 * n as f64).collect();
        let mu = [2.0, 2.0, 6.0, 6.0, 10.0];
        let xi = xi_confining(0.0, &e, &mu).unwrap();
        for (l, want) in [(-1.0, 0.0), (1.0, 1.0), (3.0, 0.0), (5.0, 1.0), (7.0, 0.0), (9.0, 1.0)] {
            assert_eq!(xi.eval(l), Some(want), "xi({l})");
        }
        assert_eq!(xi.covered_hi(), 10.0);
        assert_eq!(xi.eval(10.5), None);
    }

    #[test]
    fn touching_data_collapse() {
        let e = [0.0, 1.0, 2.0, 3.0];
        let xi = xi_confining(0.0, &e, &[1.0, 2.0, 3.0]).unwrap();
        let steps = xi.steps().unwrap();
        assert_eq!(steps.jumps(), &[0.0]);
        assert_eq!(steps.values(), &[0.0, 1.0]);
        assert_eq!(xi.eval(2.5), Some(1.0));
    }

    #[test]
    fn interlacing_violations() {
        assert!(matches!(xi_confining(0.0, &[0.0, 2.0], &[2.5]), Err(Error::Interlacing(_))));
        assert!(matches!(xi_confining(0.0, &[0.0, 2.0], &[-0.5]), Err(Error::Interlacing(_))));
        assert!(xi_confining(0.0, &[], &[]).is_err());
        assert!(xi_confining(0.0, &[1.0, 0.0], &[]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn random_interlacing_integrates_like_abel(gaps in prop::collection::vec((0.2f64..2.0, 0.0f64..1.0), 3..12)) {
            let mut e = vec![0.0];
            let mut mu = Vec::new();
            for (g, t) in &gaps {
                let last = *e.last().unwrap();
                mu.push(last + t * g);
                e.push(last + g);
            }
            let xi = xi_confining(0.0, &e, &mu).unwrap();
            let top = *e.last().unwrap();
            // direct integral of 1 - 2 xi against the analytic plateau sum
            let exact: f64 = gaps.iter().map(|(g, t)| t * g * -1.0 + (1.0 - t) * g).sum();
            let got = xi.integrand(|v| 1.0 - 2.0 * v).integral(0.0, top).unwrap();
            prop_assert!((got - exact).abs() < 1e-10);
            // Abel sum with the data closed off at 1/2 beyond the top
            let closed = xi.clone().with_tail(0.5).unwrap();
            let alphas = vec![1e-3, 5e-4, 2.5e-4];
            let schedule = AbelSchedule::new(alphas.clone(), top + 1.0).unwrap();
            let r = abel_limit(&closed.integrand(|v| 1.0 - 2.0 * v), 0.0, &schedule).unwrap();
            // quadratic fit leaves a1 a2 a3 / 6 * int lambda^3 |g|, and |g| = 1 on [0, top]
            let bound = 1.5 * alphas.iter().product::<f64>() / 6.0 * top.powi(4) / 4.0 + 1e-12;
            prop_assert!((r.value - exact).abs() < bound, "{} vs {exact}", r.value);
        }
    }
}
