use super::operator::{dirichlet_decouple, TruncatedJacobi};
use crate::error::{Error, Result};
use crate::numerics::StepFunction;
use crate::xi::{BasePoint, XiGrid};

const PIVMIN: f64 = 4.0 * f64::MIN_POSITIVE;

/// Number of eigenvalues strictly below `lambda` (Sturm sequence of the
/// LDL^T factorization of `t - lambda`).
pub fn sturm_count(diag: &[f64], lambda: f64) -> usize {
    let mut count = 0;
    let mut q = 1.0;
    for (i, d) in diag.iter().enumerate() {
        q = if i == 0 { d - lambda } else { d - lambda - 1.0 / q };
        if q.abs() < PIVMIN {
            q = -PIVMIN;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    count
}

/// Smallest `x` in `[lo, hi]` with more than `k` Sturm counts below it, to
/// within `tol`. With `known = Some((a, b))`, where `count(a) <= k <
/// count(b)` has been checked, midpoints outside `(a, b)` are decided
/// without counting; the bisection path is the same either way.
fn bisect_index(diag: &[f64], k: usize, mut lo: f64, mut hi: f64, tol: f64, known: Option<(f64, f64)>) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= tol || mid == lo || mid == hi {
            break;
        }
        let above = match known {
            Some((a, _)) if mid <= a => false,
            Some((_, b)) if mid >= b => true,
            _ => sturm_count(diag, mid) > k,
        };
        if above {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvalue estimates by implicit QL with Wilkinson shifts on the unit
/// off-diagonal. `None` if some eigenvalue fails to converge.
fn ql_estimates(diag: &[f64]) -> Option<Vec<f64>> {
    let n = diag.len();
    let mut d = diag.to_vec();
    let mut e = vec![1.0f64; n];
    e[n - 1] = 0.0;
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 60 {
                return None;
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                let r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                let r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    d.sort_by(f64::total_cmp);
    Some(d)
}

/// All eigenvalues in ascending order, by bisection on Sturm counts. QL
/// estimates supply a narrow checked bracket per eigenvalue, so only the
/// last bisection steps need a count.
pub fn eigenvalues_tridiagonal(t: &TruncatedJacobi) -> Vec<f64> {
    let diag = t.diag();
    let n = diag.len();
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![diag[0]];
    }
    let lo0 = diag.iter().fold(f64::INFINITY, |a, &d| a.min(d)) - 2.0;
    let hi0 = diag.iter().fold(f64::NEG_INFINITY, |a, &d| a.max(d)) + 2.0;
    let tol = 2.0 * f64::EPSILON * t.norm();
    let full = |k: usize| bisect_index(diag, k, lo0, hi0, tol, None);
    let Some(est) = ql_estimates(diag) else {
        return (0..n).map(full).collect();
    };
    let w = 1024.0 * tol;
    est.iter()
        .enumerate()
        .map(|(k, &x)| {
            let (a, b) = (x - w, x + w);
            if sturm_count(diag, a) <= k && sturm_count(diag, b) > k {
                bisect_index(diag, k, lo0, hi0, tol, Some((a, b)))
            } else {
                full(k)
            }
        })
        .collect()
}

fn merge_tol(t: &TruncatedJacobi) -> f64 {
    64.0 * f64::EPSILON * t.norm()
}

/// Counting spectral shift of `t` at `site`: jumps `+1` at eigenvalues of
/// `t` and `-1` at eigenvalues of the two decoupled blocks. Equal
/// eigenvalues (to rounding) cancel.
pub fn xi_counting_steps(t: &TruncatedJacobi, site: i64) -> Result<XiGrid> {
    let (left, right) = dirichlet_decouple(t, site)?;
    let plus = eigenvalues_tridiagonal(t).into_iter().map(|e| (e, 1.0));
    let minus = eigenvalues_tridiagonal(&left)
        .into_iter()
        .chain(eigenvalues_tridiagonal(&right))
        .map(|e| (e, -1.0));
    let steps = StepFunction::from_jumps(0.0, plus.chain(minus), merge_tol(t));
    if steps.values().iter().any(|v| *v != 0.0 && *v != 1.0) {
        return Err(Error::Interlacing(format!("counting xi left {{0, 1}}: plateaus {:?}", steps.values())));
    }
    XiGrid::from_steps(BasePoint::Site(site), steps, f64::INFINITY)
}

/// `#{eig(t) <= lambda} - #{eig(decoupled) <= lambda}`.
pub fn xi_counting(t: &TruncatedJacobi, site: i64, lambda: f64) -> Result<u8> {
    let xi = xi_counting_steps(t, site)?;
    Ok(xi.eval(lambda).unwrap_or(1.0) as u8)
}

/// Counting value from Sturm counts alone, for large windows. Only
/// meaningful when `lambda` is not itself an eigenvalue.
pub fn xi_counting_sturm(t: &TruncatedJacobi, site: i64, lambda: f64) -> Result<u8> {
    let (left, right) = dirichlet_decouple(t, site)?;
    let full = sturm_count(t.diag(), lambda) as i64;
    let parts = (sturm_count(left.diag(), lambda) + sturm_count(right.diag(), lambda)) as i64;
    match full - parts {
        d @ (0 | 1) => Ok(d as u8),
        d => Err(Error::Interlacing(format!("Sturm counts differ by {d} at {lambda}"))),
    }
}

/// Whether some eigenvalue of `t` or of its decoupled blocks lies within
/// `delta` of `lambda`.
pub fn near_jump(t: &TruncatedJacobi, site: i64, lambda: f64, delta: f64) -> Result<bool> {
    let (left, right) = dirichlet_decouple(t, site)?;
    Ok([t, &left, &right]
        .iter()
        .any(|m| sturm_count(m.diag(), lambda - delta) != sturm_count(m.diag(), lambda + delta)))
}

/// Smallest and largest eigenvalue over `t` and its decoupled blocks.
pub fn default_energy_window(t: &TruncatedJacobi, site: i64) -> Result<(f64, f64)> {
    let (left, right) = dirichlet_decouple(t, site)?;
    let all: Vec<f64> = [t, &left, &right].iter().flat_map(|m| eigenvalues_tridiagonal(m)).collect();
    let lo = all.iter().fold(f64::INFINITY, |a, &e| a.min(e));
    let hi = all.iter().fold(f64::NEG_INFINITY, |a, &e| a.max(e));
    Ok((lo, hi))
}

/// `(E- + E+)/2 + int_{E-}^{E+} (1/2 - xi)`.
pub fn trace_formula_jacobi(xi: &XiGrid, e_minus: f64, e_plus: f64) -> Result<f64> {
    if e_plus < e_minus {
        return Err(Error::invalid(format!("energy window [{e_minus}, {e_plus}] is empty")));
    }
    if xi.covered_lo() > e_minus {
        return Err(Error::InsufficientCoverage { covered: xi.covered_lo(), required: e_minus });
    }
    if xi.covered_hi() < e_plus {
        return Err(Error::InsufficientCoverage { covered: xi.covered_hi(), required: e_plus });
    }
    let integral = xi.integrand(|v| 0.5 - v).integral(e_minus, e_plus)?;
    Ok(0.5 * (e_minus + e_plus) + integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobi::operator::{truncate, JacobiOperator};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn dense_eigs(t: &TruncatedJacobi) -> Vec<f64> {
        let mut e: Vec<f64> = t.to_dense().symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(|a, b| a.total_cmp(b));
        e
    }

    #[test]
    fn closed_form_spectra() {
        let t = TruncatedJacobi::from_diagonal(0, vec![0.0, 0.0]);
        let e = eigenvalues_tridiagonal(&t);
        assert!((e[0] + 1.0).abs() < 1e-14 && (e[1] - 1.0).abs() < 1e-14);

        for n in [3usize, 10, 57] {
            let t = TruncatedJacobi::from_diagonal(0, vec![0.0; n]);
            let e = eigenvalues_tridiagonal(&t);
            for (i, ei) in e.iter().enumerate() {
                let k = (n - i) as f64;
                let exact = 2.0 * (k * PI / (n as f64 + 1.0)).cos();
                assert!((ei - exact).abs() < 1e-12 * t.norm(), "n={n} k={k}");
            }
        }
        assert_eq!(eigenvalues_tridiagonal(&TruncatedJacobi::from_diagonal(0, vec![5.0])), vec![5.0]);
    }

    #[test]
    fn single_site_counting_and_trace() {
        let t = TruncatedJacobi::from_diagonal(0, vec![5.0]);
        assert_eq!(xi_counting(&t, 0, 4.999).unwrap(), 0);
        assert_eq!(xi_counting(&t, 0, 5.0).unwrap(), 1);
        assert_eq!(xi_counting(&t, 0, 100.0).unwrap(), 1);
        let xi = xi_counting_steps(&t, 0).unwrap();
        assert_eq!(trace_formula_jacobi(&xi, 0.0, 10.0).unwrap(), 5.0);
    }

    #[test]
    fn free_three_site_counting() {
        let t = truncate(&JacobiOperator::free(), -1, 1).unwrap();
        let xi = xi_counting_steps(&t, 0).unwrap();
        let s = 2f64.sqrt();
        assert_eq!(xi.eval(-1.5), Some(0.0));
        assert_eq!(xi.eval(-1.0), Some(1.0));
        assert_eq!(xi.eval(0.0), Some(0.0));
        assert_eq!(xi.eval(1.0), Some(0.0));
        assert_eq!(xi.eval(1.5), Some(1.0));
        let v = trace_formula_jacobi(&xi, -2.0, 2.0).unwrap();
        assert!(v.abs() < 1e-14);
        let (lo, hi) = default_energy_window(&t, 0).unwrap();
        assert!((lo + s).abs() < 1e-14 && (hi - s).abs() < 1e-14);
        assert!(trace_formula_jacobi(&xi, lo, hi).unwrap().abs() < 1e-14);
    }

    #[test]
    fn free_band_half_gives_zero() {
        let xi = XiGrid::from_steps(
            BasePoint::Site(0),
            StepFunction::new(vec![-2.0, 2.0], vec![0.0, 0.5, 1.0]).unwrap(),
            f64::INFINITY,
        )
        .unwrap();
        assert_eq!(trace_formula_jacobi(&xi, -2.0, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn five_site_interlacing_against_dense() {
        let t = TruncatedJacobi::from_diagonal(0, vec![0.3, -1.2, 0.8, 1.9, -0.4]);
        let (l, r) = dirichlet_decouple(&t, 2).unwrap();
        assert_eq!((l.len(), r.len()), (2, 2));
        let full = dense_eigs(&t);
        let mut parts: Vec<f64> = dense_eigs(&l).into_iter().chain(dense_eigs(&r)).collect();
        parts.sort_by(|a, b| a.total_cmp(b));
        for i in 0..4 {
            assert!(full[i] <= parts[i] + 1e-12 && parts[i] <= full[i + 1] + 1e-12);
        }
        for (a, b) in eigenvalues_tridiagonal(&t).iter().zip(&full) {
            assert!((a - b).abs() < 1e-12 * t.norm());
        }
    }

    #[test]
    fn sturm_counting_matches_steps_off_jumps() {
        let t = TruncatedJacobi::from_diagonal(-3, vec![0.5, -1.0, 1.5, 0.0, -2.0, 0.7, 1.1]);
        for site in -3..=3 {
            let xi = xi_counting_steps(&t, site).unwrap();
            for k in 0..400 {
                let lambda = -5.0 + 0.025 * k as f64 + 1e-4;
                if near_jump(&t, site, lambda, 1e-6).unwrap() {
                    continue;
                }
                assert_eq!(xi_counting_sturm(&t, site, lambda).unwrap() as f64, xi.eval(lambda).unwrap());
            }
        }
    }

    fn random_truncation() -> impl Strategy<Value = (TruncatedJacobi, i64)> {
        (1usize..=12, -5i64..5)
            .prop_flat_map(|(n, first)| {
                (prop::collection::vec(-2.0f64..2.0, n), Just(first), 0..n as i64)
            })
            .prop_map(|(diag, first, k)| (TruncatedJacobi::from_diagonal(first, diag), first + k))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn counting_xi_stays_in_zero_one((t, site) in random_truncation()) {
            let xi = xi_counting_steps(&t, site).unwrap();
            let steps = xi.steps().unwrap();
            prop_assert!(steps.values().iter().all(|v| *v == 0.0 || *v == 1.0));
            // jumps alternate +1/-1 after merging, which is interlacing
            for w in steps.values().windows(2) {
                prop_assert!(w[0] != w[1]);
            }
            // dense grid and midpoints of dense-solver eigenvalues
            for k in 0..=200 {
                let l = -4.5 + 9.0 * k as f64 / 200.0;
                let v = xi.eval(l).unwrap();
                prop_assert!(v == 0.0 || v == 1.0);
            }
            let e = dense_eigs(&t);
            for w in e.windows(2) {
                let v = xi.eval(0.5 * (w[0] + w[1])).unwrap();
                prop_assert!(v == 0.0 || v == 1.0);
            }
        }

        #[test]
        fn eigenvalues_match_plain_bisection(
            diag in prop::collection::vec(prop_oneof![Just(0.0f64), -2.0f64..2.0], 2..150),
        ) {
            let t = TruncatedJacobi::from_diagonal(0, diag);
            let lo = t.diag().iter().fold(f64::INFINITY, |a, &d| a.min(d)) - 2.0;
            let hi = t.diag().iter().fold(f64::NEG_INFINITY, |a, &d| a.max(d)) + 2.0;
            let tol = 2.0 * f64::EPSILON * t.norm();
            for (k, e) in eigenvalues_tridiagonal(&t).iter().enumerate() {
                prop_assert_eq!(*e, bisect_index(t.diag(), k, lo, hi, tol, None));
            }
        }

        #[test]
        fn trace_formula_recovers_diagonal((t, site) in random_truncation()) {
            let xi = xi_counting_steps(&t, site).unwrap();
            let (lo, hi) = default_energy_window(&t, site).unwrap();
            let v = trace_formula_jacobi(&xi, lo, hi).unwrap();
            prop_assert!((v - t.v(site).unwrap()).abs() < 1e-10, "{} vs {}", v, t.v(site).unwrap());
            // any wider window gives the same value
            let w = trace_formula_jacobi(&xi, lo - 1.3, hi + 0.7).unwrap();
            prop_assert!((w - v).abs() < 1e-10);
        }

        #[test]
        fn shift_covariance_of_counting((t, site) in random_truncation(), c in -3.0f64..3.0) {
            let shifted = TruncatedJacobi::from_diagonal(t.first(), t.diag().iter().map(|d| d + c).collect());
            let a = xi_counting_steps(&t, site).unwrap();
            let b = xi_counting_steps(&shifted, site).unwrap();
            for (ja, jb) in a.steps().unwrap().jumps().iter().zip(b.steps().unwrap().jumps()) {
                prop_assert!((ja + c - jb).abs() < 1e-11);
            }
            prop_assert_eq!(a.steps().unwrap().values(), b.steps().unwrap().values());
        }
    }
}
