//! Numerical experiments: spectra of rational almost-Mathieu operators and
//! the recovery of `V(0)` for even confining potentials from their
//! eigenvalues alone.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::jacobi::JacobiOperator;
use crate::numerics::{AbelResult, AbelSchedule, RealInterval};
use crate::schrodinger::{dirichlet_eigenvalues, xi_confining, Domain, Potential, PotentialClass};
use crate::trace::reconstruct_v;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmSpectrum {
    pub coupling: f64,
    pub p: i64,
    pub q: i64,
    /// Floquet bands, one per eigenvalue branch, ascending.
    pub bands: Vec<(f64, f64)>,
    /// Union of the bands as disjoint intervals.
    pub union: Vec<(f64, f64)>,
    pub measure: f64,
}

impl AmSpectrum {
    /// Lebesgue measure of `window` intersected with the spectrum.
    pub fn measure_in(&self, window: RealInterval) -> f64 {
        self.union
            .iter()
            .map(|(a, b)| (b.min(window.hi()) - a.max(window.lo())).max(0.0))
            .sum()
    }
}

/// Real Floquet matrix of the period-`n` cell with `u(k + n) = s u(k)`,
/// `s = +-1`.
fn floquet_matrix(h: &JacobiOperator, n: usize, s: f64) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = h.v(i as i64);
        if i + 1 < n {
            m[(i, i + 1)] = 1.0;
            m[(i + 1, i)] = 1.0;
        }
    }
    m[(0, n - 1)] += s;
    m[(n - 1, 0)] += s;
    m
}

fn sorted_eigenvalues(m: DMatrix<f64>) -> Vec<f64> {
    let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(|a, b| a.total_cmp(b));
    e
}

/// Bands closer than this are treated as touching.
const TOUCH_TOL: f64 = 1e-10;

fn merge(mut bands: Vec<(f64, f64)>) -> Vec<(f64, f64)> {
    bands.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out: Vec<(f64, f64)> = Vec::with_capacity(bands.len());
    for (a, b) in bands {
        match out.last_mut() {
            Some(last) if a <= last.1 + TOUCH_TOL => last.1 = last.1.max(b),
            _ => out.push((a, b)),
        }
    }
    out
}

/// Spectrum of `v(n) = coupling cos(pi p n / q)`. With the cell of length
/// `N` (`q` for even `p`, `2q` for odd `p`), every Bloch branch is monotone
/// between the periodic (`theta = 0`) and antiperiodic (`theta = pi`)
/// eigenvalues, so sorting the union of both sets pairs up the band edges.
pub fn almost_mathieu_spectrum(coupling: f64, p: i64, q: i64) -> Result<AmSpectrum> {
    let h = JacobiOperator::almost_mathieu(coupling, p, q, 0.0)?;
    let n = h.tail_period();
    let mut all = sorted_eigenvalues(floquet_matrix(&h, n, 1.0));
    all.extend(sorted_eigenvalues(floquet_matrix(&h, n, -1.0)));
    all.sort_by(|a, b| a.total_cmp(b));
    let bands: Vec<(f64, f64)> = all.chunks(2).map(|c| (c[0], c[1])).collect();
    let union = merge(bands.clone());
    let measure = union.iter().map(|(a, b)| b - a).sum();
    Ok(AmSpectrum { coupling, p, q, bands, union, measure })
}

/// Every reduced `p/q` with `1 <= q <= q_max` and `0 <= p < 2q`, i.e. every
/// distinct rational frequency of `cos(pi alpha n)`.
pub fn rational_frequencies(q_max: i64) -> Vec<(i64, i64)> {
    let mut out = Vec::new();
    for q in 1..=q_max {
        for p in 0..2 * q {
            if crate::jacobi::gcd(p, q) == 1 {
                out.push((p, q));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmRow {
    pub coupling: f64,
    pub p: i64,
    pub q: i64,
    pub measure: f64,
    /// `4 - 2 |coupling|`
    pub bound: f64,
}

/// Measures for every coupling and frequency, in input order.
pub fn almost_mathieu_table(couplings: &[f64], frequencies: &[(i64, i64)]) -> Result<Vec<AmRow>> {
    let jobs: Vec<(f64, i64, i64)> =
        couplings.iter().flat_map(|&c| frequencies.iter().map(move |&(p, q)| (c, p, q))).collect();
    jobs.par_iter()
        .map(|&(c, p, q)| {
            let s = almost_mathieu_spectrum(c, p, q)?;
            Ok(AmRow { coupling: c, p, q, measure: s.measure, bound: 4.0 - 2.0 * c.abs() })
        })
        .collect()
}

/// `F_k / F_{k+1}` for `k = 1..=count`: 1/2, 2/3, 3/5, ... converging to
/// the inverse golden mean.
pub fn fibonacci_approximants(count: usize) -> Vec<(i64, i64)> {
    let (mut a, mut b) = (1i64, 2i64);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        out.push((a, b));
        (a, b) = (b, a + b);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcBoundRow {
    pub p: i64,
    pub q: i64,
    pub alpha: f64,
    /// `|S intersected with spec(h_{p/q})|`
    pub measure: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AcBoundReport {
    pub coupling: f64,
    pub alpha_target: f64,
    pub window: (f64, f64),
    pub rows: Vec<AcBoundRow>,
    /// Supremum of the measures over the second half of the sequence, the
    /// finite stand-in for the limsup that bounds `|S intersected with spec_ac|`.
    pub tail_sup: f64,
}

pub fn ac_bound_experiment(
    coupling: f64,
    alpha_target: f64,
    approximants: &[(i64, i64)],
    window: RealInterval,
) -> Result<AcBoundReport> {
    if approximants.is_empty() {
        return Err(Error::invalid("need at least one approximant"));
    }
    if approximants.windows(2).any(|w| w[1].1 <= w[0].1) {
        return Err(Error::invalid("approximant denominators must increase"));
    }
    let dist = |&(p, q): &(i64, i64)| (p as f64 / q as f64 - alpha_target).abs();
    if approximants.windows(2).any(|w| dist(&w[1]) > dist(&w[0])) {
        return Err(Error::invalid("approximants must approach the target frequency"));
    }
    let rows = approximants
        .par_iter()
        .map(|&(p, q)| {
            let s = almost_mathieu_spectrum(coupling, p, q)?;
            Ok(AcBoundRow { p, q, alpha: p as f64 / q as f64, measure: s.measure_in(window) })
        })
        .collect::<Result<Vec<_>>>()?;
    let half = rows.len() / 2;
    let tail_sup = rows[half..].iter().fold(0.0f64, |m, r| m.max(r.measure));
    Ok(AcBoundReport { coupling, alpha_target, window: (window.lo(), window.hi()), rows, tail_sup })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BorgReport {
    pub energies: Vec<f64>,
    /// Jumps and plateau values of the reconstructed `xi(0, .)`.
    pub xi_jumps: Vec<f64>,
    pub xi_values: Vec<f64>,
    pub reconstructed: f64,
    pub exact: f64,
    pub error: f64,
    pub abel: AbelResult,
}

/// For even `V` the Dirichlet problems on both half-lines at 0 share their
/// spectrum, the odd eigenfunctions of `H`, so `xi(0, .)` follows from the
/// `E_n` alone: `+1` at every `E_n` and `-2` at every odd-indexed `E_n`.
/// `V(0)` is then recovered from the Abel-regularized trace formula.
pub fn borg_demo(v: &Potential, n_max: usize) -> Result<BorgReport> {
    if v.class() != PotentialClass::Confining {
        return Err(Error::invalid("borg demo needs a confining potential"));
    }
    if !v.is_even(1e-10) {
        return Err(Error::NotEven("V(x) differs from V(-x) on the sample".into()));
    }
    if n_max < 2 {
        return Err(Error::invalid("need at least three eigenvalues"));
    }
    let energies = dirichlet_eigenvalues(v, Domain::WholeLine, n_max + 1)?;
    let mu: Vec<f64> = (1..=n_max).map(|n| if n % 2 == 1 { energies[n] } else { energies[n - 1] }).collect();
    let xi = xi_confining(0.0, &energies, &mu)?;
    let schedule = AbelSchedule::covering(energies[0], xi.covered_hi())?;
    let r = reconstruct_v(&xi, energies[0], &schedule)?;
    let steps = xi.steps().expect("counting xi is a step function");
    let exact = v.value(0.0);
    Ok(BorgReport {
        xi_jumps: steps.jumps().to_vec(),
        xi_values: steps.values().to_vec(),
        reconstructed: r.value,
        exact,
        error: (r.value - exact).abs(),
        abel: r.abel,
        energies,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Complex;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    /// Band edges from a dense sweep of the Bloch phase with complex
    /// Hermitian Floquet matrices.
    fn dense_theta_bands(coupling: f64, p: i64, q: i64, samples: usize) -> Vec<(f64, f64)> {
        let h = JacobiOperator::almost_mathieu(coupling, p, q, 0.0).unwrap();
        let n = h.tail_period();
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![f64::NEG_INFINITY; n];
        for k in 0..=samples {
            let theta = PI * k as f64 / samples as f64;
            let mut m = DMatrix::<Complex<f64>>::zeros(n, n);
            for i in 0..n {
                m[(i, i)] += Complex::new(h.v(i as i64), 0.0);
                let j = (i + 1) % n;
                let hop = if i + 1 == n { Complex::from_polar(1.0, theta) } else { Complex::new(1.0, 0.0) };
                m[(j, i)] += hop;
                m[(i, j)] += hop.conj();
            }
            let mut e: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
            e.sort_by(|a, b| a.total_cmp(b));
            for (b, x) in e.into_iter().enumerate() {
                lo[b] = lo[b].min(x);
                hi[b] = hi[b].max(x);
            }
        }
        lo.into_iter().zip(hi).collect()
    }

    #[test]
    fn free_spectrum() {
        for (p, q) in [(0, 1), (1, 1), (1, 2), (3, 7)] {
            let s = almost_mathieu_spectrum(0.0, p, q).unwrap();
            assert!((s.measure - 4.0).abs() < 1e-10, "{p}/{q}: {}", s.measure);
            assert_eq!(s.union.len(), 1);
        }
    }

    #[test]
    fn half_flux() {
        let s = almost_mathieu_spectrum(1.0, 1, 2).unwrap();
        assert!(s.measure >= 2.0);
        assert!(almost_mathieu_spectrum(1.0, 2, 4).is_err());
    }

    #[test]
    fn bands_match_dense_theta_sweep() {
        for (coupling, p, q) in [(1.0, 1, 3), (1.5, 2, 5), (0.5, 3, 4), (1.0, 1, 2), (2.0, 0, 1)] {
            let s = almost_mathieu_spectrum(coupling, p, q).unwrap();
            let oracle = dense_theta_bands(coupling, p, q, 400);
            assert_eq!(s.bands.len(), oracle.len());
            for (a, b) in s.bands.iter().zip(&oracle) {
                assert!((a.0 - b.0).abs() < 1e-9 && (a.1 - b.1).abs() < 1e-9, "{p}/{q}: {a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn measure_bound_and_symmetries() {
        let rows = almost_mathieu_table(&[0.5, 1.0, 1.5], &rational_frequencies(8)).unwrap();
        for r in &rows {
            assert!(r.measure >= r.bound - 1e-9, "{r:?}");
            let flipped = almost_mathieu_spectrum(-r.coupling, r.p, r.q).unwrap().measure;
            assert!((flipped - r.measure).abs() < 1e-8);
            let mirrored = almost_mathieu_spectrum(r.coupling, (2 * r.q - r.p) % (2 * r.q), r.q).unwrap().measure;
            assert!((mirrored - r.measure).abs() < 1e-8);
        }
    }

    #[test]
    fn fibonacci_windows() {
        let approx = fibonacci_approximants(7);
        assert_eq!(&approx[..4], &[(1, 2), (2, 3), (3, 5), (5, 8)]);
        let golden = (5f64.sqrt() - 1.0) / 2.0;
        let full = ac_bound_experiment(1.0, golden, &approx, RealInterval::new(-4.0, 4.0).unwrap()).unwrap();
        assert!(full.rows.iter().all(|r| r.measure >= 2.0));
        let free = ac_bound_experiment(0.0, golden, &approx, RealInterval::new(-4.0, 4.0).unwrap()).unwrap();
        assert!(free.rows.iter().all(|r| (r.measure - 4.0).abs() < 1e-10));
        let narrow = ac_bound_experiment(1.0, golden, &approx, RealInterval::new(0.0, 1.0).unwrap()).unwrap();
        assert!(narrow.rows.iter().all(|r| r.measure <= 1.0));
        assert!(ac_bound_experiment(1.0, golden, &[(2, 3), (1, 2)], RealInterval::new(0.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn borg_harmonic() {
        let r = borg_demo(&Potential::harmonic(1.0, -1.0).unwrap(), 80).unwrap();
        assert!(r.error < 2e-2, "{r:?}");
        for (l, want) in [(1.0, 1.0), (3.0, 0.0), (5.0, 1.0), (7.0, 0.0)] {
            let i = r.xi_jumps.partition_point(|j| *j <= l);
            assert_eq!(r.xi_values[i], want);
        }
        let shifted = borg_demo(&Potential::harmonic(1.0, 0.0).unwrap(), 80).unwrap();
        assert!((shifted.reconstructed - r.reconstructed - 1.0).abs() < 1e-6);
        assert!(shifted.error < 2e-2);
    }

    #[test]
    fn borg_quartic() {
        let r = borg_demo(&Potential::poly(vec![0.0, 0.0, 0.0, 0.0, 1.0]).unwrap(), 60).unwrap();
        assert!(r.error < 0.05, "{}", r.reconstructed);
    }

    #[test]
    fn borg_distinguishes_and_rejects() {
        let a = borg_demo(&Potential::harmonic(1.0, 0.0).unwrap(), 10).unwrap();
        let b = borg_demo(&Potential::poly(vec![0.0, 0.0, 1.0, 0.0, 0.1]).unwrap(), 10).unwrap();
        assert_ne!(a.xi_jumps, b.xi_jumps);
        let odd = Potential::poly(vec![0.0, 0.3, 1.0]).unwrap();
        assert!(matches!(borg_demo(&odd, 10), Err(Error::NotEven(_))));
        assert!(borg_demo(&Potential::zero(), 10).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn bound_holds_for_random_rationals(q in 1i64..=13, p_raw in 0i64..26, coupling in -2.0f64..2.0) {
            let p = p_raw % (2 * q);
            prop_assume!(crate::jacobi::gcd(p, q) == 1);
            let s = almost_mathieu_spectrum(coupling, p, q).unwrap();
            prop_assert!(s.measure >= 4.0 - 2.0 * coupling.abs() - 1e-9);
            prop_assert!(s.measure <= 4.0 + 2.0 * coupling.abs() + 1e-9);
        }
    }
}
