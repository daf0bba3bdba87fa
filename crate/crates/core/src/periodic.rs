//! Periodic potentials: monodromy, Hill discriminant, band edges,
//! Dirichlet eigenvalues on a period cell and the resulting `xi`.

use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{dopri5, find_root_bracketed, maximize_bracketed, OdeOptions, RealInterval, StepFunction};
use crate::schrodinger::{dirichlet_eigenvalues, Domain, Potential};
use crate::xi::{BasePoint, XiGrid};

/// Relative tolerance of the monodromy integration.
const MONODROMY_TOL: f64 = 1e-15;
/// Absolute accuracy assumed for the discriminant near band edges.
pub const DISCRIMINANT_TOL: f64 = 1e-12;
/// Gaps shorter than this are reported as closed.
pub const CLOSED_GAP: f64 = 1e-9;
/// Discriminant samples per free band when scanning for extrema.
const SAMPLES_PER_BAND: usize = 40;

fn period_of(v: &Potential) -> Result<f64> {
    v.period().ok_or_else(|| Error::invalid("potential is not periodic"))
}

/// Transfer matrix `[[c, s], [c', s']]` across `[x, x + L]` at real `lambda`.
pub fn monodromy_at(v: &Potential, x: f64, lambda: f64) -> Result<[[f64; 2]; 2]> {
    let period = period_of(v)?;
    if !lambda.is_finite() || !x.is_finite() {
        return Err(Error::invalid("monodromy needs finite x and lambda"));
    }
    let opts = OdeOptions::with_tol(MONODROMY_TOL);
    let mut nodes = v.breakpoints(x, x + period);
    nodes.push(x + period);
    let mut y = [1.0, 0.0, 0.0, 1.0];
    let mut from = x;
    for to in nodes {
        y = dopri5(
            |t, y: &[f64; 4]| {
                let q = v.value(t) - lambda;
                [y[1], q * y[0], y[3], q * y[2]]
            },
            from,
            y,
            to,
            &opts,
            |_, _| {},
        )?;
        from = to;
    }
    Ok([[y[0], y[2]], [y[1], y[3]]])
}

pub fn monodromy(v: &Potential, lambda: f64) -> Result<[[f64; 2]; 2]> {
    monodromy_at(v, 0.0, lambda)
}

/// Hill discriminant `Delta(lambda)`, the monodromy trace.
pub fn discriminant(v: &Potential, lambda: f64) -> Result<f64> {
    let m = monodromy(v, lambda)?;
    Ok(m[0][0] + m[1][1])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandStructure {
    pub period: f64,
    /// `E_0 <= E_1 <= ...`; bands are `[E_{2n}, E_{2n+1}]`.
    pub edges: Vec<f64>,
    /// For gap `n` (between `E_{2n-1}` and `E_{2n}`), the smallest width
    /// the discriminant accuracy can resolve there.
    pub gap_resolution: Vec<f64>,
}

impl BandStructure {
    pub fn bands(&self) -> Vec<(f64, f64)> {
        self.edges.chunks(2).map(|c| (c[0], c[1])).collect()
    }

    /// Closures `[E_{2n-1}, E_{2n}]` of the gaps between computed bands.
    pub fn gaps(&self) -> Vec<(f64, f64)> {
        self.edges[1..self.edges.len() - 1].chunks(2).map(|c| (c[0], c[1])).collect()
    }

    pub fn gap_lengths(&self) -> Vec<f64> {
        self.gaps().iter().map(|(a, b)| b - a).collect()
    }

    pub fn measure(&self) -> f64 {
        self.bands().iter().map(|(a, b)| b - a).sum()
    }

    /// Uniform absolute accuracy for gap data: the worst resolution.
    pub fn data_tol(&self) -> f64 {
        self.gap_resolution.iter().fold(CLOSED_GAP, |m, r| m.max(*r))
    }
}

/// Locates the first `n_bands` bands. Each spectral gap surrounds one
/// extremum of `Delta`, alternately a minimum `<= -2` and a maximum `>= 2`;
/// the extrema are found on a scan uniform in `sqrt(lambda - min V)`,
/// refined, and the edges are the roots of `Delta = +-2` on either side.
pub fn band_edges(v: &Potential, n_bands: usize) -> Result<BandStructure> {
    if n_bands == 0 {
        return Err(Error::invalid("need at least one band"));
    }
    let period = period_of(v)?;
    let base = v.lower_bound() - 1.0;
    let lam = |kappa: f64| base + kappa * kappa;
    let dk = PI / period / SAMPLES_PER_BAND as f64;
    let disc = |l: f64| discriminant(v, l);

    // walk until n_bands extrema (n_bands gaps, the last one bounding band n)
    let mut ks = vec![0.0, dk];
    let mut ds = vec![disc(lam(0.0))?, disc(lam(dk))?];
    if !(ds[0] > 2.0) {
        return Err(Error::BracketFailure("discriminant below 2 under the potential minimum".into()));
    }
    let mut extrema: Vec<(f64, f64)> = Vec::new();
    let limit = SAMPLES_PER_BAND * (n_bands + 4) * 64;
    while extrema.len() < n_bands {
        if ks.len() > limit {
            return Err(Error::BracketFailure(format!("found only {} of {n_bands} gaps", extrema.len())));
        }
        let k = ks[ks.len() - 1] + dk;
        ks.push(k);
        ds.push(disc(lam(k))?);
        let i = ds.len() - 2;
        let (a, b, c) = (ds[i - 1], ds[i], ds[i + 1]);
        let want_min = extrema.len() % 2 == 0;
        let is_ext = if want_min { b <= a && b < c } else { b >= a && b > c };
        if !is_ext {
            continue;
        }
        let (lo, hi) = (lam(ks[i - 1]), lam(ks[i + 1]));
        let sign = if want_min { -1.0 } else { 1.0 };
        let mut err = None;
        let (at, val) = maximize_bracketed(
            |l| match disc(l) {
                Ok(d) => sign * d,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            },
            lo,
            hi,
            1e-15 * (1.0 + hi.abs()),
        );
        if let Some(e) = err {
            return Err(e);
        }
        extrema.push((at, sign * val));
    }

    let root = |target: f64, a: f64, b: f64| -> Result<f64> {
        let mut err = None;
        let r = find_root_bracketed(
            |l| match disc(l) {
                Ok(d) => d - target,
                Err(e) => {
                    err.get_or_insert(e);
                    f64::NAN
                }
            },
            RealInterval::new(a, b)?,
            1e-15 * (1.0 + b.abs()),
        );
        match err {
            Some(e) => Err(e),
            None => r,
        }
    };

    let mut edges = vec![root(2.0, base, extrema[0].0)?];
    let mut gap_resolution = Vec::new();
    for (j, &(at, val)) in extrema.iter().enumerate() {
        let target = if j % 2 == 0 { -2.0 } else { 2.0 };
        let prev = if j == 0 { edges[0] } else { extrema[j - 1].0 };
        let next = extrema.get(j + 1).map(|e| e.0);
        // curvature of Delta at the extremum sets the resolvable width
        let h = 0.25 * (lam(((at - base).sqrt()) + dk) - at);
        let curv = ((disc(at + h)? - 2.0 * val + disc(at - h)?) / (h * h)).abs();
        let resolution = 2.0 * (2.0 * DISCRIMINANT_TOL / curv.max(1e-300)).sqrt();
        let excess = val.abs() - 2.0;
        let (lo, hi) = if excess <= DISCRIMINANT_TOL {
            (at, at)
        } else {
            let lo = root(target, prev, at)?;
            let hi = match next {
                Some(n) => root(target, at, n)?,
                None => {
                    // step past the extremum until Delta recrosses the target
                    let mut b = at + h;
                    while (disc(b)? - target) * (val - target) > 0.0 {
                        b += 4.0 * h;
                    }
                    root(target, at, b)?
                }
            };
            if hi - lo < CLOSED_GAP {
                (0.5 * (lo + hi), 0.5 * (lo + hi))
            } else {
                (lo, hi)
            }
        };
        edges.push(lo);
        if j + 1 < n_bands {
            edges.push(hi);
            gap_resolution.push(resolution);
        }
    }
    Ok(BandStructure { period, edges, gap_resolution })
}

/// First `n_count` Dirichlet eigenvalues on `[x, x + L]`.
pub fn dirichlet_mu(v: &Potential, x: f64, n_count: usize) -> Result<Vec<f64>> {
    let period = period_of(v)?;
    dirichlet_eigenvalues(v, Domain::Interval(RealInterval::new(x, x + period)?), n_count)
}

/// Asserts `E_{2n-1} <= mu_n <= E_{2n}` within the data accuracy and snaps
/// values belonging to closed gaps onto the gap.
pub fn check_mu_interlacing(bands: &BandStructure, mu: &[f64]) -> Result<Vec<f64>> {
    let gaps = bands.gaps();
    if mu.len() < gaps.len() {
        return Err(Error::invalid(format!("{} gaps need as many Dirichlet values, got {}", gaps.len(), mu.len())));
    }
    let mut out = Vec::with_capacity(gaps.len());
    for (n, ((lo, hi), m)) in gaps.iter().zip(mu).enumerate() {
        let slack = bands.gap_resolution[n].max(1e-9 * (1.0 + hi.abs()));
        if *m < lo - slack || *m > hi + slack {
            return Err(Error::Interlacing(format!("mu_{} = {m} outside gap [{lo}, {hi}]", n + 1)));
        }
        out.push(if lo == hi { *lo } else { m.clamp(*lo, *hi) });
    }
    Ok(out)
}

/// Piecewise-constant `xi(x, .)`: `1/2` on bands, `1` from the bottom of
/// gap `n` up to `mu_n`, `0` from `mu_n` to the top of the gap. Known up
/// to the top of the last computed band.
pub fn xi_periodic(bands: &BandStructure, mu: &[f64], x: f64) -> Result<XiGrid> {
    let mu = check_mu_interlacing(bands, mu)?;
    let mut deltas = vec![(bands.edges[0], 0.5)];
    for ((lo, hi), m) in bands.gaps().into_iter().zip(&mu) {
        deltas.extend([(lo, 0.5), (*m, -1.0), (hi, 0.5)]);
    }
    let steps = StepFunction::from_jumps(0.0, deltas, 0.0);
    XiGrid::from_steps(BasePoint::Position(x), steps, *bands.edges.last().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::AbelSchedule;
    use crate::schrodinger::{xi_schrodinger, PotentialSpec};
    use crate::trace::{reconstruct_v, reconstruct_v_periodic};
    use crate::xi::DEFAULT_EPS_SCHEDULE;
    use proptest::prelude::*;

    fn free_periodic(period: f64) -> Potential {
        Potential::periodic(PotentialSpec::Zero, period).unwrap()
    }

    /// Classical RK4 on a uniform grid: an independent, much finer
    /// integration of the same monodromy.
    fn rk4_monodromy(v: &Potential, lambda: f64, period: f64, steps: usize) -> [[f64; 2]; 2] {
        let h = period / steps as f64;
        let f = |t: f64, y: [f64; 4]| {
            let q = v.value(t) - lambda;
            [y[1], q * y[0], y[3], q * y[2]]
        };
        let mut y = [1.0, 0.0, 0.0, 1.0];
        for i in 0..steps {
            let t = i as f64 * h;
            let add = |a: [f64; 4], b: [f64; 4], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2], a[3] + s * b[3]];
            let k1 = f(t, y);
            let k2 = f(t + h / 2.0, add(y, k1, h / 2.0));
            let k3 = f(t + h / 2.0, add(y, k2, h / 2.0));
            let k4 = f(t + h, add(y, k3, h));
            for j in 0..4 {
                y[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
        }
        [[y[0], y[2]], [y[1], y[3]]]
    }

    #[test]
    fn free_monodromy() {
        let l = 1.7;
        let v = free_periodic(l);
        for lambda in [0.5, 3.0, 20.0] {
            let d = discriminant(&v, lambda).unwrap();
            assert!((d - 2.0 * (lambda.sqrt() * l).cos()).abs() < 1e-11);
        }
        let d = discriminant(&v, -2.0).unwrap();
        assert!((d - 2.0 * (2f64.sqrt() * l).cosh()).abs() < 1e-10);
        assert!(discriminant(&v, -50.0).unwrap() > discriminant(&v, -10.0).unwrap());
    }

    #[test]
    fn mathieu_monodromy_against_fine_rk4() {
        let v = Potential::mathieu(2.0).unwrap();
        let m = monodromy(&v, 1.0).unwrap();
        let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        assert!((det - 1.0).abs() < 1e-10);
        let oracle = rk4_monodromy(&v, 1.0, 2.0 * PI, 20_000);
        assert!((m[0][0] + m[1][1] - oracle[0][0] - oracle[1][1]).abs() < 1e-9);
        assert!(monodromy(&Potential::zero(), 1.0).is_err());
    }

    #[test]
    fn free_edges_collapse() {
        let v = free_periodic(PI);
        let b = band_edges(&v, 5).unwrap();
        assert!(b.edges[0].abs() < 1e-9);
        for n in 1..5 {
            let (lo, hi) = b.gaps()[n - 1];
            assert_eq!(lo, hi);
            assert!((lo - (n * n) as f64).abs() < 1e-6, "{n}: {lo}");
        }
        let mu = dirichlet_mu(&v, 0.3, 4).unwrap();
        let snapped = check_mu_interlacing(&b, &mu).unwrap();
        for (n, m) in snapped.iter().enumerate() {
            assert_eq!(*m, b.gaps()[n].0);
        }
        let xi = xi_periodic(&b, &mu, 0.3).unwrap();
        assert_eq!(xi.steps().unwrap().jumps().len(), 1);
        assert_eq!(xi.eval(7.0), Some(0.5));
    }

    #[test]
    fn mathieu_bands() {
        let v = Potential::mathieu(2.0).unwrap();
        let b = band_edges(&v, 9).unwrap();
        for (i, e) in b.edges.iter().enumerate() {
            let d = discriminant(&v, *e).unwrap();
            let want = if (i + 1) % 4 < 2 { 2.0 } else { -2.0 };
            assert!((d - want).abs() < 1e-8, "E_{i} = {e}: {d}");
        }
        assert!(b.edges.windows(2).all(|w| w[1] >= w[0]));
        let gaps = b.gap_lengths();
        assert!(gaps.windows(2).all(|w| w[1] <= w[0]), "{gaps:?}");
        assert!(gaps[0] > 0.5);
        // in-band points are where the Floquet multipliers sit on the circle
        for (lo, hi) in b.bands() {
            let d = discriminant(&v, 0.5 * (lo + hi)).unwrap();
            assert!(d.abs() < 2.0);
        }
    }

    #[test]
    fn mathieu_mu_in_gaps_and_cross_checked() {
        let v = Potential::mathieu(2.0).unwrap();
        let b = band_edges(&v, 6).unwrap();
        for x in [0.0, 1.0, 2.5, 4.0, 5.5] {
            let mu = dirichlet_mu(&v, x, 5).unwrap();
            check_mu_interlacing(&b, &mu).unwrap();
            // a Dirichlet eigenvalue is where the shot from x returns to zero
            for m in &mu {
                let s = monodromy_at(&v, x, *m).unwrap()[0][1];
                assert!(s.abs() < 1e-7, "{x}: s({m}) = {s}");
            }
        }
    }

    #[test]
    fn mathieu_trace_formula_and_band_xi() {
        let v = Potential::mathieu(2.0).unwrap();
        let b = band_edges(&v, 8).unwrap();
        let n = b.gaps().len();
        let mu = check_mu_interlacing(&b, &dirichlet_mu(&v, 0.0, n).unwrap()).unwrap();
        let r = reconstruct_v_periodic(&b.edges[..2 * n + 1], &mu, b.data_tol()).unwrap();
        assert!((r.value - 2.0).abs() <= r.tail_bound, "{} (bound {})", r.value, r.tail_bound);
        assert!(r.tail_bound < 1e-3);
        // the same steps through the Abel form agree with the partial sums
        let xi = xi_periodic(&b, &mu, 0.0).unwrap();
        let top = b.edges[2 * n];
        let plain = xi.integrand(|s| 1.0 - 2.0 * s).integral(b.edges[0], top).unwrap() + b.edges[0];
        assert!((plain - r.value).abs() < 1e-10, "{plain} vs {}", r.value);
        let closed = xi.with_tail(0.5).unwrap();
        let schedule = AbelSchedule::default_for(b.edges[0]);
        let abel = reconstruct_v(&closed, b.edges[0], &schedule).unwrap();
        // cubic remainder of the quadratic fit: a1 a2 a3 / 6 * int (l - E0)^3 |1 - 2 xi|
        let a = schedule.alphas();
        let k = a.len();
        let m3: f64 = b.gaps().iter().map(|(lo, hi)| (hi - lo) * (hi - b.edges[0]).powi(3)).sum();
        let bound = 1.5 * a[k - 3] * a[k - 2] * a[k - 1] / 6.0 * m3;
        assert!((abel.value - r.value).abs() < bound, "{} vs {} (bound {bound})", abel.value, r.value);
        // with gentle damping the regularized form lands inside the tail bound
        let gentle = AbelSchedule::new(vec![1e-3, 5e-4, 2.5e-4], top + 1.0).unwrap();
        let abel = reconstruct_v(&closed, b.edges[0], &gentle).unwrap();
        assert!((abel.value - r.value).abs() < r.tail_bound, "{} vs {}", abel.value, r.value);
        for (lo, hi) in b.bands() {
            let mid = 0.5 * (lo + hi);
            let e = xi_schrodinger(&v, 0.0, mid, &DEFAULT_EPS_SCHEDULE).unwrap();
            assert!((e.value - 0.5).abs() < 0.02, "{mid}: {}", e.value);
        }
    }

    #[test]
    fn gaps_vanish_with_amplitude() {
        let mut prev = f64::INFINITY;
        for amp in [1.0, 0.5, 0.2, 0.05, 0.0] {
            let b = band_edges(&Potential::mathieu(amp).unwrap(), 2).unwrap();
            let g = b.gap_lengths()[0];
            assert!(g < prev);
            prev = g;
        }
        assert_eq!(prev, 0.0);
    }

    #[test]
    fn midpoint_mu_splits_gaps_evenly() {
        let b = BandStructure { period: 1.0, edges: vec![0.0, 1.0, 2.0, 3.0, 5.0, 6.0], gap_resolution: vec![0.0, 0.0] };
        let xi = xi_periodic(&b, &[1.5, 4.0], 0.0).unwrap();
        for (l, want) in [(0.5, 0.5), (1.2, 1.0), (1.8, 0.0), (2.5, 0.5), (3.9, 1.0), (4.1, 0.0), (5.5, 0.5)] {
            assert_eq!(xi.eval(l), Some(want));
        }
        assert!(matches!(xi_periodic(&b, &[2.5, 4.0], 0.0), Err(Error::Interlacing(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]

        #[test]
        fn det_one_and_gap_integrals(amp in -3.0f64..3.0, lambda in -4.0f64..30.0) {
            let v = Potential::mathieu(amp).unwrap();
            let m = monodromy(&v, lambda).unwrap();
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            prop_assert!((det - 1.0).abs() < 1e-10 * (1.0 + m[0][0].abs() * m[1][1].abs()));
        }

        #[test]
        fn gap_terms_equal_step_integrals(lo in 0.0f64..1.0, widths in prop::collection::vec((0.1f64..2.0, 0.0f64..1.5, 0.0f64..1.0), 1..6)) {
            let mut edges = vec![lo];
            let mut mu = Vec::new();
            for (band, gap, pos) in &widths {
                let a = edges.last().unwrap() + band;
                edges.extend([a, a + gap]);
                mu.push(a + pos * gap);
            }
            let top = edges.last().unwrap() + 1.0;
            edges.push(top);
            let res = vec![0.0; widths.len()];
            let b = BandStructure { period: 1.0, edges: edges.clone(), gap_resolution: res };
            let xi = xi_periodic(&b, &mu, 0.0).unwrap();
            let f = xi.integrand(|s| 1.0 - 2.0 * s);
            for (n, (a, c)) in b.gaps().into_iter().enumerate() {
                let term = c + a - 2.0 * mu[n];
                prop_assert!((f.integral(a, c).unwrap() - term).abs() < 1e-12);
            }
        }
    }
}
