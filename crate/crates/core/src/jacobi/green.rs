use num_complex::Complex64;

use super::operator::{JacobiOperator, TruncatedJacobi};
use crate::error::{Error, Result};
use crate::xi::{arg_fraction, check_eps_schedule, extrapolate_arg, GreensValue, XiEstimate};

/// Relative change between depth and depth/2 above which the continued
/// fraction is considered unconverged.
pub const DEPTH_TOL: f64 = 1e-8;
pub const MAX_DEPTH: usize = 1_000_000;

/// Fixed point of the half-line recursion `m(k) = 1/(v(k) - z - m(k + dir))`
/// on a periodic stretch starting at `start`: the attracting root of the
/// one-period Moebius map.
fn periodic_m(h: &JacobiOperator, start: i64, dir: i64, z: Complex64) -> Complex64 {
    let p = h.tail_period() as i64;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    // M = T_0 T_1 ... T_{p-1}, T_j = [[0, 1], [-1, v(s_j) - z]]
    let (mut a, mut b, mut c, mut d) = (one, zero, zero, one);
    // det M = 1 exactly; track it through rescalings instead of recomputing
    // it from entries that may be large
    let mut det = 1.0;
    for j in 0..p {
        let aj = h.v(start + dir * j) - z;
        let (na, nb) = (-b, a + b * aj);
        let (nc, nd) = (-d, c + d * aj);
        a = na;
        b = nb;
        c = nc;
        d = nd;
        let scale = a.norm().max(b.norm()).max(c.norm()).max(d.norm());
        if scale > 1e100 {
            a /= scale;
            b /= scale;
            c /= scale;
            d /= scale;
            det /= scale * scale;
        }
    }
    let tr = a + d;
    let disc = (tr * tr - 4.0 * det).sqrt();
    let mu1 = 0.5 * (tr + disc);
    let mu2 = 0.5 * (tr - disc);
    let mu = if mu1.norm() >= mu2.norm() { mu1 } else { mu2 };
    // C w + D = mu, equivalently A w + B = mu w
    if c.norm() >= (mu - a).norm() {
        (mu - d) / c
    } else {
        b / (mu - a)
    }
}

/// First site beyond which the half-line in direction `dir` is periodic,
/// counted as a number of steps from `n`.
fn reach(h: &JacobiOperator, n: i64, dir: i64) -> usize {
    match h.aperiodic_core() {
        None => 0,
        Some((lo, hi)) => {
            let d = if dir > 0 { hi - n } else { n - lo };
            d.max(0) as usize
        }
    }
}

/// Depth at which the explicit part of the continued fraction reaches the
/// periodic tail with room to spare for the depth/2 comparison.
pub fn default_depth(h: &JacobiOperator, n: i64) -> usize {
    (2 * reach(h, n, 1).max(reach(h, n, -1)) + 8).min(MAX_DEPTH)
}

fn half_line_m(h: &JacobiOperator, n: i64, dir: i64, z: Complex64, depth: usize) -> Complex64 {
    let far = n + dir * (depth as i64 + 1);
    let mut w = if h.periodic_from(far, dir) { periodic_m(h, far, dir, z) } else { Complex64::new(0.0, 0.0) };
    for j in (1..=depth as i64).rev() {
        w = 1.0 / (h.v(n + dir * j) - z - w);
    }
    w
}

fn green_at_depth(h: &JacobiOperator, n: i64, z: Complex64, depth: usize) -> Complex64 {
    1.0 / (h.v(n) - z - half_line_m(h, n, 1, z, depth) - half_line_m(h, n, -1, z, depth))
}

/// Diagonal resolvent `(h - z)^{-1}(n, n)` from the two half-line continued
/// fractions, each followed for `depth` levels and closed with the exact
/// periodic tail where the sequence is periodic beyond that point.
pub fn green_diagonal(h: &JacobiOperator, n: i64, z: Complex64, depth: usize) -> Result<GreensValue> {
    if !(z.im > 0.0) {
        return Err(Error::invalid(format!("Im z must be positive, got {}", z.im)));
    }
    if depth < 1 || depth > MAX_DEPTH {
        return Err(Error::invalid(format!("depth must lie in [1, {MAX_DEPTH}], got {depth}")));
    }
    let g = green_at_depth(h, n, z, depth);
    if depth >= 2 {
        let half = green_at_depth(h, n, z, depth / 2);
        let diff = (g - half).norm() / g.norm();
        if !(diff <= DEPTH_TOL) {
            return Err(Error::DepthInsufficient { depth, im_z: z.im, diff });
        }
    }
    Ok(GreensValue { z, value: g })
}

/// Exact diagonal resolvent of a finite matrix.
pub fn green_diagonal_finite(t: &TruncatedJacobi, site: i64, z: Complex64) -> Result<Complex64> {
    let Some(v) = t.v(site) else {
        return Err(Error::SiteOutsideWindow { site, lo: t.first(), hi: t.last() });
    };
    let mut right = Complex64::new(0.0, 0.0);
    for k in (site + 1..=t.last()).rev() {
        right = 1.0 / (t.v(k).unwrap() - z - right);
    }
    let mut left = Complex64::new(0.0, 0.0);
    for k in t.first()..site {
        left = 1.0 / (t.v(k).unwrap() - z - left);
    }
    Ok(1.0 / (v - z - left - right))
}

/// `xi(n, lambda)` as the boundary value of the argument of the diagonal
/// resolvent.
pub fn xi_arg(h: &JacobiOperator, n: i64, lambda: f64, eps_schedule: &[f64]) -> Result<XiEstimate> {
    check_eps_schedule(eps_schedule)?;
    let depth = default_depth(h, n);
    let samples = eps_schedule
        .iter()
        .map(|&eps| {
            let g = green_diagonal(h, n, Complex64::new(lambda, eps), depth)?;
            Ok((eps, arg_fraction(g.value)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(extrapolate_arg(samples))
}
