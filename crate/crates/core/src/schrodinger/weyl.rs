//! Weyl solutions, the diagonal Green's function and `xi` from its
//! boundary argument.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::potential::{Potential, PotentialClass};
use crate::error::{Error, Result};
use crate::numerics::{propagate, propagate_log_derivative, OdeOptions, ScaledState};
use crate::xi::{arg_fraction, check_eps_schedule, extrapolate_arg, BasePoint, GreensValue, XiEstimate, XiGrid};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Square-integrable toward `-inf`.
    Left,
    /// Square-integrable toward `+inf`.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeylOptions {
    pub ode_tol: f64,
    /// Start of the inward integration for confining potentials; chosen from
    /// the turning points when `None`. Ignored for other classes, whose
    /// initial data are exact.
    pub cutoff: Option<f64>,
    /// Recompute from twice the cutoff and require agreement to `cutoff_tol`.
    pub check_cutoff: bool,
    pub cutoff_tol: f64,
}

impl Default for WeylOptions {
    fn default() -> Self {
        Self { ode_tol: 1e-12, cutoff: None, check_cutoff: true, cutoff_tol: 1e-8 }
    }
}

/// Weyl solution normalized by `u(x) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylSolution {
    pub value: Complex64,
    pub derivative: Complex64,
}

impl WeylSolution {
    pub fn log_derivative(&self) -> Complex64 {
        self.derivative / self.value
    }
}

/// Extra room beyond the outermost turning point for confining starts.
const CONFINING_MARGIN: f64 = 8.0;

fn coeff(v: &Potential, z: Complex64) -> impl Fn(f64) -> Complex64 + '_ {
    move |t| Complex64::new(v.value(t), 0.0) - z
}

fn breaks(v: &Potential, a: f64, b: f64) -> Vec<f64> {
    v.breakpoints(a.min(b), a.max(b))
}

/// Decaying start `w = -+sqrt(V - z)` at `start`, carried to `x`.
fn from_constant_tail(v: &Potential, z: Complex64, side: Side, start: f64, level: f64, x: f64, tol: f64) -> Result<Complex64> {
    let k = (Complex64::new(level, 0.0) - z).sqrt();
    let w0 = match side {
        Side::Right => -k,
        Side::Left => k,
    };
    if start == x {
        return Ok(w0);
    }
    propagate_log_derivative(coeff(v, z), w0, start, x, &breaks(v, start, x), &OdeOptions::with_tol(tol))
}

/// Fundamental solutions across one period starting at `x`: `(c, s)` with
/// `c(x) = 1, c'(x) = 0` and `s(x) = 0, s'(x) = 1`, evaluated at `x + period`.
pub(crate) fn period_map(v: &Potential, x: f64, period: f64, z: Complex64, tol: f64) -> Result<[[Complex64; 2]; 2]> {
    let opts = OdeOptions::with_tol(tol);
    let br = breaks(v, x, x + period);
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let unscale = |s: ScaledState| {
        let f = s.log_scale.exp();
        (s.value * f, s.derivative * f)
    };
    let (c, cp) = unscale(propagate(coeff(v, z), (one, zero), x, x + period, &br, &opts)?);
    let (s, sp) = unscale(propagate(coeff(v, z), (zero, one), x, x + period, &br, &opts)?);
    Ok([[c, s], [cp, sp]])
}

/// Log-derivatives of the Floquet solutions `(right-decaying, left-decaying)`.
fn floquet_log_derivatives(v: &Potential, x: f64, period: f64, z: Complex64, tol: f64) -> Result<(Complex64, Complex64)> {
    let m = period_map(v, x, period, z, tol)?;
    let disc = m[0][0] + m[1][1];
    let root = (disc * disc - 4.0).sqrt();
    let (a, b) = ((disc + root) * 0.5, (disc - root) * 0.5);
    let big = if a.norm() >= b.norm() { a } else { b };
    let small = 1.0 / big;
    let eigvec_slope = |rho: Complex64| {
        let first = (m[0][1], rho - m[0][0]);
        let second = (rho - m[1][1], m[1][0]);
        let (v1, v2) = if first.0.norm() + first.1.norm() >= second.0.norm() + second.1.norm() { first } else { second };
        v2 / v1
    };
    Ok((eigvec_slope(small), eigvec_slope(big)))
}

fn confining_cutoff(v: &Potential, z: Complex64, x: f64) -> Result<f64> {
    Ok((v.turning_radius(z.re + 1.0)? + CONFINING_MARGIN).max(x.abs() + CONFINING_MARGIN))
}

fn confining_log_derivative(v: &Potential, z: Complex64, side: Side, x: f64, cutoff: f64, tol: f64) -> Result<Complex64> {
    let start = match side {
        Side::Right => cutoff,
        Side::Left => -cutoff,
    };
    from_constant_tail(v, z, side, start, v.value(start), x, tol)
}

/// Log-derivative `u'/u` at `x` of the solution of `-u'' + (V - z) u = 0`
/// that is square-integrable toward `side`.
pub fn weyl_log_derivative(v: &Potential, z: Complex64, side: Side, x: f64, opts: &WeylOptions) -> Result<Complex64> {
    if !(z.im > 0.0) || !z.re.is_finite() {
        return Err(Error::invalid("Weyl solutions need Im z > 0"));
    }
    if !x.is_finite() {
        return Err(Error::invalid("x must be finite"));
    }
    match v.class() {
        PotentialClass::Asymptotic { reach, left, right } => {
            let l = reach.max(x.abs()) + 1.0;
            match side {
                Side::Right => from_constant_tail(v, z, side, l, right, x, opts.ode_tol),
                Side::Left => from_constant_tail(v, z, side, -l, left, x, opts.ode_tol),
            }
        }
        PotentialClass::Periodic { period } => {
            let (plus, minus) = floquet_log_derivatives(v, x, period, z, opts.ode_tol)?;
            Ok(match side {
                Side::Right => plus,
                Side::Left => minus,
            })
        }
        PotentialClass::Confining => {
            let cutoff = match opts.cutoff {
                Some(c) if c > x.abs() => c,
                Some(c) => return Err(Error::invalid(format!("cutoff {c} does not contain x = {x}"))),
                None => confining_cutoff(v, z, x)?,
            };
            let w = confining_log_derivative(v, z, side, x, cutoff, opts.ode_tol)?;
            if opts.check_cutoff {
                let w2 = confining_log_derivative(v, z, side, x, 2.0 * cutoff, opts.ode_tol)?;
                let change = (w - w2).norm();
                if change > opts.cutoff_tol * (1.0 + w.norm()) {
                    return Err(Error::CutoffSensitivity(format!(
                        "doubling the cutoff {cutoff} moved the log-derivative by {change:e}"
                    )));
                }
            }
            Ok(w)
        }
    }
}

pub fn weyl_solution(v: &Potential, z: Complex64, side: Side, x: f64, opts: &WeylOptions) -> Result<WeylSolution> {
    let w = weyl_log_derivative(v, z, side, x, opts)?;
    Ok(WeylSolution { value: Complex64::new(1.0, 0.0), derivative: w })
}

/// Diagonal resolvent kernel `G(x, x; z) = psi_+ psi_- / W(psi_+, psi_-)`,
/// i.e. `1 / (m_- - m_+)` in terms of the two log-derivatives.
pub fn green_diagonal_schrodinger_with(v: &Potential, x: f64, z: Complex64, opts: &WeylOptions) -> Result<GreensValue> {
    let plus = weyl_log_derivative(v, z, Side::Right, x, opts)?;
    let minus = weyl_log_derivative(v, z, Side::Left, x, opts)?;
    let wr = minus - plus;
    if !(wr.norm() > 1e-12 * (minus.norm() + plus.norm())) {
        return Err(Error::WronskianVanishes { re: z.re, im: z.im });
    }
    Ok(GreensValue { z, value: 1.0 / wr })
}

pub fn green_diagonal_schrodinger(v: &Potential, x: f64, z: Complex64) -> Result<GreensValue> {
    green_diagonal_schrodinger_with(v, x, z, &WeylOptions::default())
}

/// `xi(x, lambda)` as the extrapolated boundary argument of `G(x, x; .)`.
pub fn xi_schrodinger(v: &Potential, x: f64, lambda: f64, eps_schedule: &[f64]) -> Result<XiEstimate> {
    check_eps_schedule(eps_schedule)?;
    let opts = WeylOptions::default();
    let samples = eps_schedule
        .iter()
        .map(|&eps| {
            let g = green_diagonal_schrodinger_with(v, x, Complex64::new(lambda, eps), &opts)?;
            Ok((eps, arg_fraction(g.value)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(extrapolate_arg(samples))
}

/// `xi_schrodinger` on a strictly increasing `lambdas` grid, evaluated in
/// parallel.
pub fn xi_schrodinger_grid(v: &Potential, x: f64, lambdas: &[f64], eps_schedule: &[f64]) -> Result<XiGrid> {
    let values = lambdas
        .par_iter()
        .map(|&l| xi_schrodinger(v, x, l, eps_schedule).map(|e| e.value))
        .collect::<Result<Vec<_>>>()?;
    XiGrid::from_samples(BasePoint::Position(x), lambdas.to_vec(), values)
}
