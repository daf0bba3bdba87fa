//! Scattering theory for short-range potentials: Jost solutions, reflection
//! and transmission, and `xi` written through the reflection coefficient.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::numerics::{propagate, OdeOptions};
use crate::schrodinger::{Potential, PotentialClass};

/// Tail integral of `|V|` beyond the cutoff that still counts as zero.
pub const SHORT_RANGE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum JostSide {
    /// `f_+(x) ~ e^{ikx}` as `x -> +inf`.
    Plus,
    /// `f_-(x) ~ e^{-ikx}` as `x -> -inf`.
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScatteringData {
    pub lambda: f64,
    pub k: f64,
    /// Reflection for a wave incident from the right: for `x -> +inf`,
    /// `T f_-(x) ~ e^{-ikx} + R e^{ikx}`.
    pub r: Complex64,
    pub t: Complex64,
    pub x: f64,
    pub f_plus_at_x: Complex64,
    pub f_minus_at_x: Complex64,
}

impl ScatteringData {
    pub fn unitarity_defect(&self) -> f64 {
        (self.r.norm_sqr() + self.t.norm_sqr() - 1.0).abs()
    }

    /// `1 + R f_+^2 / |f_+|^2`, whose argument carries `xi - 1/2`.
    pub fn bracket(&self) -> Complex64 {
        let f = self.f_plus_at_x;
        1.0 + self.r * f * f / f.norm_sqr()
    }

    pub fn xi(&self) -> f64 {
        (0.5 + self.bracket().arg() / PI).clamp(0.0, 1.0)
    }
}

fn wronskian(f: (Complex64, Complex64), g: (Complex64, Complex64)) -> Complex64 {
    f.0 * g.1 - f.1 * g.0
}

/// Half-width of the region outside which `V` vanishes to rounding.
fn support_radius(v: &Potential) -> Result<f64> {
    match v.class() {
        PotentialClass::Asymptotic { reach, left, right } if left == 0.0 && right == 0.0 => {
            if !v.is_short_range(SHORT_RANGE_TOL) {
                return Err(Error::NotShortRange(format!("tail of |V| beyond {reach} exceeds {SHORT_RANGE_TOL:e}")));
            }
            Ok(reach)
        }
        PotentialClass::Asymptotic { left, right, .. } => Err(Error::NotShortRange(format!(
            "V tends to {left} and {right} at -inf and +inf; scattering needs 0"
        ))),
        _ => Err(Error::NotShortRange("V does not decay at infinity".into())),
    }
}

fn check_lambda(lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("scattering needs lambda > 0, got {lambda}")));
    }
    Ok(lambda.sqrt())
}

fn jost_from(v: &Potential, k: f64, side: JostSide, x: f64, cutoff: f64) -> Result<(Complex64, Complex64)> {
    let (start, sign) = match side {
        JostSide::Plus => (cutoff.max(x), 1.0),
        JostSide::Minus => ((-cutoff).min(x), -1.0),
    };
    let ik = Complex64::new(0.0, sign * k);
    let u0 = (ik * start).exp();
    if start == x {
        return Ok((u0, ik * u0));
    }
    let lambda = k * k;
    let (lo, hi) = (start.min(x), start.max(x));
    let s = propagate(
        |t| Complex64::new(v.value(t) - lambda, 0.0),
        (u0, ik * u0),
        start,
        x,
        &v.breakpoints(lo, hi),
        &OdeOptions::with_tol(1e-12),
    )?;
    let scale = s.log_scale.exp();
    Ok((s.value * scale, s.derivative * scale))
}

/// Jost solution `(f(x), f'(x))`. Plane-wave data are imposed at the
/// cutoff (default: where `V` becomes negligible) and carried to `x`; the
/// same is repeated from twice the cutoff as a check.
pub fn jost_solution(v: &Potential, lambda: f64, side: JostSide, x: f64, cutoff: Option<f64>) -> Result<(Complex64, Complex64)> {
    let k = check_lambda(lambda)?;
    let reach = support_radius(v)?;
    let cutoff = match cutoff {
        Some(c) if c >= reach => c,
        Some(c) => {
            return Err(Error::NotShortRange(format!(
                "V is not negligible at the cutoff {c} (it extends to {reach})"
            )))
        }
        None => reach + 1.0,
    };
    let f = jost_from(v, k, side, x, cutoff)?;
    let g = jost_from(v, k, side, x, 2.0 * cutoff)?;
    let change = (f.0 - g.0).norm() + (f.1 - g.1).norm();
    if change > 1e-8 * (1.0 + f.0.norm() + f.1.norm()) {
        return Err(Error::CutoffSensitivity(format!("doubling the cutoff moved the Jost solution by {change:e}")));
    }
    Ok(f)
}

/// Reflection and transmission at energy `lambda`, with the Jost
/// solutions evaluated at `x`.
pub fn scattering_data(v: &Potential, lambda: f64, x: f64) -> Result<ScatteringData> {
    let k = check_lambda(lambda)?;
    let cutoff = support_radius(v)? + 1.0;
    let fp = jost_from(v, k, JostSide::Plus, x, cutoff)?;
    let fm = jost_from(v, k, JostSide::Minus, x, cutoff)?;
    let w = wronskian(fp, fm);
    if !(w.norm() > 1e-12 * (fp.0.norm() * fm.1.norm() + fp.1.norm() * fm.0.norm())) {
        return Err(Error::WronskianVanishes { re: lambda, im: 0.0 });
    }
    let fp_conj = (fp.0.conj(), fp.1.conj());
    let r = wronskian(fm, fp_conj) / w;
    let t = Complex64::new(0.0, -2.0 * k) / w;
    Ok(ScatteringData { lambda, k, r, t, x, f_plus_at_x: fp.0, f_minus_at_x: fm.0 })
}

pub fn reflection_coefficient(v: &Potential, lambda: f64) -> Result<ScatteringData> {
    scattering_data(v, lambda, 0.0)
}

/// `xi(x, lambda) = 1/2 + (1/pi) arg(1 + R f_+(x)^2 / |f_+(x)|^2)`.
pub fn xi_scattering(v: &Potential, x: f64, lambda: f64) -> Result<f64> {
    Ok(scattering_data(v, lambda, x)?.xi())
}
