use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::sync::Arc;

use super::spline::CubicSpline;
use crate::numerics::maximize_bracketed;
use crate::error::{Error, Result};

/// Potential descriptors. Every kind is bounded below.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialSpec {
    Zero,
    /// `a x^2 + b`
    Harmonic { a: f64, b: f64 },
    /// `amplitude * cos(x)`
    Mathieu { amplitude: f64 },
    /// `-depth` on `|x| < width / 2`, zero outside. Negative depth is a barrier.
    SquareWell { depth: f64, width: f64 },
    /// `amplitude * sech(x)^2`
    Sech2 { amplitude: f64 },
    /// `sum coeffs[k] x^k`
    Poly { coeffs: Vec<f64> },
    /// Natural cubic spline through the samples, constant beyond them.
    Sampled { xs: Vec<f64>, ys: Vec<f64> },
    /// `base(x mod period)` with the remainder taken in `[0, period)`.
    Periodic { base: Box<PotentialSpec>, period: f64 },
}

/// Behaviour at infinity, which decides how Weyl solutions are started.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum PotentialClass {
    /// `V -> +inf` as `|x| -> inf`.
    Confining,
    /// `V` is constant (to rounding) beyond `|x| >= reach`.
    Asymptotic { reach: f64, left: f64, right: f64 },
    Periodic { period: f64 },
}

#[derive(Debug, Clone)]
pub struct Potential {
    spec: PotentialSpec,
    offset: f64,
    spline: Option<Arc<CubicSpline>>,
    lower_bound: f64,
}

impl PartialEq for Potential {
    fn eq(&self, other: &Self) -> bool {
        self.spec == other.spec && self.offset == other.offset
    }
}

/// Magnitude below which a decaying potential counts as zero.
const NEGLIGIBLE: f64 = 1e-16;

fn poly_eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn trimmed(coeffs: &[f64]) -> &[f64] {
    let n = coeffs.iter().rposition(|c| *c != 0.0).map_or(0, |i| i + 1);
    &coeffs[..n]
}

/// Radius outside which `|p(x)| > |leading| |x|^deg / 2`, a Cauchy-type bound.
fn poly_radius(coeffs: &[f64]) -> f64 {
    let c = trimmed(coeffs);
    if c.len() <= 1 {
        return 0.0;
    }
    let lead = c[c.len() - 1].abs();
    1.0 + 2.0 * c[..c.len() - 1].iter().map(|a| a.abs() / lead).sum::<f64>()
}

/// Global minimum of `f` on `[lo, hi]`: dense scan, then golden-section
/// refinement around the best sample.
fn dense_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    let step = (hi - lo) / n as f64;
    let (mut best_x, mut best) = (lo, f(lo));
    for i in 1..=n {
        let x = lo + step * i as f64;
        let v = f(x);
        if v < best {
            best = v;
            best_x = x;
        }
    }
    let a = (best_x - step).max(lo);
    let b = (best_x + step).min(hi);
    let (_, neg) = maximize_bracketed(|x| -f(x), a, b, 1e-12 * (1.0 + best_x.abs()));
    best.min(-neg)
}

impl Potential {
    pub fn new(spec: PotentialSpec) -> Result<Self> {
        let spline = match &spec {
            PotentialSpec::Sampled { xs, ys } => Some(Arc::new(CubicSpline::new(xs.clone(), ys.clone())?)),
            PotentialSpec::Periodic { base, .. } => match base.as_ref() {
                PotentialSpec::Sampled { xs, ys } => Some(Arc::new(CubicSpline::new(xs.clone(), ys.clone())?)),
                _ => None,
            },
            _ => None,
        };
        let mut pot = Self { spec, offset: 0.0, spline, lower_bound: f64::NEG_INFINITY };
        pot.validate()?;
        pot.lower_bound = pot.compute_lower_bound();
        Ok(pot)
    }

    pub fn zero() -> Self {
        Self::new(PotentialSpec::Zero).unwrap()
    }

    pub fn harmonic(a: f64, b: f64) -> Result<Self> {
        Self::new(PotentialSpec::Harmonic { a, b })
    }

    pub fn mathieu(amplitude: f64) -> Result<Self> {
        Self::new(PotentialSpec::Mathieu { amplitude })
    }

    pub fn square_well(depth: f64, width: f64) -> Result<Self> {
        Self::new(PotentialSpec::SquareWell { depth, width })
    }

    pub fn sech2(amplitude: f64) -> Result<Self> {
        Self::new(PotentialSpec::Sech2 { amplitude })
    }

    pub fn poly(coeffs: Vec<f64>) -> Result<Self> {
        Self::new(PotentialSpec::Poly { coeffs })
    }

    pub fn sampled(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        Self::new(PotentialSpec::Sampled { xs, ys })
    }

    pub fn periodic(base: PotentialSpec, period: f64) -> Result<Self> {
        Self::new(PotentialSpec::Periodic { base: Box::new(base), period })
    }

    /// Reads a two-column whitespace-separated file (`x V(x)`, x ascending).
    /// Blank lines and lines starting with `#` are skipped.
    pub fn sampled_from_str(text: &str) -> Result<Self> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let cols: Vec<&str> = line.split_whitespace().collect();
            if cols.len() != 2 {
                return Err(Error::invalid(format!("line {}: expected two columns", lineno + 1)));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::invalid(format!("line {}: {e}", lineno + 1)))
            };
            xs.push(parse(cols[0])?);
            ys.push(parse(cols[1])?);
        }
        Self::sampled(xs, ys)
    }

    pub fn spec(&self) -> &PotentialSpec {
        &self.spec
    }

    /// `V -> V + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { offset: self.offset + c, lower_bound: self.lower_bound + c, ..self.clone() }
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    fn validate(&self) -> Result<()> {
        fn check(spec: &PotentialSpec, nested: bool) -> Result<()> {
            let finite = |v: f64, what: &str| {
                if v.is_finite() {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("{what} must be finite")))
                }
            };
            match spec {
                PotentialSpec::Zero | PotentialSpec::Sampled { .. } => Ok(()),
                PotentialSpec::Harmonic { a, b } => {
                    finite(*a, "harmonic a")?;
                    finite(*b, "harmonic b")?;
                    if *a < 0.0 {
                        return Err(Error::invalid("harmonic a < 0 is not bounded below"));
                    }
                    Ok(())
                }
                PotentialSpec::Mathieu { amplitude } => finite(*amplitude, "mathieu amplitude"),
                PotentialSpec::Sech2 { amplitude } => finite(*amplitude, "sech2 amplitude"),
                PotentialSpec::SquareWell { depth, width } => {
                    finite(*depth, "square well depth")?;
                    if !(width.is_finite() && *width > 0.0) {
                        return Err(Error::invalid("square well width must be positive"));
                    }
                    Ok(())
                }
                PotentialSpec::Poly { coeffs } => {
                    if coeffs.iter().any(|c| !c.is_finite()) {
                        return Err(Error::invalid("polynomial coefficients must be finite"));
                    }
                    let c = trimmed(coeffs);
                    if c.len() >= 2 && (c.len() % 2 == 0 || c[c.len() - 1] < 0.0) {
                        return Err(Error::invalid("polynomial is not bounded below"));
                    }
                    Ok(())
                }
                PotentialSpec::Periodic { base, period } => {
                    if nested {
                        return Err(Error::invalid("periodic potentials cannot be nested"));
                    }
                    if !(period.is_finite() && *period > 0.0) {
                        return Err(Error::invalid("period must be positive"));
                    }
                    check(base, true)
                }
            }
        }
        check(&self.spec, false)
    }

    fn base_value(&self, spec: &PotentialSpec, x: f64) -> f64 {
        match spec {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Harmonic { a, b } => a * x * x + b,
            PotentialSpec::Mathieu { amplitude } => amplitude * x.cos(),
            PotentialSpec::SquareWell { depth, width } => {
                if x.abs() < 0.5 * width {
                    -depth
                } else {
                    0.0
                }
            }
            PotentialSpec::Sech2 { amplitude } => {
                let c = x.cosh();
                amplitude / (c * c)
            }
            PotentialSpec::Poly { coeffs } => poly_eval(coeffs, x),
            PotentialSpec::Sampled { .. } => self.spline.as_ref().unwrap().eval(x),
            PotentialSpec::Periodic { base, period } => {
                let r = x - period * (x / period).floor();
                self.base_value(base, r)
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.base_value(&self.spec, x) + self.offset
    }

    /// Points where `V` may be discontinuous, within `[lo, hi]`.
    pub fn breakpoints(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut out = Vec::new();
        match &self.spec {
            PotentialSpec::SquareWell { width, .. } => out.extend([-0.5 * width, 0.5 * width]),
            PotentialSpec::Periodic { base, period } => {
                let local: Vec<f64> = match base.as_ref() {
                    PotentialSpec::SquareWell { width, .. } => vec![-0.5 * width, 0.5 * width],
                    _ => Vec::new(),
                };
                // the wrap point itself may be a jump
                let first = (lo / period).floor() as i64;
                let last = (hi / period).ceil() as i64;
                for k in first..=last {
                    let shift = k as f64 * period;
                    out.push(shift);
                    for b in &local {
                        if *b >= 0.0 && *b < *period {
                            out.push(shift + b);
                        }
                    }
                }
            }
            _ => {}
        }
        out.retain(|b| *b > lo && *b < hi);
        out.sort_by(|a, b| a.total_cmp(b));
        out.dedup();
        out
    }

    pub fn lower_bound(&self) -> f64 {
        self.lower_bound
    }

    fn compute_lower_bound(&self) -> f64 {
        match &self.spec {
            PotentialSpec::Zero => 0.0,
            PotentialSpec::Harmonic { b, .. } => *b,
            PotentialSpec::Mathieu { amplitude } => -amplitude.abs(),
            PotentialSpec::SquareWell { depth, .. } => (-depth).min(0.0),
            PotentialSpec::Sech2 { amplitude } => amplitude.min(0.0),
            PotentialSpec::Poly { coeffs } => {
                let c = trimmed(coeffs);
                if c.len() <= 1 {
                    c.first().copied().unwrap_or(0.0)
                } else {
                    let r = poly_radius(c);
                    let m = dense_min(|x| poly_eval(c, x), -r, r, 20_000);
                    m - 1e-9 * (1.0 + m.abs())
                }
            }
            PotentialSpec::Sampled { .. } | PotentialSpec::Periodic { .. } => {
                let (lo, hi) = match &self.spec {
                    PotentialSpec::Periodic { period, .. } => (0.0, *period),
                    _ => {
                        let k = self.spline.as_ref().unwrap().knots();
                        (k[0], k[k.len() - 1])
                    }
                };
                let m = dense_min(|x| self.base_value(&self.spec, x), lo, hi, 20_000);
                m - 1e-9 * (1.0 + m.abs())
            }
        }
    }

    pub fn class(&self) -> PotentialClass {
        let o = self.offset;
        match &self.spec {
            PotentialSpec::Zero => PotentialClass::Asymptotic { reach: 0.0, left: o, right: o },
            PotentialSpec::Harmonic { a, b } => {
                if *a > 0.0 {
                    PotentialClass::Confining
                } else {
                    PotentialClass::Asymptotic { reach: 0.0, left: b + o, right: b + o }
                }
            }
            PotentialSpec::Mathieu { .. } => PotentialClass::Periodic { period: 2.0 * PI },
            PotentialSpec::SquareWell { width, .. } => {
                PotentialClass::Asymptotic { reach: 0.5 * width, left: o, right: o }
            }
            PotentialSpec::Sech2 { amplitude } => {
                let reach = if *amplitude == 0.0 { 0.0 } else { 0.5 * (4.0 * amplitude.abs() / NEGLIGIBLE).ln() };
                PotentialClass::Asymptotic { reach, left: o, right: o }
            }
            PotentialSpec::Poly { coeffs } => {
                let c = trimmed(coeffs);
                if c.len() <= 1 {
                    let v = c.first().copied().unwrap_or(0.0) + o;
                    PotentialClass::Asymptotic { reach: 0.0, left: v, right: v }
                } else {
                    PotentialClass::Confining
                }
            }
            PotentialSpec::Sampled { .. } => {
                let s = self.spline.as_ref().unwrap();
                let k = s.knots();
                let v = s.values();
                PotentialClass::Asymptotic {
                    reach: k[0].abs().max(k[k.len() - 1].abs()),
                    left: v[0] + o,
                    right: v[v.len() - 1] + o,
                }
            }
            PotentialSpec::Periodic { period, .. } => PotentialClass::Periodic { period: *period },
        }
    }

    /// Period, if the potential is periodic.
    pub fn period(&self) -> Option<f64> {
        match self.class() {
            PotentialClass::Periodic { period } => Some(period),
            _ => None,
        }
    }

    /// Smallest `R >= 0` with `V(x) > e` whenever `|x| >= R`. Only defined for
    /// confining potentials.
    pub fn turning_radius(&self, e: f64) -> Result<f64> {
        match &self.spec {
            PotentialSpec::Harmonic { a, b } if *a > 0.0 => Ok(((e - b - self.offset) / a).max(0.0).sqrt()),
            PotentialSpec::Poly { coeffs } if trimmed(coeffs).len() >= 2 => {
                // beyond this radius p(x) - e has no roots
                let mut shifted = trimmed(coeffs).to_vec();
                shifted[0] -= e - self.offset;
                let r = poly_radius(&shifted);
                let n = 20_000;
                let mut reach: f64 = 0.0;
                for i in 0..=n {
                    let x = -r + 2.0 * r * i as f64 / n as f64;
                    if poly_eval(&shifted, x) <= 0.0 {
                        reach = reach.max(x.abs());
                    }
                }
                Ok(if reach > 0.0 { reach + 2.0 * r / n as f64 } else { 0.0 })
            }
            _ => Err(Error::invalid("turning radius needs a confining potential")),
        }
    }

    /// Whether `V(x) = V(-x)` on a sample of points covering the region where
    /// the potential varies.
    pub fn is_even(&self, tol: f64) -> bool {
        let reach = match self.class() {
            PotentialClass::Confining => self.turning_radius(self.lower_bound + 100.0).unwrap_or(10.0),
            PotentialClass::Asymptotic { reach, .. } => reach.max(1.0),
            PotentialClass::Periodic { period } => period,
        };
        (0..=1000).all(|i| {
            let x = reach * i as f64 / 1000.0;
            let (a, b) = (self.value(x), self.value(-x));
            (a - b).abs() <= tol * (1.0 + a.abs())
        })
    }

    /// `true` when `|V|` beyond `reach` integrates to less than `tol`; used
    /// to admit potentials to scattering computations.
    pub fn is_short_range(&self, tol: f64) -> bool {
        match self.class() {
            PotentialClass::Asymptotic { left, right, .. } => left == 0.0 && right == 0.0 && {
                match &self.spec {
                    // tail integral of 4|A| e^{-2x} beyond reach is 2|A| e^{-2 reach}
                    PotentialSpec::Sech2 { .. } => NEGLIGIBLE < tol,
                    _ => true,
                }
            },
            _ => false,
        }
    }
}
