use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Diagonal sequence `v(n)` of a Jacobi operator with unit off-diagonals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagonal {
    Constant { value: f64 },
    /// `v(n) = values[n mod len]`
    Periodic { values: Vec<f64> },
    /// `v(n) = coupling * cos(pi * (p/q) * n + phase)`
    AlmostMathieu { coupling: f64, p: i64, q: i64, phase: f64 },
    /// `v(first + i) = values[i]`, zero elsewhere.
    Finite { first: i64, values: Vec<f64> },
}

pub(crate) fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JacobiOperator {
    diagonal: Diagonal,
    /// Constant added to every diagonal entry.
    #[serde(default)]
    offset: f64,
}

impl JacobiOperator {
    pub fn new(diagonal: Diagonal) -> Result<Self> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        match &diagonal {
            Diagonal::Constant { value } if !value.is_finite() => {
                return Err(Error::invalid("constant diagonal must be finite"))
            }
            Diagonal::Periodic { values } if values.is_empty() || !finite(values) => {
                return Err(Error::invalid("periodic diagonal needs finite values"))
            }
            Diagonal::Finite { values, .. } if !finite(values) => {
                return Err(Error::invalid("finite diagonal needs finite values"))
            }
            Diagonal::AlmostMathieu { coupling, p, q, phase } => {
                if *q < 1 || gcd(*p, *q) != 1 {
                    return Err(Error::invalid(format!("almost-Mathieu needs q >= 1 and gcd(p, q) = 1, got {p}/{q}")));
                }
                if !coupling.is_finite() || !phase.is_finite() {
                    return Err(Error::invalid("almost-Mathieu parameters must be finite"));
                }
            }
            _ => {}
        }
        Ok(Self { diagonal, offset: 0.0 })
    }

    pub fn free() -> Self {
        Self { diagonal: Diagonal::Constant { value: 0.0 }, offset: 0.0 }
    }

    pub fn constant(value: f64) -> Result<Self> {
        Self::new(Diagonal::Constant { value })
    }

    pub fn finite(first: i64, values: Vec<f64>) -> Result<Self> {
        Self::new(Diagonal::Finite { first, values })
    }

    pub fn almost_mathieu(coupling: f64, p: i64, q: i64, phase: f64) -> Result<Self> {
        Self::new(Diagonal::AlmostMathieu { coupling, p, q, phase })
    }

    pub fn diagonal(&self) -> &Diagonal {
        &self.diagonal
    }

    /// `v -> v + c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self { diagonal: self.diagonal.clone(), offset: self.offset + c }
    }

    pub fn v(&self, n: i64) -> f64 {
        let base = match &self.diagonal {
            Diagonal::Constant { value } => *value,
            Diagonal::Periodic { values } => values[n.rem_euclid(values.len() as i64) as usize],
            Diagonal::AlmostMathieu { coupling, p, q, phase } => {
                // reduce n modulo the period so large |n| keeps full precision
                let period = 2 * q;
                let m = n.rem_euclid(period);
                coupling * (PI * (*p as f64) * (m as f64) / (*q as f64) + phase).cos()
            }
            Diagonal::Finite { first, values } => {
                let i = n - first;
                if i >= 0 && (i as usize) < values.len() {
                    values[i as usize]
                } else {
                    0.0
                }
            }
        };
        base + self.offset
    }

    /// Upper bound on `|v(n)|`.
    pub fn bound(&self) -> f64 {
        let b = match &self.diagonal {
            Diagonal::Constant { value } => value.abs(),
            Diagonal::Periodic { values } => values.iter().fold(0.0f64, |a, v| a.max(v.abs())),
            Diagonal::AlmostMathieu { coupling, .. } => coupling.abs(),
            Diagonal::Finite { values, .. } => values.iter().fold(0.0f64, |a, v| a.max(v.abs())),
        };
        b + self.offset.abs()
    }

    /// Interval guaranteed to contain the spectrum.
    pub fn spectral_bounds(&self) -> (f64, f64) {
        let b = self.bound();
        (-2.0 - b, 2.0 + b)
    }

    /// Period of the sequence outside its aperiodic core.
    pub fn tail_period(&self) -> usize {
        match &self.diagonal {
            Diagonal::Constant { .. } | Diagonal::Finite { .. } => 1,
            Diagonal::Periodic { values } => values.len(),
            Diagonal::AlmostMathieu { p, q, .. } => {
                // cos(pi p n / q) has period q for even p and 2q for odd p
                if p.rem_euclid(2) == 0 {
                    *q as usize
                } else {
                    2 * *q as usize
                }
            }
        }
    }

    /// Sites outside which `v` is periodic with `tail_period`.
    pub fn aperiodic_core(&self) -> Option<(i64, i64)> {
        match &self.diagonal {
            Diagonal::Finite { first, values } if !values.is_empty() => {
                Some((*first, first + values.len() as i64 - 1))
            }
            _ => None,
        }
    }

    /// Whether `v` restricted to sites `start, start + dir, ...` is periodic.
    pub(crate) fn periodic_from(&self, start: i64, dir: i64) -> bool {
        match self.aperiodic_core() {
            None => true,
            Some((lo, hi)) => {
                if dir > 0 {
                    start > hi
                } else {
                    start < lo
                }
            }
        }
    }
}

/// Finite section of a Jacobi operator on the sites `first..first+len`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedJacobi {
    first: i64,
    diag: Vec<f64>,
}

impl TruncatedJacobi {
    pub fn from_diagonal(first: i64, diag: Vec<f64>) -> Self {
        Self { first, diag }
    }

    pub fn first(&self) -> i64 {
        self.first
    }

    /// Last site, or `first - 1` for an empty block.
    pub fn last(&self) -> i64 {
        self.first + self.diag.len() as i64 - 1
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn v(&self, site: i64) -> Option<f64> {
        let i = site - self.first;
        (i >= 0 && (i as usize) < self.diag.len()).then(|| self.diag[i as usize])
    }

    /// Infinity norm, an upper bound for the spectral radius.
    pub fn norm(&self) -> f64 {
        self.diag.iter().fold(0.0f64, |a, v| a.max(v.abs())) + 2.0
    }

    /// Dense symmetric matrix (tests and small oracles).
    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.diag.len();
        nalgebra::DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                self.diag[i]
            } else if i.abs_diff(j) == 1 {
                1.0
            } else {
                0.0
            }
        })
    }
}

/// Restriction of `h` to the integer window `[lo, hi]`.
pub fn truncate(h: &JacobiOperator, lo: i64, hi: i64) -> Result<TruncatedJacobi> {
    if hi < lo {
        return Err(Error::invalid(format!("empty window [{lo}, {hi}]")));
    }
    Ok(TruncatedJacobi { first: lo, diag: (lo..=hi).map(|n| h.v(n)).collect() })
}

/// Deletes the row and column of `site`, returning the blocks on either side.
pub fn dirichlet_decouple(t: &TruncatedJacobi, site: i64) -> Result<(TruncatedJacobi, TruncatedJacobi)> {
    if t.is_empty() || site < t.first() || site > t.last() {
        return Err(Error::SiteOutsideWindow { site, lo: t.first(), hi: t.last() });
    }
    let k = (site - t.first) as usize;
    let left = TruncatedJacobi { first: t.first, diag: t.diag[..k].to_vec() };
    let right = TruncatedJacobi { first: site + 1, diag: t.diag[k + 1..].to_vec() };
    Ok((left, right))
}
