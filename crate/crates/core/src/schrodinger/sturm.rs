//! Dirichlet eigenvalues by modified Prüfer shooting.
//!
//! With `u = r sin(theta) / sqrt(S)`, `u' = r sqrt(S) cos(theta)` the angle
//! obeys `theta' = S cos^2 + (lambda - V)/S sin^2`. Zeros of `u` sit at
//! multiples of `pi` whatever the (constant) scale `S`, so the shot from
//! each end is matched at an interior point and the mismatch counts
//! eigenvalues.

use serde::Serialize;
use std::f64::consts::PI;

use super::potential::{Potential, PotentialClass};
use crate::error::{Error, Result};
use crate::numerics::{dopri5, find_root_bracketed, OdeOptions, RealInterval};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Domain {
    Interval(RealInterval),
    /// `(-inf, inf)`, realized as a growing box with Dirichlet walls.
    WholeLine,
    /// `(-inf, x]` with `u(x) = 0`.
    HalfLineLeft(f64),
    /// `[x, inf)` with `u(x) = 0`.
    HalfLineRight(f64),
    /// Both half-lines at `x` together: the spectrum of the decoupled operator.
    Decoupled(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingOptions {
    pub ode_tol: f64,
    /// Relative tolerance on each eigenvalue.
    pub root_tol: f64,
    /// Distance kept between the outermost turning point and a box wall.
    pub box_margin: f64,
    /// Largest change allowed when the box is doubled.
    pub box_tol: f64,
}

impl Default for ShootingOptions {
    fn default() -> Self {
        Self { ode_tol: 1e-12, root_tol: 1e-13, box_margin: 5.0, box_tol: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenReport {
    pub values: Vec<f64>,
    /// Boxes the values were computed on (one per half-line for decoupled
    /// problems).
    pub boxes: Vec<(f64, f64)>,
    /// Largest change of any value when every box wall was pushed twice as
    /// far out; zero for finite intervals.
    pub box_change: f64,
}

struct Shooter<'a> {
    v: &'a Potential,
    a: f64,
    b: f64,
    m: f64,
    vmin: f64,
    breaks: Vec<f64>,
    opts: OdeOptions,
}

impl<'a> Shooter<'a> {
    fn new(v: &'a Potential, a: f64, b: f64, ode_tol: f64) -> Self {
        let n = 400;
        let (lo, hi) = (a + 0.25 * (b - a), b - 0.25 * (b - a));
        let mut m = 0.5 * (a + b);
        let mut best = f64::INFINITY;
        for i in 0..=n {
            let x = a + (b - a) * i as f64 / n as f64;
            let vx = v.value(x);
            if vx < best {
                best = vx;
                m = x;
            }
        }
        let m = m.clamp(lo, hi);
        let breaks = v.breakpoints(a, b);
        Self { v, a, b, m, vmin: v.lower_bound(), breaks, opts: OdeOptions::with_tol(ode_tol) }
    }

    fn angle(&self, lambda: f64, from: f64, to: f64) -> Result<f64> {
        let s = (lambda - self.vmin).max(1.0).sqrt();
        let mut nodes: Vec<f64> = self.breaks.iter().copied().filter(|b| (b - from) * (b - to) < 0.0).collect();
        if to < from {
            nodes.reverse();
        }
        nodes.push(to);
        let mut x = from;
        let mut theta = [0.0];
        for next in nodes {
            theta = dopri5(
                |t, y: &[f64; 1]| {
                    let (sn, cs) = y[0].sin_cos();
                    [s * cs * cs + (lambda - self.v.value(t)) / s * sn * sn]
                },
                x,
                theta,
                next,
                &self.opts,
                |_, _| {},
            )?;
            x = next;
        }
        Ok(theta[0])
    }

    /// `theta_left(m) - theta_right(m)`; equals `(k+1) pi` exactly at the
    /// k-th eigenvalue.
    fn mismatch(&self, lambda: f64) -> Result<f64> {
        Ok(self.angle(lambda, self.a, self.m)? - self.angle(lambda, self.b, self.m)?)
    }

    fn count_below(&self, lambda: f64) -> Result<usize> {
        Ok((self.mismatch(lambda)? / PI).floor().max(0.0) as usize)
    }

    fn eigenvalues(&self, count: usize, root_tol: f64) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(count);
        let mut lo = self.vmin - 1.0;
        let width = self.b - self.a;
        for k in 0..count {
            let target = (k + 1) as f64 * PI;
            let mut step = (PI / width).powi(2).max(0.5);
            let mut hi = lo + step;
            let mut f_hi = self.mismatch(hi)?;
            let mut guard = 0;
            while f_hi <= target {
                lo = lo.max(if f_hi < target { hi } else { lo });
                step *= 2.0;
                hi = lo + step;
                f_hi = self.mismatch(hi)?;
                guard += 1;
                if guard > 200 {
                    return Err(Error::BracketFailure(format!("eigenvalue {k} not bracketed below {hi}")));
                }
            }
            let tol = root_tol * hi.abs().max(1.0);
            let mut err = None;
            let root = find_root_bracketed(
                |l| match self.mismatch(l) {
                    Ok(f) => f - target,
                    Err(e) => {
                        err.get_or_insert(e);
                        f64::NAN
                    }
                },
                RealInterval::new(lo, hi)?,
                tol,
            );
            if let Some(e) = err {
                return Err(e);
            }
            let root = root?;
            out.push(root);
            lo = root;
        }
        Ok(out)
    }
}

/// Number of Dirichlet eigenvalues on `interval` strictly below `lambda`,
/// from the oscillation of the shooting solutions.
pub fn oscillation_count(v: &Potential, interval: RealInterval, lambda: f64) -> Result<usize> {
    Shooter::new(v, interval.lo(), interval.hi(), ShootingOptions::default().ode_tol).count_below(lambda)
}

fn require_confining(v: &Potential) -> Result<()> {
    if v.class() != PotentialClass::Confining {
        return Err(Error::invalid("line problems need a confining potential"));
    }
    Ok(())
}

/// Solves on boxes produced by `boxes(reach)` where `reach` is the turning
/// radius plus margin for the current top eigenvalue; grows the reach until
/// it covers every requested eigenvalue, then checks the doubled boxes.
fn line_problem(
    v: &Potential,
    count: usize,
    opts: &ShootingOptions,
    boxes: impl Fn(f64) -> Vec<(f64, f64)>,
) -> Result<EigenReport> {
    let solve = |reach: f64| -> Result<Vec<Vec<f64>>> {
        boxes(reach)
            .into_iter()
            .map(|(a, b)| Shooter::new(v, a, b, opts.ode_tol).eigenvalues(count, opts.root_tol))
            .collect()
    };
    let merged = |parts: &[Vec<f64>]| {
        let mut all: Vec<f64> = parts.iter().flatten().copied().collect();
        all.sort_by(|a, b| a.total_cmp(b));
        all.truncate(count);
        all
    };
    let mut energy = v.lower_bound() + 10.0;
    let mut reach = v.turning_radius(energy)? + opts.box_margin;
    let mut values;
    loop {
        values = merged(&solve(reach)?);
        let top = *values.last().unwrap();
        let needed = v.turning_radius(top)? + opts.box_margin;
        if needed <= reach {
            break;
        }
        energy = energy.max(top);
        reach = needed.max(v.turning_radius(energy)? + opts.box_margin);
    }
    let doubled = merged(&solve(2.0 * reach)?);
    let box_change = values.iter().zip(&doubled).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if !(box_change < opts.box_tol) {
        return Err(Error::CutoffSensitivity(format!(
            "doubling the box changed eigenvalues by {box_change:e} (tolerance {:e})",
            opts.box_tol
        )));
    }
    Ok(EigenReport { values, boxes: boxes(reach), box_change })
}

pub fn dirichlet_eigenvalues_with(
    v: &Potential,
    domain: Domain,
    count: usize,
    opts: &ShootingOptions,
) -> Result<EigenReport> {
    if count == 0 {
        return Err(Error::invalid("count must be at least 1"));
    }
    match domain {
        Domain::Interval(iv) => {
            let values = Shooter::new(v, iv.lo(), iv.hi(), opts.ode_tol).eigenvalues(count, opts.root_tol)?;
            Ok(EigenReport { values, boxes: vec![(iv.lo(), iv.hi())], box_change: 0.0 })
        }
        Domain::WholeLine => {
            require_confining(v)?;
            line_problem(v, count, opts, |r| vec![(-r, r)])
        }
        Domain::HalfLineLeft(x) => {
            require_confining(v)?;
            line_problem(v, count, opts, |r| vec![((-r).min(x - 1.0), x)])
        }
        Domain::HalfLineRight(x) => {
            require_confining(v)?;
            line_problem(v, count, opts, |r| vec![(x, r.max(x + 1.0))])
        }
        Domain::Decoupled(x) => {
            require_confining(v)?;
            line_problem(v, count, opts, |r| vec![((-r).min(x - 1.0), x), (x, r.max(x + 1.0))])
        }
    }
}

/// First `count` Dirichlet eigenvalues, ascending.
pub fn dirichlet_eigenvalues(v: &Potential, domain: Domain, count: usize) -> Result<Vec<f64>> {
    Ok(dirichlet_eigenvalues_with(v, domain, count, &ShootingOptions::default())?.values)
}
