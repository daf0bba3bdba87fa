//! Adaptive Dormand-Prince 5(4) integration and the linear second-order
//! propagators built on it.

use num_complex::Complex64;

use super::RealInterval;
use crate::error::{Error, Result};

/// Magnitude at which linear solutions are rescaled during propagation.
pub const RENORM_THRESHOLD: f64 = 1e100;

#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Upper bound on |h|; `f64::INFINITY` disables it.
    pub h_max: f64,
    pub max_steps: usize,
}

impl OdeOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            ..Self::default()
        }
    }

    pub fn h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-10,
            h_max: f64::INFINITY,
            max_steps: 5_000_000,
        }
    }
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// 5th minus embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

#[inline]
fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += h * c * k[i];
        }
    }
    out
}

/// Integrates `y' = f(x, y)` from `x0` to `x1` (either direction).
///
/// After every accepted step `post` may rescale the state in place; the
/// derivative is re-evaluated afterwards, so only transformations that
/// commute with `f` (for instance scaling a linear system) are sound.
pub fn dopri5<const N: usize, F, P>(
    mut f: F,
    x0: f64,
    y0: [f64; N],
    x1: f64,
    opts: &OdeOptions,
    mut post: P,
) -> Result<[f64; N]>
where
    F: FnMut(f64, &[f64; N]) -> [f64; N],
    P: FnMut(f64, &mut [f64; N]),
{
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut x = x0;
    let mut y = y0;
    let mut h = (span.abs() / 64.0).min(opts.h_max).min(0.1) * dir;
    let mut k1 = f(x, &y);
    let mut steps = 0usize;

    loop {
        if (x1 - x) * dir <= 0.0 {
            return Ok(y);
        }
        steps += 1;
        if steps > opts.max_steps {
            return Err(Error::TooManySteps(opts.max_steps));
        }
        let last = (x + h - x1) * dir >= 0.0;
        let h_step = if last { x1 - x } else { h };

        let k2 = f(x + C2 * h_step, &axpy(&y, h_step, &[(A21, &k1)]));
        let k3 = f(x + C3 * h_step, &axpy(&y, h_step, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(
            x + C4 * h_step,
            &axpy(&y, h_step, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
        );
        let k5 = f(
            x + C5 * h_step,
            &axpy(&y, h_step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
        );
        let k6 = f(
            x + h_step,
            &axpy(
                &y,
                h_step,
                &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
            ),
        );
        let y_new = axpy(
            &y,
            h_step,
            &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)],
        );
        let k7 = f(x + h_step, &y_new);

        let mut err = 0.0f64;
        for i in 0..N {
            let e = h_step
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            err = err.max((e / scale).abs());
        }
        if !err.is_finite() {
            err = 1e10;
        }

        if err <= 1.0 {
            x = if last { x1 } else { x + h_step };
            y = y_new;
            post(x, &mut y);
            k1 = f(x, &y);
            let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !last {
                h = (h_step * grow).abs().min(opts.h_max) * dir;
            }
        } else {
            let shrink = (0.9 * err.powf(-0.2)).clamp(0.1, 0.9);
            h = h_step * shrink;
            if h.abs() < 1e-14 * x.abs().max(1.0) {
                return Err(Error::StepUnderflow { x, h });
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub x: f64,
    pub value: Complex64,
    pub derivative: Complex64,
}

#[inline]
fn linear_rhs<Q: Fn(f64) -> Complex64>(coeff: &Q, x: f64, y: &[f64; 4]) -> [f64; 4] {
    // u'' = q(x) u, state (Re u, Im u, Re u', Im u')
    let q = coeff(x);
    [
        y[2],
        y[3],
        q.re * y[0] - q.im * y[1],
        q.re * y[1] + q.im * y[0],
    ]
}

/// Integrates `u'' = coeff(x) u` across `span` starting from `init` at
/// `span.lo()`, recording every accepted step.
pub fn integrate_ode<Q: Fn(f64) -> Complex64>(
    coeff: Q,
    init: (Complex64, Complex64),
    span: RealInterval,
    tol: f64,
) -> Result<Vec<TrajectoryPoint>> {
    if !(tol > 0.0) {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let y0 = [init.0.re, init.0.im, init.1.re, init.1.im];
    let mut traj = vec![TrajectoryPoint {
        x: span.lo(),
        value: init.0,
        derivative: init.1,
    }];
    dopri5(
        |x, y| linear_rhs(&coeff, x, y),
        span.lo(),
        y0,
        span.hi(),
        &OdeOptions::with_tol(tol),
        |x, y| {
            traj.push(TrajectoryPoint {
                x,
                value: Complex64::new(y[0], y[1]),
                derivative: Complex64::new(y[2], y[3]),
            })
        },
    )?;
    Ok(traj)
}

/// Solution of a linear equation known up to a positive scale:
/// the true pair is `(value, derivative) * exp(log_scale)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledState {
    pub value: Complex64,
    pub derivative: Complex64,
    pub log_scale: f64,
}

impl ScaledState {
    pub fn log_derivative(&self) -> Complex64 {
        self.derivative / self.value
    }
}

/// Propagates `u'' = coeff(x) u` from `from` to `to`, splitting at the
/// interior `breaks` (discontinuities of the coefficient) and rescaling the
/// state whenever it leaves `[1/RENORM_THRESHOLD, RENORM_THRESHOLD]`.
pub fn propagate<Q: Fn(f64) -> Complex64>(
    coeff: Q,
    init: (Complex64, Complex64),
    from: f64,
    to: f64,
    breaks: &[f64],
    opts: &OdeOptions,
) -> Result<ScaledState> {
    let mut nodes: Vec<f64> = breaks
        .iter()
        .copied()
        .filter(|b| (b - from) * (b - to) < 0.0)
        .collect();
    if to > from {
        nodes.sort_by(|a, b| a.total_cmp(b));
    } else {
        nodes.sort_by(|a, b| b.total_cmp(a));
    }
    nodes.push(to);

    let mut y = [init.0.re, init.0.im, init.1.re, init.1.im];
    let mut log_scale = 0.0;
    let mut x = from;
    for &next in &nodes {
        y = dopri5(
            |t, s| linear_rhs(&coeff, t, s),
            x,
            y,
            next,
            opts,
            |_, s| {
                let m = s.iter().fold(0.0f64, |a, v| a.max(v.abs()));
                if m > RENORM_THRESHOLD || (m < 1.0 / RENORM_THRESHOLD && m > 0.0) {
                    for v in s.iter_mut() {
                        *v /= m;
                    }
                    log_scale += m.ln();
                }
            },
        )?;
        x = next;
    }
    Ok(ScaledState {
        value: Complex64::new(y[0], y[1]),
        derivative: Complex64::new(y[2], y[3]),
        log_scale,
    })
}

/// Log-derivative form: carries `w = u'/u` from `from` to `to`.
pub fn propagate_log_derivative<Q: Fn(f64) -> Complex64>(
    coeff: Q,
    w_start: Complex64,
    from: f64,
    to: f64,
    breaks: &[f64],
    opts: &OdeOptions,
) -> Result<Complex64> {
    let end = propagate(
        coeff,
        (Complex64::new(1.0, 0.0), w_start),
        from,
        to,
        breaks,
        opts,
    )?;
    Ok(end.log_derivative())
}
