use super::RealInterval;
use crate::error::{Error, Result};

/// Right-continuous step function: `values[0]` on `(-inf, jumps[0])`,
/// `values[i]` on `[jumps[i-1], jumps[i])`, and the last value beyond the
/// last jump.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StepFunction {
    jumps: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(jumps: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if values.len() != jumps.len() + 1 {
            return Err(Error::invalid(format!(
                "step function needs {} plateau values for {} jumps, got {}",
                jumps.len() + 1,
                jumps.len(),
                values.len()
            )));
        }
        if jumps.iter().any(|j| !j.is_finite()) {
            return Err(Error::invalid("jump locations must be finite"));
        }
        if jumps.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::UnsortedJumps);
        }
        Ok(Self { jumps, values })
    }

    pub fn constant(value: f64) -> Self {
        Self { jumps: Vec::new(), values: vec![value] }
    }

    /// Builds a step function from signed jumps on top of `base`. Jumps
    /// closer than `merge_tol` are combined and cancelling pairs vanish.
    pub fn from_jumps(base: f64, deltas: impl IntoIterator<Item = (f64, f64)>, merge_tol: f64) -> Self {
        let mut ds: Vec<(f64, f64)> = deltas.into_iter().collect();
        ds.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(ds.len());
        let mut i = 0;
        while i < ds.len() {
            let start = ds[i].0;
            let mut total = 0.0;
            let mut weighted = 0.0;
            let mut count = 0.0;
            while i < ds.len() && ds[i].0 - start <= merge_tol {
                total += ds[i].1;
                weighted += ds[i].0;
                count += 1.0;
                i += 1;
            }
            if total.abs() > 1e-14 {
                merged.push((weighted / count, total));
            }
        }
        let mut jumps = Vec::with_capacity(merged.len());
        let mut values = vec![base];
        let mut current = base;
        for (x, d) in merged {
            current += d;
            // snap accumulated rounding to the nearest multiple of 1/2
            let snapped = (current * 2.0).round() / 2.0;
            if (snapped - current).abs() < 1e-12 {
                current = snapped;
            }
            jumps.push(x);
            values.push(current);
        }
        Self { jumps, values }
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn eval(&self, x: f64) -> f64 {
        let idx = self.jumps.partition_point(|&j| j <= x);
        self.values[idx]
    }

    /// Applies `f` to every plateau value and merges equal neighbours.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut jumps = Vec::with_capacity(self.jumps.len());
        let mut values = vec![f(self.values[0])];
        for (j, v) in self.jumps.iter().zip(&self.values[1..]) {
            let fv = f(*v);
            if fv != *values.last().unwrap() {
                jumps.push(*j);
                values.push(fv);
            }
        }
        Self { jumps, values }
    }

    /// `x -> self(x - c)`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            jumps: self.jumps.iter().map(|j| j + c).collect(),
            values: self.values.clone(),
        }
    }

    /// Constant pieces `(a, b, value)` covering `[lo, hi]`.
    pub fn plateaus(&self, lo: f64, hi: f64) -> Vec<(f64, f64, f64)> {
        let mut out = Vec::new();
        if hi <= lo {
            return out;
        }
        let mut idx = self.jumps.partition_point(|&j| j <= lo);
        let mut a = lo;
        while idx < self.jumps.len() && self.jumps[idx] < hi {
            let b = self.jumps[idx];
            if b > a {
                out.push((a, b, self.values[idx]));
            }
            a = b;
            idx += 1;
        }
        out.push((a, hi, self.values[idx]));
        out
    }

    /// Exact integral over `[lo, hi]`.
    pub fn integral(&self, lo: f64, hi: f64) -> f64 {
        self.plateaus(lo, hi)
            .into_iter()
            .map(|(a, b, v)| v * (b - a))
            .sum()
    }
}

/// Exact integral of the step function described by `jumps` and `values`
/// over `interval`.
pub fn integrate_piecewise_constant(jumps: &[f64], values: &[f64], interval: RealInterval) -> Result<f64> {
    let f = StepFunction::new(jumps.to_vec(), values.to_vec())?;
    Ok(f.integral(interval.lo(), interval.hi()))
}

/// Trapezoid rule on a sampled function.
pub fn trapezoid(xs: &[f64], ys: &[f64]) -> f64 {
    xs.windows(2)
        .zip(ys.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

fn gk15<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let sum = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * sum;
        if j % 2 == 1 {
            gauss += WG[j / 2] * sum;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss-Kronrod (7/15) quadrature by recursive bisection.
pub fn integrate_adaptive<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (val, err) = gk15(f, a, b);
        if err <= tol || depth >= 48 || (b - a).abs() < 1e-13 * a.abs().max(1.0) {
            return val;
        }
        let m = 0.5 * (a + b);
        recurse(f, a, m, 0.5 * tol, depth + 1) + recurse(f, m, b, 0.5 * tol, depth + 1)
    }
    if a == b {
        return 0.0;
    }
    recurse(&mut f, a, b, tol, 0)
}
