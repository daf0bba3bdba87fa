use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::config::{Config, Operator};
use super::output::{csv_report, json_report, Cell};
use crate::error::{Error, Result};
use crate::experiments::{almost_mathieu_table, borg_demo, rational_frequencies};
use crate::jacobi::{default_energy_window, trace_formula_jacobi, truncate, xi_arg, xi_counting_steps};
use crate::numerics::{linspace, AbelSchedule};
use crate::periodic::{band_edges, check_mu_interlacing, dirichlet_mu};
use crate::scattering::scattering_data;
use crate::schrodinger::{
    dirichlet_eigenvalues, xi_confining, xi_schrodinger, xi_schrodinger_grid, Domain, Potential, PotentialClass,
};
use crate::trace::{reconstruct_v, reconstruct_v_periodic};
use crate::xi::check_eps_schedule;

/// What a command produced. Non-empty `problems` are numerical-quality
/// failures: the data is still emitted but the run exits with status 3.
#[derive(Debug, Default)]
pub struct Outcome {
    pub csv: Option<String>,
    pub json: Option<String>,
    pub problems: Vec<String>,
}

fn grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Config(format!("empty range [{lo}, {hi}]")));
    }
    if points < 2 {
        return Err(Error::Config("a grid needs at least 2 points".into()));
    }
    Ok(linspace(lo, hi, points))
}

/// Damping schedule for a trace reconstruction; the cutoff defaults to the
/// end of the covered data.
fn schedule(alphas: &[f64], cutoff: Option<f64>, e0: f64, covered: Option<f64>) -> Result<AbelSchedule> {
    let hi = cutoff.or(covered);
    match (alphas.is_empty(), hi) {
        (true, Some(hi)) => AbelSchedule::covering(e0, hi),
        (true, None) => Ok(AbelSchedule::default_for(e0)),
        (false, _) => AbelSchedule::new(alphas.to_vec(), hi.unwrap_or_else(|| AbelSchedule::default_for(e0).cutoff())),
    }
}

fn potential<'a>(op: &'a Operator, command: &str) -> Result<&'a Potential> {
    match op {
        Operator::Schrodinger(v) => Ok(v),
        Operator::Jacobi(_) => Err(Error::Config(format!("`{command}` needs a schrodinger operator"))),
    }
}

pub fn xi(cfg: &Config, op: &Operator) -> Result<Outcome> {
    let s = &cfg.xi;
    let lambdas = grid(s.lambda_min, s.lambda_max, s.points)?;
    check_eps_schedule(&s.eps_schedule)?;
    let estimates: Vec<_> = lambdas
        .par_iter()
        .map(|&l| match op {
            Operator::Schrodinger(v) => xi_schrodinger(v, s.x, l, &s.eps_schedule),
            Operator::Jacobi(h) => xi_arg(h, s.site, l, &s.eps_schedule),
        })
        .collect();
    let mut out = Outcome::default();
    let mut rows = Vec::with_capacity(lambdas.len());
    for (&l, est) in lambdas.iter().zip(estimates) {
        let (value, flag) = match est {
            Ok(e) if e.converged => (e.value, "ok"),
            Ok(e) => (e.value, "unconverged"),
            Err(err) => {
                out.problems.push(format!("lambda = {l}: {err}"));
                (f64::NAN, "failed")
            }
        };
        rows.push(vec![l.into(), value.into(), flag.into()]);
    }
    out.csv = Some(csv_report("xi", cfg, &["lambda", "xi", "flag"], &rows));
    Ok(out)
}

fn trace_jacobi(cfg: &Config, h: &crate::jacobi::JacobiOperator) -> Result<Outcome> {
    let s = &cfg.trace;
    if s.window < 0 {
        return Err(Error::Config("trace.window must be non-negative".into()));
    }
    let t = truncate(h, s.site - s.window, s.site + s.window)?;
    let xi = xi_counting_steps(&t, s.site)?;
    let (e_minus, e_plus) = default_energy_window(&t, s.site)?;
    let value = trace_formula_jacobi(&xi, e_minus, e_plus)?;
    let exact = h.v(s.site);
    let mut out = Outcome::default();
    if (value - exact).abs() > 1e-8 * (1.0 + exact.abs()) {
        out.problems.push(format!("reconstructed v({}) = {value}, expected {exact}", s.site));
    }
    let body = json!({
        "method": "jacobi_counting",
        "site": s.site,
        "value": value,
        "exact": exact,
        "error": (value - exact).abs(),
        "energy_window": [e_minus, e_plus],
        "xi_jumps": xi.steps().map(|st| st.jumps().to_vec()),
    });
    out.json = Some(json_report("trace", cfg, body));
    Ok(out)
}

#[derive(Debug, Serialize)]
struct PeriodicSummary {
    method: &'static str,
    x: f64,
    period: f64,
    edges: Vec<f64>,
    gap_lengths: Vec<f64>,
    gap_resolution: Vec<f64>,
    gaps_decreasing: bool,
    mu: Vec<f64>,
    partial_sums: Vec<f64>,
    value: f64,
    tail_bound: f64,
    exact: f64,
    error: f64,
    within_tail_bound: bool,
}

fn periodic_summary(v: &Potential, x: f64, n_bands: usize) -> Result<(PeriodicSummary, Vec<String>)> {
    if n_bands < 2 {
        return Err(Error::Config("need at least 2 bands".into()));
    }
    let b = band_edges(v, n_bands)?;
    let n = b.gaps().len();
    let mu = check_mu_interlacing(&b, &dirichlet_mu(v, x, n)?)?;
    let r = reconstruct_v_periodic(&b.edges[..2 * n + 1], &mu, b.data_tol())?;
    let exact = v.value(x);
    let mut problems = Vec::new();
    if !r.tail_bound.is_finite() {
        problems.push("tail bound is not finite".into());
    }
    let gap_lengths = b.gap_lengths();
    let summary = PeriodicSummary {
        method: "periodic",
        x,
        period: b.period,
        gaps_decreasing: gap_lengths.windows(2).all(|w| w[1] <= w[0]),
        gap_lengths,
        gap_resolution: b.gap_resolution,
        edges: b.edges,
        mu,
        partial_sums: r.partial_sums,
        value: r.value,
        tail_bound: r.tail_bound,
        exact,
        error: (r.value - exact).abs(),
        within_tail_bound: (r.value - exact).abs() <= r.tail_bound,
    };
    Ok((summary, problems))
}

pub fn trace(cfg: &Config, op: &Operator) -> Result<Outcome> {
    let s = &cfg.trace;
    let v = match op {
        Operator::Jacobi(h) => return trace_jacobi(cfg, h),
        Operator::Schrodinger(v) => v,
    };
    let exact = v.value(s.x);
    let (body, problems) = match v.class() {
        PotentialClass::Periodic { .. } => {
            let (summary, problems) = periodic_summary(v, s.x, s.n_bands)?;
            (serde_json::to_value(summary).expect("summary serializes"), problems)
        }
        PotentialClass::Confining => {
            if s.n_max < 2 {
                return Err(Error::Config("trace.n_max must be at least 2".into()));
            }
            let e = dirichlet_eigenvalues(v, Domain::WholeLine, s.n_max + 1)?;
            let mu = dirichlet_eigenvalues(v, Domain::Decoupled(s.x), s.n_max)?;
            let xi = xi_confining(s.x, &e, &mu)?;
            let sched = schedule(&s.alphas, s.cutoff, e[0], Some(xi.covered_hi()))?;
            let r = reconstruct_v(&xi, e[0], &sched)?;
            let problems = if r.abel.converged { vec![] } else { vec!["Abel extrapolation did not converge".into()] };
            let body = json!({
                "method": "confining",
                "x": s.x,
                "energies": e,
                "mu": mu,
                "reconstruction": r,
                "value": r.value,
                "exact": exact,
                "error": (r.value - exact).abs(),
            });
            (body, problems)
        }
        PotentialClass::Asymptotic { .. } => {
            check_eps_schedule(&s.eps_schedule)?;
            let e0 = v.lower_bound();
            if !(s.lambda_max > e0) || s.points < 2 {
                return Err(Error::Config(format!("need trace.lambda_max > {e0} and at least 2 points")));
            }
            // quadratic spacing resolves the threshold region
            let lambdas: Vec<f64> = (0..s.points)
                .map(|i| e0 + (s.lambda_max - e0) * (i as f64 / (s.points - 1) as f64).powi(2))
                .collect();
            let xi = xi_schrodinger_grid(v, s.x, &lambdas, &s.eps_schedule)?.with_tail(0.5)?;
            let sched = schedule(&s.alphas, s.cutoff, e0, None)?;
            let r = reconstruct_v(&xi, e0, &sched)?;
            let problems = if r.abel.converged { vec![] } else { vec!["Abel extrapolation did not converge".into()] };
            let body = json!({
                "method": "green_sampled",
                "x": s.x,
                "lambda_grid": [e0, s.lambda_max, s.points],
                "reconstruction": r,
                "value": r.value,
                "exact": exact,
                "error": (r.value - exact).abs(),
            });
            (body, problems)
        }
    };
    Ok(Outcome { csv: None, json: Some(json_report("trace", cfg, body)), problems })
}

pub fn bands(cfg: &Config, op: &Operator) -> Result<Outcome> {
    let v = potential(op, "bands")?;
    if v.period().is_none() {
        return Err(Error::Config("`bands` needs a periodic potential".into()));
    }
    let (p, problems) = periodic_summary(v, cfg.bands.x, cfg.bands.n_bands)?;
    let rows: Vec<Vec<Cell>> = p
        .edges
        .chunks(2)
        .enumerate()
        .map(|(i, c)| {
            let mut row: Vec<Cell> = vec![(i as i64).into(), c[0].into(), c[1].into()];
            match p.mu.get(i) {
                Some(&m) => row.extend([Cell::from(p.gap_lengths[i]), m.into(), p.gap_resolution[i].into()]),
                None => row.extend(["", "", ""].map(Cell::from)),
            }
            row
        })
        .collect();
    let header = ["band", "lower", "upper", "gap_length", "mu", "gap_resolution"];
    Ok(Outcome {
        csv: Some(csv_report("bands", cfg, &header, &rows)),
        json: Some(json_report("bands", cfg, &p)),
        problems,
    })
}

pub fn scatter(cfg: &Config, op: &Operator) -> Result<Outcome> {
    let s = &cfg.scatter;
    let v = potential(op, "scatter")?;
    if !(s.lambda_min > 0.0) {
        return Err(Error::Config("scatter.lambda_min must be positive".into()));
    }
    let lambdas = grid(s.lambda_min, s.lambda_max, s.points)?;
    let data = lambdas.par_iter().map(|&l| scattering_data(v, l, s.x)).collect::<Result<Vec<_>>>()?;
    let mut out = Outcome::default();
    let mut rows = Vec::with_capacity(data.len());
    for d in &data {
        let xi = d.xi();
        let margin = d.r.norm() / 2.0 - (xi - 0.5).abs();
        let defect = d.unitarity_defect();
        let flag = if margin < -s.bound_tol {
            out.problems.push(format!("lambda = {}: |xi - 1/2| exceeds |R|/2 by {:e}", d.lambda, -margin));
            "bound_violated"
        } else if defect > s.unitarity_tol {
            out.problems.push(format!("lambda = {}: unitarity defect {defect:e}", d.lambda));
            "unitarity"
        } else {
            "ok"
        };
        rows.push(vec![
            d.lambda.into(),
            d.r.re.into(),
            d.r.im.into(),
            d.r.norm().into(),
            d.t.norm().into(),
            xi.into(),
            margin.into(),
            defect.into(),
            flag.into(),
        ]);
    }
    let header = ["lambda", "re_r", "im_r", "abs_r", "abs_t", "xi", "bound_margin", "unitarity_defect", "flag"];
    out.csv = Some(csv_report("scatter", cfg, &header, &rows));
    Ok(out)
}

pub fn am(cfg: &Config) -> Result<Outcome> {
    let s = &cfg.am;
    if s.couplings.is_empty() {
        return Err(Error::Config("am.couplings is empty".into()));
    }
    let freqs = if s.frequencies.is_empty() {
        if s.q_max < 1 {
            return Err(Error::Config("am.q_max must be at least 1".into()));
        }
        rational_frequencies(s.q_max)
    } else {
        s.frequencies.clone()
    };
    let table = almost_mathieu_table(&s.couplings, &freqs)?;
    let mut out = Outcome::default();
    let rows: Vec<Vec<Cell>> = table
        .iter()
        .map(|r| {
            let margin = r.measure - r.bound;
            if margin < -s.bound_tol {
                out.problems.push(format!("lambda = {}, alpha = {}/{}: measure {} below {}", r.coupling, r.p, r.q, r.measure, r.bound));
            }
            vec![
                r.coupling.into(),
                r.p.into(),
                r.q.into(),
                (r.p as f64 / r.q as f64).into(),
                r.measure.into(),
                r.bound.into(),
                margin.into(),
            ]
        })
        .collect();
    let header = ["coupling", "p", "q", "alpha", "measure", "bound", "margin"];
    out.csv = Some(csv_report("am", cfg, &header, &rows));
    Ok(out)
}

pub fn borg(cfg: &Config, op: &Operator) -> Result<Outcome> {
    let v = potential(op, "borg")?;
    let report = borg_demo(v, cfg.borg.n_max)?;
    let problems = if report.abel.converged { vec![] } else { vec!["Abel extrapolation did not converge".into()] };
    Ok(Outcome { csv: None, json: Some(json_report("borg", cfg, report)), problems })
}
