//! The five subcommands. Each writes its report files and returns a
//! [`Status`] that decides the exit code.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use certkit_core::certificate::{
    audit_hypotheses, certify_with, corollary_constants, general_bound_constants, iss_bound, kappa_chi, scan_scalar_P,
    Certificate, CorollaryConstants, IssConstants, KappaChi, Regime, Verdict,
};
use certkit_core::galerkin_sim::simulate as run_simulation;
use certkit_core::green_bvp::{solve_p12_direct, solve_p12_green, CouplingProblem, P12Solution, SolveMethod};
use certkit_core::CertError;
use rayon::prelude::*;

use crate::config::{Loaded, RunConfig, Solver};
use crate::output::{table_csv, trajectory_csv, write_atomic, TrajectoryRow};
use crate::report::{Report, Section};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Success,
    Infeasible(String),
    Violation(String),
}

impl Status {
    pub fn code(&self) -> i32 {
        match self {
            Status::Success => 0,
            Status::Infeasible(_) | Status::Violation(_) => 2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub status: Status,
    pub report: Report,
    pub files: Vec<PathBuf>,
}

/// Exit code for an error: divergence is 3, everything else 1.
pub fn error_code(err: &anyhow::Error) -> i32 {
    let diverged = err.chain().any(|e| matches!(e.downcast_ref::<CertError>(), Some(CertError::Divergence { .. })));
    if diverged {
        3
    } else {
        1
    }
}

/// Rayon pool honouring `CERTKIT_THREADS` (unset or 0 means all cores).
pub fn thread_pool() -> Result<rayon::ThreadPool> {
    let threads = match std::env::var("CERTKIT_THREADS") {
        Ok(v) => v.trim().parse::<usize>().with_context(|| format!("CERTKIT_THREADS must be a count, got `{v}`"))?,
        Err(_) => 0,
    };
    Ok(rayon::ThreadPoolBuilder::new().num_threads(threads).build()?)
}

fn out_dir(cfg: &RunConfig, out: Option<&Path>) -> PathBuf {
    out.map(Path::to_path_buf).unwrap_or_else(|| cfg.output.dir.clone())
}

fn write_report(report: &Report, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let toml_path = dir.join(format!("{stem}.report.toml"));
    let text_path = dir.join(format!("{stem}.report.txt"));
    write_atomic(&toml_path, report.to_toml().as_bytes())?;
    write_atomic(&text_path, report.to_text().as_bytes())?;
    Ok(vec![toml_path, text_path])
}

fn solve_p12(solver: Solver, problem: &CouplingProblem) -> Result<P12Solution> {
    Ok(match solver {
        Solver::Direct => solve_p12_direct(problem)?,
        Solver::Green => solve_p12_green(problem)?,
    })
}


fn certify_config(loaded: &Loaded) -> Result<Certificate> {
    let cfg = &loaded.config;
    let system = cfg.system(&loaded.base)?;
    let problem = cfg.problem(&system)?;
    let p12 = solve_p12(cfg.numerics.solver, &problem)?;
    Ok(certify_with(&problem, &cfg.nonlinearity, p12)?)
}

fn verdict_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::NotApplicable => "not_applicable",
    }
}

const P12_FORMULA: &str = "a^2 P12'' + C^T P12 = -(B + P D), P12(0) = P12(l) = 0";

fn certificate_section(cert: &Certificate) -> Section {
    let n = cert.p12_norms();
    let mut s = Section::new("certificate");
    s.put("mode", if cert.mode == Regime::General { "general" } else { "globally_lipschitz" })
        .put("feasible", cert.feasible)
        .tagged("p12_l1", n.l1, P12_FORMULA)
        .tagged("p12_l2", n.l2, P12_FORMULA)
        .tagged("p12_linf", n.linf, P12_FORMULA)
        .tagged("d_l2", cert.d_l2, "|D|_{L^2}")
        .tagged("p_norm", cert.p_spectral_norm, "spectral norm of P")
        .tagged("lambda_min_pi1", cert.lambda_min_pi1, "lmin([[1, -|P12|], [-|P12|, lmin(P)]])")
        .tagged("lambda_max_pi2", cert.lambda_max_pi2, "lmax([[1, |P12|], [|P12|, lmax(P)]])")
        .tagged("omega", cert.omega, "2 (pi^2 a^2 / l^2 - |D| |P12| - sigma)")
        .tagged("big_omega_lambda_min", cert.lambda_min_big_omega, "lmin(-(C^T P + P C + int (P12 B^T + B P12^T) dz))")
        .tagged("lambda_min_xi", cert.lambda_min_xi, "lmin([[omega, -L |P12|], [-L |P12|, lmin(Omega)]])");
    if cert.big_omega.nrows() == 1 {
        s.tagged("big_omega", cert.big_omega[(0, 0)], "-(C^T P + P C + int (P12 B^T + B P12^T) dz)");
    }
    if let Some(t) = cert.tau {
        s.tagged("tau1", t.tau1, "root of the increasing tau equation")
            .tagged("tau2", t.tau2, "root of the decreasing tau equation");
    }
    let method = match cert.p12.method() {
        SolveMethod::GreenFunction => "green_function",
        SolveMethod::FundamentalMatrix => "fundamental_matrix",
    };
    s.put("p12_method", method)
        .tagged("p12_residual", cert.p12.residual_norm(), "max |a^2 P12'' + C^T P12 + B + P D| (fourth-order differences)")
        .put("p12_tolerance", cert.p12.tolerance());
    s
}

fn verdict_section(cert: &Certificate) -> Section {
    let mut s = Section::new("verdicts");
    for (label, v) in cert.verdicts.labelled() {
        s.put(label, verdict_name(v));
    }
    s.put("feasible", cert.feasible);
    s
}

const GAIN_FORMULA: &str = "sqrt(beta / (theta lmin(Pi1)))";

/// ISS constants for a feasible certificate, `None` (with the reason) otherwise.
fn iss_constants(cert: &Certificate, cfg: &RunConfig) -> std::result::Result<IssConstants, String> {
    if !cert.feasible {
        return Err(format!("certificate infeasible: {}", cert.verdicts.failures().join(", ")));
    }
    match cert.mode {
        Regime::GloballyLipschitz => corollary_constants(cert).map(IssConstants::Corollary),
        Regime::General => general_bound_constants(cert, &cfg.nonlinearity, cfg.disturbance.d_inf).map(IssConstants::General),
    }
    .map_err(|e| e.to_string())
}

fn iss_section(constants: &std::result::Result<IssConstants, String>) -> Section {
    let mut s = Section::new("iss_constants");
    match constants {
        Err(why) => {
            s.put("available", false).put("reason", why.as_str());
        }
        Ok(IssConstants::Corollary(c)) => {
            let gain = (c.beta / (c.theta * c.lambda_min_pi1)).sqrt();
            s.put("available", true)
                .put("mode", "globally_lipschitz")
                .tagged("K1", c.k1, "L + |D| |P12|")
                .tagged("K2", c.k2, "L |P12| + |D| |P|")
                .tagged("theta", c.theta, "lmin(Xi) / (2 lmax(Pi2))")
                .tagged("beta", c.beta, "2 l (K1^2 + K2^2) / lmin(Xi)")
                .tagged("transient_coefficient", (c.lambda_max_pi2 / c.lambda_min_pi1).sqrt(), "sqrt(lmax(Pi2) / lmin(Pi1))")
                .tagged("decay_rate", c.theta / 2.0, "theta / 2")
                .tagged("gain_x", gain, GAIN_FORMULA)
                .tagged("gain_u", gain + c.l.sqrt(), "sqrt(l) + sqrt(beta / (theta lmin(Pi1)))")
                .tagged("lyapunov_offset_per_d2", 2.0 * c.beta * c.lambda_max_pi2 / c.lambda_min_xi, "2 beta lmax(Pi2) / lmin(Xi)");
        }
        Ok(IssConstants::General(g)) => {
            s.put("available", true)
                .put("mode", "general")
                .tagged("d_inf", g.d_inf, "disturbance level the constants hold for")
                .tagged("theta0", g.theta0, "lmin(Xi) / (2 lmax(Pi2))")
                .put("epsilon", g.epsilon)
                .tagged("tau", g.tau, "between tau2 and tau1")
                .tagged("psi0", g.psi0, "2^{2q-3} c0 eps^{1-2q} d^{2q-1} / (2q-1) + (L + c0) d + 2^{2q-3} c0 d^{2q-1}")
                .tagged("psi1", g.psi1, "2^{2q-3} c0 (2q-2)/(2q-1) eps^{(2q-1)/(2q-2)}")
                .tagged("H1", g.h1, "2 sqrt(l) (psi0 + d |D| |P12|)")
                .tagged("H2", g.h2, "2 sqrt(l) (|P12| psi0 + |P| |D| d)")
                .put("H3", g.h3)
                .put("H4", g.h4)
                .tagged("vartheta", g.vartheta, "(H1^2 + H2^2) / (2 lmin(Xi))")
                .tagged("transient_coefficient", (g.lambda_max_pi2 / g.lambda_min_pi1).sqrt(), "sqrt(lmax(Pi2) / lmin(Pi1))")
                .tagged("gain", (g.vartheta / (g.lambda_min_pi1 * g.theta0)).sqrt(), "sqrt(vartheta / (lmin(Pi1) theta0))");
        }
    }
    s
}

fn numerics_section(cfg: &RunConfig, seed: Option<u64>) -> Section {
    let nm = &cfg.numerics;
    let mut s = Section::new("numerics");
    s.put("grid_nodes", nm.m)
        .put("quadrature", "composite Simpson")
        .put("p12_solver", if nm.solver == Solver::Direct { "direct" } else { "green" })
        .put("basis_modes", nm.modes)
        .put("basis_nodes", 4 * nm.modes + 1)
        .put("dt", nm.dt)
        .put("T", nm.t_end)
        .put("scheme", format!("{:?}", nm.scheme).to_lowercase())
        .put("record_every", nm.record_every)
        .put("pd_margin", certkit_core::certificate::PD_MARGIN)
        .put("divergence_norm", certkit_core::galerkin_sim::DIVERGENCE_NORM)
        .put("v_slack", nm.v_slack);
    if let Some(seed) = seed {
        s.put("seed", seed).put("audit_samples", nm.audit_samples);
    }
    s
}

/// Printed values for the worked example.
pub mod printed {
    pub const KAPPA: f64 = 0.021367;
    pub const CHI: f64 = 0.023414;
    pub const OMEGA: f64 = 13.992949;
    pub const BIG_OMEGA: f64 = 0.183766;
    pub const P12_L2: f64 = 0.374626;
    pub const LAMBDA_MIN_PI1: f64 = 0.625374;
    pub const LAMBDA_MAX_PI2: f64 = 1.374626;
    pub const K1: f64 = 2.873130;
    pub const K2: f64 = 8.7462728;
    pub const LAMBDA_MIN_XI: f64 = 0.1736102;
    pub const THETA: f64 = 0.06315;
    pub const BETA: f64 = 785.0749;
    pub const BOUND_COEFFICIENT: f64 = 1.482594;
    pub const GAIN_X: f64 = 95.26;
    pub const GAIN_U: f64 = 96.26;
}

/// One computed-vs-printed row.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub key: &'static str,
    pub computed: f64,
    pub printed: f64,
    /// Relative tolerance for agreement; `None` for known-inconsistent values.
    pub tolerance: Option<f64>,
    pub note: &'static str,
}

impl Comparison {
    pub fn rel_delta(&self) -> f64 {
        (self.computed - self.printed).abs() / self.printed.abs()
    }

    pub fn status(&self) -> &'static str {
        match self.tolerance {
            Some(tol) if self.rel_delta() <= tol => "agrees",
            Some(_) => "differs",
            None => "inconsistent",
        }
    }
}

const INCONSISTENT_K2: &str =
    "printed value does not follow from K2 = L |P12| + |D| |P|; the formula value is used in every bound";
const INCONSISTENT_BETA: &str =
    "printed value does not follow from beta = 2 l (K1^2 + K2^2) / lmin(Xi); the formula value is used in every bound";
const INCONSISTENT_GAIN: &str =
    "printed gain does not follow from sqrt(beta / (theta lmin(Pi1))) with either beta; the formula value is used";

pub fn example_comparisons(cert: &Certificate, c: &CorollaryConstants, kc: &KappaChi) -> Vec<Comparison> {
    use printed::*;
    let gain = (c.beta / (c.theta * c.lambda_min_pi1)).sqrt();
    let row = |key, computed, printed, tolerance: Option<f64>, note| Comparison { key, computed, printed, tolerance, note };
    vec![
        row("kappa", kc.kappa, KAPPA, Some(1e-4), ""),
        row("chi", kc.chi, CHI, Some(1e-4), ""),
        row("omega", cert.omega, OMEGA, Some(1e-4), ""),
        row("big_omega", cert.big_omega[(0, 0)], BIG_OMEGA, Some(2e-3), "printed value carries the rounding of kappa"),
        row("p12_l2", cert.p12_norms().l2, P12_L2, Some(1e-4), ""),
        row("lambda_min_pi1", cert.lambda_min_pi1, LAMBDA_MIN_PI1, Some(1e-5), ""),
        row("lambda_max_pi2", cert.lambda_max_pi2, LAMBDA_MAX_PI2, Some(1e-5), ""),
        row("K1", c.k1, K1, Some(1e-4), ""),
        row("lambda_min_xi", cert.lambda_min_xi, LAMBDA_MIN_XI, Some(1e-4), ""),
        row("theta", c.theta, THETA, Some(2e-3), "printed with four significant digits"),
        row("bound_coefficient", (c.lambda_max_pi2 / c.lambda_min_pi1).sqrt(), BOUND_COEFFICIENT, Some(1e-4), "t = 0 undisturbed bound"),
        row("K2", c.k2, K2, None, INCONSISTENT_K2),
        row("beta", c.beta, BETA, None, INCONSISTENT_BETA),
        row("gain_x", gain, GAIN_X, None, INCONSISTENT_GAIN),
        row("gain_u", gain + c.l.sqrt(), GAIN_U, None, INCONSISTENT_GAIN),
    ]
}

fn comparison_section(rows: &[Comparison]) -> Section {
    let mut s = Section::new("paper_comparison");
    for r in rows {
        let mut c = Section::new(r.key);
        c.put("computed", r.computed).put("printed", r.printed).put("rel_delta", r.rel_delta()).put("status", r.status());
        if let Some(tol) = r.tolerance {
            c.put("tolerance", tol);
        }
        if !r.note.is_empty() {
            c.put("note", r.note);
        }
        s.child(c);
    }
    s
}

fn comparison_table(rows: &[Comparison]) -> String {
    let mut out = format!("{:<20} {:>16} {:>16} {:>11}  {}\n", "quantity", "computed", "printed", "rel.delta", "status");
    for r in rows {
        out.push_str(&format!(
            "{:<20} {:>16.9} {:>16} {:>11.2e}  {}\n",
            r.key,
            crate::report::sig9(r.computed),
            r.printed,
            r.rel_delta(),
            r.status()
        ));
    }
    for r in rows.iter().filter(|r| r.tolerance.is_none()) {
        out.push_str(&format!("note: {}: {}\n", r.key, r.note));
    }
    out
}

/// Comparison rows when `cfg` is the worked example, else a note.
fn comparison_for(cert: &Certificate, cfg: &RunConfig, constants: &std::result::Result<IssConstants, String>) -> Result<(Section, Vec<Comparison>)> {
    let mut s = Section::new("paper_comparison");
    if !cfg.is_worked_example() {
        s.put("applicable", false).put("note", "configuration differs from the worked example");
        return Ok((s, vec![]));
    }
    let Ok(IssConstants::Corollary(c)) = constants else {
        s.put("applicable", false).put("note", "worked example did not certify");
        return Ok((s, vec![]));
    };
    let lambda = (cfg.system.c[0][0]).sqrt() / cfg.system.a;
    let kc = kappa_chi(lambda, cfg.system.l)?;
    let rows = example_comparisons(cert, c, &kc);
    Ok((comparison_section(&rows), rows))
}

pub fn certify(loaded: &Loaded, out: Option<&Path>) -> Result<Outcome> {
    let cfg = &loaded.config;
    let cert = certify_config(loaded)?;
    let constants = iss_constants(&cert, cfg);
    let (cmp, _) = comparison_for(&cert, cfg, &constants)?;
    let mut report = Report::new("certify");
    report
        .push(certificate_section(&cert))
        .push(iss_section(&constants))
        .push(cmp)
        .push(numerics_section(cfg, None))
        .push(verdict_section(&cert));
    report.config = Some(cfg.clone());
    let files = write_report(&report, &out_dir(cfg, out), "certify")?;
    let status = if cert.feasible {
        Status::Success
    } else {
        Status::Infeasible(format!("infeasible: {} failed", cert.verdicts.failures().join(", ")))
    };
    Ok(Outcome { status, report, files })
}

pub fn reproduce_example(out: Option<&Path>) -> Result<Outcome> {
    let loaded = Loaded::example();
    let cfg = &loaded.config;
    let cert = certify_config(&loaded)?;
    let constants = iss_constants(&cert, cfg);
    let (cmp, rows) = comparison_for(&cert, cfg, &constants)?;
    let mut report = Report::new("reproduce-example");
    report.preface = comparison_table(&rows);
    report
        .push(certificate_section(&cert))
        .push(iss_section(&constants))
        .push(cmp)
        .push(numerics_section(cfg, None))
        .push(verdict_section(&cert));
    report.config = Some(cfg.clone());
    let files = write_report(&report, &out_dir(cfg, out), "reproduce-example")?;
    let status = match rows.iter().find(|r| r.status() == "differs") {
        None => Status::Success,
        Some(r) => Status::Violation(format!("{} differs from the printed value", r.key)),
    };
    Ok(Outcome { status, report, files })
}

/// Largest excess of a trajectory over its bounds (negative when all hold).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margins {
    pub x: f64,
    pub u: f64,
    pub v: f64,
}

impl Margins {
    pub fn violated(&self) -> bool {
        self.x > 0.0 || self.u > 0.0 || self.v > 0.0
    }
}

pub fn simulate(loaded: &Loaded, out: Option<&Path>) -> Result<Outcome> {
    let cfg = &loaded.config;
    let system = cfg.system(&loaded.base)?;
    let problem = cfg.problem(&system)?;
    let disturbance = cfg.disturbances();
    let init = cfg.initial_data(&loaded.base)?;
    let p = cfg.p_matrix();

    let p12 = solve_p12(cfg.numerics.solver, &problem);
    let cert = match &p12 {
        Ok(s) => certify_with(&problem, &cfg.nonlinearity, s.clone()).map_err(|e| e.to_string()),
        Err(e) => Err(format!("{e:#}")),
    };
    let constants = match &cert {
        Ok(c) => iss_constants(c, cfg),
        Err(e) => Err(e.clone()),
    };
    let weight = p12.as_ref().ok().map(|s| (s, &p));
    let traj = run_simulation(&system, &cfg.nonlinearity, &disturbance, &init, &cfg.sim_config(), weight)
        .context("simulation failed")?;

    let d_inf = disturbance.d_inf();
    let rho = init.rho(system.l);
    let v0 = traj.v.as_ref().map(|v| v[0]);
    let mut rows = Vec::with_capacity(traj.len());
    let mut margins = Margins { x: f64::NEG_INFINITY, u: f64::NEG_INFINITY, v: f64::NEG_INFINITY };
    for k in 0..traj.len() {
        let t = traj.times[k];
        let v = traj.v.as_ref().map_or(f64::NAN, |v| v[k]);
        let (xb, ub) = match &constants {
            Ok(c) => {
                let b = iss_bound(c, t, d_inf, rho)?;
                (b.x, b.u)
            }
            Err(_) => (f64::NAN, f64::NAN),
        };
        if let Ok(c) = &constants {
            margins.x = margins.x.max(traj.x_norm[k] - xb);
            margins.u = margins.u.max(traj.u_l2[k] - ub);
            if let Some(v0) = v0 {
                let vb = (-c.decay() * t).exp() * v0 + c.lyapunov_offset(d_inf)? * (1.0 + cfg.numerics.v_slack);
                margins.v = margins.v.max(v - vb);
            }
        }
        rows.push(TrajectoryRow { t, u_l2: traj.u_l2[k], x_norm: traj.x_norm[k], v, x_bound: xb, u_bound: ub });
    }

    let dir = out_dir(cfg, out);
    let csv_path = dir.join("trajectory.csv");
    write_atomic(&csv_path, &trajectory_csv(&rows)?)?;

    let mut summary = Section::new("trajectory");
    let max = |v: &[f64]| v.iter().copied().fold(0.0, f64::max);
    summary
        .put("samples", traj.len())
        .put("t_final", traj.final_state.t)
        .put("max_u_l2", max(&traj.u_l2))
        .put("max_x_norm", max(&traj.x_norm))
        .put("final_u_l2", *traj.u_l2.last().unwrap_or(&0.0))
        .put("final_x_norm", *traj.x_norm.last().unwrap_or(&0.0))
        .tagged("max_w_sup", max(&traj.w_sup), "sup over grid and recorded times of the heat extension")
        .put("d_inf", d_inf)
        .tagged("rho", rho, "(|x0|^2 + |phi|_{L^2}^2)^{1/2}");
    if constants.is_ok() {
        summary
            .tagged("max_x_bound_margin", margins.x, "max_t (|x(t)| - x bound)")
            .tagged("max_u_bound_margin", margins.u, "max_t (|u(t)| - u bound)");
        if v0.is_some() {
            summary.tagged("max_v_bound_margin", margins.v, "max_t (V(t) - e^{-theta t} V(0) - offset (1 + v_slack))");
        }
    }
    let mut report = Report::new("simulate");
    match &cert {
        Ok(c) => {
            report.push(certificate_section(c));
        }
        Err(e) => {
            let mut s = Section::new("certificate");
            s.put("available", false).put("reason", e.as_str());
            report.push(s);
        }
    }
    report.push(iss_section(&constants)).push(numerics_section(cfg, None)).push(summary);
    if let Ok(c) = &cert {
        report.push(verdict_section(c));
    }
    report.config = Some(cfg.clone());
    let mut files = write_report(&report, &dir, "simulate")?;
    files.push(csv_path);
    let status = if constants.is_ok() && margins.violated() {
        Status::Violation(format!("bound violated: x margin {}, u margin {}, V margin {}", margins.x, margins.u, margins.v))
    } else {
        Status::Success
    };
    Ok(Outcome { status, report, files })
}

pub const SWEEP_COLUMNS: [&str; 18] = [
    "param",
    "value",
    "feasible",
    "omega",
    "big_omega_lambda_min",
    "p12_l2",
    "lambda_min_pi1",
    "lambda_max_pi2",
    "lambda_min_xi",
    "tau1",
    "tau2",
    "pi1_positive",
    "omega_positive",
    "big_omega_positive",
    "xi_positive",
    "tau_ordered",
    "p12_residual",
    "error",
];

fn sweep_row(param: &str, value: f64, outcome: &std::result::Result<Certificate, String>) -> Vec<String> {
    let mut row = vec![param.to_string(), value.to_string()];
    match outcome {
        Ok(c) => {
            let tau = c.tau.map_or((f64::NAN, f64::NAN), |t| (t.tau1, t.tau2));
            row.push(c.feasible.to_string());
            for x in [
                c.omega,
                c.lambda_min_big_omega,
                c.p12_norms().l2,
                c.lambda_min_pi1,
                c.lambda_max_pi2,
                c.lambda_min_xi,
                tau.0,
                tau.1,
            ] {
                row.push(x.to_string());
            }
            for (_, v) in c.verdicts.labelled() {
                row.push(verdict_name(v).to_string());
            }
            row.push(c.p12.residual_norm().to_string());
            row.push(String::new());
        }
        Err(e) => {
            row.push("false".into());
            row.extend(std::iter::repeat_n(String::new(), SWEEP_COLUMNS.len() - 4));
            row.push(e.clone());
        }
    }
    row
}

pub fn sweep(loaded: &Loaded, out: Option<&Path>, param: &str, grid: &[f64]) -> Result<Outcome> {
    let cfg = &loaded.config;
    if grid.is_empty() {
        bail!("sweep needs a nonempty --grid");
    }
    if let Some(v) = grid.iter().find(|v| !v.is_finite()) {
        bail!("sweep grid values must be finite, got {v}");
    }
    // rejects unknown names before any work
    cfg.with_param(param, grid[0]).or_else(|e| if e.to_string().contains("unknown") { Err(e) } else { Ok(cfg.clone()) })?;
    let pool = thread_pool()?;
    let outcomes: Vec<std::result::Result<Certificate, String>> = pool.install(|| -> Result<_> {
        if matches!(param, "p" | "P") {
            let system = cfg.system(&loaded.base)?;
            let problem = cfg.problem(&system)?;
            let scan = scan_scalar_P(&problem, &cfg.nonlinearity, grid)?;
            Ok(scan.entries.into_iter().map(|e| e.outcome.map_err(|e| e.to_string())).collect())
        } else {
            Ok(grid
                .par_iter()
                .map(|&v| {
                    let point = cfg.with_param(param, v).map_err(|e| format!("{e:#}"))?;
                    let point = Loaded { config: point, base: loaded.base.clone() };
                    certify_config(&point).map_err(|e| format!("{e:#}"))
                })
                .collect())
        }
    })?;
    let rows: Vec<Vec<String>> = grid.iter().zip(&outcomes).map(|(v, o)| sweep_row(param, *v, o)).collect();
    let dir = out_dir(cfg, out);
    let csv_path = dir.join("sweep.csv");
    let header: Vec<String> = SWEEP_COLUMNS.iter().map(|s| s.to_string()).collect();
    write_atomic(&csv_path, &table_csv(&header, &rows)?)?;

    let feasible: Vec<f64> =
        grid.iter().zip(&outcomes).filter(|(_, o)| matches!(o, Ok(c) if c.feasible)).map(|(v, _)| *v).collect();
    let mut s = Section::new("sweep");
    s.put("param", param).put("points", grid.len()).put("feasible_points", feasible.len());
    let best = grid
        .iter()
        .zip(&outcomes)
        .filter_map(|(v, o)| o.as_ref().ok().filter(|c| c.feasible).map(|c| (*v, c.lambda_min_xi)))
        .max_by(|a, b| a.1.total_cmp(&b.1));
    if let Some((v, xi)) = best {
        s.tagged("best_value", v, "feasible point with the largest lmin(Xi)").put("best_lambda_min_xi", xi);
    }
    let mut report = Report::new("sweep");
    report.push(s).push(numerics_section(cfg, None));
    report.config = Some(cfg.clone());
    let mut files = write_report(&report, &dir, "sweep")?;
    files.push(csv_path);
    Ok(Outcome { status: Status::Success, report, files })
}

pub fn audit(loaded: &Loaded, out: Option<&Path>, seed: u64) -> Result<Outcome> {
    let cfg = &loaded.config;
    let result = audit_hypotheses(&cfg.nonlinearity, &cfg.p_matrix(), cfg.numerics.audit_samples, seed)?;
    let mut checks = Section::new("audit");
    let mut verdicts = Section::new("verdicts");
    for c in &result.checks {
        let mut s = Section::new(c.name);
        s.put("statement", c.statement).put("applicable", c.applicable).put("evaluated", c.evaluated).put("violations", c.violations);
        if let Some(w) = &c.witness {
            let input: Vec<String> = w.input.iter().map(|v| crate::report::sig9(*v).to_string()).collect();
            s.put("witness_input", input.join(", ")).put("witness_lhs", w.lhs).put("witness_rhs", w.rhs);
        }
        checks.child(s);
        let v = if !c.applicable {
            "not_applicable"
        } else if c.passed() {
            "pass"
        } else {
            "violation"
        };
        verdicts.put(c.name, v);
    }
    checks.put("note", result.note);
    let mut report = Report::new("audit");
    report.push(checks).push(numerics_section(cfg, Some(seed))).push(verdicts);
    report.config = Some(cfg.clone());
    let files = write_report(&report, &out_dir(cfg, out), "audit")?;
    let failed: Vec<String> = result
        .violations()
        .map(|c| match &c.witness {
            Some(w) => format!("{} at {:?}: {} > {}", c.name, w.input, w.lhs, w.rhs),
            None => c.name.to_string(),
        })
        .collect();
    let status = if failed.is_empty() { Status::Success } else { Status::Violation(format!("violated: {}", failed.join("; "))) };
    Ok(Outcome { status, report, files })
}
