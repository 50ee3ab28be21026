//! Feasibility certificate for the cascade and the resulting ISS constants.
//!
//! [`certify`] assembles the quadratic-form matrices `Pi1`, `Pi2`, the decay
//! margins `omega` and `Omega`, the coupling matrix `Xi` and (general regime)
//! the pair `(tau1, tau2)`, and records a verdict for each condition.
//! [`corollary_constants`] and [`general_bound_constants`] turn a feasible
//! certificate into explicit bound constants.

pub mod audit;
pub mod example;
pub mod tau;

use nalgebra::{DMatrix, Matrix2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{CertError, Result};
use crate::functions::{Nonlinearity, VectorField};
use crate::green_bvp::{solve_p12_direct, CouplingProblem, P12Norms, P12Solution};
use crate::gridfn::{lp_norm, LpNorm};
use crate::linalg;

pub use audit::{audit_hypotheses, AuditCheck, AuditReport};
pub use example::{kappa_chi, kappa_chi_with_nodes, KappaChi};
pub use tau::{admissible_taus, solve_tau, solve_tau_equations, TauEquations, TauRoots};

/// Absolute margin for "positive definite" verdicts.
pub const PD_MARGIN: f64 = 1e-10;
/// Halvings of `epsilon` tried before giving up.
pub const MAX_EPSILON_HALVINGS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// `f = f0 + f1` with polynomial damping of order `2q`.
    General,
    /// `f` globally Lipschitz with `s f(s) <= sigma s^2`.
    GloballyLipschitz,
}

/// Constants of the nonlinearity hypotheses, plus the functions themselves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlinearitySpec {
    pub mode: Regime,
    pub sigma: f64,
    #[serde(default)]
    pub alpha: f64,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    #[serde(default)]
    pub c0: f64,
    #[serde(default)]
    pub zeta: f64,
    #[serde(default)]
    pub delta1: f64,
    #[serde(default)]
    pub delta2: f64,
    pub f: Nonlinearity,
    #[serde(rename = "X", default = "zero_field")]
    pub x: VectorField,
}

fn default_q() -> f64 {
    1.5
}

fn zero_field() -> VectorField {
    VectorField::Zero
}

impl NonlinearitySpec {
    pub fn globally_lipschitz(sigma: f64, lipschitz: f64, f: Nonlinearity) -> Self {
        Self {
            mode: Regime::GloballyLipschitz,
            sigma,
            alpha: 0.0,
            q: default_q(),
            lipschitz,
            c0: 0.0,
            zeta: 0.0,
            delta1: 0.0,
            delta2: 0.0,
            f,
            x: VectorField::Zero,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let named = [
            ("sigma", self.sigma),
            ("alpha", self.alpha),
            ("q", self.q),
            ("L", self.lipschitz),
            ("c0", self.c0),
            ("zeta", self.zeta),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
        ];
        for (name, v) in named {
            if !v.is_finite() {
                return Err(CertError::Config(format!("{name} must be finite")));
            }
            if name != "sigma" && v < 0.0 {
                return Err(CertError::Config(format!("{name} must be nonnegative, got {v}")));
            }
        }
        if self.mode == Regime::General {
            if !(self.alpha > 0.0) {
                return Err(CertError::Config("general regime needs alpha > 0".into()));
            }
            if self.q < 1.5 {
                return Err(CertError::Config(format!("general regime needs q >= 3/2, got {}", self.q)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    NotApplicable,
}

impl Verdict {
    fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_fail(self) -> bool {
        self == Verdict::Fail
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verdicts {
    pub pi1_positive: Verdict,
    pub omega_positive: Verdict,
    pub big_omega_positive: Verdict,
    pub xi_positive: Verdict,
    pub tau_ordered: Verdict,
}

impl Verdicts {
    pub fn labelled(&self) -> [(&'static str, Verdict); 5] {
        [
            ("pi1_positive", self.pi1_positive),
            ("omega_positive", self.omega_positive),
            ("big_omega_positive", self.big_omega_positive),
            ("xi_positive", self.xi_positive),
            ("tau_ordered", self.tau_ordered),
        ]
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.labelled().into_iter().filter(|(_, v)| v.is_fail()).map(|(l, _)| l).collect()
    }

    pub fn all_pass(&self) -> bool {
        self.labelled().iter().all(|(_, v)| !v.is_fail())
    }
}

#[derive(Debug, Clone)]
pub struct Certificate {
    pub mode: Regime,
    pub p12: P12Solution,
    pub l: f64,
    pub lipschitz: f64,
    pub d_l2: f64,
    pub p_spectral_norm: f64,
    pub pi1: Matrix2<f64>,
    pub pi2: Matrix2<f64>,
    pub lambda_min_pi1: f64,
    pub lambda_max_pi2: f64,
    pub omega: f64,
    pub big_omega: DMatrix<f64>,
    pub lambda_min_big_omega: f64,
    pub xi: Matrix2<f64>,
    pub lambda_min_xi: f64,
    pub tau: Option<TauRoots>,
    pub verdicts: Verdicts,
    pub feasible: bool,
}

impl Certificate {
    pub fn p12_norms(&self) -> P12Norms {
        self.p12.norms()
    }
}

/// `Pi1 = [[1, -|P12|], [-|P12|, lmin(P)]]`, `Pi2 = [[1, |P12|], [|P12|, lmax(P)]]`
/// with their extreme eigenvalues `(lmin(Pi1), lmax(Pi2))`.
pub fn build_pi_matrices(p12_l2: f64, p: &DMatrix<f64>) -> (Matrix2<f64>, Matrix2<f64>, f64, f64) {
    let ev = linalg::sym_eigenvalues(p);
    let (pmin, pmax) = (ev[0], ev[ev.len() - 1]);
    let pi1 = Matrix2::new(1.0, -p12_l2, -p12_l2, pmin);
    let pi2 = Matrix2::new(1.0, p12_l2, p12_l2, pmax);
    let (lmin1, _) = linalg::eig2_sym(1.0, -p12_l2, pmin);
    let (_, lmax2) = linalg::eig2_sym(1.0, p12_l2, pmax);
    (pi1, pi2, lmin1, lmax2)
}

/// `omega = 2 (pi^2 a^2 / l^2 - |D| |P12| - sigma)`; the sign is not enforced.
pub fn compute_omega(a: f64, l: f64, d_l2: f64, p12_l2: f64, sigma: f64) -> f64 {
    let pi = std::f64::consts::PI;
    2.0 * (pi * pi * a * a / (l * l) - d_l2 * p12_l2 - sigma)
}

/// `Omega = -(C^T P + P C + int (P12 B^T + B P12^T) dz)` and its smallest eigenvalue.
pub fn compute_big_omega(problem: &CouplingProblem, p12: &P12Solution) -> Result<(DMatrix<f64>, f64)> {
    if !p12.is_valid() {
        return Err(CertError::StaleSolution { residual: p12.residual_norm(), tolerance: p12.tolerance() });
    }
    if p12.values().grid() != problem.grid() || p12.values().components() != problem.n() {
        return Err(CertError::Domain("P12 does not belong to this problem".into()));
    }
    let n = problem.n();
    let w = problem.grid().simpson_weights();
    let pv = p12.values().values();
    let bv = problem.b().values();
    let mut cross = DMatrix::zeros(n, n);
    for j in 0..n {
        for k in 0..n {
            cross[(j, k)] = w.iter().enumerate().map(|(i, wi)| wi * pv[(i, j)] * bv[(i, k)]).sum::<f64>();
        }
    }
    let c = problem.c();
    let p = problem.p();
    let big_omega = -(c.transpose() * p + p * c + &cross + cross.transpose());
    let big_omega = linalg::symmetrize(&big_omega);
    let lmin = linalg::lambda_min(&big_omega);
    Ok((big_omega, lmin))
}

/// `Xi = [[omega, -L |P12|], [-L |P12|, lmin(Omega)]]` and its smallest eigenvalue.
pub fn compute_xi(omega: f64, lambda_min_big_omega: f64, lipschitz: f64, p12_l2: f64) -> (Matrix2<f64>, f64) {
    let off = -lipschitz * p12_l2;
    let xi = Matrix2::new(omega, off, off, lambda_min_big_omega);
    let (lmin, _) = linalg::eig2_sym(omega, off, lambda_min_big_omega);
    (xi, lmin)
}

/// Certificate using the fundamental-matrix solution for `P12`.
pub fn certify(problem: &CouplingProblem, spec: &NonlinearitySpec) -> Result<Certificate> {
    let p12 = solve_p12_direct(problem)?;
    certify_with(problem, spec, p12)
}

/// Certificate from an already computed `P12`.
pub fn certify_with(problem: &CouplingProblem, spec: &NonlinearitySpec, p12: P12Solution) -> Result<Certificate> {
    spec.validate()?;
    let norms = p12.norms();
    let l = problem.length();
    let d_l2 = lp_norm(problem.d(), LpNorm::L2)?;
    let (pi1, pi2, lambda_min_pi1, lambda_max_pi2) = build_pi_matrices(norms.l2, problem.p());
    let omega = compute_omega(problem.a(), l, d_l2, norms.l2, spec.sigma);
    let (big_omega, lambda_min_big_omega) = compute_big_omega(problem, &p12)?;
    let (xi, lambda_min_xi) = compute_xi(omega, lambda_min_big_omega, spec.lipschitz, norms.l2);

    let tau = match spec.mode {
        Regime::General => Some(admissible_taus(&TauEquations::new(spec, norms, l))?),
        Regime::GloballyLipschitz => None,
    };
    let verdicts = Verdicts {
        pi1_positive: Verdict::from_bool(lambda_min_pi1 > PD_MARGIN),
        omega_positive: Verdict::from_bool(omega > 0.0),
        big_omega_positive: Verdict::from_bool(lambda_min_big_omega > PD_MARGIN),
        xi_positive: Verdict::from_bool(lambda_min_xi > PD_MARGIN),
        tau_ordered: tau.map_or(Verdict::NotApplicable, |t| Verdict::from_bool(t.ordered())),
    };
    Ok(Certificate {
        mode: spec.mode,
        l,
        lipschitz: spec.lipschitz,
        d_l2,
        p_spectral_norm: linalg::spectral_norm(problem.p()),
        pi1,
        pi2,
        lambda_min_pi1,
        lambda_max_pi2,
        omega,
        big_omega,
        lambda_min_big_omega,
        xi,
        lambda_min_xi,
        tau,
        feasible: verdicts.all_pass(),
        verdicts,
        p12,
    })
}

/// Constants of the globally Lipschitz ISS estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorollaryConstants {
    pub k1: f64,
    pub k2: f64,
    pub theta: f64,
    pub beta: f64,
    pub lambda_min_pi1: f64,
    pub lambda_max_pi2: f64,
    pub lambda_min_xi: f64,
    pub l: f64,
}

/// Constants of the general-regime estimate at a fixed disturbance level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GeneralConstants {
    pub d_inf: f64,
    pub theta0: f64,
    pub epsilon: f64,
    pub tau: f64,
    pub psi0: f64,
    pub psi1: f64,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
    pub h4: f64,
    pub vartheta: f64,
    pub lambda_min_pi1: f64,
    pub lambda_max_pi2: f64,
    pub lambda_min_xi: f64,
    pub l: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum IssConstants {
    Corollary(CorollaryConstants),
    General(GeneralConstants),
}

/// Bounds on `|x(t)|` and `|u(., t)|_{L^2}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IssBound {
    pub x: f64,
    pub u: f64,
}

/// `rho(x0, phi) = (|x0|^2 + |phi|_{L^2}^2)^{1/2}`.
pub fn rho(x0_norm: f64, phi_l2: f64) -> f64 {
    x0_norm.hypot(phi_l2)
}

impl IssConstants {
    /// Decay rate of `V` (`theta` or `theta0`).
    pub fn decay(&self) -> f64 {
        match self {
            IssConstants::Corollary(c) => c.theta,
            IssConstants::General(g) => g.theta0,
        }
    }

    /// Coefficient `sqrt(lmax(Pi2) / lmin(Pi1))` in front of `rho e^{-decay t / 2}`.
    pub fn transient_coefficient(&self) -> f64 {
        let (lmin1, lmax2) = match self {
            IssConstants::Corollary(c) => (c.lambda_min_pi1, c.lambda_max_pi2),
            IssConstants::General(g) => (g.lambda_min_pi1, g.lambda_max_pi2),
        };
        (lmax2 / lmin1).sqrt()
    }

    /// Limit of `V` under the disturbance level: `e^{-decay t} V(0) + this`.
    pub fn lyapunov_offset(&self, d_inf: f64) -> Result<f64> {
        match self {
            IssConstants::Corollary(c) => Ok(2.0 * c.beta * c.lambda_max_pi2 / c.lambda_min_xi * d_inf * d_inf),
            IssConstants::General(g) => {
                g.check_level(d_inf)?;
                Ok(g.vartheta / g.theta0)
            }
        }
    }

    pub fn lyapunov_bound(&self, t: f64, v0: f64, d_inf: f64) -> Result<f64> {
        Ok((-self.decay() * t).exp() * v0 + self.lyapunov_offset(d_inf)?)
    }
}

impl GeneralConstants {
    fn check_level(&self, d_inf: f64) -> Result<()> {
        if d_inf > self.d_inf {
            return Err(CertError::Refused(format!(
                "constants were computed for d_inf = {}, cannot bound d_inf = {d_inf}",
                self.d_inf
            )));
        }
        Ok(())
    }
}

/// Explicit ISS bound at time `t` for initial size `rho` and disturbance level `d_inf`.
pub fn iss_bound(constants: &IssConstants, t: f64, d_inf: f64, rho: f64) -> Result<IssBound> {
    let transient = constants.transient_coefficient() * rho * (-constants.decay() * t / 2.0).exp();
    let (gain, l) = match constants {
        IssConstants::Corollary(c) => ((c.beta / (c.theta * c.lambda_min_pi1)).sqrt() * d_inf, c.l),
        IssConstants::General(g) => {
            g.check_level(d_inf)?;
            ((g.vartheta / (g.lambda_min_pi1 * g.theta0)).sqrt(), g.l)
        }
    };
    let x = transient + gain;
    Ok(IssBound { x, u: x + l.sqrt() * d_inf })
}

fn require_feasible(cert: &Certificate) -> Result<()> {
    if !cert.feasible {
        return Err(CertError::Refused(format!(
            "certificate is infeasible ({})",
            cert.verdicts.failures().join(", ")
        )));
    }
    Ok(())
}

/// `K1 = L + |D||P12|`, `K2 = L|P12| + |D||P|`, `theta = lmin(Xi) / (2 lmax(Pi2))`,
/// `beta = 2 l (K1^2 + K2^2) / lmin(Xi)`.
pub fn corollary_constants(cert: &Certificate) -> Result<CorollaryConstants> {
    if cert.mode != Regime::GloballyLipschitz {
        return Err(CertError::Refused("corollary constants need the globally Lipschitz regime".into()));
    }
    require_feasible(cert)?;
    let p12 = cert.p12.norms().l2;
    let k1 = cert.lipschitz + cert.d_l2 * p12;
    let k2 = cert.lipschitz * p12 + cert.d_l2 * cert.p_spectral_norm;
    Ok(CorollaryConstants {
        k1,
        k2,
        theta: cert.lambda_min_xi / (2.0 * cert.lambda_max_pi2),
        beta: 2.0 * cert.l * (k1 * k1 + k2 * k2) / cert.lambda_min_xi,
        lambda_min_pi1: cert.lambda_min_pi1,
        lambda_max_pi2: cert.lambda_max_pi2,
        lambda_min_xi: cert.lambda_min_xi,
        l: cert.l,
    })
}

/// `psi0(eps, d) = 2^{2q-3} c0 eps^{1-2q} d^{2q-1} / (2q-1) + (L + c0) d + 2^{2q-3} c0 d^{2q-1}`.
pub fn psi0(spec: &NonlinearitySpec, epsilon: f64, d_inf: f64) -> f64 {
    let q = spec.q;
    let c = 2f64.powf(2.0 * q - 3.0) * spec.c0;
    let dpow = d_inf.powf(2.0 * q - 1.0);
    let young = if dpow == 0.0 { 0.0 } else { c * epsilon.powf(1.0 - 2.0 * q) / (2.0 * q - 1.0) * dpow };
    young + (spec.lipschitz + spec.c0) * d_inf + c * dpow
}

/// `psi1(eps) = 2^{2q-3} c0 (2q-2)/(2q-1) eps^{(2q-1)/(2q-2)}`.
pub fn psi1(spec: &NonlinearitySpec, epsilon: f64) -> f64 {
    let q = spec.q;
    2f64.powf(2.0 * q - 3.0) * spec.c0 * (2.0 * q - 2.0) / (2.0 * q - 1.0)
        * epsilon.powf((2.0 * q - 1.0) / (2.0 * q - 2.0))
}

/// The four `H` coefficients of the dissipation inequality at `(epsilon, tau)`.
pub fn h_terms(
    cert: &Certificate,
    spec: &NonlinearitySpec,
    d_inf: f64,
    epsilon: f64,
    tau: f64,
) -> (f64, f64, f64, f64) {
    let q = spec.q;
    let n = cert.p12.norms();
    let eqs = TauEquations::new(spec, n, cert.l);
    let p0 = psi0(spec, epsilon, d_inf);
    let p1 = psi1(spec, epsilon);
    let sl = cert.l.sqrt();
    let h1 = 2.0 * sl * (p0 + d_inf * cert.d_l2 * n.l2);
    let h2 = 2.0 * sl * (n.l2 * p0 + cert.p_spectral_norm * cert.d_l2 * d_inf);
    let h3 = 2.0 * p1 * (1.0 + (2.0 * q - 1.0) / (2.0 * q) * n.linf) + eqs.decreasing(tau) - 2.0 * spec.alpha;
    let h4 = p1 * n.l1 / q + eqs.increasing(tau) - 2.0 * spec.delta1;
    (h1, h2, h3, h4)
}

/// Pick `tau` between `tau2` and `tau1`, shrink `epsilon` until `H3, H4 < 0`,
/// and return `theta0 = lmin(Xi) / (2 lmax(Pi2))`, `vartheta = (H1^2 + H2^2) / (2 lmin(Xi))`.
pub fn general_bound_constants(cert: &Certificate, spec: &NonlinearitySpec, d_inf: f64) -> Result<GeneralConstants> {
    if cert.mode != Regime::General {
        return Err(CertError::Refused("general constants need the general regime".into()));
    }
    require_feasible(cert)?;
    if !(d_inf.is_finite() && d_inf >= 0.0) {
        return Err(CertError::Config(format!("d_inf must be finite and nonnegative, got {d_inf}")));
    }
    let roots = cert.tau.expect("general certificates carry tau");
    let tau = match (roots.tau1.is_finite(), roots.tau2 > 0.0) {
        (true, true) => 0.5 * (roots.tau1 + roots.tau2),
        (false, true) => 2.0 * roots.tau2,
        (true, false) => 0.5 * roots.tau1,
        (false, false) => 1.0,
    };
    let mut epsilon = 1.0;
    for _ in 0..=MAX_EPSILON_HALVINGS {
        let (h1, h2, h3, h4) = h_terms(cert, spec, d_inf, epsilon, tau);
        if h3 < 0.0 && h4 < 0.0 {
            return Ok(GeneralConstants {
                d_inf,
                theta0: cert.lambda_min_xi / (2.0 * cert.lambda_max_pi2),
                epsilon,
                tau,
                psi0: psi0(spec, epsilon, d_inf),
                psi1: psi1(spec, epsilon),
                h1,
                h2,
                h3,
                h4,
                vartheta: (h1 * h1 + h2 * h2) / (2.0 * cert.lambda_min_xi),
                lambda_min_pi1: cert.lambda_min_pi1,
                lambda_max_pi2: cert.lambda_max_pi2,
                lambda_min_xi: cert.lambda_min_xi,
                l: cert.l,
            });
        }
        epsilon *= 0.5;
    }
    Err(CertError::NumericDegeneracy(format!(
        "no epsilon in [2^-{MAX_EPSILON_HALVINGS}, 1] makes H3 and H4 negative at tau = {tau}"
    )))
}

/// One grid point of a scalar `P = p I` scan.
#[derive(Debug, Clone)]
pub struct ScanEntry {
    pub p: f64,
    pub outcome: std::result::Result<Certificate, CertError>,
}

impl ScanEntry {
    pub fn feasible(&self) -> bool {
        matches!(&self.outcome, Ok(c) if c.feasible)
    }
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub entries: Vec<ScanEntry>,
    /// Index of the feasible entry with the largest `lmin(Xi)`.
    pub best: Option<usize>,
}

impl ScanReport {
    pub fn best_certificate(&self) -> Option<&Certificate> {
        self.best.and_then(|i| self.entries[i].outcome.as_ref().ok())
    }
}

/// Certify `P = p I` for every `p` in `grid` (in parallel) and keep the best.
#[allow(non_snake_case)]
pub fn scan_scalar_P(problem: &CouplingProblem, spec: &NonlinearitySpec, grid: &[f64]) -> Result<ScanReport> {
    if grid.is_empty() {
        return Err(CertError::Config("empty P grid".into()));
    }
    if let Some(p) = grid.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
        return Err(CertError::Config(format!("P grid values must be positive, got {p}")));
    }
    let n = problem.n();
    let entries: Vec<ScanEntry> = grid
        .par_iter()
        .map(|&p| {
            let outcome = problem
                .with_p(DMatrix::identity(n, n) * p)
                .and_then(|prob| certify(&prob, spec));
            ScanEntry { p, outcome }
        })
        .collect();
    let best = entries
        .iter()
        .enumerate()
        .filter_map(|(i, e)| match &e.outcome {
            Ok(c) if c.feasible => Some((i, c.lambda_min_xi)),
            _ => None,
        })
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i);
    Ok(ScanReport { entries, best })
}
