//! Sine-Galerkin simulation of the cascade with Dirichlet disturbances.
//!
//! The boundary data are lifted by the linear interpolant `H`, and
//! `u~ = u - H` is expanded in `e_j = sqrt(2/l) sin(pi j z / l)`:
//!
//! ```text
//! u~_t = a^2 u~_zz + Pi_N f(u~ + H) + Pi_N B^T x - Pi_N H_t
//! x'   = C x + X(x) + int D (u~ + H) dz
//! ```
//!
//! The diagonal diffusion is integrated exactly (ETDRK2) or implicitly
//! (IMEX Euler); everything else is explicit. The heat extension `w` of the
//! boundary data is advanced in lockstep so that `v = u - w` is available for
//! the Lyapunov function.

mod basis;
mod signal;

pub use basis::{project, GaussLegendre, SineBasis};
pub use signal::{lift, Disturbance, Signal, Waveform};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::certificate::NonlinearitySpec;
use crate::error::{CertError, Result};
use crate::functions::{Nonlinearity, Profile, VectorField};
use crate::green_bvp::P12Solution;
use crate::gridfn::{inner, SampledFn};
use crate::system::CascadeSystem;

/// Any coefficient or state norm above this is reported as divergence.
pub const DIVERGENCE_NORM: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Etdrk2,
    ImexEuler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub modes: usize,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default)]
    pub scheme: Scheme,
    /// Record every this many steps (the initial state is always recorded).
    #[serde(default = "one")]
    pub record_every: usize,
    /// Basis grid nodes; `4 * modes + 1` when absent.
    #[serde(default)]
    pub nodes: Option<usize>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

fn one() -> usize {
    1
}

impl SimConfig {
    pub fn new(modes: usize, dt: f64, t_end: f64) -> Self {
        Self { modes, dt, t_end, scheme: Scheme::Etdrk2, record_every: 1, nodes: None, snapshot_times: vec![] }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(CertError::Config(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(CertError::Config(format!("T must be nonnegative, got {}", self.t_end)));
        }
        if self.record_every == 0 {
            return Err(CertError::Config("record_every must be at least 1".into()));
        }
        Ok(())
    }

    /// Number of fixed steps; the run ends at `steps() * dt`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }

    pub fn basis(&self, a: f64, l: f64) -> Result<SineBasis> {
        SineBasis::with_nodes(self.modes, a, l, self.nodes.unwrap_or(4 * self.modes + 1))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralState {
    pub uhat: Vec<f64>,
    pub x: Vec<f64>,
    pub t: f64,
}

impl SpectralState {
    pub fn zero(modes: usize, n: usize) -> Self {
        Self { uhat: vec![0.0; modes], x: vec![0.0; n], t: 0.0 }
    }

    fn flat(&self) -> Vec<f64> {
        self.uhat.iter().chain(&self.x).copied().collect()
    }

    fn from_flat(y: Vec<f64>, modes: usize, t: f64) -> Self {
        let x = y[modes..].to_vec();
        let mut uhat = y;
        uhat.truncate(modes);
        Self { uhat, x, t }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub phi: Profile,
    pub x0: Vec<f64>,
}

impl InitialData {
    pub fn zero(n: usize) -> Self {
        Self { phi: Profile::constant(0.0), x0: vec![0.0; n] }
    }

    /// `rho = (|x0|^2 + |phi|_{L^2}^2)^{1/2}`.
    pub fn rho(&self, l: f64) -> f64 {
        let gl = GaussLegendre::new(8);
        let phi2 = gl.integrate(0.0, l, 256, |z| self.phi.eval(z).powi(2));
        (self.x0.iter().map(|v| v * v).sum::<f64>() + phi2).sqrt()
    }
}

/// Precomputed projections of the cascade on a sine basis.
#[derive(Debug, Clone)]
pub struct GalerkinModel {
    basis: SineBasis,
    c: DMatrix<f64>,
    f: Nonlinearity,
    field: VectorField,
    disturbance: Disturbance,
    /// `(B_k, e_j)`, `N x n`
    b_proj: DMatrix<f64>,
    /// `int D e_j`, `n x N`
    d_proj: DMatrix<f64>,
    /// `int D (l - z)/l` and `int D z/l`
    d_left: DVector<f64>,
    d_right: DVector<f64>,
    h_left: Vec<f64>,
    h_right: Vec<f64>,
    /// `(l - z)/l` on the basis grid
    ramp_nodes: Vec<f64>,
}

impl GalerkinModel {
    pub fn new(system: &CascadeSystem, spec: &NonlinearitySpec, disturbance: &Disturbance, basis: SineBasis) -> Result<Self> {
        system.validate()?;
        disturbance.validate()?;
        let n = system.n();
        spec.x.validate(n)?;
        if (basis.l() - system.l).abs() > 1e-12 * system.l || basis.a() != system.a {
            return Err(CertError::Config("basis does not match the system's a and l".into()));
        }
        let l = system.l;
        let modes = basis.modes();
        let mut b_proj = DMatrix::zeros(modes, n);
        let mut d_proj = DMatrix::zeros(n, modes);
        for k in 0..n {
            let pb = basis.project_fn(|z| system.b[k].eval(z));
            let pd = basis.project_fn(|z| system.d[k].eval(z));
            for j in 0..modes {
                b_proj[(j, k)] = pb[j];
                d_proj[(k, j)] = pd[j];
            }
        }
        let gl = GaussLegendre::new(8);
        let d_left = DVector::from_fn(n, |k, _| gl.integrate(0.0, l, 256, |z| system.d[k].eval(z) * (l - z) / l));
        let d_right = DVector::from_fn(n, |k, _| gl.integrate(0.0, l, 256, |z| system.d[k].eval(z) * z / l));
        let (h_left, h_right) = basis.lift_projections();
        let ramp_nodes = basis.grid().nodes().iter().map(|z| (l - z) / l).collect();
        Ok(Self {
            c: system.c.clone(),
            f: spec.f.clone(),
            field: spec.x.clone(),
            disturbance: disturbance.clone(),
            b_proj,
            d_proj,
            d_left,
            d_right,
            h_left,
            h_right,
            ramp_nodes,
            basis,
        })
    }

    pub fn basis(&self) -> &SineBasis {
        &self.basis
    }

    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    pub fn disturbance(&self) -> &Disturbance {
        &self.disturbance
    }

    pub fn initial_state(&self, init: &InitialData) -> Result<SpectralState> {
        if init.x0.len() != self.n() {
            return Err(CertError::Config(format!("x0 needs {} entries, got {}", self.n(), init.x0.len())));
        }
        init.phi.validate(self.basis.l())?;
        // H(., 0) = 0, so u~(0) = phi
        let uhat = self.basis.project_fn(|z| init.phi.eval(z));
        Ok(SpectralState { uhat, x: init.x0.clone(), t: 0.0 })
    }

    /// `H` on the basis grid at time `t`.
    pub fn lift_nodes(&self, t: f64) -> Vec<f64> {
        let d1 = self.disturbance.d1.value(t);
        let d2 = self.disturbance.d2.value(t);
        self.ramp_nodes.iter().map(|r| r * d1 + (1.0 - r) * d2).collect()
    }

    /// `-(H_t, e_j)`
    fn lift_rate_forcing(&self, t: f64, out: &mut [f64]) {
        let r1 = self.disturbance.d1.derivative(t);
        let r2 = self.disturbance.d2.derivative(t);
        for (j, o) in out.iter_mut().enumerate() {
            *o = -(r1 * self.h_left[j] + r2 * self.h_right[j]);
        }
    }

    /// Everything except the diagonal diffusion, as one flat vector
    /// `(uhat part, x part)`.
    fn nonlinear(&self, uhat: &[f64], x: &[f64], t: f64) -> Result<Vec<f64>> {
        let modes = self.basis.modes();
        let n = self.n();
        let mut out = vec![0.0; modes + n];
        let (nu, nx) = out.split_at_mut(modes);
        self.lift_rate_forcing(t, nu);
        if !self.f.is_zero() {
            let u = self.basis.reconstruct(uhat);
            let h = self.lift_nodes(t);
            let mut fv = vec![0.0; u.len()];
            for (i, (o, (ui, hi))) in fv.iter_mut().zip(u.iter().zip(&h)).enumerate() {
                *o = self.f.eval(ui + hi);
                if !o.is_finite() {
                    return Err(CertError::Domain(format!(
                        "f is not finite at z = {}, t = {t} (argument {})",
                        self.basis.grid().node(i),
                        ui + hi
                    )));
                }
            }
            let mut proj = vec![0.0; modes];
            self.basis.project_nodal(&fv, &mut proj);
            for (a, b) in nu.iter_mut().zip(&proj) {
                *a += b;
            }
        }
        let xv = DVector::from_column_slice(x);
        let bx = &self.b_proj * &xv;
        for (a, b) in nu.iter_mut().zip(bx.iter()) {
            *a += b;
        }
        let d1 = self.disturbance.d1.value(t);
        let d2 = self.disturbance.d2.value(t);
        let mut dx = &self.c * &xv + &self.d_proj * DVector::from_column_slice(uhat) + &self.d_left * d1 + &self.d_right * d2;
        if !self.field.is_zero() {
            let mut xf = vec![0.0; n];
            self.field.eval(x, &mut xf);
            if xf.iter().any(|v| !v.is_finite()) {
                return Err(CertError::Domain(format!("X is not finite at x = {x:?}, t = {t}")));
            }
            dx += DVector::from_vec(xf);
        }
        nx.copy_from_slice(dx.as_slice());
        Ok(out)
    }

    /// Full right-hand side `(d uhat/dt, dx/dt)`.
    pub fn rhs(&self, state: &SpectralState) -> Result<(Vec<f64>, Vec<f64>)> {
        let modes = self.basis.modes();
        let mut out = self.nonlinear(&state.uhat, &state.x, state.t)?;
        for (o, (mu, u)) in out.iter_mut().zip(self.basis.eigenvalues().iter().zip(&state.uhat)) {
            *o += mu * u;
        }
        let dx = out.split_off(modes);
        Ok((out, dx))
    }

    fn linear_diag(&self) -> Vec<f64> {
        self.basis.eigenvalues().iter().copied().chain(std::iter::repeat_n(0.0, self.n())).collect()
    }

    /// `|u(., t)|_{L^2}` for `u = u~ + H`, exact for the Galerkin approximation.
    pub fn u_l2(&self, uhat: &[f64], t: f64) -> f64 {
        let d1 = self.disturbance.d1.value(t);
        let d2 = self.disturbance.d2.value(t);
        let l = self.basis.l();
        let mut s: f64 = uhat.iter().map(|v| v * v).sum();
        if d1 != 0.0 || d2 != 0.0 {
            let cross: f64 = uhat
                .iter()
                .zip(self.h_left.iter().zip(&self.h_right))
                .map(|(u, (hl, hr))| u * (d1 * hl + d2 * hr))
                .sum();
            s += 2.0 * cross + l / 3.0 * (d1 * d1 + d1 * d2 + d2 * d2);
        }
        s.max(0.0).sqrt()
    }
}

/// `phi_1(z) = (e^z - 1)/z`, `phi_2(z) = (e^z - 1 - z)/z^2`.
fn phi12(z: f64) -> (f64, f64) {
    if z.abs() < 1e-4 {
        (1.0 + z / 2.0 + z * z / 6.0, 0.5 + z / 6.0 + z * z / 24.0)
    } else {
        let p1 = z.exp_m1() / z;
        (p1, (p1 - 1.0) / z)
    }
}

/// Per-component coefficients of one fixed-size step.
#[derive(Debug, Clone)]
struct Stepper {
    scheme: Scheme,
    dt: f64,
    e: Vec<f64>,
    p1: Vec<f64>,
    p2: Vec<f64>,
}

impl Stepper {
    fn new(scheme: Scheme, dt: f64, lambda: &[f64]) -> Self {
        let mut s = Self { scheme, dt, e: vec![], p1: vec![], p2: vec![] };
        for &lam in lambda {
            let z = lam * dt;
            match scheme {
                Scheme::Etdrk2 => {
                    let (p1, p2) = phi12(z);
                    s.e.push(z.exp());
                    s.p1.push(p1);
                    s.p2.push(p2);
                }
                Scheme::ImexEuler => s.e.push(1.0 / (1.0 - z)),
            }
        }
        s
    }

    fn advance<F>(&self, y: &[f64], t: f64, mut nl: F) -> Result<Vec<f64>>
    where
        F: FnMut(&[f64], f64) -> Result<Vec<f64>>,
    {
        let h = self.dt;
        let n0 = nl(y, t)?;
        match self.scheme {
            Scheme::ImexEuler => Ok(y.iter().zip(&n0).zip(&self.e).map(|((y, n), e)| (y + h * n) * e).collect()),
            Scheme::Etdrk2 => {
                let a: Vec<f64> = (0..y.len()).map(|i| self.e[i] * y[i] + h * self.p1[i] * n0[i]).collect();
                let n1 = nl(&a, t + h)?;
                Ok((0..y.len()).map(|i| a[i] + h * self.p2[i] * (n1[i] - n0[i])).collect())
            }
        }
    }
}

fn check_divergence(y: &[f64], t: f64, step: usize) -> Result<()> {
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm <= DIVERGENCE_NORM) {
        return Err(CertError::Divergence { t, step, norm });
    }
    Ok(())
}

/// One step of size `dt` from `state`.
pub fn step(model: &GalerkinModel, state: &SpectralState, dt: f64, scheme: Scheme) -> Result<SpectralState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(CertError::Config(format!("dt must be positive, got {dt}")));
    }
    let modes = model.basis.modes();
    let stepper = Stepper::new(scheme, dt, &model.linear_diag());
    let y = stepper.advance(&state.flat(), state.t, |y, t| model.nonlinear(&y[..modes], &y[modes..], t))?;
    let t = state.t + dt;
    check_divergence(&y, t, 1)?;
    Ok(SpectralState::from_flat(y, modes, t))
}

/// `V(v, x) = |v|^2 + 2 x^T int P12 v dz + x^T P x` on the grid of `p12`.
pub fn lyapunov_v(v: &SampledFn, x: &[f64], p12: &P12Solution, p: &DMatrix<f64>) -> Result<f64> {
    let pv = p12.values();
    if v.grid() != pv.grid() || v.components() != 1 {
        return Err(CertError::Domain("v must be scalar and share the grid of P12".into()));
    }
    let n = pv.components();
    if x.len() != n || p.nrows() != n || p.ncols() != n {
        return Err(CertError::Domain(format!("x and P must have dimension {n}")));
    }
    let w = v.grid().simpson_weights();
    let vals = v.values();
    let mut cross = 0.0;
    for (k, xk) in x.iter().enumerate() {
        cross += xk * w.iter().enumerate().map(|(i, wi)| wi * pv.at(i, k) * vals[(i, 0)]).sum::<f64>();
    }
    let xv = DVector::from_column_slice(x);
    Ok(inner(v, v)? + 2.0 * cross + xv.dot(&(p * &xv)))
}

/// Spectral form of [`lyapunov_v`] for `v = sum_j vhat_j e_j`.
#[derive(Debug, Clone)]
pub struct LyapunovWeight {
    /// `int P12_k e_j`, `n x N`
    p12_proj: DMatrix<f64>,
    p: DMatrix<f64>,
}

impl LyapunovWeight {
    pub fn new(p12: &P12Solution, p: &DMatrix<f64>, basis: &SineBasis) -> Result<Self> {
        let pv = p12.values();
        let g = pv.grid();
        if (g.length() - basis.l()).abs() > 1e-12 * basis.l() {
            return Err(CertError::Domain("P12 and basis live on different intervals".into()));
        }
        let n = pv.components();
        if p.nrows() != n || p.ncols() != n {
            return Err(CertError::Domain(format!("P must be {n}x{n}")));
        }
        let w = g.simpson_weights();
        let z = g.nodes();
        let p12_proj = DMatrix::from_fn(n, basis.modes(), |k, j| {
            (0..g.len()).map(|i| w[i] * pv.at(i, k) * basis.eval(j + 1, z[i])).sum()
        });
        Ok(Self { p12_proj, p: p.clone() })
    }

    pub fn eval(&self, vhat: &[f64], x: &[f64]) -> f64 {
        let xv = DVector::from_column_slice(x);
        let cross = xv.dot(&(&self.p12_proj * DVector::from_column_slice(vhat)));
        vhat.iter().map(|v| v * v).sum::<f64>() + 2.0 * cross + xv.dot(&(&self.p * &xv))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub uhat: Vec<f64>,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub u_l2: Vec<f64>,
    pub x_norm: Vec<f64>,
    /// `V(u - w, x)`, present when a Lyapunov weight was supplied.
    pub v: Option<Vec<f64>>,
    /// `max_z |w(z, t)|` of the heat extension.
    pub w_sup: Vec<f64>,
    pub snapshots: Vec<Snapshot>,
    pub final_state: SpectralState,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Advance the Galerkin system from `init` over `[0, T]`.
pub fn simulate(
    system: &CascadeSystem,
    spec: &NonlinearitySpec,
    disturbance: &Disturbance,
    init: &InitialData,
    config: &SimConfig,
    weight: Option<(&P12Solution, &DMatrix<f64>)>,
) -> Result<Trajectory> {
    config.validate()?;
    let basis = config.basis(system.a, system.l)?;
    let weight = weight.map(|(p12, p)| LyapunovWeight::new(p12, p, &basis)).transpose()?;
    let model = GalerkinModel::new(system, spec, disturbance, basis)?;
    run(&model, init, config, weight.as_ref())
}

pub fn run(model: &GalerkinModel, init: &InitialData, config: &SimConfig, weight: Option<&LyapunovWeight>) -> Result<Trajectory> {
    config.validate()?;
    let modes = model.basis.modes();
    let state = model.initial_state(init)?;
    let main = Stepper::new(config.scheme, config.dt, &model.linear_diag());
    let heat = Stepper::new(config.scheme, config.dt, model.basis.eigenvalues());

    let mut y = state.flat();
    let mut what = vec![0.0; modes];
    let mut traj = Trajectory {
        times: vec![],
        u_l2: vec![],
        x_norm: vec![],
        v: weight.map(|_| vec![]),
        w_sup: vec![],
        snapshots: vec![],
        final_state: state,
    };
    let mut pending: Vec<f64> = config.snapshot_times.clone();
    pending.sort_by(f64::total_cmp);
    pending.reverse();

    let steps = config.steps();
    for k in 0..=steps {
        let t = k as f64 * config.dt;
        if k > 0 {
            let t0 = (k - 1) as f64 * config.dt;
            y = main.advance(&y, t0, |y, t| model.nonlinear(&y[..modes], &y[modes..], t))?;
            check_divergence(&y, t, k)?;
            what = heat.advance(&what, t0, |_, t| {
                let mut f = vec![0.0; modes];
                model.lift_rate_forcing(t, &mut f);
                Ok(f)
            })?;
        }
        let (uhat, x) = y.split_at(modes);
        if k % config.record_every == 0 || k == steps {
            traj.times.push(t);
            traj.u_l2.push(model.u_l2(uhat, t));
            traj.x_norm.push(x.iter().map(|v| v * v).sum::<f64>().sqrt());
            if let (Some(w), Some(vs)) = (weight, traj.v.as_mut()) {
                let vhat: Vec<f64> = uhat.iter().zip(&what).map(|(u, w)| u - w).collect();
                vs.push(w.eval(&vhat, x));
            }
            traj.w_sup.push(heat_sup(model, &what, t));
        }
        while pending.last().is_some_and(|&s| s <= t + 0.5 * config.dt) {
            pending.pop();
            traj.snapshots.push(Snapshot { t, uhat: uhat.to_vec(), x: x.to_vec() });
        }
    }
    traj.final_state = SpectralState::from_flat(y, modes, steps as f64 * config.dt);
    Ok(traj)
}

fn heat_sup(model: &GalerkinModel, what: &[f64], t: f64) -> f64 {
    let w = model.basis.reconstruct(what);
    let h = model.lift_nodes(t);
    w.iter().zip(&h).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeatTrajectory {
    pub times: Vec<f64>,
    pub w_sup: Vec<f64>,
    /// Supremum of `|w|` over grid and recorded times.
    pub sup: f64,
    /// `w(., T)` on the basis grid.
    pub final_w: SampledFn,
}

/// The heat equation `w_t = a^2 w_zz` with `w(0) = d1`, `w(l) = d2`, `w(., 0) = 0`.
pub fn simulate_heat_extension(disturbance: &Disturbance, a: f64, l: f64, config: &SimConfig) -> Result<HeatTrajectory> {
    config.validate()?;
    let basis = config.basis(a, l)?;
    let system = CascadeSystem::scalar(a, l, 0.0, 0.0, 0.0);
    let spec = NonlinearitySpec::globally_lipschitz(0.0, 0.0, Nonlinearity::zero());
    let model = GalerkinModel::new(&system, &spec, disturbance, basis)?;
    let traj = run(&model, &InitialData::zero(1), config, None)?;
    // with f = B = D = 0 the main state is exactly w - H
    let t_end = traj.final_state.t;
    let w = model.basis.reconstruct(&traj.final_state.uhat);
    let h = model.lift_nodes(t_end);
    let vals: Vec<f64> = w.iter().zip(&h).map(|(a, b)| a + b).collect();
    let final_w = SampledFn::from_columns(*model.basis.grid(), &[vals])?;
    Ok(HeatTrajectory {
        sup: traj.w_sup.iter().copied().fold(0.0, f64::max),
        times: traj.times,
        w_sup: traj.w_sup,
        final_w,
    })
}
