//! The coupling weight `P12`: solution of
//!
//! ```text
//! a^2 P12''(z) + C^T P12(z) = -B(z) - P D(z),   P12(0) = P12(l) = 0
//! ```
//!
//! Two independent routes are provided. [`solve_p12_green`] integrates the
//! explicit Green's function (scalar `C`, or symmetric positive definite `C`
//! diagonalised mode by mode). [`solve_p12_direct`] works for any real `C`:
//! it propagates the first-order companion system across grid intervals with
//! matrix exponentials and fixes the unknown initial slope from `P12(l) = 0`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{CertError, Result};
use crate::gridfn::{lp_norm, Grid, LpNorm, SampledFn};
use crate::linalg;

/// Relative residual tolerance: `residual <= RESIDUAL_REL_TOL * (1 + |F|_inf)`.
pub const RESIDUAL_REL_TOL: f64 = 1e-6;
const SCALAR_RESONANCE_TOL: f64 = 1e-12;
const MATRIX_RESONANCE_TOL: f64 = 1e-10;
const MAX_BOUNDARY_CONDITION: f64 = 1e12;
const SYMMETRY_TOL: f64 = 1e-12;

/// Data of the coupling-weight boundary value problem.
#[derive(Debug, Clone)]
pub struct CouplingProblem {
    a: f64,
    c: DMatrix<f64>,
    p: DMatrix<f64>,
    b: SampledFn,
    d: SampledFn,
}

impl CouplingProblem {
    pub fn new(a: f64, c: DMatrix<f64>, p: DMatrix<f64>, b: SampledFn, d: SampledFn) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(CertError::Config(format!("diffusion coefficient a must be positive, got {a}")));
        }
        let n = c.nrows();
        if n == 0 || !c.is_square() {
            return Err(CertError::Config("C must be a non-empty square matrix".into()));
        }
        if p.shape() != (n, n) {
            return Err(CertError::Config(format!("P must be {n}x{n}")));
        }
        if !linalg::is_symmetric(&p, SYMMETRY_TOL * p.amax().max(1.0)) {
            return Err(CertError::Config("P must be symmetric".into()));
        }
        if linalg::lambda_min(&p) <= 0.0 {
            return Err(CertError::Config("P must be positive definite".into()));
        }
        if b.grid() != d.grid() {
            return Err(CertError::Config("B and D must share one grid".into()));
        }
        if b.components() != n || d.components() != n {
            return Err(CertError::Config(format!("B and D must have {n} components")));
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(CertError::Config("C has non-finite entries".into()));
        }
        Ok(Self { a, c, p, b, d })
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn b(&self) -> &SampledFn {
        &self.b
    }

    pub fn d(&self) -> &SampledFn {
        &self.d
    }

    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    pub fn grid(&self) -> &Grid {
        self.b.grid()
    }

    pub fn length(&self) -> f64 {
        self.grid().length()
    }

    /// Same problem with a different `P`.
    pub fn with_p(&self, p: DMatrix<f64>) -> Result<Self> {
        Self::new(self.a, self.c.clone(), p, self.b.clone(), self.d.clone())
    }

    /// `B(z) + P D(z)` sampled on the grid.
    pub fn b_plus_pd(&self) -> DMatrix<f64> {
        self.b.values() + self.d.values() * &self.p
    }

    /// `F(z) = -(B(z) + P D(z)) / a^2`.
    pub fn forcing(&self) -> SampledFn {
        let f = self.b_plus_pd() * (-1.0 / (self.a * self.a));
        SampledFn::new(*self.grid(), f).expect("finite data gives finite forcing")
    }

    pub fn residual_tolerance(&self) -> f64 {
        let f_inf = lp_norm(&self.forcing(), LpNorm::Inf).unwrap_or(f64::INFINITY);
        RESIDUAL_REL_TOL * (1.0 + f_inf)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelRegime {
    ScalarClosedForm,
    SymmetricPdMatrix,
}

/// Green's function of `P'' + (1/a^2) C P = F` with Dirichlet ends, stored as
/// per-eigenmode scalar kernels and the orthogonal eigenvector matrix.
#[derive(Debug, Clone)]
pub struct GreenKernel {
    regime: KernelRegime,
    l: f64,
    /// `lambda_k = sqrt(nu_k) / a` for the eigenvalues `nu_k` of `C`.
    lambdas: Vec<f64>,
    basis: DMatrix<f64>,
}

fn check_mode(nu: f64, a: f64, l: f64, tol: f64) -> Result<f64> {
    if !(nu.is_finite() && nu > 0.0) {
        return Err(CertError::UnsupportedRegime(format!(
            "Green kernel needs positive eigenvalues of C, found {nu}; use the direct solver"
        )));
    }
    let lambda = nu.sqrt() / a;
    let arg = lambda * l;
    // Small arguments are not resonant: the kernel tends to z(z'-l)/l.
    if arg >= std::f64::consts::FRAC_PI_2 && arg.sin().abs() < tol {
        return Err(CertError::Singular(format!(
            "sin(lambda l) vanishes for eigenvalue {nu} of C (lambda l = {arg})"
        )));
    }
    Ok(lambda)
}

pub fn green_kernel_scalar(c: f64, a: f64, l: f64) -> Result<GreenKernel> {
    if !(a > 0.0 && l > 0.0) {
        return Err(CertError::Config("a and l must be positive".into()));
    }
    let lambda = check_mode(c, a, l, SCALAR_RESONANCE_TOL)?;
    Ok(GreenKernel {
        regime: KernelRegime::ScalarClosedForm,
        l,
        lambdas: vec![lambda],
        basis: DMatrix::identity(1, 1),
    })
}

pub fn green_kernel_sym(c: &DMatrix<f64>, a: f64, l: f64) -> Result<GreenKernel> {
    if !(a > 0.0 && l > 0.0) {
        return Err(CertError::Config("a and l must be positive".into()));
    }
    if !linalg::is_symmetric(c, SYMMETRY_TOL * c.amax().max(1.0)) {
        return Err(CertError::UnsupportedRegime(
            "Green kernel requires symmetric C; use the direct solver".into(),
        ));
    }
    if c.nrows() == 1 {
        return green_kernel_scalar(c[(0, 0)], a, l);
    }
    let eig = SymmetricEigen::new(linalg::symmetrize(c));
    let lambdas = eig
        .eigenvalues
        .iter()
        .map(|&nu| check_mode(nu, a, l, MATRIX_RESONANCE_TOL))
        .collect::<Result<Vec<_>>>()?;
    Ok(GreenKernel {
        regime: KernelRegime::SymmetricPdMatrix,
        l,
        lambdas,
        basis: eig.eigenvectors,
    })
}

impl GreenKernel {
    pub fn regime(&self) -> KernelRegime {
        self.regime
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    /// Orthogonal matrix whose columns are the eigenvectors of `C`.
    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    /// Factors `(s(z), t(z), den)` of mode `k`, so that the scalar kernel is
    /// `s(z<) t(z>) / den` with `s = sin(lambda z)`, `t = sin(lambda (z - l))`,
    /// `den = lambda sin(lambda l)`.
    fn mode_factors(&self, k: usize, z: f64) -> (f64, f64, f64) {
        let lambda = self.lambdas[k];
        if lambda * self.l < 1e-6 {
            // limit lambda -> 0
            return (z, z - self.l, self.l);
        }
        ((lambda * z).sin(), (lambda * (z - self.l)).sin(), lambda * (lambda * self.l).sin())
    }

    /// Scalar kernel of mode `k`: `sin(lambda z<) sin(lambda (z> - l)) / (lambda sin(lambda l))`.
    pub fn mode_value(&self, k: usize, z: f64, xi: f64) -> f64 {
        let (lo, hi) = if xi <= z { (xi, z) } else { (z, xi) };
        let (s, _, den) = self.mode_factors(k, lo);
        let (_, t, _) = self.mode_factors(k, hi);
        s * t / den
    }

    /// The `n x n` matrix `G(z, xi)`.
    pub fn eval(&self, z: f64, xi: f64) -> DMatrix<f64> {
        let n = self.n();
        let diag = DVector::from_iterator(n, (0..n).map(|k| self.mode_value(k, z, xi)));
        &self.basis * DMatrix::from_diagonal(&diag) * self.basis.transpose()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    GreenFunction,
    FundamentalMatrix,
}

/// `L^1`, `L^2`, `L^inf` norms of `|P12(z)|`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct P12Norms {
    pub l1: f64,
    pub l2: f64,
    pub linf: f64,
}

#[derive(Debug, Clone)]
pub struct P12Solution {
    values: SampledFn,
    norms: P12Norms,
    residual: f64,
    tolerance: f64,
    method: SolveMethod,
}

impl P12Solution {
    fn assemble(values: DMatrix<f64>, problem: &CouplingProblem, method: SolveMethod) -> Result<Self> {
        let mut values = values;
        let last = values.nrows() - 1;
        values.row_mut(0).fill(0.0);
        values.row_mut(last).fill(0.0);
        let values = SampledFn::new(*problem.grid(), values)?;
        let norms = P12Norms {
            l1: lp_norm(&values, LpNorm::L1)?,
            l2: lp_norm(&values, LpNorm::L2)?,
            linf: lp_norm(&values, LpNorm::Inf)?,
        };
        let residual = residual_of(&values, problem);
        Ok(Self { values, norms, residual, tolerance: problem.residual_tolerance(), method })
    }

    pub fn values(&self) -> &SampledFn {
        &self.values
    }

    pub fn norms(&self) -> P12Norms {
        self.norms
    }

    pub fn residual_norm(&self) -> f64 {
        self.residual
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }

    /// Residual within the solver tolerance.
    pub fn is_valid(&self) -> bool {
        self.residual <= self.tolerance
    }

    pub fn method(&self) -> SolveMethod {
        self.method
    }
}

/// `P12` by quadrature of the Green's function representation.
///
/// Each grid node splits the integral at `xi = z`, where the kernel has a kink,
/// so both pieces are integrated with a smooth fourth-order rule.
pub fn solve_p12_green(problem: &CouplingProblem) -> Result<P12Solution> {
    let kernel = green_kernel_sym(problem.c(), problem.a(), problem.length())?;
    let grid = *problem.grid();
    let m = grid.len();
    let nodes = grid.nodes();
    // forcing in eigen-coordinates: column k holds q_k^T F(z)
    let f_modal = problem.forcing().values() * kernel.basis();
    let mut p_modal = DMatrix::zeros(m, kernel.n());
    let mut left = vec![0.0; m];
    let mut right = vec![0.0; m];
    for k in 0..kernel.n() {
        let factors: Vec<(f64, f64, f64)> = nodes.iter().map(|&z| kernel.mode_factors(k, z)).collect();
        // smooth extensions of s(xi) F(xi) and t(xi) F(xi) over the whole grid
        for j in 0..m {
            left[j] = factors[j].0 * f_modal[(j, k)];
            right[j] = factors[j].1 * f_modal[(j, k)];
        }
        let lower = grid.cumulative_integral(&left);
        let upper = grid.cumulative_integral(&right);
        for i in 1..m - 1 {
            let (s, t, den) = factors[i];
            p_modal[(i, k)] = (t * lower[i] + s * (upper[m - 1] - upper[i])) / den;
        }
    }
    let values = p_modal * kernel.basis().transpose();
    P12Solution::assemble(values, problem, SolveMethod::GreenFunction)
}

/// `Phi_k = int_0^h exp(A (h - s)) s^k / k! ds` for `k = 0..order`, via the
/// exponential of a block upper-triangular augmented matrix.
fn duhamel_blocks(a: &DMatrix<f64>, h: f64, order: usize) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
    let s = a.nrows();
    let blocks = order + 2;
    let mut aug = DMatrix::zeros(s * blocks, s * blocks);
    aug.view_mut((0, 0), (s, s)).copy_from(a);
    for b in 0..blocks - 1 {
        aug.view_mut((b * s, (b + 1) * s), (s, s)).fill_with_identity();
    }
    // top block row of exp(h M) is [exp(Ah), Phi_0, Phi_1, ...]
    let e = (aug * h).exp();
    let prop = e.view((0, 0), (s, s)).into_owned();
    let phis = (0..=order)
        .map(|k| e.view((0, (k + 1) * s), (s, s)).into_owned())
        .collect();
    (prop, phis)
}

/// Taylor coefficients `[g, g', g'', g''']` at node `i` of the interpolating
/// polynomial through a 4-node (3 on tiny grids) stencil around interval `i`.
struct Stencils {
    width: usize,
    /// For each start offset `start - i`, the matrix mapping stencil values to
    /// derivative coefficients.
    maps: Vec<(isize, DMatrix<f64>)>,
}

impl Stencils {
    fn new(m: usize, h: f64) -> Self {
        let width = m.min(4);
        let offsets: Vec<isize> = (-(width as isize - 2)..=0).collect();
        let maps = offsets
            .into_iter()
            .map(|off| {
                let v = DMatrix::from_fn(width, width, |r, c| ((off + r as isize) as f64 * h).powi(c as i32));
                let inv = v.try_inverse().expect("Vandermonde on distinct nodes");
                let mut fact = 1.0;
                let mut map = inv;
                for c in 0..width {
                    if c > 0 {
                        fact *= c as f64;
                    }
                    map.row_mut(c).scale_mut(fact);
                }
                (off, map)
            })
            .collect();
        Self { width, maps }
    }

    fn start(&self, i: usize, m: usize) -> usize {
        let want = i as isize - 1;
        want.clamp(0, (m - self.width) as isize) as usize
    }

    fn map(&self, start: usize, i: usize) -> &DMatrix<f64> {
        let off = start as isize - i as isize;
        &self.maps.iter().find(|(o, _)| *o == off).expect("stencil offset").1
    }
}

/// `P12` for arbitrary real `C` from the companion system
/// `Y' = A Y + [0; F]`, `A = [[0, I], [-C^T / a^2, 0]]`.
pub fn solve_p12_direct(problem: &CouplingProblem) -> Result<P12Solution> {
    let n = problem.n();
    let grid = *problem.grid();
    let m = grid.len();
    let h = grid.spacing();
    let a2 = problem.a() * problem.a();

    let mut comp = DMatrix::zeros(2 * n, 2 * n);
    comp.view_mut((0, n), (n, n)).fill_with_identity();
    comp.view_mut((n, 0), (n, n)).copy_from(&(problem.c().transpose() * (-1.0 / a2)));

    let stencils = Stencils::new(m, h);
    let (prop, phis) = duhamel_blocks(&comp, h, stencils.width - 1);
    // only the lower half of the state is forced
    let phis: Vec<DMatrix<f64>> = phis.iter().map(|p| p.columns(n, n).into_owned()).collect();

    let forcing = problem.forcing();
    let fv = forcing.values();

    // particular solution from Y(0) = 0 and slope response from Y(0) = [0; I]
    let mut y_part = vec![DVector::zeros(2 * n); m];
    let mut fund = vec![DMatrix::zeros(2 * n, n); m];
    fund[0].view_mut((n, 0), (n, n)).fill_with_identity();
    let mut stencil_vals = DMatrix::zeros(stencils.width, n);
    for i in 0..m - 1 {
        let start = stencils.start(i, m);
        for r in 0..stencils.width {
            stencil_vals.row_mut(r).copy_from(&fv.row(start + r));
        }
        let derivs = stencils.map(start, i) * &stencil_vals;
        let mut next = &prop * &y_part[i];
        for (k, phi) in phis.iter().enumerate() {
            next += phi * derivs.row(k).transpose();
        }
        y_part[i + 1] = next;
        fund[i + 1] = &prop * &fund[i];
    }

    let end = &fund[m - 1];
    let shoot = end.rows(0, n).into_owned();
    let (smax, smin) = linalg::singular_extremes(&shoot);
    // scalar resonance leaves cond(shoot) = 1, so also compare against the
    // size of the full fundamental matrix
    let mut full = DMatrix::zeros(2 * n, 2 * n);
    full.view_mut((0, n), (2 * n, n)).copy_from(end);
    full.view_mut((0, 0), (2 * n, n)).copy_from(&propagated_values(&prop, m - 1, n));
    let scale = linalg::spectral_norm(&full).max(smax);
    let cond = if smin > 0.0 { scale / smin } else { f64::INFINITY };
    if !(cond <= MAX_BOUNDARY_CONDITION) {
        return Err(CertError::Singular(format!(
            "boundary solve ill-conditioned (condition {cond:e}); det sin(C^(1/2) l / a) is near zero"
        )));
    }
    let rhs = -y_part[m - 1].rows(0, n).into_owned();
    let slope = shoot
        .clone()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| CertError::Singular("boundary solve failed".into()))?;

    let mut values = DMatrix::zeros(m, n);
    for i in 0..m {
        let p = y_part[i].rows(0, n) + fund[i].rows(0, n) * &slope;
        values.row_mut(i).copy_from(&p.transpose());
    }
    P12Solution::assemble(values, problem, SolveMethod::FundamentalMatrix)
}

// First n columns of prop^steps: response to Y(0) = [I; 0].
fn propagated_values(prop: &DMatrix<f64>, steps: usize, n: usize) -> DMatrix<f64> {
    let mut y = DMatrix::zeros(2 * n, n);
    y.view_mut((0, 0), (n, n)).fill_with_identity();
    for _ in 0..steps {
        y = prop * y;
    }
    y
}

/// Fourth-order second-difference weights (in units of `1/h^2`) at node `i`:
/// the centred five-point stencil, or a six-point one-sided stencil next to
/// a boundary. Grids with fewer than six nodes use the three-point stencil.
fn second_difference(i: usize, m: usize) -> (usize, &'static [f64]) {
    const THREE: [f64; 3] = [1.0, -2.0, 1.0];
    const FIVE: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];
    const LEFT: [f64; 6] = [10.0 / 12.0, -15.0 / 12.0, -4.0 / 12.0, 14.0 / 12.0, -6.0 / 12.0, 1.0 / 12.0];
    const RIGHT: [f64; 6] = [1.0 / 12.0, -6.0 / 12.0, 14.0 / 12.0, -4.0 / 12.0, -15.0 / 12.0, 10.0 / 12.0];
    if m < 6 {
        (i - 1, &THREE)
    } else if i == 1 {
        (0, &LEFT)
    } else if i == m - 2 {
        (m - 6, &RIGHT)
    } else {
        (i - 2, &FIVE)
    }
}

fn residual_of(values: &SampledFn, problem: &CouplingProblem) -> f64 {
    let h = values.grid().spacing();
    let a2 = problem.a() * problem.a();
    let p = values.values();
    let m = p.nrows();
    let ct = problem.c().transpose();
    let bpd = problem.b_plus_pd();
    let mut worst: f64 = 0.0;
    for i in 1..m - 1 {
        let (start, w) = second_difference(i, m);
        let mut second = p.row(start) * w[0];
        for (k, wk) in w.iter().enumerate().skip(1) {
            second += p.row(start + k) * *wk;
        }
        let r = (second * (a2 / (h * h))).transpose() + &ct * p.row(i).transpose() + bpd.row(i).transpose();
        worst = worst.max(r.norm());
    }
    worst
}

/// Max over interior nodes of `|a^2 D2 P12 + C^T P12 + B + P D|`, with `D2`
/// the fourth-order second difference of [`second_difference`].
pub fn p12_residual(solution: &P12Solution, problem: &CouplingProblem) -> Result<f64> {
    residual_from_samples(solution.values(), problem)
}

/// Residual of arbitrary samples (e.g. a manufactured or wrong solution).
pub fn residual_from_samples(values: &SampledFn, problem: &CouplingProblem) -> Result<f64> {
    if values.grid() != problem.grid() || values.components() != problem.n() {
        return Err(CertError::Domain("solution and problem grids differ".into()));
    }
    Ok(residual_of(values, problem))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn example(m: usize) -> CouplingProblem {
        let g = Grid::new(1.0, m).unwrap();
        CouplingProblem::new(
            1.0,
            DMatrix::from_element(1, 1, 0.25),
            DMatrix::from_element(1, 1, 1.0),
            SampledFn::scalar(g, |_| 1.0).unwrap(),
            SampledFn::scalar(g, |_| -5.0).unwrap(),
        )
        .unwrap()
    }

    fn closed_form(z: f64) -> f64 {
        let lambda: f64 = 0.5;
        (1.0 - 5.0) / 0.25 * ((lambda * z).cos() - 1.0 + (lambda / 2.0).tan() * (lambda * z).sin())
    }

    #[test]
    fn validation() {
        let g = Grid::new(1.0, 5).unwrap();
        let one = SampledFn::scalar(g, |_| 1.0).unwrap();
        let bad_p = CouplingProblem::new(
            1.0,
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, -1.0),
            one.clone(),
            one.clone(),
        );
        assert!(matches!(bad_p, Err(CertError::Config(_))));
        let bad_a = CouplingProblem::new(
            0.0,
            DMatrix::from_element(1, 1, 1.0),
            DMatrix::from_element(1, 1, 1.0),
            one.clone(),
            one,
        );
        assert!(matches!(bad_a, Err(CertError::Config(_))));
    }

    #[test]
    fn scalar_kernel_dirichlet_and_continuity() {
        let k = green_kernel_scalar(0.25, 1.0, 1.0).unwrap();
        for xi in [0.0, 0.2, 0.5, 0.9, 1.0] {
            assert_eq!(k.mode_value(0, 0.0, xi), 0.0);
            assert!(k.mode_value(0, 1.0, xi).abs() < 1e-16);
            let below = k.mode_value(0, xi - 1e-9, xi);
            let above = k.mode_value(0, xi + 1e-9, xi);
            assert!((below - above).abs() < 1e-8);
        }
    }

    #[test]
    fn resonance_detected() {
        let pi = std::f64::consts::PI;
        // lambda l = pi
        let err = green_kernel_scalar(pi * pi, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, CertError::Singular(_)));
        let c = DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 4.0 * pi * pi]));
        let err = green_kernel_sym(&c, 1.0, 1.0).unwrap_err();
        assert!(matches!(err, CertError::Singular(ref s) if s.contains("eigenvalue")));
        let g = Grid::new(1.0, 201).unwrap();
        let one = SampledFn::scalar(g, |_| 1.0).unwrap();
        let p = CouplingProblem::new(
            1.0,
            DMatrix::from_element(1, 1, pi * pi),
            DMatrix::from_element(1, 1, 1.0),
            one.clone(),
            one,
        )
        .unwrap();
        assert!(matches!(solve_p12_direct(&p), Err(CertError::Singular(_))));
    }

    #[test]
    fn non_symmetric_c_is_unsupported_by_green() {
        let g = Grid::new(1.0, 11).unwrap();
        let b = SampledFn::vector(g, 2, |_, o| o.fill(1.0)).unwrap();
        let p = CouplingProblem::new(
            1.0,
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, -0.5]),
            DMatrix::identity(2, 2),
            b.clone(),
            b,
        )
        .unwrap();
        assert!(matches!(solve_p12_green(&p), Err(CertError::UnsupportedRegime(_))));
    }

    #[test]
    fn example_matches_closed_form_both_routes() {
        let prob = example(401);
        for sol in [solve_p12_green(&prob).unwrap(), solve_p12_direct(&prob).unwrap()] {
            let worst = prob
                .grid()
                .nodes()
                .iter()
                .enumerate()
                .map(|(i, z)| (sol.values().at(i, 0) - closed_form(*z)).abs())
                .fold(0.0, f64::max);
            assert!(worst < 1e-7, "{:?}: {worst}", sol.method());
            assert!((sol.norms().l2 - 0.374626).abs() < 1e-5);
            assert!(sol.is_valid());
            assert!(sol.residual_norm() <= 1e-5);
        }
    }

    #[test]
    fn zero_forcing_gives_zero() {
        let g = Grid::new(1.0, 51).unwrap();
        let z = SampledFn::zeros(g, 1);
        let prob = CouplingProblem::new(
            1.0,
            DMatrix::from_element(1, 1, 0.25),
            DMatrix::from_element(1, 1, 1.0),
            z.clone(),
            z,
        )
        .unwrap();
        for sol in [solve_p12_green(&prob).unwrap(), solve_p12_direct(&prob).unwrap()] {
            assert!(sol.values().values().iter().all(|v| *v == 0.0));
            assert_eq!(sol.residual_norm(), 0.0);
        }
    }

    #[test]
    fn manufactured_quadratic_residual() {
        // P12 = z(1 - z), P12'' = -2, C = 3, P = 1, D = 0: B = 2 - 3 z(1 - z)
        let g = Grid::new(1.0, 41).unwrap();
        let b = SampledFn::scalar(g, |z| 2.0 - 3.0 * z * (1.0 - z)).unwrap();
        let prob = CouplingProblem::new(
            1.0,
            DMatrix::from_element(1, 1, 3.0),
            DMatrix::from_element(1, 1, 1.0),
            b,
            SampledFn::zeros(g, 1),
        )
        .unwrap();
        let exact = SampledFn::scalar(g, |z| z * (1.0 - z)).unwrap();
        assert!(residual_from_samples(&exact, &prob).unwrap() <= 1e-12);
        let zero = SampledFn::zeros(g, 1);
        let h = g.spacing();
        let max_b = 2.0 - 3.0 * h * (1.0 - h);
        assert!((residual_from_samples(&zero, &prob).unwrap() - max_b).abs() < 1e-12);
    }

    #[test]
    fn direct_solver_handles_three_node_grid() {
        let g = Grid::new(1.0, 3).unwrap();
        let one = SampledFn::scalar(g, |_| 1.0).unwrap();
        let prob = CouplingProblem::new(
            1.0,
            DMatrix::from_element(1, 1, 0.25),
            DMatrix::from_element(1, 1, 1.0),
            one.clone(),
            one,
        )
        .unwrap();
        let sol = solve_p12_direct(&prob).unwrap();
        assert_eq!(sol.values().at(0, 0), 0.0);
        assert_eq!(sol.values().at(2, 0), 0.0);
        assert!(sol.values().at(1, 0).is_finite());
    }
}
