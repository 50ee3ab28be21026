use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{CertError, Result};
use crate::gridfn::{Grid, SampledFn};

/// Gauss-Legendre points per panel for projections of known functions.
const GL_POINTS: usize = 8;

/// `e_j(z) = sqrt(2/l) sin(pi j z / l)`, `j = 1..=N`, tabulated on a grid of
/// at least `4N + 1` nodes.
///
/// Grid quadrature uses trapezoid weights: with vanishing endpoint values this
/// is the discrete sine transform, under which the tabulated basis is exactly
/// orthonormal for every `j, k < m - 1`.
#[derive(Debug, Clone)]
pub struct SineBasis {
    modes: usize,
    a: f64,
    grid: Grid,
    table: DMatrix<f64>,
    mu: Vec<f64>,
}

impl SineBasis {
    pub fn new(modes: usize, a: f64, l: f64) -> Result<Self> {
        Self::with_nodes(modes, a, l, 4 * modes + 1)
    }

    pub fn with_nodes(modes: usize, a: f64, l: f64, nodes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(CertError::Config("the basis needs at least one mode".into()));
        }
        if nodes < 4 * modes + 1 {
            return Err(CertError::Config(format!(
                "{nodes} nodes cannot resolve {modes} modes without aliasing (need >= {})",
                4 * modes + 1
            )));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(CertError::Config(format!("a must be positive, got {a}")));
        }
        let grid = Grid::new(l, nodes)?;
        let table = DMatrix::from_fn(nodes, modes, |i, j| basis_fn(j + 1, l, grid.node(i)));
        let mu = (1..=modes).map(|j| -(a * std::f64::consts::PI * j as f64 / l).powi(2)).collect();
        Ok(Self { modes, a, grid, table, mu })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn l(&self) -> f64 {
        self.grid.length()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `e_j(z_i)` with rows = nodes, columns = modes.
    pub fn table(&self) -> &DMatrix<f64> {
        &self.table
    }

    /// `mu_j = -a^2 (pi j / l)^2`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.mu
    }

    pub fn eval(&self, j: usize, z: f64) -> f64 {
        basis_fn(j, self.l(), z)
    }

    /// Nodal values of `sum_j c_j e_j`.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (j, &c) in coeffs.iter().enumerate() {
            if c != 0.0 {
                for (o, e) in out.iter_mut().zip(self.table.column(j).iter()) {
                    *o += c * e;
                }
            }
        }
        out
    }

    /// Trapezoid projection of nodal values on the basis grid.
    pub fn project_nodal(&self, values: &[f64], out: &mut [f64]) {
        let h = self.grid.spacing();
        let m = values.len();
        for (j, o) in out.iter_mut().enumerate() {
            let col = self.table.column(j);
            // the endpoint terms vanish since e_j(0) = e_j(l) = 0
            *o = h * (1..m - 1).map(|i| values[i] * col[i]).sum::<f64>();
        }
    }

    /// `(f, e_j)` by Gauss-Legendre panels, for `f` known everywhere.
    pub fn project_fn<F: Fn(f64) -> f64>(&self, f: F) -> Vec<f64> {
        let l = self.l();
        let rule = GaussLegendre::new(GL_POINTS);
        let panels = (4 * self.modes).max(64);
        let mut out = vec![0.0; self.modes];
        rule.composite(0.0, l, panels, |z, w| {
            let fz = f(z);
            if fz != 0.0 {
                for (j, o) in out.iter_mut().enumerate() {
                    *o += w * fz * basis_fn(j + 1, l, z);
                }
            }
        });
        out
    }

    /// `(H_1, e_j)` and `(H_2, e_j)` for `H_1 = (l - z)/l`, `H_2 = z/l`.
    pub fn lift_projections(&self) -> (Vec<f64>, Vec<f64>) {
        let l = self.l();
        let pi = std::f64::consts::PI;
        let c = (2.0 * l).sqrt() / pi;
        let left = (1..=self.modes).map(|j| c / j as f64).collect();
        let right = (1..=self.modes).map(|j| if j % 2 == 1 { c / j as f64 } else { -c / j as f64 }).collect();
        (left, right)
    }
}

fn basis_fn(j: usize, l: f64, z: f64) -> f64 {
    (2.0 / l).sqrt() * (std::f64::consts::PI * j as f64 * z / l).sin()
}

/// Project a scalar sampled function on the basis (trapezoid rule on the
/// sample grid). On the basis grid this is the exact discrete sine transform.
pub fn project(f: &SampledFn, basis: &SineBasis) -> Result<Vec<f64>> {
    if f.components() != 1 {
        return Err(CertError::Domain(format!("project needs a scalar function, got {} components", f.components())));
    }
    let g = f.grid();
    if (g.length() - basis.l()).abs() > 1e-12 * basis.l() {
        return Err(CertError::Domain("function and basis live on different intervals".into()));
    }
    let y = f.component(0);
    if g == basis.grid() {
        let mut out = vec![0.0; basis.modes()];
        basis.project_nodal(&y, &mut out);
        return Ok(out);
    }
    let h = g.spacing();
    let m = g.len();
    let l = basis.l();
    Ok((1..=basis.modes())
        .map(|j| {
            let ends = 0.5 * (y[0] * basis_fn(j, l, 0.0) + y[m - 1] * basis_fn(j, l, l));
            h * (ends + (1..m - 1).map(|i| y[i] * basis_fn(j, l, g.node(i))).sum::<f64>())
        })
        .collect())
}

/// Gauss-Legendre rule on `[-1, 1]` via the Golub-Welsch eigenproblem.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(points: usize) -> Self {
        let jacobi = DMatrix::from_fn(points, points, |i, j| {
            if i.abs_diff(j) == 1 {
                let k = i.max(j) as f64;
                k / (4.0 * k * k - 1.0).sqrt()
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(jacobi);
        let mut pairs: Vec<(f64, f64)> = (0..points)
            .map(|k| (eig.eigenvalues[k], 2.0 * eig.eigenvectors[(0, k)].powi(2)))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        Self { nodes: pairs.iter().map(|p| p.0).collect(), weights: pairs.iter().map(|p| p.1).collect() }
    }

    /// Visit `(z, weight)` for `panels` equal panels of `[lo, hi]`.
    pub fn composite<F: FnMut(f64, f64)>(&self, lo: f64, hi: f64, panels: usize, mut visit: F) {
        let width = (hi - lo) / panels as f64;
        for p in 0..panels {
            let mid = lo + (p as f64 + 0.5) * width;
            for (x, w) in self.nodes.iter().zip(&self.weights) {
                visit(mid + 0.5 * width * x, 0.5 * width * w);
            }
        }
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, lo: f64, hi: f64, panels: usize, f: F) -> f64 {
        let mut acc = 0.0;
        self.composite(lo, hi, panels, |z, w| acc += w * f(z));
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_exact_on_polynomials() {
        let gl = GaussLegendre::new(8);
        let v = gl.integrate(0.0, 2.0, 1, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        assert!((gl.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn discrete_orthonormality() {
        let b = SineBasis::new(12, 1.0, 2.0).unwrap();
        let mut c = vec![0.0; 12];
        for j in 0..12 {
            b.project_nodal(b.table().column(j).as_slice(), &mut c);
            for (k, v) in c.iter().enumerate() {
                let want = if k == j { 1.0 } else { 0.0 };
                assert!((v - want).abs() < 1e-12, "{j} {k} {v}");
            }
        }
    }

    #[test]
    fn lift_projections_match_quadrature() {
        let b = SineBasis::new(6, 1.0, 1.5).unwrap();
        let (h1, h2) = b.lift_projections();
        let q1 = b.project_fn(|z| (1.5 - z) / 1.5);
        let q2 = b.project_fn(|z| z / 1.5);
        for j in 0..6 {
            assert!((h1[j] - q1[j]).abs() < 1e-13);
            assert!((h2[j] - q2[j]).abs() < 1e-13);
        }
    }

    #[test]
    fn rejects_aliasing_grid() {
        assert!(SineBasis::with_nodes(10, 1.0, 1.0, 39).is_err());
        assert!(SineBasis::new(0, 1.0, 1.0).is_err());
    }
}
