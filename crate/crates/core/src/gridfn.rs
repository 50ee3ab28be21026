//! Uniform-grid functions on `[0, l]`.
//!
//! Every integral in the crate goes through the composite Simpson rule on an
//! odd number of equally spaced nodes. Vector-valued functions are stored as an
//! `m × k` matrix (one row per node) and their `L^p` norms take the euclidean
//! norm pointwise before integrating.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{CertError, Result};

/// Default node count for spatial grids.
pub const DEFAULT_NODES: usize = 401;

/// Equally spaced nodes `z_i = i * l / (m - 1)` on `[0, l]`, `m` odd.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    l: f64,
    m: usize,
}

impl Grid {
    pub fn new(l: f64, m: usize) -> Result<Self> {
        if !(l.is_finite() && l > 0.0) {
            return Err(CertError::Config(format!("interval length must be positive, got {l}")));
        }
        if m < 3 || m % 2 == 0 {
            return Err(CertError::Config(format!(
                "grid needs an odd node count >= 3 for Simpson quadrature, got {m}"
            )));
        }
        Ok(Self { l, m })
    }

    pub fn length(&self) -> f64 {
        self.l
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.l / (self.m - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i == self.m - 1 {
            self.l
        } else {
            i as f64 * self.spacing()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.node(i)).collect()
    }

    /// Grid with `2m - 1` nodes: every interval halved.
    pub fn refined(&self) -> Self {
        Self { l: self.l, m: 2 * self.m - 1 }
    }

    /// Composite Simpson weights; they are positive and sum to `l`.
    pub fn simpson_weights(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.m)
            .map(|i| {
                let c = if i == 0 || i == self.m - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect()
    }

    /// Integral of the samples `y` over `[z_from, z_to]` (node indices, `from <= to`).
    ///
    /// Fourth-order for any interval count: Simpson on even counts, Simpson plus
    /// a trailing 3/8 panel on odd counts, and an interpolating cubic for a
    /// single interval. Exact on cubics.
    pub fn partial_integral(&self, y: &[f64], from: usize, to: usize) -> f64 {
        debug_assert_eq!(y.len(), self.m);
        debug_assert!(from <= to && to < self.m);
        let h = self.spacing();
        let n = to - from;
        match n {
            0 => 0.0,
            1 => single_interval(y, from, h),
            _ if n % 2 == 0 => simpson(y, from, to, h),
            _ => {
                let split = to - 3;
                simpson(y, from, split, h)
                    + 3.0 * h / 8.0 * (y[split] + 3.0 * y[split + 1] + 3.0 * y[split + 2] + y[to])
            }
        }
    }
    /// Running integrals `c[i] = int_0^{z_i} y` from one fourth-order cubic
    /// rule per interval, so the error varies smoothly from node to node.
    pub fn cumulative_integral(&self, y: &[f64]) -> Vec<f64> {
        debug_assert_eq!(y.len(), self.m);
        let h = self.spacing();
        let m = self.m;
        let mut out = vec![0.0; m];
        for i in 0..m - 1 {
            let piece = if i == 0 || i + 2 >= m {
                single_interval(y, i, h)
            } else {
                h / 24.0 * (-y[i - 1] + 13.0 * y[i] + 13.0 * y[i + 1] - y[i + 2])
            };
            out[i + 1] = out[i] + piece;
        }
        out
    }
}

fn simpson(y: &[f64], from: usize, to: usize, h: f64) -> f64 {
    let mut acc = 0.0;
    let mut i = from;
    while i < to {
        acc += y[i] + 4.0 * y[i + 1] + y[i + 2];
        i += 2;
    }
    acc * h / 3.0
}

// Integral over [z_i, z_{i+1}] of the cubic (or quadratic on a 3-node grid)
// through the nearest nodes.
fn single_interval(y: &[f64], i: usize, h: f64) -> f64 {
    let m = y.len();
    if m < 4 {
        return if i == 0 {
            h / 12.0 * (5.0 * y[0] + 8.0 * y[1] - y[2])
        } else {
            h / 12.0 * (-y[0] + 8.0 * y[1] + 5.0 * y[2])
        };
    }
    if i + 3 < m {
        h / 24.0 * (9.0 * y[i] + 19.0 * y[i + 1] - 5.0 * y[i + 2] + y[i + 3])
    } else {
        h / 24.0 * (y[i - 2] - 5.0 * y[i - 1] + 19.0 * y[i] + 9.0 * y[i + 1])
    }
}

/// Which `L^p` norm to take.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpNorm {
    L1,
    L2,
    /// General finite exponent, used for `L^{2q}`.
    Lp(f64),
    Inf,
}

/// A function sampled on a [`Grid`]: `m` rows, `k` components per row.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFn {
    grid: Grid,
    values: DMatrix<f64>,
}

impl SampledFn {
    pub fn new(grid: Grid, values: DMatrix<f64>) -> Result<Self> {
        if values.nrows() != grid.len() {
            return Err(CertError::Domain(format!(
                "sample rows ({}) do not match grid nodes ({})",
                values.nrows(),
                grid.len()
            )));
        }
        if values.ncols() == 0 {
            return Err(CertError::Domain("sampled function needs at least one component".into()));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let row = pos % grid.len();
            return Err(CertError::Domain(format!(
                "non-finite sample at z = {}",
                grid.node(row)
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid, k: usize) -> Self {
        Self { grid, values: DMatrix::zeros(grid.len(), k.max(1)) }
    }

    pub fn scalar<F: Fn(f64) -> f64>(grid: Grid, f: F) -> Result<Self> {
        let values = DMatrix::from_iterator(grid.len(), 1, grid.nodes().into_iter().map(f));
        Self::new(grid, values)
    }

    /// Vector-valued sampling; `f(z, out)` fills the `k` components at `z`.
    pub fn vector<F: Fn(f64, &mut [f64])>(grid: Grid, k: usize, f: F) -> Result<Self> {
        let mut values = DMatrix::zeros(grid.len(), k);
        let mut buf = vec![0.0; k];
        for (i, z) in grid.nodes().into_iter().enumerate() {
            f(z, &mut buf);
            for (j, v) in buf.iter().enumerate() {
                values[(i, j)] = *v;
            }
        }
        Self::new(grid, values)
    }

    pub fn from_columns(grid: Grid, columns: &[Vec<f64>]) -> Result<Self> {
        let k = columns.len();
        if k == 0 {
            return Err(CertError::Domain("sampled function needs at least one component".into()));
        }
        for c in columns {
            if c.len() != grid.len() {
                return Err(CertError::Domain(format!(
                    "column length {} does not match grid nodes {}",
                    c.len(),
                    grid.len()
                )));
            }
        }
        let values = DMatrix::from_fn(grid.len(), k, |i, j| columns[j][i]);
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn components(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn into_values(self) -> DMatrix<f64> {
        self.values
    }

    pub fn component(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    /// Value of component `j` at node `i`.
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    /// Euclidean norm of the value at each node.
    pub fn pointwise_norms(&self) -> Vec<f64> {
        self.values.row_iter().map(|r| r.norm()).collect()
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Result<Self> {
        Self::new(self.grid, self.values.map(f))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { grid: self.grid, values: &self.values * c }
    }

    pub fn add(&self, other: &SampledFn) -> Result<Self> {
        same_shape(self, other)?;
        Ok(Self { grid: self.grid, values: &self.values + &other.values })
    }

    fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(CertError::Domain("non-finite samples".into()))
        }
    }
}

fn same_shape(f: &SampledFn, g: &SampledFn) -> Result<()> {
    if f.grid != g.grid {
        return Err(CertError::Domain("functions live on different grids".into()));
    }
    if f.components() != g.components() {
        return Err(CertError::Domain(format!(
            "component counts differ ({} vs {})",
            f.components(),
            g.components()
        )));
    }
    Ok(())
}

fn weighted_sum(w: &[f64], y: impl Iterator<Item = f64>) -> f64 {
    w.iter().zip(y).map(|(w, y)| w * y).sum()
}

/// Composite Simpson approximation of the integral of a scalar function.
pub fn integrate(f: &SampledFn) -> Result<f64> {
    if f.components() != 1 {
        return Err(CertError::Domain(format!(
            "integrate expects a scalar function, got {} components",
            f.components()
        )));
    }
    f.check_finite()?;
    Ok(weighted_sum(&f.grid.simpson_weights(), f.values.iter().copied()))
}

/// Componentwise integral of a vector-valued function.
pub fn integrate_components(f: &SampledFn) -> Vec<f64> {
    let w = f.grid.simpson_weights();
    f.values.column_iter().map(|c| weighted_sum(&w, c.iter().copied())).collect()
}

pub fn lp_norm(f: &SampledFn, p: LpNorm) -> Result<f64> {
    f.check_finite()?;
    let norms = f.pointwise_norms();
    match p {
        LpNorm::Inf => Ok(norms.into_iter().fold(0.0, f64::max)),
        LpNorm::L1 => Ok(weighted_sum(&f.grid.simpson_weights(), norms.into_iter())),
        LpNorm::L2 => {
            let s = weighted_sum(&f.grid.simpson_weights(), norms.into_iter().map(|v| v * v));
            Ok(s.max(0.0).sqrt())
        }
        LpNorm::Lp(p) => {
            if !(p.is_finite() && p >= 1.0) {
                return Err(CertError::Config(format!("unsupported norm exponent p = {p}")));
            }
            let s = weighted_sum(&f.grid.simpson_weights(), norms.into_iter().map(|v| v.powf(p)));
            Ok(s.max(0.0).powf(1.0 / p))
        }
    }
}

/// `L^2` inner product summed over components.
pub fn inner(f: &SampledFn, g: &SampledFn) -> Result<f64> {
    same_shape(f, g)?;
    let w = f.grid.simpson_weights();
    let mut acc = 0.0;
    for (cf, cg) in f.values.column_iter().zip(g.values.column_iter()) {
        acc += weighted_sum(&w, cf.iter().zip(cg.iter()).map(|(a, b)| a * b));
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn sine_mode(grid: Grid, j: usize) -> SampledFn {
        let l = grid.length();
        SampledFn::scalar(grid, |z| (2.0 / l).sqrt() * (PI * j as f64 * z / l).sin()).unwrap()
    }

    #[test]
    fn rejects_even_or_tiny_grids() {
        assert!(matches!(Grid::new(1.0, 4), Err(CertError::Config(_))));
        assert!(matches!(Grid::new(1.0, 1), Err(CertError::Config(_))));
        assert!(matches!(Grid::new(0.0, 5), Err(CertError::Config(_))));
        let g = Grid::new(2.0, 5).unwrap();
        assert_eq!(g.nodes(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn integrates_sine() {
        let g = Grid::new(1.0, 201).unwrap();
        let f = SampledFn::scalar(g, |z| (PI * z).sin()).unwrap();
        assert!((integrate(&f).unwrap() - 2.0 / PI).abs() < 1e-9);
        assert_eq!(integrate(&SampledFn::zeros(g, 1)).unwrap(), 0.0);
    }

    #[test]
    fn simpson_exact_on_cubics() {
        let g = Grid::new(1.0, 11).unwrap();
        let f = SampledFn::scalar(g, |z| z * z * z).unwrap();
        assert!((integrate(&f).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn cumulative_integral_exact_on_cubics() {
        let g = Grid::new(2.0, 9).unwrap();
        let y: Vec<f64> = g.nodes().iter().map(|z| 1.0 - 2.0 * z + z * z * z).collect();
        let anti = |z: f64| z - z * z + z.powi(4) / 4.0;
        for (i, c) in g.cumulative_integral(&y).iter().enumerate() {
            assert!((c - anti(g.node(i))).abs() < 1e-13);
        }
    }

    #[test]
    fn partial_integral_exact_on_cubics() {
        let g = Grid::new(2.0, 9).unwrap();
        let y: Vec<f64> = g.nodes().iter().map(|z| 1.0 - 2.0 * z + z * z * z).collect();
        let anti = |z: f64| z - z * z + z.powi(4) / 4.0;
        for from in 0..9 {
            for to in from..9 {
                let exact = anti(g.node(to)) - anti(g.node(from));
                let got = g.partial_integral(&y, from, to);
                assert!((got - exact).abs() < 1e-13, "[{from},{to}] {got} vs {exact}");
            }
        }
        // 3-node grid falls back to the quadratic rule.
        let g3 = Grid::new(1.0, 3).unwrap();
        let y3: Vec<f64> = g3.nodes().iter().map(|z| z * z).collect();
        assert!((g3.partial_integral(&y3, 0, 1) - 0.125 / 3.0).abs() < 1e-15);
        assert!((g3.partial_integral(&y3, 1, 2) - (1.0 - 0.125) / 3.0).abs() < 1e-15);
    }

    #[test]
    fn rejects_vector_integrand_and_bad_exponent() {
        let g = Grid::new(1.0, 5).unwrap();
        let f = SampledFn::zeros(g, 2);
        assert!(matches!(integrate(&f), Err(CertError::Domain(_))));
        assert!(matches!(lp_norm(&f, LpNorm::Lp(0.5)), Err(CertError::Config(_))));
    }

    #[test]
    fn non_finite_samples_rejected() {
        let g = Grid::new(1.0, 5).unwrap();
        let err = SampledFn::scalar(g, |z| if z > 0.6 { f64::NAN } else { z }).unwrap_err();
        assert!(matches!(err, CertError::Domain(_)));
    }

    #[test]
    fn norms() {
        let g = Grid::new(1.0, 401).unwrap();
        let f = SampledFn::scalar(g, |z| 2f64.sqrt() * (PI * z).sin()).unwrap();
        assert!((lp_norm(&f, LpNorm::L2).unwrap() - 1.0).abs() < 1e-9);
        let d = SampledFn::scalar(g, |_| -5.0).unwrap();
        assert!((lp_norm(&d, LpNorm::L2).unwrap() - 5.0).abs() < 1e-12);
        let lin = SampledFn::scalar(g, |z| z).unwrap();
        assert_eq!(lp_norm(&lin, LpNorm::Inf).unwrap(), 1.0);
        assert_eq!(lp_norm(&SampledFn::zeros(g, 3), LpNorm::L1).unwrap(), 0.0);
    }

    #[test]
    fn vector_norm_is_pointwise_euclidean() {
        let g = Grid::new(1.0, 101).unwrap();
        let f = SampledFn::vector(g, 2, |_, out| {
            out[0] = 3.0;
            out[1] = 4.0;
        })
        .unwrap();
        assert!((lp_norm(&f, LpNorm::L1).unwrap() - 5.0).abs() < 1e-12);
        assert!((lp_norm(&f, LpNorm::Lp(3.0)).unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn sine_basis_orthonormal() {
        let g = Grid::new(1.0, 401).unwrap();
        let e1 = sine_mode(g, 1);
        let e2 = sine_mode(g, 2);
        assert!(inner(&e1, &e2).unwrap().abs() < 1e-10);
        assert!((inner(&e1, &e1).unwrap() - 1.0).abs() < 1e-10);
        assert_eq!(inner(&e1, &SampledFn::zeros(g, 1)).unwrap(), 0.0);
        let other = Grid::new(1.0, 201).unwrap();
        assert!(matches!(inner(&e1, &sine_mode(other, 1)), Err(CertError::Domain(_))));
    }

    #[test]
    fn fourth_order_convergence() {
        let exact = 2.0 / PI;
        let err = |m| {
            let g = Grid::new(1.0, m).unwrap();
            (integrate(&SampledFn::scalar(g, |z| (PI * z).sin()).unwrap()).unwrap() - exact).abs()
        };
        let mut m = 11;
        while m <= 161 {
            let ratio = err(m) / err(2 * m - 1);
            assert!(ratio >= 8.0, "m = {m}: ratio {ratio}");
            m = 2 * m - 1;
        }
    }

    fn sampled(values: Vec<f64>) -> SampledFn {
        let g = Grid::new(1.7, values.len()).unwrap();
        SampledFn::new(g, DMatrix::from_vec(values.len(), 1, values)).unwrap()
    }

    proptest! {
        #[test]
        fn cauchy_bunyakovsky(pairs in prop::collection::vec((-10.0..10.0f64, -10.0..10.0f64), 21)) {
            let f = sampled(pairs.iter().map(|p| p.0).collect());
            let g = sampled(pairs.iter().map(|p| p.1).collect());
            let lhs = inner(&f, &g).unwrap().abs();
            let rhs = lp_norm(&f, LpNorm::L2).unwrap() * lp_norm(&g, LpNorm::L2).unwrap();
            prop_assert!(lhs <= rhs + 1e-12 * (1.0 + rhs));
        }

        #[test]
        fn holder_step(vals in prop::collection::vec(-5.0..5.0f64, 31), q in 1.5..4.0f64) {
            let f = sampled(vals);
            let l = f.grid().length();
            let lhs = lp_norm(&f, LpNorm::L2).unwrap().powf(2.0 * q);
            let rhs = l.powf(q - 1.0) * lp_norm(&f, LpNorm::Lp(2.0 * q)).unwrap().powf(2.0 * q);
            prop_assert!(lhs <= rhs * (1.0 + 1e-10) + 1e-300);
        }

        #[test]
        fn l1_below_scaled_l2(vals in prop::collection::vec(-5.0..5.0f64, 15)) {
            let f = sampled(vals);
            let l = f.grid().length();
            prop_assert!(lp_norm(&f, LpNorm::L1).unwrap() <= l.sqrt() * lp_norm(&f, LpNorm::L2).unwrap() + 1e-12);
        }
    }
}
