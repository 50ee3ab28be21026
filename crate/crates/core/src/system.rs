//! Linear data of the cascade
//!
//! ```text
//! u_t = a^2 u_zz + f(u) + B(z)^T x,      u(0, t) = d1(t), u(l, t) = d2(t)
//! x'  = C x + X(x) + int_0^l D(z) u dz
//! ```
//!
//! The nonlinear parts `f`, `X` live in [`crate::certificate::NonlinearitySpec`].

use nalgebra::DMatrix;

use crate::error::{CertError, Result};
use crate::functions::{sample_vector, Profile};
use crate::green_bvp::CouplingProblem;
use crate::gridfn::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeSystem {
    pub a: f64,
    pub l: f64,
    pub c: DMatrix<f64>,
    pub b: Vec<Profile>,
    pub d: Vec<Profile>,
}

impl CascadeSystem {
    pub fn new(a: f64, l: f64, c: DMatrix<f64>, b: Vec<Profile>, d: Vec<Profile>) -> Result<Self> {
        let s = Self { a, l, c, b, d };
        s.validate()?;
        Ok(s)
    }

    /// The scalar system of the worked example with `B = b`, `D = d` constant.
    pub fn scalar(a: f64, l: f64, c: f64, b: f64, d: f64) -> Self {
        Self {
            a,
            l,
            c: DMatrix::from_element(1, 1, c),
            b: vec![Profile::constant(b)],
            d: vec![Profile::constant(d)],
        }
    }

    pub fn n(&self) -> usize {
        self.c.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a.is_finite() && self.a > 0.0) {
            return Err(CertError::Config(format!("a must be positive, got {}", self.a)));
        }
        if !(self.l.is_finite() && self.l > 0.0) {
            return Err(CertError::Config(format!("l must be positive, got {}", self.l)));
        }
        let n = self.c.nrows();
        if n == 0 || self.c.ncols() != n {
            return Err(CertError::Config("C must be a nonempty square matrix".into()));
        }
        if self.c.iter().any(|v| !v.is_finite()) {
            return Err(CertError::Config("C has non-finite entries".into()));
        }
        if self.b.len() != n || self.d.len() != n {
            return Err(CertError::Config(format!(
                "B and D need {n} components each, got {} and {}",
                self.b.len(),
                self.d.len()
            )));
        }
        for p in self.b.iter().chain(&self.d) {
            p.validate(self.l)?;
        }
        Ok(())
    }

    pub fn grid(&self, nodes: usize) -> Result<Grid> {
        Grid::new(self.l, nodes)
    }

    /// Sample `B`, `D` on `nodes` points and attach `P`.
    pub fn coupling_problem(&self, p: DMatrix<f64>, nodes: usize) -> Result<CouplingProblem> {
        self.validate()?;
        let grid = self.grid(nodes)?;
        CouplingProblem::new(
            self.a,
            self.c.clone(),
            p,
            sample_vector(&self.b, grid)?,
            sample_vector(&self.d, grid)?,
        )
    }

    /// `B(z)` and `D(z)` at a point.
    pub fn eval_bd(&self, z: f64, b: &mut [f64], d: &mut [f64]) {
        for (o, p) in b.iter_mut().zip(&self.b) {
            *o = p.eval(z);
        }
        for (o, p) in d.iter_mut().zip(&self.d) {
            *o = p.eval(z);
        }
    }
}
