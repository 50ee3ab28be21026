//! Built-in function library: spatial profiles for `B`, `D` and initial data,
//! scalar nonlinearities `f`, and vector fields `X`.
//!
//! Everything is a plain serde enum so configuration files can name them.

use serde::{Deserialize, Serialize};

use crate::error::{CertError, Result};
use crate::gridfn::{Grid, SampledFn};

/// A function of the spatial variable `z`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Profile {
    Constant { value: f64 },
    /// `sum_k coeffs[k] z^k`
    Polynomial { coeffs: Vec<f64> },
    Sin {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    Cos {
        amplitude: f64,
        frequency: f64,
        #[serde(default)]
        phase: f64,
    },
    /// `amplitude * exp(rate * z)`
    Exp { amplitude: f64, rate: f64 },
    /// Piecewise-linear interpolation of `(z, value)` samples.
    Samples { z: Vec<f64>, values: Vec<f64> },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self {
            Profile::Constant { value } => *value,
            Profile::Polynomial { coeffs } => coeffs.iter().rev().fold(0.0, |acc, c| acc * z + c),
            Profile::Sin { amplitude, frequency, phase } => amplitude * (frequency * z + phase).sin(),
            Profile::Cos { amplitude, frequency, phase } => amplitude * (frequency * z + phase).cos(),
            Profile::Exp { amplitude, rate } => amplitude * (rate * z).exp(),
            Profile::Samples { z: zs, values } => interpolate(zs, values, z),
        }
    }

    pub fn validate(&self, l: f64) -> Result<()> {
        if let Profile::Samples { z, values } = self {
            if z.len() != values.len() || z.len() < 2 {
                return Err(CertError::Config(
                    "sample profile needs at least two (z, value) pairs of equal length".into(),
                ));
            }
            if z.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(CertError::Config("sample profile z must be strictly increasing".into()));
            }
            if z[0] > 0.0 || *z.last().unwrap() < l {
                return Err(CertError::Config(format!("sample profile must cover [0, {l}]")));
            }
        }
        Ok(())
    }

    pub fn sample(&self, grid: Grid) -> Result<SampledFn> {
        self.validate(grid.length())?;
        SampledFn::scalar(grid, |z| self.eval(z))
    }
}

fn interpolate(zs: &[f64], vs: &[f64], z: f64) -> f64 {
    let k = zs.partition_point(|&x| x <= z);
    if k == 0 {
        return vs[0];
    }
    if k >= zs.len() {
        return vs[vs.len() - 1];
    }
    let t = (z - zs[k - 1]) / (zs[k] - zs[k - 1]);
    vs[k - 1] + t * (vs[k] - vs[k - 1])
}

/// Sample a list of profiles as the components of a vector-valued function.
pub fn sample_vector(profiles: &[Profile], grid: Grid) -> Result<SampledFn> {
    let cols = profiles
        .iter()
        .map(|p| p.sample(grid).map(|f| f.component(0)))
        .collect::<Result<Vec<_>>>()?;
    SampledFn::from_columns(grid, &cols)
}

/// Scalar nonlinearity building block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScalarFn {
    Zero,
    /// `slope * s`
    Linear { slope: f64 },
    /// `amplitude * sin(s)`
    Sin { amplitude: f64 },
    /// `amplitude * tanh(s)`
    Tanh { amplitude: f64 },
    /// `coef * s^3`
    Cubic { coef: f64 },
    /// `coef * s^2`
    Square { coef: f64 },
    /// `coef * |s|^(exponent - 1) * s`
    OddPower { coef: f64, exponent: f64 },
}

impl ScalarFn {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            ScalarFn::Zero => 0.0,
            ScalarFn::Linear { slope } => slope * s,
            ScalarFn::Sin { amplitude } => amplitude * s.sin(),
            ScalarFn::Tanh { amplitude } => amplitude * s.tanh(),
            ScalarFn::Cubic { coef } => coef * s * s * s,
            ScalarFn::Square { coef } => coef * s * s,
            ScalarFn::OddPower { coef, exponent } => {
                if s == 0.0 {
                    0.0
                } else {
                    coef * s.abs().powf(exponent - 1.0) * s
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ScalarFn::Zero)
    }
}

/// `f = f0 + f1` with `f0` globally Lipschitz and `f1` the polynomial-growth part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    pub lipschitz_part: ScalarFn,
    #[serde(default = "zero_fn")]
    pub remainder: ScalarFn,
}

fn zero_fn() -> ScalarFn {
    ScalarFn::Zero
}

impl Nonlinearity {
    pub fn zero() -> Self {
        Self { lipschitz_part: ScalarFn::Zero, remainder: ScalarFn::Zero }
    }

    pub fn lipschitz(f0: ScalarFn) -> Self {
        Self { lipschitz_part: f0, remainder: ScalarFn::Zero }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.lipschitz_part.eval(s) + self.remainder.eval(s)
    }

    pub fn is_zero(&self) -> bool {
        self.lipschitz_part.is_zero() && self.remainder.is_zero()
    }
}

/// Vector field `X : R^n -> R^n` of the ODE.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorField {
    Zero,
    /// `-gain * |x|^2 * x`
    CubicDamping { gain: f64 },
    /// `-gain * |x|^(power - 1) * x`
    PowerDamping { gain: f64, power: f64 },
    /// `matrix * x` (row-major rows)
    Linear { matrix: Vec<Vec<f64>> },
}

impl VectorField {
    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match self {
            VectorField::Zero => out.fill(0.0),
            VectorField::CubicDamping { gain } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                for (o, v) in out.iter_mut().zip(x) {
                    *o = -gain * r2 * v;
                }
            }
            VectorField::PowerDamping { gain, power } => {
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let k = if r == 0.0 { 0.0 } else { -gain * r.powf(power - 1.0) };
                for (o, v) in out.iter_mut().zip(x) {
                    *o = k * v;
                }
            }
            VectorField::Linear { matrix } => {
                for (o, row) in out.iter_mut().zip(matrix) {
                    *o = row.iter().zip(x).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, VectorField::Zero)
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if let VectorField::Linear { matrix } = self {
            if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                return Err(CertError::Config(format!("linear vector field must be {n}x{n}")));
            }
        }
        Ok(())
    }
}
