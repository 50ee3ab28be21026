//! Sampling audit of the hypotheses on `f` and `X`.
//!
//! Scalar arguments run over a symmetric log-spaced range, ODE states over
//! seeded random directions and magnitudes. Passing is evidence only.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::{NonlinearitySpec, Regime};
use crate::error::{CertError, Result};

/// Relative slack for inequality comparisons (round-off in equality cases).
const SLACK: f64 = 1e-9;
/// Smallest and largest sampled `|s|` and `|x|`, as powers of ten.
const LOG_RANGE: (f64, f64) = (-3.0, 3.0);

pub const PASS_DISCLAIMER: &str = "a pass is sampling evidence, not a proof";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Witness {
    pub input: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditCheck {
    pub name: &'static str,
    pub statement: &'static str,
    pub applicable: bool,
    pub evaluated: usize,
    pub violations: usize,
    /// Worst violation (largest `lhs - rhs`).
    pub witness: Option<Witness>,
}

impl AuditCheck {
    fn new(name: &'static str, statement: &'static str, applicable: bool) -> Self {
        Self { name, statement, applicable, evaluated: 0, violations: 0, witness: None }
    }

    /// Record `lhs <= rhs`.
    fn record(&mut self, input: &[f64], lhs: f64, rhs: f64) -> Result<()> {
        if !(lhs.is_finite() && rhs.is_finite()) {
            return Err(CertError::Domain(format!(
                "{} produced a non-finite value at {input:?}",
                self.name
            )));
        }
        self.evaluated += 1;
        if lhs > rhs + SLACK * (lhs.abs() + rhs.abs()).max(f64::MIN_POSITIVE) {
            self.violations += 1;
            let worse = self.witness.as_ref().is_none_or(|w| lhs - rhs > w.lhs - w.rhs);
            if worse {
                self.witness = Some(Witness { input: input.to_vec(), lhs, rhs });
            }
        }
        Ok(())
    }

    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AuditReport {
    pub samples: usize,
    pub seed: u64,
    pub checks: Vec<AuditCheck>,
    pub note: &'static str,
}

impl AuditReport {
    pub fn violations(&self) -> impl Iterator<Item = &AuditCheck> {
        self.checks.iter().filter(|c| c.applicable && !c.passed())
    }

    pub fn all_pass(&self) -> bool {
        self.violations().next().is_none()
    }
}

fn finite(name: &str, s: &[f64], v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(CertError::Domain(format!("{name} is not finite at {s:?}")))
    }
}

/// `samples` scalar points `+-10^k`, `k` evenly spaced over [`LOG_RANGE`].
fn scalar_points(samples: usize) -> Vec<f64> {
    let half = samples.div_ceil(2).max(2);
    let (lo, hi) = LOG_RANGE;
    (0..half)
        .flat_map(|k| {
            let s = 10f64.powf(lo + (hi - lo) * k as f64 / (half - 1) as f64);
            [s, -s]
        })
        .take(samples.max(1))
        .collect()
}

/// Check every hypothesis on `samples` scalar and `samples` vector points.
pub fn audit_hypotheses(spec: &NonlinearitySpec, p: &DMatrix<f64>, samples: usize, seed: u64) -> Result<AuditReport> {
    if samples == 0 {
        return Err(CertError::Config("audit needs at least one sample".into()));
    }
    let n = p.nrows();
    if n == 0 || p.ncols() != n {
        return Err(CertError::Config("P must be a nonempty square matrix".into()));
    }
    spec.validate()?;
    spec.x.validate(n)?;
    let general = spec.mode == Regime::General;
    let q = spec.q;
    let alpha = if general { spec.alpha } else { 0.0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // In the globally Lipschitz regime the whole of f must be Lipschitz.
    let f0 = |s: f64| if general { spec.f.lipschitz_part.eval(s) } else { spec.f.eval(s) };
    let f1 = |s: f64| spec.f.remainder.eval(s);
    let f = |s: f64| spec.f.eval(s);

    let mut origin = AuditCheck::new("f(0) = 0", "f0(0) = f1(0) = 0", true);
    let mut lip = AuditCheck::new("f0 Lipschitz", "|f0(s2) - f0(s1)| <= L |s2 - s1|", true);
    let mut sign = AuditCheck::new("sign condition", "s f(s) <= sigma s^2 - alpha |s|^(2q)", true);
    let mut growth = AuditCheck::new("f1 growth", "|f1(s)| <= zeta |s|^(2q-1)", general);
    let mut slope = AuditCheck::new("f1 slope", "|f1'(s)| <= c0 (1 + |s|^(2q-2))", general);
    let mut monotone = AuditCheck::new("f1 decreasing", "f1'(s) < 0 for s != 0", general);
    let mut xgrowth = if general {
        AuditCheck::new("X growth", "|X(x)| <= delta2 |x|^(2q-1)", true)
    } else {
        AuditCheck::new("X vanishes", "|X(x)| = 0 in the globally Lipschitz regime", true)
    };
    let mut damping = AuditCheck::new("X damping", "x^T P X(x) <= -delta1 |x|^(2q)", general);

    for part in [("f0", f0(0.0)), ("f1", f1(0.0))] {
        let v = finite(part.0, &[0.0], part.1)?;
        origin.record(&[0.0], v.abs(), 0.0)?;
    }

    for s in scalar_points(samples) {
        let fs = finite("f", &[s], f(s))?;
        sign.record(&[s], s * fs, spec.sigma * s * s - alpha * s.abs().powf(2.0 * q))?;

        let step = 10f64.powf(rng.random_range(-4.0..1.0)) * s.abs().max(1.0);
        let s2 = if rng.random_bool(0.5) { s + step } else { s - step };
        let d0 = finite("f0", &[s, s2], f0(s2))? - finite("f0", &[s], f0(s))?;
        lip.record(&[s, s2], d0.abs(), spec.lipschitz * (s2 - s).abs())?;

        if general {
            let v1 = finite("f1", &[s], f1(s))?;
            growth.record(&[s], v1.abs(), spec.zeta * s.abs().powf(2.0 * q - 1.0))?;
            let h = 1e-6 * s.abs().max(1e-3);
            let deriv = (finite("f1", &[s + h], f1(s + h))? - finite("f1", &[s - h], f1(s - h))?) / (2.0 * h);
            // difference quotients carry O(h^2) truncation, hence the extra slack
            let bound = spec.c0 * (1.0 + s.abs().powf(2.0 * q - 2.0));
            slope.record(&[s], deriv.abs(), bound * (1.0 + 1e-6))?;
            monotone.record(&[s], deriv, -f64::MIN_POSITIVE)?;
        }
    }

    let mut out = vec![0.0; n];
    for _ in 0..samples {
        let dir = DVector::<f64>::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let len = dir.norm();
        if len == 0.0 {
            continue;
        }
        let r = 10f64.powf(rng.random_range(LOG_RANGE.0..LOG_RANGE.1));
        let x = dir * (r / len);
        spec.x.eval(x.as_slice(), &mut out);
        let xv = DVector::from_column_slice(&out);
        let xnorm = x.norm();
        let xs = x.as_slice();
        let xn = finite("X", xs, xv.norm())?;
        if general {
            xgrowth.record(xs, xn, spec.delta2 * xnorm.powf(2.0 * q - 1.0))?;
            let quad = finite("x^T P X", xs, x.dot(&(p * &xv)))?;
            damping.record(xs, quad, -spec.delta1 * xnorm.powf(2.0 * q))?;
        } else {
            xgrowth.record(xs, xn, 0.0)?;
        }
    }

    Ok(AuditReport {
        samples,
        seed,
        checks: vec![origin, lip, sign, growth, slope, monotone, xgrowth, damping],
        note: PASS_DISCLAIMER,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{Nonlinearity, ScalarFn, VectorField};

    fn gl(f: ScalarFn, sigma: f64, l: f64) -> NonlinearitySpec {
        NonlinearitySpec::globally_lipschitz(sigma, l, Nonlinearity::lipschitz(f))
    }

    #[test]
    fn sine_nonlinearity_passes() {
        let spec = gl(ScalarFn::Sin { amplitude: 1.0 }, 1.0, 1.0);
        let rep = audit_hypotheses(&spec, &DMatrix::identity(1, 1), 1000, 7).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.violations().collect::<Vec<_>>());
    }

    #[test]
    fn square_is_not_lipschitz() {
        let spec = gl(ScalarFn::Square { coef: 1.0 }, 10.0, 1.0);
        let rep = audit_hypotheses(&spec, &DMatrix::identity(1, 1), 1000, 7).unwrap();
        let bad: Vec<_> = rep.violations().map(|c| c.name).collect();
        assert!(bad.contains(&"f0 Lipschitz"));
        let w = rep.checks[1].witness.as_ref().unwrap();
        assert!(w.input[0].abs().max(w.input[1].abs()) > 0.5);
    }

    #[test]
    fn cubic_damping_equality_case() {
        let spec = NonlinearitySpec {
            mode: Regime::General,
            sigma: 0.0,
            alpha: 1.0,
            q: 2.0,
            lipschitz: 0.0,
            c0: 3.0,
            zeta: 1.0,
            delta1: 1.0,
            delta2: 1.0,
            f: Nonlinearity { lipschitz_part: ScalarFn::Zero, remainder: ScalarFn::Cubic { coef: -1.0 } },
            x: VectorField::CubicDamping { gain: 1.0 },
        };
        let rep = audit_hypotheses(&spec, &DMatrix::identity(3, 3), 2000, 1).unwrap();
        assert!(rep.all_pass(), "{:?}", rep.violations().collect::<Vec<_>>());
    }

    #[test]
    fn errors() {
        let spec = gl(ScalarFn::Sin { amplitude: 1.0 }, 1.0, 1.0);
        assert!(matches!(audit_hypotheses(&spec, &DMatrix::identity(1, 1), 0, 0), Err(CertError::Config(_))));
        let blow = gl(ScalarFn::OddPower { coef: 1.0, exponent: 400.0 }, 1.0, 1.0);
        assert!(matches!(audit_hypotheses(&blow, &DMatrix::identity(1, 1), 100, 0), Err(CertError::Domain(_))));
    }

    #[test]
    fn deterministic() {
        let spec = gl(ScalarFn::Square { coef: 1.0 }, 1.0, 1.0);
        let a = audit_hypotheses(&spec, &DMatrix::identity(2, 2), 500, 3).unwrap();
        let b = audit_hypotheses(&spec, &DMatrix::identity(2, 2), 500, 3).unwrap();
        assert_eq!(a, b);
    }
}
