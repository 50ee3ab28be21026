//! The pair `(tau1, tau2)` of the balancing condition between the ODE
//! damping `delta1`, the PDE damping `alpha` and the cross terms.

use crate::error::{CertError, Result};
use crate::green_bvp::P12Norms;

use super::NonlinearitySpec;

/// Relative residual required of a bisection root.
pub const TAU_RESIDUAL_TOL: f64 = 1e-10;

/// Coefficients of the two monotone equations
///
/// ```text
/// inc(tau) = k1 tau^(2q) + k2 tau^(2q/(2q-1))     = 2 delta1   (tau1)
/// dec(tau) = k3 tau^(-2q) + k4 tau^(-2q/(2q-1))   = 2 alpha    (tau2)
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauEquations {
    pub q: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k4: f64,
    pub rhs_inc: f64,
    pub rhs_dec: f64,
}

impl TauEquations {
    pub fn new(spec: &NonlinearitySpec, norms: P12Norms, l: f64) -> Self {
        let q = spec.q;
        Self {
            q,
            k1: spec.zeta * norms.l1 / q,
            k2: spec.delta2 * norms.l2 * (2.0 * q - 1.0) / q,
            k3: spec.delta2 * norms.l2 * l.powf(q - 1.0) / q,
            k4: spec.zeta * (2.0 * q - 1.0) * norms.linf / q,
            rhs_inc: 2.0 * spec.delta1,
            rhs_dec: 2.0 * spec.alpha,
        }
    }

    fn conj(&self) -> f64 {
        2.0 * self.q / (2.0 * self.q - 1.0)
    }

    /// Increasing left side (without the right-hand side).
    pub fn increasing(&self, tau: f64) -> f64 {
        self.k1 * tau.powf(2.0 * self.q) + self.k2 * tau.powf(self.conj())
    }

    /// Decreasing left side (without the right-hand side).
    pub fn decreasing(&self, tau: f64) -> f64 {
        self.k3 * tau.powf(-2.0 * self.q) + self.k4 * tau.powf(-self.conj())
    }

    /// Relative residuals of both equations at finite, positive roots
    /// (`0` for the degenerate values).
    pub fn relative_residuals(&self, roots: &TauRoots) -> (f64, f64) {
        let r1 = if roots.tau1 > 0.0 && roots.tau1.is_finite() {
            (self.increasing(roots.tau1) - self.rhs_inc).abs() / self.rhs_inc
        } else {
            0.0
        };
        let r2 = if roots.tau2 > 0.0 && roots.tau2.is_finite() {
            (self.decreasing(roots.tau2) - self.rhs_dec).abs() / self.rhs_dec
        } else {
            0.0
        };
        (r1, r2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TauRoots {
    /// `0` when `delta1 = 0`.
    pub tau1: f64,
    /// `+inf` when `alpha = 0`.
    pub tau2: f64,
}

impl TauRoots {
    pub fn ordered(&self) -> bool {
        self.tau2 < self.tau1
    }
}

/// Root of a strictly increasing `g` on `(0, inf)` with `g(0+) < 0 < g(inf)`.
///
/// The bracket grows geometrically from `[1, 1]` and is then bisected until
/// the endpoints are adjacent floats.
pub fn bisect_increasing<G: Fn(f64) -> f64>(g: G) -> Result<f64> {
    let (mut lo, mut hi) = (1.0_f64, 1.0_f64);
    if g(1.0) < 0.0 {
        while g(hi) < 0.0 {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return Err(CertError::NoRoot("no sign change below f64::MAX".into()));
            }
        }
    } else {
        while g(lo) >= 0.0 {
            hi = lo;
            lo *= 0.5;
            if lo == 0.0 {
                return Err(CertError::NoRoot("no sign change above zero".into()));
            }
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick the endpoint with the smaller residual
    Ok(if g(lo).abs() < g(hi).abs() { lo } else { hi })
}

/// Solve both equations. `delta1 = 0` gives `tau1 = 0`, `alpha = 0` gives
/// `tau2 = inf`; a vanishing left side with positive right side is a
/// [`CertError::NoRoot`].
pub fn solve_tau_equations(eq: &TauEquations) -> Result<TauRoots> {
    for v in [eq.k1, eq.k2, eq.k3, eq.k4, eq.rhs_inc, eq.rhs_dec] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(CertError::Domain(format!("tau coefficients must be finite and nonnegative, got {v}")));
        }
    }
    let tau1 = if eq.rhs_inc == 0.0 {
        0.0
    } else if eq.k1 == 0.0 && eq.k2 == 0.0 {
        return Err(CertError::NoRoot("tau1 equation has a vanishing left side".into()));
    } else {
        bisect_increasing(|t| eq.increasing(t) - eq.rhs_inc)?
    };
    let tau2 = if eq.rhs_dec == 0.0 {
        f64::INFINITY
    } else if eq.k3 == 0.0 && eq.k4 == 0.0 {
        return Err(CertError::NoRoot("tau2 equation has a vanishing left side".into()));
    } else {
        bisect_increasing(|t| eq.rhs_dec - eq.decreasing(t))?
    };
    let roots = TauRoots { tau1, tau2 };
    let (r1, r2) = eq.relative_residuals(&roots);
    if r1.max(r2) > TAU_RESIDUAL_TOL {
        return Err(CertError::NumericDegeneracy(format!(
            "tau bisection stalled with relative residuals {r1:e}, {r2:e}"
        )));
    }
    Ok(roots)
}

/// Like [`solve_tau_equations`], but a side whose left-hand coefficients all
/// vanish imposes no restriction: `tau1 = inf` or `tau2 = 0`.
pub fn admissible_taus(eq: &TauEquations) -> Result<TauRoots> {
    let relax_inc = eq.k1 == 0.0 && eq.k2 == 0.0 && eq.rhs_inc > 0.0;
    let relax_dec = eq.k3 == 0.0 && eq.k4 == 0.0 && eq.rhs_dec > 0.0;
    let probe = TauEquations {
        k1: if relax_inc { 1.0 } else { eq.k1 },
        k3: if relax_dec { 1.0 } else { eq.k3 },
        ..*eq
    };
    let mut roots = solve_tau_equations(&probe)?;
    if relax_inc {
        roots.tau1 = f64::INFINITY;
    }
    if relax_dec {
        roots.tau2 = 0.0;
    }
    Ok(roots)
}

pub fn solve_tau(spec: &NonlinearitySpec, norms: P12Norms, l: f64) -> Result<TauRoots> {
    solve_tau_equations(&TauEquations::new(spec, norms, l))
}
