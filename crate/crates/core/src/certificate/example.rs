//! Scalar-case shortcuts: with `C = c`, constant `B = b`, `D = d`, the norms
//! of `P12` reduce to two functions of `lambda = sqrt(c) / a`.

use crate::error::{CertError, Result};
use crate::gridfn::{Grid, DEFAULT_NODES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaChi {
    pub kappa: f64,
    pub chi: f64,
    pub kappa_approx: f64,
    pub chi_approx: f64,
}

pub fn kappa_chi(lambda: f64, l: f64) -> Result<KappaChi> {
    kappa_chi_with_nodes(lambda, l, DEFAULT_NODES)
}

/// `kappa = (2/lambda) tan(lambda l / 2) - l` and
/// `chi = |sin(lambda l)|^{-1} (int_0^l (sin(lambda l) + sin(lambda(z-l)) - sin(lambda z))^2 dz)^{1/2}`,
/// plus their small-`lambda l` forms `lambda^2 l^3 / 12` and `lambda^2 l^2 sqrt(l) / (2 sqrt(30))`.
pub fn kappa_chi_with_nodes(lambda: f64, l: f64, nodes: usize) -> Result<KappaChi> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(CertError::Config(format!("lambda must be positive, got {lambda}")));
    }
    let grid = Grid::new(l, nodes)?;
    let arg = lambda * l;
    if (arg / 2.0).cos().abs() < 1e-12 || arg.sin().abs() < 1e-12 {
        return Err(CertError::Singular(format!("tan(lambda l / 2) or 1/sin(lambda l) blows up at lambda l = {arg}")));
    }
    let kappa = 2.0 / lambda * (arg / 2.0).tan() - l;
    let y: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&z| {
            let v = arg.sin() + (lambda * (z - l)).sin() - (lambda * z).sin();
            v * v
        })
        .collect();
    let chi = grid.partial_integral(&y, 0, grid.len() - 1).sqrt() / arg.sin().abs();
    Ok(KappaChi {
        kappa,
        chi,
        kappa_approx: lambda * lambda * l.powi(3) / 12.0,
        chi_approx: lambda * lambda * l * l * l.sqrt() / (2.0 * 30f64.sqrt()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reported_values() {
        let k = kappa_chi(0.5, 1.0).unwrap();
        assert!((k.kappa - 0.021367).abs() < 1e-5, "{}", k.kappa);
        assert!((k.chi - 0.023414).abs() < 1e-5, "{}", k.chi);
    }

    #[test]
    fn small_argument_asymptotics() {
        let k = kappa_chi(0.05, 1.0).unwrap();
        assert!((k.kappa / k.kappa_approx - 1.0).abs() < 0.01);
        assert!((k.chi / k.chi_approx - 1.0).abs() < 0.01);
    }

    #[test]
    fn refinement_stable() {
        let a = kappa_chi_with_nodes(0.5, 1.0, 401).unwrap();
        let b = kappa_chi_with_nodes(0.5, 1.0, 801).unwrap();
        assert!((a.chi - b.chi).abs() < 1e-8);
    }

    #[test]
    fn pole_guard() {
        let pi = std::f64::consts::PI;
        assert!(matches!(kappa_chi(pi, 1.0), Err(CertError::Singular(_))));
        assert!(matches!(kappa_chi(2.0 * pi, 1.0), Err(CertError::Singular(_))));
    }
}
