//! Input-to-state stability certificates for a heat equation coupled to a
//! finite-dimensional ODE through distributed feedback, with Dirichlet
//! boundary disturbances.
//!
//! - [`gridfn`]: sampled functions, Simpson quadrature, `L^p` norms.
//! - [`green_bvp`]: the Lyapunov coupling weight `P12` (two independent solvers).
//! - [`certificate`]: feasibility conditions, ISS constants, hypothesis audit.
//! - [`galerkin_sim`]: sine-Galerkin simulation of the cascade.
//! - [`system`]: the linear data `a, l, C, B, D` as named profiles.

pub mod certificate;
pub mod error;
pub mod functions;
pub mod galerkin_sim;
pub mod gridfn;
pub mod green_bvp;
pub mod linalg;
pub mod system;

pub use error::{CertError, Result};
