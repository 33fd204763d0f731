//! Dense numerical kernels: polynomial roots, symmetric and generalized
//! eigenvalues, the matrix exponential and trajectory integration.
//!
//! Every kernel is a pure function of its inputs. Tolerances default to the
//! values in [`Tolerances::default`]; the `*_with` variants take an explicit
//! record so callers (the CLI in particular) can override them.

mod eig;
mod expm;
mod integrate;
mod poly;

pub use eig::{
    gen_eig, gen_eig_extremes, gen_eig_max, gen_eig_max_with, gen_eig_min, gen_eig_min_with,
    gen_eig_with, spectral_abscissa, sym_eig, sym_eig_vectors, sym_eig_with, sym_matrix_fn,
    SymmetricEigen,
};
pub(crate) use eig::symmetrize as symmetrize_in_place;
pub use expm::expm;
pub use integrate::{integrate, integrate_with, spectral_radius_estimate, DecayTrace, Method};
pub use poly::{poly_roots, poly_roots_with, Polynomial};

use serde::{Deserialize, Serialize};

/// Numerical tolerances shared by the kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Maximum relative asymmetry accepted by the symmetric eigensolver.
    pub symmetry: f64,
    /// A reference form is positive definite when its smallest Cholesky
    /// pivot exceeds `definiteness` times its largest diagonal entry.
    pub definiteness: f64,
    /// Maximum scaled residual `|p(z)| / (1 + |z|^deg)` of a polished root.
    pub root_residual: f64,
    /// Jacobi stops once the off-diagonal Frobenius norm falls below this
    /// fraction of the full Frobenius norm.
    pub jacobi: f64,
    /// RK4 is accepted when `dt * spectral_radius <= rk4_stability`.
    pub rk4_stability: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            symmetry: 1e-12,
            definiteness: 1e-12,
            root_residual: 1e-10,
            jacobi: 1e-15,
            rk4_stability: 1.0,
        }
    }
}
