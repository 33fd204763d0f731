//! Explicit strict Liapunov functions for partially damped coupled
//! second-order systems.
//!
//! The crate builds perturbed-energy quadratic forms for systems of the type
//! `u'' + u' + Au + Cv = 0`, `v'' + Av + C*u = 0`, certifies them by
//! generalized eigenvalue computations, and cross-checks the certified decay
//! rates against the exact spectrum and against simulated trajectories.
//!
//! * [`numerics`]: dense kernels (roots, eigenvalues, `expm`, integration).
//! * [`forms`]: quadratic forms, Lie derivatives along linear flows, strictness.
//! * [`scalar`]: the 4-state scalar system and its rate bounds.
//! * [`strong`]: the operator framework `(A, C)` on Galerkin truncations.
//! * [`gallery`]: PDE examples discretized into operator pairs.
//! * [`weak`]: the weakly coupled case `C = cI` and its `1/t` decay.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod forms;
pub mod gallery;
pub mod numerics;
pub mod scalar;
mod search;
pub mod strong;
pub mod weak;

pub use error::{Error, Result};
pub use forms::{
    BlockLayout, CertificateReport, FormBuilder, LinearFlow, QuadraticForm,
};
pub use numerics::{DecayTrace, Method, Polynomial, Tolerances};
pub use scalar::{RateBoundParams, ScalarParams};
pub use strong::{ConditionReport, OperatorPair};
pub use weak::{WeakLiapunovParams, WeakSystem};
