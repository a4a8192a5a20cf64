//! Finite-dimensional machinery for extending monotone graphs and Lipschitz
//! data, together with the coupling and semigroup layers built on top of it.
//!
//! The crate is organized around five subsystems:
//!
//! * [`optkit`] — a self-contained dense convex-optimization kernel (two-phase
//!   simplex LP, primal active-set QP, simplex projection, grid
//!   Legendre–Fenchel transforms, hull membership).
//! * [`fitzpatrick`] — finite monotone graphs in `R^d × R^d`, their
//!   Fitzpatrick/Penot functions, the self-dual kernel average, and the
//!   resolvent of the induced maximal monotone extension with minimal domain.
//! * [`kirszbraun`] — two constructive Lipschitz-extension routes for finite
//!   data sets, with optional invariance under a finite orthogonal group.
//! * [`mps`] — the discrete dyadic model of a standard probability space:
//!   measure-preserving permutations, bistochastic couplings and their
//!   permutation approximation, exact Wasserstein distances, Monge matching.
//! * [`dissipative`] — resolvents, Yosida approximations, minimal selections
//!   and exponential-formula semigroups of λ-dissipative operators on
//!   `R^{N·d}`, plus permutation-invariance audits and pointwise structure
//!   extraction.
//!
//! All operations are pure functions of their inputs; batch entry points use
//! data parallelism when the `parallel` feature (default) is enabled and fall
//! back to sequential iteration otherwise.

pub mod dissipative;
pub mod error;
pub mod fitzpatrick;
pub mod kirszbraun;
pub mod linalg;
pub mod mps;
pub mod optkit;
pub mod par;

pub use error::{Error, Result};
pub use linalg::{Mat, Vector};
