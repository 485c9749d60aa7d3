//! Nonlocal functional boundary value problems on `[-r, 1]`.
//!
//! The problems are written as perturbed Hammerstein integral equations
//!
//! ```text
//! u(t) = ψ(t) + ∫₀¹ k(t,s) g(s) F(s, u_s) ds + γ(t) α[u],   t ∈ [-r, 1],
//! ```
//!
//! where `u_s(θ) = u(s + θ)` is the history segment on `[-r, 0]` and
//! `α[u] = ∫ u dA` is a Stieltjes functional with a signed measure.
//!
//! The crate computes the constants that enter fixed-point-index conditions
//! on the affine cone `ψ + K₀`, turns verified conditions into existence and
//! multiplicity certificates, and solves the discretized equation.
//!
//! * [`measure`]: the functional `α`, `Var(A)` and `𝒦_A`.
//! * [`kernel`]: Green's kernels, `γ`, `Φ` and cone constants.
//! * [`envelope`]: the nonlinearity `F` and its growth numbers.
//! * [`certify`]: `m`, `M(a,b)`, hypothesis checks, index conditions and
//!   certificates.
//! * [`solver`]: operator evaluation, Picard/Newton solves and cone
//!   membership.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod envelope;
pub mod error;
pub mod kernel;
pub mod measure;
pub mod quadrature;
pub mod solver;

pub use error::{Error, Result};
