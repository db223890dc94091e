//! Numerical laboratory for the one-dimensional SU(n) valence bond solid.
//!
//! The chain is built from singlet bonds between conjugate and fundamental
//! virtual qunits, projected site by site onto the adjoint representation.
//! Every closed-form quantity (transfer spectrum, correlation length, norms,
//! block spectra, entropies, geometric entanglement per block, localizable
//! entanglement) is computed here alongside a dense exact-state oracle that
//! checks it.
//!
//! Module map:
//! - [`repn`]: singlets, adjoint projectors, generalized Bell basis, generators.
//! - [`tensor`]: named-axis dense tensors, matricization, partial traces and a
//!   Hermitian eigensolver with degeneracy grouping.
//! - [`transfer`]: the transfer matrix `A(1)`, its powers, correlation length,
//!   chain norms and bulk correlators.
//! - [`state`]: explicit dense chain states and reduced density matrices.
//! - [`entanglement`]: block spectra, entropies and geometric entanglement.
//! - [`localizable`]: Bell measurements on every site and entanglement swapping.
//! - [`verify`]: closed form vs oracle checks used by the `verify` subcommand.
//! - [`cli`]: the command-line front end.

pub mod cli;
pub mod entanglement;
pub mod error;
pub mod localizable;
pub mod repn;
pub mod state;
pub mod tensor;
pub mod transfer;
pub mod verify;

pub use error::{Result, VbsError};
pub use num_complex::Complex64 as C64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
