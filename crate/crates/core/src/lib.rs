//! Degenerate eigenspaces of the Laplacian on the flat n-torus and their
//! first-order splitting under a Gaussian trigonometric potential.
//!
//! The crate is organised bottom-up:
//!
//! * [`lattice`] enumerates integer frequency vectors `k` with `|k|² = λ`,
//!   i.e. the eigenspaces of Δ on Tⁿ and their multiplicities.
//! * [`potential`] defines the Gaussian potential through its Fourier
//!   coefficients `V̂(t) = exp(-Σ α_j t_j²)`.
//! * [`eigen`] is a cyclic Jacobi solver for dense real symmetric matrices.
//! * [`perturbation`] builds the secular matrix on an eigenspace, classifies
//!   the splitting and computes second-order and eigenvector corrections.
//! * [`galerkin`] diagonalizes a Fourier truncation of `Δ + εV` and is used
//!   as an independent check on the perturbative predictions.
//! * [`fixtures`] holds published reference matrices and compares them
//!   against the definitional assembly.

pub mod eigen;
pub mod error;
pub mod fixtures;
pub mod galerkin;
pub mod lattice;
pub mod perturbation;
pub mod potential;
mod tridiagonal;

pub use error::{Error, Result};
pub use lattice::{EigenspaceBasis, LatticeVector};
pub use potential::PotentialSpec;
