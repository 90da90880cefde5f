//! Friedrichs angles between subspace arrangements and the spectral
//! certificates built on them.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`]: dense symmetric eigen-solvers, Cholesky classification and
//!   SPD solves.
//! * [`subspaces`]: subspaces, arrangements, the Σ operator and the
//!   two- and many-subspace angles and distance estimates.
//! * [`certificates`]: the ε-matrix positive-definiteness certificate, the
//!   quadratic distance bound, Gram realizations and degenerate families.
//! * [`coxeter`]: finite Coxeter systems, their Kazhdan constants and
//!   Laplacian spectral gaps, and the reflection representation.
//! * [`groups`]: enumerated finite groups, regular-representation
//!   Laplacians, fixed-space angles, Steinberg and Kac–Moody certificates.
//! * [`walks`]: random-walk gap certificates, power-iteration gap estimates
//!   and the SO(n) harmonic check.

pub mod certificates;
pub mod coxeter;
pub mod error;
pub mod groups;
pub mod linalg;
pub mod provenance;
pub mod subspaces;
pub mod walks;

pub use error::{Error, Result};
