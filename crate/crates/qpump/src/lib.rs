//! Adiabatic quantum pumps from frozen scattering matrices.
//!
//! The library works with the on-shell matrix `S(E, t)` of a slowly driven
//! scatterer and computes pumped currents, dissipation, noise, geometric
//! charges and a classical phase-space counterpart.

pub mod error;
pub mod linalg;
pub mod quadrature;
pub mod smatrix;
pub mod transport;
pub mod models;
pub mod geometry;
pub mod counting;
pub mod classical;

pub use error::{Error, Result};
