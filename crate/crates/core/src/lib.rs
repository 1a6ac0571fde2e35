//! Spectral toolkit for a quantum particle on the Möbius strip.
//!
//! Three models are covered: the flat ("fake") strip with twisted periodic
//! seam conditions, the effective flat strip with the geometric potential
//! `-cos(s/R)/8R²` (solved with Mathieu functions), and the curved strip,
//! solved by Galerkin projection onto the flat eigenbasis.

pub mod cli;
pub mod convergence;
pub mod error;
pub mod galerkin;
pub mod geometry;
pub mod linalg;
pub mod mathieu;
pub mod models;
pub mod quadrature;

pub use error::{Error, Result};
