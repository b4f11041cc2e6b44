//! Radial nonlinear Schrödinger laboratory: iu_t + (−Δ + V)u = σ|u|²u on R^3
//! restricted to radial functions.

pub mod error;
pub mod evolution;
pub mod functionals;
pub mod grid;
pub mod interp;
pub mod lab;
pub mod linalg;
pub mod modulation;
pub mod par;
pub mod solitons;
pub mod spectral;

pub use error::{LabError, Result};
pub use grid::{apply_h, make_grid, radial_derivative, RadialField, RadialGrid};
