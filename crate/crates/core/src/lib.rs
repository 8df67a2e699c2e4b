//! Spectral solvers for the scaled two-dimensional primitive equations on a
//! periodic strip and their hydrostatic limit, together with horizontal
//! Littlewood-Paley machinery (dyadic blocks, Besov and Chemin-Lerner norms,
//! paraproducts) and numerical checks of the associated energy inequalities.
//!
//! Fields live on `x ∈ [0, Lx)` (periodic) × `y ∈ [0, 1]`. Dirichlet fields
//! are stored as horizontal Fourier × vertical sine coefficients.

pub mod band;
pub mod config;
pub mod error;
pub mod field;
mod galerkin;
pub mod grid;
pub mod initial;
pub mod io;
pub mod limit;
pub mod lp;
pub mod pe;
pub mod pressure;
pub mod transform;
pub mod verify;

pub use error::{Error, Result};
pub use field::{Parity, PhysicalField, SpectralField};
pub use grid::StripGrid;
