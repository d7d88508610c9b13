//! Spectral toolkit for 1D periodic Schrödinger operators `-y'' + v(x) y`.

pub mod bands;
pub mod cli;
pub mod cluster;
pub mod designer;
pub mod error;
mod galerkin;
pub mod halfsolid;
pub mod monodromy;
mod ode;
pub mod potential;
mod roots;

pub use bands::{BandSolver, BandStructure, GapRecord};
pub use error::{Result, SpectralError};
pub use monodromy::{MonodromyData, Shooter};
pub use potential::{FourierTerm, Piece, Potential, PotentialSpec};
