//! Periodic homogenization of two-phase thermo-poro-elastic media with
//! imperfect hydraulic and thermal contact between the phases.
//!
//! The pipeline runs from a voxelized unit cell ([`unit_cell`]) through the
//! periodic corrector problems ([`cell_problems`]) to the effective
//! coefficients ([`effective`]), which feed a backward-Euler solver for the
//! double-porosity, double-temperature macro model ([`macro_solver`]). The
//! ε-scale model itself can be simulated directly ([`micro_dns`]) and compared
//! with the homogenized solution ([`verification`]).

pub mod cell_problems;
pub mod cli;
pub mod coupled;
pub mod effective;
pub mod error;
pub mod fem;
pub mod io;
pub mod macro_solver;
pub mod material;
pub mod micro_dns;
pub mod source;
pub mod unit_cell;
pub mod verification;

pub use error::{Error, Result};
