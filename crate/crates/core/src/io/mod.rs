//! Configuration input and file output.

pub mod config;
pub mod files;
pub mod vtk;

pub use config::RunConfig;
