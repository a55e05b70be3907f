//! Q1 finite elements on structured hexahedral grids.

pub mod assembly;
pub mod element;
pub mod grid;
pub mod solver;
pub mod sparse;

pub use assembly::{assemble_elastic_stiffness, assemble_interface_coupling, assemble_scalar_stiffness};
pub use grid::Grid;
pub use solver::{
    solve_constrained, ComponentProjector, Constraint, FieldVector, SolveStats, SolverMethod, SolverOptions, Space,
    SparseSystem,
};
pub use sparse::{CsrMatrix, Sink, NO_DOF};
