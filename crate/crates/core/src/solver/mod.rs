//! Transport solves, the Picard solver, boundary traces and the boundary
//! operator 𝒜.

mod field;
mod grid;
pub mod io;
mod picard;
mod source;
mod trace;
mod transport;

pub use field::{AnalyticFn, FnPhase, PhaseField, PhaseFunction};
pub use grid::{ExtensionPolicy, GridSpec, Lattice, PhaseGrid, Stencil};
pub use picard::{picard_solve, ConvergenceReport, Solution, Solver, SolverConfig};
pub use source::{BoundarySource, SourceSpec};
pub use trace::{apply_a, boundary_trace, outgoing_samples, solution_trace, TraceRow};
pub use transport::{
    attenuated_solve, attenuated_solve_at, free_transport, free_transport_at, line_integral, source_solve, source_solve_at,
};
