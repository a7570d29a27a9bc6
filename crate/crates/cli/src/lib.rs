//! Command implementations behind the `sdmce` binary: the end-to-end
//! parameterization pipeline, mesh diagnostics, re-auditing of existing
//! parameterizations, and SVG layout rendering.

pub mod commands;
pub mod svg;

pub use commands::{
    cmd_check, cmd_metrics, cmd_parameterize, CheckArgs, MetricsArgs, ParameterizeArgs,
};

/// Process exit codes, one per outcome class.
pub mod exit {
    /// Folding-free success.
    pub const OK: i32 = 0;
    /// Input could not be parsed or is not a disk-topology mesh.
    pub const BAD_INPUT: i32 = 1;
    /// The solver or penalty tuner failed.
    pub const SOLVER: i32 = 2;
    /// Repair stalled with residual foldings; outputs were still written.
    pub const RESIDUAL_FOLDINGS: i32 = 3;
    /// An output could not be written.
    pub const IO: i32 = 4;
}
