//! Conformal flattening of simply connected open triangle meshes onto the
//! unit disk.
//!
//! The solver minimizes the discrete conformal energy of the boundary-reduced
//! (Schur complement) system over boundary points constrained to the unit
//! circle, with a quadratic penalty pulling the covered area towards the disk
//! area. The penalty weight is tuned adaptively, and any residual folding of
//! the solution (boundary vertices, boundary triangles, interior triangles)
//! is repaired by local convex-combination updates.
//!
//! A typical run through the library:
//!
//! ```
//! use sdmce_core::{fixtures, pipeline};
//! use sdmce_core::pipeline::{MuMode, RunConfig};
//!
//! let mesh = fixtures::hemisphere(4);
//! let config = RunConfig { mu: MuMode::Fixed(10.0), ..RunConfig::default() };
//! let result = pipeline::run(&mesh, &config).unwrap();
//! assert_eq!(result.report.folding.total(), 0);
//! ```
//!
//! Adaptive tuning (`MuMode::Auto`, the default) accepts a solve only when
//! its conformal energy clears `-tau`; on very coarse meshes the polygon gap
//! makes that unattainable and a fixed weight is the right choice.

pub mod energy;
pub mod fixtures;
pub mod io;
pub mod laplacian;
pub mod mesh;
pub mod metrics;
pub mod optimizer;
pub mod pipeline;
pub mod tuning;
pub mod unfolding;
pub mod util;

pub use energy::{DiskEmbedding, ObjectiveVariant, PenaltyState};
pub use laplacian::{BlockSystem, CotanLaplacian, SchurMode};
pub use mesh::{MeshDiagnostics, TriMesh};
pub use metrics::QualityReport;
pub use optimizer::NcgConfig;
pub use tuning::BoundaryInit;
pub use unfolding::FoldingReport;
