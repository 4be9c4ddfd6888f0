//! Discrete conformal structures on closed triangulated surfaces.
//!
//! Edge lengths come from per-vertex conformal factors and per-edge weights
//! in Euclidean or hyperbolic background geometry. On top of that the crate
//! computes combinatorial α-curvatures and their Jacobian, evolves the
//! α-Ricci and α-Calabi flows (including the extension through degenerate
//! triangles), and solves prescribed-curvature problems by minimizing the
//! convex extended Ricci energy.

// `!(x > 0.0)` style checks are kept on purpose: they also reject NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod curvature;
pub mod energy;
pub mod error;
pub mod exec;
pub mod flows;
pub mod io;
pub mod mesh;
pub mod metric;
pub mod triangle;

pub use curvature::{
    alpha_curvature, alpha_laplacian, classical_curvature, curvature_jacobian, curvature_report,
    linearization_spectrum, CurvatureReport, Spectrum,
};
pub use energy::{
    newton_solve, total_energy, triangle_energy, EnergyEvaluation, Gauge, SolveOptions, SolveReport,
};
pub use error::{Error, Result};
pub use flows::{
    conserved_quantity, flow_field, run, step, FlowKind, FlowSpec, FlowState, FlowTrace,
    Integrator, Method, StopCriteria,
};
pub use mesh::{BackgroundGeometry, Triangulation, WeightedSurface};
pub use metric::{edge_length, edge_lengths, f_to_u, u_to_f, ConformalState, EdgeLengths};
pub use triangle::{
    angle_jacobian, extended_inner_angles, hyperbolic_area, inner_angles, TriangleGeometry,
};
