//! Numerical laboratory for a degenerate parabolic Monge-Ampere flow on a
//! rotationally symmetric model surface with a conical or cusp point.
//!
//! The crate reduces the geometry to the radial coordinate u = log|z|^2,
//! integrates the flow implicitly in the bounded unknown chi = phi - t*psi,
//! sweeps the cone angle toward zero, and mechanically verifies the ladder of
//! uniform a-priori estimates, orderings, and the conical-to-cusp limit.

pub mod compare;
pub mod config;
pub mod error;
pub mod estimates;
pub mod flow;
pub mod geometry;
pub mod linalg;
pub mod mesh;
pub mod mms;
pub mod sweeps;

pub use config::LabConfig;
pub use error::{CoreError, Result};
pub use flow::{FlowConfig, FlowSolver, FlowState, FlowVariant, Trajectory};
pub use geometry::{ConeParams, DivisorConfig, DivisorKind, ModelGeometry};
pub use mesh::Mesh;
