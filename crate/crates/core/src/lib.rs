//! Feature detection for unorganized 3D point clouds.
//!
//! The crate is organized as a pipeline:
//!
//! 1. [`cloud`] – point storage, PLY/XYZ I/O, voxel downsampling and an exact
//!    k-d tree ([`cloud::SpatialIndex`]).
//! 2. [`edge`] – centroid-shift edge classification with a density-adaptive
//!    threshold.
//! 3. [`corner`] – curvature-vector clustering over the edge set, followed by
//!    a cluster size/angle rule and merging of corner candidates.
//! 4. [`seam`] – straight weld seams between detected corners, supported by
//!    edge points.
//! 5. [`eval`] – synthetic shapes with analytic labels, precision/recall
//!    scoring, parameter sweeps and a surface-variation baseline.
//!
//! The [`cli`] module backs the `seamdetect` binary.

// `!(x > 0.0)` also rejects NaN; index loops read better for 3x3 algebra.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod cloud;
pub mod corner;
pub mod edge;
pub mod error;
pub mod eval;
pub mod linalg;
pub mod pipeline;
pub mod seam;

pub use cloud::{Point3, PointCloud, SpatialIndex, VoxelSpec};
pub use corner::{CornerParams, CornerResult};
pub use edge::{EdgeLabeling, EdgeParams};
pub use error::{Error, Result};
pub use seam::{SeamParams, SeamSegment};
