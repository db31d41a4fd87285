//! Mesh analysis toolkit: discrete curvature, quadric fitting, vertex
//! classification, decimation, feature-vertex extraction and the
//! survival experiments that evaluate the extraction.
//!
//! ```
//! use osveta::{extract, fixtures, AreaMode, CriteriaConfig};
//!
//! let mesh = fixtures::spiked_icosphere(2, 4, 0.2, 0.01, 7);
//! let result = extract(&mesh, 10, &CriteriaConfig::default(), AreaMode::Barycentric).unwrap();
//! assert_eq!(result.p.len(), 10);
//! assert!(result.s.windows(2).all(|w| w[0] >= w[1]));
//! ```

pub mod classify;
pub mod curvature;
pub mod decimate;
pub mod error;
pub mod fixtures;
pub mod harness;
pub mod mesh;
pub mod pipeline;
pub mod quadric;
pub mod report;
pub mod star;

pub use classify::{RiskyPrimitives, SurfaceShape, VertexClass};
pub use curvature::{AreaMode, CurvatureAtVertex};
pub use decimate::{decimate, decimate_progressive, DecimationParams, DecimationReport, ThresholdRamp};
pub use error::{Error, Result};
pub use harness::{AreaComparison, ExperimentPlan, SurvivalReport};
pub use mesh::{Adjacency, Mesh, Point, TopologySets, Vec3};
pub use pipeline::{
    compute_feature_table, extract, CriteriaConfig, Criterion, ExtractionResult, FeatureRow, FeatureTable,
    Preset,
};
pub use quadric::{FitKind, NormalMode};
pub use star::{Ring, RingKind, VertexStar};
