//! Pre-training data selection by entropic unbalanced optimal transport.
//!
//! Features and centroids are stored per class, pre-training classes are
//! ranked by how much transport mass they receive from the target domain,
//! and a quadratic SGD simulator checks excess-risk bounds for mixing
//! target and reused gradients.
//!
//! Everything numeric is generic over [`Scalar`] (`f32` or `f64`); the
//! aliases below pin the common instantiations.

// `!(x > 0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod clustering;
pub mod error;
pub mod feature_store;
mod linalg;
pub mod ot_core;
pub mod scalar;
pub mod selection;
pub mod theory_sim;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use clustering::{spherical_kmeans, KMeansConfig, KMeansOutcome};
pub use feature_store::{compute_centroids, CentroidSet, FeatureFormat, FeatureMatrix, LabelMap};
pub use ot_core::{
    build_cost, sinkhorn_balanced, sinkhorn_unbalanced, CostMatrix, CostMetric, TransportPlan,
    UotParams,
};
pub use selection::{RecallSpec, SelectionMethod, SelectionResult};
pub use theory_sim::{PlObjective, SimConfig, SimResult, SweepConfig};

pub type FeatureMatrixF64 = FeatureMatrix<f64>;
pub type FeatureMatrixF32 = FeatureMatrix<f32>;
pub type CentroidSetF64 = CentroidSet<f64>;
pub type CentroidSetF32 = CentroidSet<f32>;
pub type CostMatrixF64 = CostMatrix<f64>;
pub type CostMatrixF32 = CostMatrix<f32>;
pub type UotParamsF64 = UotParams<f64>;
pub type UotParamsF32 = UotParams<f32>;
pub type TransportPlanF64 = TransportPlan<f64>;
pub type TransportPlanF32 = TransportPlan<f32>;
pub type SelectionResultF64 = SelectionResult<f64>;
pub type KMeansOutcomeF64 = KMeansOutcome<f64>;
pub type PlObjectiveF64 = PlObjective<f64>;
pub type PlObjectiveF32 = PlObjective<f32>;
pub type SimConfigF64 = SimConfig<f64>;
pub type SimResultF64 = SimResult<f64>;
