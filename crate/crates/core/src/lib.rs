//! Decoupled analysis of threaded-communication event logs.
//!
//! Each user's history is split into two parts: an ordered sequence of
//! post/reply symbols (the *user path*, a lattice walk from the origin) and
//! the matching event timestamps (the *timing vector*). The modules here
//! ingest raw logs, build per-forum archives of decoupled histories, fit
//! generative models to the paths, estimate spatial density and dead zones,
//! summarize each forum with six numeric features, and cluster forums
//! hierarchically. A seeded synthetic generator supports end-to-end
//! validation without real data.
//!
//! All numeric kernels are generic over the scalar type via [`num::Real`];
//! the pipeline instantiates them with [`Scalar`].

pub mod cluster;
pub mod deadzone;
pub mod features;
pub mod ingest;
pub mod models;
pub mod num;
pub mod paths;
pub mod rng;
pub mod stats;
pub mod synth;
pub mod timing;
pub mod viz;

/// Scalar type used by the pipeline-level entry points.
pub type Scalar = f64;

/// Six-number forum summary at the pipeline scalar type.
pub type ForumFeatures = features::ForumFeatures<Scalar>;
/// Merge tree from agglomerative clustering at the pipeline scalar type.
pub type Dendrogram = cluster::Dendrogram<Scalar>;
/// Kernel density grid at the pipeline scalar type.
pub type DensityGrid = deadzone::DensityGrid<Scalar>;
/// Dead-zone mask and outliers at the pipeline scalar type.
pub type DeadZoneResult = deadzone::DeadZoneResult<Scalar>;
/// Log-binned power-law fit at the pipeline scalar type.
pub type PowerLawFit = timing::PowerLawFit<Scalar>;
/// Per-dataset model evaluation report at the pipeline scalar type.
pub type ModelFitReport = models::ModelFitReport<Scalar>;
