//! Cross-dataset trajectory-prediction evaluation toolkit.
//!
//! Re-slices heterogeneous motion recordings into a common 91-step schema
//! (5 s history, 4.1 s horizon at 10 Hz), produces baseline predictions,
//! scores them with best-of-K displacement metrics, compares
//! in-distribution against out-of-distribution runs, and quantifies
//! prediction-task complexity as the deviation from constant-velocity
//! motion.

pub mod cli;
pub mod complexity;
pub mod geom;
pub mod homogenize;
pub mod ingest;
pub mod metrics;
pub mod predictors;
pub mod report;
pub mod scenario;

pub use geom::Vec2;
pub use homogenize::HomogenizedSample;
pub use scenario::Scenario;
