//! Primitive-shape recovery for parametric CAD patches.
//!
//! Given a collection of rational Bézier / tensor-product patches, this crate
//! estimates the implicit algebraic degree of the primitive each patch lies
//! on, measures how well groups of patches share a single primitive by
//! implicitizing their joint point clouds, and agglomerates the patches into
//! clusters that recover the underlying curves and surfaces.
//!
//! The crate is generic over the floating-point scalar via [`Scalar`];
//! `f64` aliases for the main types live at the crate root.

pub mod calibrate;
pub mod cluster;
pub mod error;
pub mod geometry;
pub mod implicitize;
pub mod io;
pub mod pipeline;
pub mod scalar;
pub mod svd;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Double-precision aliases for the main types; the common instantiation.
pub type Patch64 = geometry::Patch<f64>;
pub type PointCloud64 = geometry::PointCloud<f64>;
pub type AffineMap64 = geometry::AffineMap<f64>;
pub type LabeledDataset64 = geometry::LabeledDataset<f64>;
pub type SampledDataset64 = geometry::SampledDataset<f64>;
pub type ImplicitResult64 = implicitize::ImplicitResult<f64>;
pub type CalibrationProfile64 = calibrate::CalibrationProfile<f64>;
pub type ClusterPartition64 = pipeline::ClusterPartition<f64>;
