//! Learning continuous unsigned distance fields (UDFs) from oriented surfel
//! clouds.
//!
//! A surfel cloud is a set of thin 2D Gaussian planes (center, rotation,
//! in-plane scales). This crate trains a coordinate MLP so that its output
//! approximates the unsigned distance to the surface the surfels cover, using
//! three geometric signals:
//!
//! * a far-field Chamfer loss between gradient-pulled query points and surfel
//!   centers,
//! * a near-field L1 regression on samples offset from the surfel planes along
//!   their normals, with the offset magnitude as the target,
//! * an explicit stop-gradient projection that moves surfel centers onto the
//!   zero level set, denoising the cloud as the field improves.
//!
//! Consumers of a trained field live in [`geometry`]: dense grid evaluation,
//! point-cloud deformation, surface-point extraction, and an open-surface
//! mesh extractor based on pseudo-signs derived from gradient direction flips.
//! [`metrics`] provides Chamfer distance, band-restricted field error against
//! analytic oracles, and finite-difference gradient checks.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the `std` feature
//! (default) enables faster math intrinsics and runtime SIMD detection in the
//! matrix kernels. File formats and the command-line interface live in the
//! companion `udfforge` crate.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod field;
pub mod geometry;
pub mod math;
pub mod metrics;
pub mod sampling;
pub mod spatial;
pub mod surfel;
pub mod training;

pub use field::{AnalyticField, DistanceField, FieldArch, FieldGradient, NeuralField};
pub use sampling::{PlaneSample, QuerySample, SamplerConfig};
pub use surfel::{SceneTransform, Surfel, SurfelCloud, SyntheticScene};
pub use training::{TrainConfig, TrainState};
