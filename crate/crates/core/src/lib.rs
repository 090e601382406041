//! Identifiability analysis and maximum-likelihood estimation for topic
//! models with fixed-length documents and a known mixing prior.
//!
//! The moment, likelihood and identifiability code is generic over the
//! scalar type (`f32` or `f64`); the estimator and the Monte Carlo
//! experiments run in `f64`. Aliases for the common instantiations live at
//! the crate root.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod experiments;
pub mod identifiability;
pub mod mixing;
pub mod mle;
pub mod model;
pub mod rng;
pub mod scalar;

pub use error::{Error, Result};
pub use identifiability::{IdentifiabilityMatrix, IdentifiabilityReport};
pub use mixing::{MixingDistribution, MixingKind, Regularity};
pub use mle::{FitOptions, FitResult};
pub use model::{Corpus, Document, PerturbationDirection, TopicMatrix};
pub use scalar::Scalar;

pub type MixingDistributionF64 = MixingDistribution<f64>;
pub type MixingDistributionF32 = MixingDistribution<f32>;
pub type TopicMatrixF64 = TopicMatrix<f64>;
pub type TopicMatrixF32 = TopicMatrix<f32>;
pub type PerturbationDirectionF64 = PerturbationDirection<f64>;
pub type PerturbationDirectionF32 = PerturbationDirection<f32>;
pub type IdentifiabilityReportF64 = IdentifiabilityReport<f64>;
pub type IdentifiabilityReportF32 = IdentifiabilityReport<f32>;
