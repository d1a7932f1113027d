//! Causal direction testing for heterogeneous populations under additive
//! noise models.
//!
//! The pipeline estimates a latent parameter per observation, clusters those
//! parameters with a data-driven number of components, and runs an HSIC
//! independence test whose Gamma null is aggregated over the clusters.
//!
//! Numerical code is generic over [`Scalar`] (`f32` or `f64`); the `*64`
//! aliases below fix the common `f64` instantiation.

// `!(a > b)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod clustering;
pub mod datasets;
mod error;
pub mod gamma;
pub mod kernels;
pub mod latent_anm;
pub mod linalg;
mod scalar;
pub mod scg;

pub use error::{Error, Result, Stage};
pub use scalar::{log_sum_exp, Scalar};

pub type Matrix64 = linalg::Matrix<f64>;
pub type KernelMatrix64 = kernels::KernelMatrix<f64>;
pub type HsicNullMoments64 = kernels::HsicNullMoments<f64>;
pub type LatentConfig64 = latent_anm::LatentConfig<f64>;
pub type LatentFit64 = latent_anm::LatentFit<f64>;

pub type ClusterConfig64 = clustering::ClusterConfig<f64>;
pub type ClusterModel64 = clustering::ClusterModel<f64>;
pub type DirectionTestConfig64 = direction_test::DirectionTestConfig<f64>;
pub type DirectionTestResult64 = direction_test::DirectionTestResult<f64>;
pub type DirectionDecision64 = direction_test::DirectionDecision<f64>;
pub type DataPair64 = datasets::DataPair<f64>;
pub type SimSpec64 = datasets::SimSpec<f64>;
