//! Downstream inference on an embedding: community detection and the
//! membership-profile equality test.

mod chi2;
mod cluster;
mod variance;

pub use chi2::{chi2_cdf, chi2_quantile, chi2_sf};
pub use cluster::{clustering_error, kmeans_rows, wcss, Clustering, KMEANS_DEFAULT_MAX_ITERS, KMEANS_DEFAULT_RESTARTS};
pub use variance::{
    membership_test, membership_tests, test_statistic, variance_objects_plugin, variance_objects_plugin_batch,
    variance_objects_true, MembershipTestReport, PluginEstimates, VarianceKind, VarianceObjects, PROB_CLAMP,
};

use thiserror::Error;

use crate::linalg::{LinalgError, Mat};

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("score gram is singular: eigenvalues {min:e} .. {max:e}")]
    SingularScoreGram { min: f64, max: f64 },
    #[error("covariance sum is not positive definite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveDefinite { min_eigenvalue: f64, covariance: Mat },
}

pub type Result<T> = std::result::Result<T, InferError>;
