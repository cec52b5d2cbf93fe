//! Graph spectral deconvolution toolkit.
//!
//! Builds up, layer by layer, everything needed to run a Wiener-decoder
//! graph autoencoder on desk-scale graphs and to verify its statistical
//! claims numerically:
//!
//! - [`graph`]: sparse undirected graphs in compressed-row form, normalized
//!   Laplacians, random-walk matrices, sparse-dense products, and synthetic
//!   graph generators.
//! - [`linalg`]: dense symmetric eigendecomposition (cyclic Jacobi), a
//!   pivoted linear solver, and a deterministic seeded RNG shared by every
//!   stochastic component.
//! - [`kernels`]: scalar spectral filters (GCN, heat, PPR), their inverses,
//!   the graph Wiener filter, and the estimators that feed it.
//! - [`remez`]: one-shot Remez (minimax) polynomial fits of scalar filters
//!   on the Laplacian spectrum, and their decomposition-free application
//!   to feature matrices.
//! - [`model`]: the autoencoder itself — spectral encoder, latent Gaussian
//!   augmentation, multi-channel Wiener decoder with per-epoch adaptive
//!   refits, manual backpropagation, and Adam.
//! - [`eval`]: numerical verification of the Wiener-filter error bounds,
//!   Monte Carlo reconstruction experiments, stability sweeps, and a
//!   logistic-regression probe for embedding quality.
//! - [`io`]: edge-list / CSV / label-file ingestion and checkpoint
//!   persistence used by the `wgdn` binary.

pub mod eval;
pub mod graph;
pub mod io;
pub mod kernels;
pub mod linalg;
pub mod model;
pub mod remez;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("matrix is not symmetric (max |a_ij - a_ji| = {0:.3e})")]
    NotSymmetric(f64),

    #[error("eigensolver did not converge (off-diagonal norm {0:.3e} after {1} sweeps)")]
    NoConvergence(f64, usize),

    #[error("singular linear system (pivot {0:.3e})")]
    SingularSystem(f64),

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("training diverged at epoch {epoch} (non-finite loss)")]
    Diverged { epoch: usize, history: Vec<f64> },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
