//! Covariance-spectrum regularization for embedding batches.
//!
//! The crate computes the Gini index of the normalized eigenvalues of a
//! batch covariance, the hinge penalty built on it, a trace-identity fast
//! path that skips eigendecomposition entirely, and the analytic gradient of
//! the penalty. Around that it carries an embedding-dispersion metric suite
//! (top-m eigenvalue ratio, k-means F-test, Calinski–Harabasz) and the audio
//! front-ends used to produce embeddings in the first place (STFT, mel
//! filterbank, constant-Q transform).
//!
//! Everything here is a pure function over in-memory data. The crate is
//! `no_std` and only needs `alloc`; file formats, WAV decoding and the
//! command-line tool live in the `becr-cli` crate.
//!
//! ```
//! use becr_core::{linalg::EmbeddingBatch, becr};
//!
//! let batch = EmbeddingBatch::from_rows(&[
//!     [1.0, 0.0, 0.0],
//!     [0.0, 1.0, 0.0],
//!     [0.0, 0.0, 1.0],
//!     [1.0, 1.0, 1.0],
//! ])?;
//! let gini = becr::gini_trace(&batch)?;
//! let penalty = becr::becr_penalty(gini, 0.7)?;
//! assert!(penalty >= 0.0);
//! # Ok::<(), becr_core::Error>(())
//! ```

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod audio;
pub mod becr;
pub mod dispersion;
mod error;
pub mod linalg;

pub use error::{Error, Result};
