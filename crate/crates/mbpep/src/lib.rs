//! Prediction intervals from pruned deep ensembles.
//!
//! The pipeline: bootstrap-resample a regression dataset, train a pool of
//! small two-output MLPs ([`nnet`]) against a differentiable coverage/width
//! loss ([`piloss`]), prune the pool to a subset chosen from a Pareto archive
//! scored by interval width and loss ([`ensemble::pareto_prune`]), and
//! integrate the survivors' bounds by per-sample median vote.
//!
//! Everything is seeded and deterministic: the same seed produces the same
//! ensemble, byte for byte, regardless of thread count.

pub mod data;
pub mod ensemble;
pub mod error;
pub mod matrix;
pub mod nnet;
pub mod piloss;
pub mod seeds;

pub use error::{Error, Result};
pub use matrix::Matrix;
