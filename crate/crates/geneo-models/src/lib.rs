//! The concrete image models and their training machinery: MNIST-style
//! data handling, pattern banks with torus-wrapped activation maps, the two
//! pattern-based classifiers, MLP baselines, a small CNN, and deterministic
//! SGD with early stopping.
//!
//! Weights are stored and persisted as f32 (little-endian in blobs); all loss
//! and gradient arithmetic runs in f64 so analytic gradients can be verified
//! against central finite differences directly.

pub mod activation;
pub mod blackbox;
pub mod bridge;
pub mod dataset;
pub mod error;
pub mod models;
pub mod patterns;
pub mod persist;
pub mod suites;
pub mod train;

pub use dataset::{load_mnist, stratified_split, Image, ImageDataset, Split};
pub use error::{DataError, TrainError};
pub use patterns::{sample_patterns, PatternBank};
pub use train::{train_sgd, EpochStats, TrainConfig, TrainOutcome};
