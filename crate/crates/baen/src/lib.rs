//! Robust binary SVM with a bounded asymmetric elastic-net loss.
//!
//! The loss penalizes margin violations asymmetrically (overshoot on the
//! correct side can be charged at a fraction `tau` of the violation rate),
//! mixes L1/L2 behavior through `p`, and is smoothly rescaled into a bounded
//! range so that far outliers exert vanishing influence. Training proceeds
//! by half-quadratic reweighting: each outer step freezes per-sample weights
//! and solves a weighted elastic-net SVM dual with a clipped coordinate
//! descent solver.
//!
//! Modules:
//! - [`loss`]: the loss, its bounded form, and derivatives
//! - [`kernel`]: linear and RBF kernels with an implicit bias term
//! - [`qp`]: the nonnegativity-constrained dual and its coordinate solver
//! - [`trainer`]: the half-quadratic outer loop, model type, presets
//! - [`data`]: CSV ingestion, synthetic data, noise injection, folds
//! - [`eval`]: metrics, cross-validation, rank statistics, theory probes

pub mod data;
pub mod error;
pub mod eval;
pub mod kernel;
pub mod loss;
pub mod qp;
pub mod trainer;

pub use error::{Error, Result};
pub use kernel::KernelSpec;
pub use loss::LossParams;
pub use trainer::{fit, Model, Preset, TrainConfig};
