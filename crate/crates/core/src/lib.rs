//! Zero-inflated Gamma matrix factorization fitted by alternating Fisher
//! scoring.
//!
//! A non-negative matrix `Y` with many exact zeros is modeled cell by cell:
//! `Y_ij` is zero with probability `1 - p_ij` and otherwise Gamma distributed
//! with mean `mu_ij` and shape `nu`. Both parts share one latent vector per row
//! (`w_i`) and per column (`w~_j`):
//!
//! ```text
//! logit p_ij = w_i . w~_j + b_i + b~_j
//! g(mu_ij)   = w_i . w~_j + e_i + e~_j      g = log or -1/mu
//! ```
//!
//! [`trainer::fit`] alternates between rows and columns, taking damped Fisher
//! scoring steps for one index while the other side is held fixed.
//!
//! The `examples/` directory has one runnable program per capability:
//! `simulate_setting1`, `fit_simulated`, `lr_schedule_contrast`,
//! `canonical_step_halving`, `cooccurrence_embeddings`,
//! `separation_diagnostics` and `gradient_check`.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod cooccur;
pub mod diagnostics;
pub mod embed;
pub mod error;
pub mod io;
pub mod likelihood;
pub mod model;
mod par;
pub mod scoring;
pub mod simulate;
pub mod sparse;
pub mod trainer;

pub use error::{Error, Result};
pub use model::{Link, ModelState, Side, SideParams};
pub use sparse::SparseCountMatrix;
pub use trainer::{fit, FitConfig, FitResult, Init};
