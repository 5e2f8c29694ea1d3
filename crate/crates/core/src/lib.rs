//! Cost-aware variable selection for normal linear regression.
//!
//! Every subset of up to [`subset::MAX_PREDICTORS`] predictors is fitted
//! under a g-prior; model averaging inside each candidate purchased set is
//! scored by cross-validated squared predictive loss, and the purchase
//! decision minimizes loss plus the cost of observing the predictors.

// `!(x > 0.0)` is used on purpose so that NaN falls into the error branch.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bma;
pub mod check;
pub mod cli;
pub mod config;
pub mod dataset;
pub mod econ;
pub mod error;
pub mod extended;
pub mod gprior;
pub mod lattice;
pub mod oracle;
pub mod report;
pub mod subset;

pub use bma::{analyze, cv_loss_all_sets, ensemble_for, rank_sets, Analysis, CvLossTable, CvSettings, Ensemble};
pub use dataset::{load_csv, make_folds, standardize, synth_orthogonal, Dataset, FoldPlan};
pub use econ::{
    cost_sweep, optimal_purchase_wave, optimal_set, CostFamily, CostModel, SelectionOutcome, TimedPurchaseProblem,
};
pub use error::{Error, ErrorClass, Result};
pub use gprior::{fit_model, GPriorConfig, GRule, ModelFit};
pub use subset::PredictorSet;

pub use nalgebra;
