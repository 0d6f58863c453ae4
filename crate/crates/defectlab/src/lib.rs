//! Defect-prediction experiment toolkit.
//!
//! The pipeline: ingest ARFF/CSV datasets, impute missing values globally,
//! binarize nominal attributes, rebalance the training data by learning
//! per-class per-feature distributions and regenerating a fully balanced
//! set (DBB), train an RBF-network classifier, and evaluate under
//! stratified cross-validation with imbalance-aware metrics. A separate
//! stats module ranks competing classifiers with the Kruskal-Wallis test,
//! post-hoc pairwise comparisons and multiple-testing adjustments.

pub mod balance;
pub mod config;
pub mod data;
pub mod error;
pub mod eval;
pub mod rbf;
pub mod runner;
pub mod stats;

pub use error::{Error, Result};
