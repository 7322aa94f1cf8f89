//! Detect unfairness in human decision labels.
//!
//! A logistic-regression learner is trained on the decisions after
//! FairBalanceClass reweighting, which removes group-size and per-group class
//! imbalance but leaves label bias in place. The equal-opportunity and
//! average-odds differences of that model on held-out data then reveal
//! whether, and in which direction, the labels favor one side of a sensitive
//! attribute.
//!
//! The [`harness`] module reproduces the synthetic label-injection experiment
//! end to end: repeated seeded splits, directional label flipping on the
//! training split, reweighting, training, evaluation, and median/IQR tables.

pub mod dataset;
pub mod detector;
pub mod error;
pub mod harness;
pub mod inject;
pub mod learner;
pub mod metrics;
pub mod reweigh;

pub use error::{Error, Result};
