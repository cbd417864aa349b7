//! Safety assurance for medication management, built from data.
//!
//! This crate connects two views of a clinical process. The *imagined* view
//! is a guideword-based hazard analysis: hazards, their causes, detections
//! and effects. The *observed* view is learnt from encounter records and
//! event logs: a Bayesian-network structure scored with BDeu, fitted
//! conditional probability tables, posterior risk queries, and a
//! directly-follows process model. A generated goal-structured safety
//! argument ties the two together, and a gap report lists where the data
//! refused to confirm the analysis (and what it showed instead).
//!
//! The pieces compose as a pipeline (see [`pipeline`]) but are usable on
//! their own:
//!
//! - [`records`]: variable schema, encounter CSV ingest, encoding rules
//! - [`synth`]: forward sampling from a planted network for verification
//! - [`bn`]: DAG scoring, greedy structure search, CPDAGs, exact inference
//! - [`logreg`]: logistic-regression baseline classifier
//! - [`procmine`]: event logs and directly-follows graph discovery
//! - [`assurance`]: hazard tables, findings, GSN arguments, gap reports
//! - [`pipeline`]: config-driven end-to-end runs with a checksum manifest

// Negated float comparisons like `!(x > 0.0)` treat NaN as invalid input;
// the un-negated forms would let NaN through. Numeric reference constants
// keep their full published digits.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod assurance;
pub mod bn;
pub mod error;
pub mod logreg;
pub mod metrics;
pub mod pipeline;
pub mod procmine;
pub mod records;
pub mod rng;
pub mod synth;

pub mod guide;

pub use error::{Error, ErrorKind, Result};
