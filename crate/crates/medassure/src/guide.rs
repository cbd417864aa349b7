//! The narrative guide, one module per chapter.
//!
//! Each chapter is the same Markdown file that mdbook renders from
//! `book/src/`, included here so that `cargo test --doc` compiles and runs
//! every Rust snippet in the book. If a chapter drifts from the API, the
//! doc-tests fail.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/records.md")]
pub mod records {}

#[doc = include_str!("../../../book/src/synthetic-data.md")]
pub mod synthetic_data {}

#[doc = include_str!("../../../book/src/structure-learning.md")]
pub mod structure_learning {}

#[doc = include_str!("../../../book/src/inference.md")]
pub mod inference {}

#[doc = include_str!("../../../book/src/baseline.md")]
pub mod baseline {}

#[doc = include_str!("../../../book/src/process-mining.md")]
pub mod process_mining {}

#[doc = include_str!("../../../book/src/safety-arguments.md")]
pub mod safety_arguments {}

#[doc = include_str!("../../../book/src/pipeline.md")]
pub mod pipeline {}

#[doc = include_str!("../../../book/src/reproduction-targets.md")]
pub mod reproduction_targets {}
