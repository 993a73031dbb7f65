//! Chinese MRC dataset construction, length-distribution span masking and
//! span / cloze scoring.

pub mod assembly;
pub mod cli;
pub mod corpus;
pub mod dataset;
pub mod error;
pub mod jsonl;
pub mod masking;
pub mod metrics;
pub mod seed;
pub mod stats;
pub mod synthetic;
pub mod tokenizer;

pub use error::{Error, Result};
