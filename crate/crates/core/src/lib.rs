//! Toolkit for training and evaluating self-explaining models built from
//! separately trained predictor and explainer stages.

pub mod backend;
pub mod cli;
pub mod config;
pub mod corpus;
pub mod error;
pub mod experiments;
pub mod kv;
pub mod metrics;
pub mod pipelines;
pub mod taskformat;

pub use error::{Error, Result};
