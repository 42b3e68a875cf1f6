//! Forum-sentiment indicators and recurrent-network prediction of daily
//! stock-volatility direction.
//!
//! The stages run in order: [`corpus`] featurizes posts, [`sentiment`] fits a
//! logistic classifier and scores them, [`indicators`] turns scores into daily
//! bullishness and volume z-scores, [`market`] derives volatility labels and
//! joins them with the indicators, [`rnn`] trains the Elman network and the
//! baselines, and [`eval`] runs the seeded k-sweep and comparison tables.
//! [`pipeline`] chains the stages through files.

pub mod config;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod fmt;
pub mod indicators;
pub mod io;
pub mod market;
pub mod pipeline;
pub mod rnn;
pub mod sentiment;
pub mod synth;

pub use config::PipelineConfig;
pub use error::{Error, Result};
