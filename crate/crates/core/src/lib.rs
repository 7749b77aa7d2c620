//! Emotion-semantic correlation model for empathetic dialogue.

pub mod autograd;
pub mod checkpoint;
pub mod config;
pub mod corpus;
pub mod emotion;
pub mod error;
pub mod eval;
pub mod gradcheck;
pub mod metrics;
pub mod miner;
pub mod model;
pub mod params;
pub mod tensor;
pub mod train;

pub use error::{Error, Result};
