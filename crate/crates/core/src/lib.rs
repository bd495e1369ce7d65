//! Evolvability evolution strategies: population distributions, behavior
//! shaping, diversity-seeking gradient estimators, a deterministic parallel
//! trainer, and the experiments built on top of them.

pub mod cli;
pub mod distributions;
pub mod envs;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod gradcheck;
pub mod kde;
pub mod policy;
pub mod runtime;
pub mod seeding;
pub mod shaping;
pub mod theoremnet;
pub mod trainer;

pub use error::{Error, Result};
