//! Exact finite models of MC-filling families and MC-integrability.

pub mod cli;
pub mod cube;
pub mod dyadic;
pub mod error;
pub mod family;
pub mod filling;
pub mod gamma;
pub mod greedy;
pub mod integration;
pub mod io;
pub mod mcfilling;
pub mod measure;
pub mod partition;
pub mod pipeline;
pub mod rational;
pub mod search;
pub mod trie;
pub mod uec;
pub mod verdict;

pub use error::{Error, Result};
pub use rational::Rational;
