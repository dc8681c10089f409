//! Simulator and verification harness for a two-color asynchronous
//! complete-visibility algorithm for opaque luminous robots on a grid.

pub mod bench;
pub mod check;
pub mod cv;
pub mod error;
pub mod gen;
pub mod geometry;
pub mod render;
pub mod rules;
pub mod sim;

pub use error::{Error, Result};
