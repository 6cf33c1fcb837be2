//! Straight-line `f64` reference implementations.
//!
//! Nothing here shares code with the runtime: every routine is written from
//! its mathematical definition with plain nested loops, single batch item at
//! a time, so it can serve as an independent check.

#![allow(clippy::needless_range_loop)]

pub mod detect;
pub mod fusion;
pub mod nn;
pub mod numeric;

pub use nn::{Bn, Conv, Volume};
