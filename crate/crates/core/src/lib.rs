//! Downlink carrier-phase positioning toolkit.
//!
//! The crate synthesizes carrier-phase observables for an indoor-factory
//! deployment, cancels clock biases through single and double differencing
//! against a fixed reference UE, and estimates UE positions with an iterative
//! (Gauss-Newton) least-squares solver. The [`harness`] module drives seeded
//! Monte-Carlo campaigns over many drops and summarizes the error CDFs.
//!
//! Drops are independent and run on rayon when the `parallel` feature is
//! enabled (the default); without it every campaign runs sequentially with
//! identical results.

pub mod ambiguity;
pub mod differencing;
pub mod error;
pub mod estimator;
pub mod geometry;
pub mod harness;
pub mod measurement;
pub mod rng;
pub mod validate;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s (exact by definition).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
