//! Performance model of a single-cell D2D underlay in which D2D
//! transmitters harvest RF energy from the base station's downlink and
//! contend for the uplink with either a fixed transmit probability (FTP)
//! or carrier sensing against a protection threshold (ATP).
//!
//! [`analysis`] evaluates the closed-form operable probabilities, outage
//! probabilities and sum-rates; [`simulator`] runs the slot-level protocol
//! with explicit batteries, fading and sensing and serves as the
//! independent check on every analytical quantity.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod model;
pub mod numerics;
pub mod report;
pub mod simulator;

pub use error::{Error, Result};
pub use model::{NetworkParams, SchemeConfig};
pub use report::{MetricsReport, ReportMode};
