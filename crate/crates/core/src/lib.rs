//! Frequency-domain channel simulator for indoor optical wireless rooms.
//!
//! A link response is the sum of three parts, all evaluated directly on a
//! frequency grid:
//!
//! - the line-of-sight path ([`coupling`]),
//! - the first and second diffuse reflections, computed with a patch
//!   radiosity operator that is built once per room and shared by every
//!   emitter, detector and receiver pose ([`diffuse`]),
//! - every reflection of order three and above, folded into a single-pole
//!   integrating-sphere tail ([`sphere`]).
//!
//! [`assembler`] composes the three into per-link transfer functions, MIMO
//! channel matrices and mobility sweeps, and hosts the derived metrics.
//! [`scenario`] is the on-disk TOML description of a room and its devices.

// `!(x > 0.0)` style checks are meant to reject NaN too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembler;
pub mod coupling;
pub mod diffuse;
pub mod error;
pub mod geometry;
pub mod scenario;
pub mod scene;
pub mod sphere;

pub use error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
