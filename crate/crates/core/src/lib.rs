//! Continuous-time consensus averaging under two optimal adversaries.
//!
//! The link-breaking adversary (see [`link`]) removes at most `ℓ` edges at
//! every instant; the noise-injecting adversary (see [`noise`]) adds a
//! bounded-power signal to every node. Both try to maximize the weighted
//! disagreement integral `J(u) = ∫ k(t)|x(t) − x̄|² dt`.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, reports and the
//! command-line front end live in the `consensus-attack` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

mod error;
mod math;

pub mod dynamics;
pub mod linalg;
pub mod link;
pub mod model;
pub mod noise;
pub mod scenario;

pub use error::{Error, Result};
pub use scenario::Scenario;
