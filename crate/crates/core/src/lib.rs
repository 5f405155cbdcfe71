//! Rate-maximizing power and time-fraction allocation for a decode-and-forward
//! relay link whose source is powered only by RF energy harvested from the
//! relay.
//!
//! Three schemes are provided:
//!
//! - [`jopta`]: relay power and harvesting time fraction chosen jointly per
//!   fading block,
//! - [`opa`]: relay power chosen per block with one fixed time fraction,
//! - [`fpta`]: fixed power and fixed time fraction, the benchmark.
//!
//! Rates are in nats per channel use unless stated otherwise.

// `!(x > 0.0)` is used on purpose throughout: unlike `x <= 0.0` it also
// rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod error;
pub mod experiment;
pub mod fpta;
pub mod jopta;
pub mod numerics;
pub mod opa;
pub mod ratefns;
pub mod solution;

pub use channel::{ChannelParams, EpochChannel};
pub use error::{Error, Result};
pub use numerics::SolverSettings;
pub use ratefns::{EpochAllocation, EpochRate};
pub use solution::SchemeSolution;
