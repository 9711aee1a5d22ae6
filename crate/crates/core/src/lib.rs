//! Rate analysis for downlink macrodiversity over a multi-point
//! intermittent block fading channel.
//!
//! Closed-form ergodic and outage rates where they exist, seeded and
//! reproducible Monte Carlo estimators otherwise, and the worst-case
//! analysis of OFDM under residual timing offsets.

pub mod alamouti;
pub mod channel;
pub mod closed_forms;
pub mod error;
pub mod experiments;
pub mod ofdm;
pub mod par;
pub mod rng;
pub mod schemes;
pub mod stats;
pub mod verify;

pub use channel::{BlockageParams, ChannelConfig, ChannelState};
pub use closed_forms::{OutageSolution, RateBits};
pub use error::{Error, Result};
pub use rng::RngStream;
pub use schemes::{SchemeKind, SchemeSpec};
pub use stats::RateEstimate;
