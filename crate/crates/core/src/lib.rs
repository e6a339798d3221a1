//! Belief-propagation decoding of LDPC codes under flooding, group-shuffled
//! and non-disjoint group-shuffled check schedules.
//!
//! - [`tanner`]: parity-check graphs, alist I/O, random regular ensembles.
//! - [`schedule`]: check-group schedules, connectivity metric, fair iteration budgets.
//! - [`decoder`]: sum-product message passing with syndrome stopping.
//! - [`channel`]: BPSK/AWGN frames for the all-zero codeword.
//! - [`ga`]: Gaussian-approximation mean evolution and thresholds.
//! - [`sim`]: Monte-Carlo BER/FER sweeps.

pub mod channel;
pub mod decoder;
pub mod ga;
pub mod rng;
pub mod schedule;
pub mod sim;
pub mod tanner;

#[cfg(test)]
mod testutil;

pub use channel::ChannelConfig;
pub use decoder::{decode, decode_regrouped, DecodeOutcome, DecoderState};
pub use schedule::{GroupSchedule, ScheduleKind, ScheduleSpec};
pub use tanner::{DegreeDistribution, TannerGraph};
