//! Gaussian-approximation mean evolution for flooding, group-shuffled and
//! non-disjoint group-shuffled schedules.
//!
//! Check-node messages within an iteration are split by how their check
//! relates to the current group: not yet updated (`a`), shared with the
//! previous group (`b`), fresh in the current group (`c`), and already
//! updated this iteration (`d`). Only message means are tracked.

// `!(x >= 0.0)` style guards are meant to reject NaN as well
#[allow(clippy::neg_cmp_op_on_partial_ord)]
mod engine;
#[allow(clippy::neg_cmp_op_on_partial_ord)]
mod phi;

pub use engine::*;
pub use phi::{ln_phi_exact, phi, phi_inverse, FittedPhi, PhiKernel, PhiModel, PhiTable};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GaError {
    #[error("negative or NaN mean {0}")]
    NegativeMean(f64),
    #[error("Φ⁻¹ argument {0} outside (0, 1]")]
    PhiDomain(f64),
    #[error("p + q = {sum} exceeds i − 1 = {limit}")]
    Infeasible { sum: usize, limit: usize },
    #[error("class fractions outside [0, 1] at subiteration {g} of {n_groups} (r = {overlap})")]
    Fractions {
        g: usize,
        n_groups: usize,
        overlap: f64,
    },
    #[error("subiteration {0} has no previous group")]
    FirstGroup(usize),
    #[error("degree {0} leaves no other neighbor to condition on")]
    NoConditioningMass(usize),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("threshold not bracketed: converges at {lo_db} dB = {lo_converges}, at {hi_db} dB = {hi_converges}")]
    Bracket {
        lo_db: f64,
        hi_db: f64,
        lo_converges: bool,
        hi_converges: bool,
    },
}
