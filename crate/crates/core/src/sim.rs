//! Monte-Carlo BER/FER sweeps over a list of `Eb/N0` points.
//!
//! Frames are decoded in fixed-size batches spread over the rayon pool.
//! Each frame draws its noise and its check groups from substreams keyed by
//! the frame index, and per-frame results are combined with integer sums,
//! so every number except the wall time is independent of the pool size.
//! Stopping rules are checked between batches only.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{ChannelConfig, ChannelError};
use crate::decoder::{decode, decode_regrouped, DecodeError};
use crate::rng::{substream, Domain};
use crate::schedule::{iteration_budget, ScheduleError, ScheduleKind, ScheduleSpec};
use crate::tanner::TannerGraph;

/// Frames decoded between checks of the stopping rule.
pub const BATCH_FRAMES: u64 = 256;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// How the iteration limit is applied to a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Fairness {
    /// Every schedule gets `max_iterations`.
    #[default]
    Raw,
    /// Non-disjoint schedules get fewer iterations so that their check-update
    /// work matches `max_iterations` flooding iterations.
    Budgeted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub schedule: ScheduleSpec,
    pub ebn0_db: Vec<f64>,
    pub max_iterations: usize,
    pub fairness: Fairness,
    pub max_frames: u64,
    pub min_frame_errors: u64,
    pub seed_channel: u64,
    pub seed_schedule: u64,
    /// Draw new groups at the start of every iteration.
    pub regroup: bool,
    /// Code rate used to convert `Eb/N0` to noise variance; `1 − M/N` when unset.
    pub rate: Option<f64>,
}

impl SimConfig {
    pub fn new(schedule: ScheduleSpec, ebn0_db: Vec<f64>) -> Self {
        Self {
            schedule,
            ebn0_db,
            max_iterations: 50,
            fairness: Fairness::Raw,
            max_frames: 100_000,
            min_frame_errors: 100,
            seed_channel: 1,
            seed_schedule: 2,
            regroup: true,
            rate: None,
        }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let fail = |msg: &str| Err(SimError::Config(msg.to_string()));
        if self.ebn0_db.is_empty() {
            return fail("at least one Eb/N0 point is required");
        }
        if self.ebn0_db.iter().any(|x| !x.is_finite()) {
            return fail("Eb/N0 values must be finite");
        }
        if self.min_frame_errors == 0 {
            return fail("min_frame_errors must be at least 1");
        }
        if self.max_frames == 0 {
            return fail("max_frames must be at least 1");
        }
        if self.max_iterations == 0 {
            return fail("max_iterations must be at least 1");
        }
        Ok(())
    }
}

/// Results for one `Eb/N0` point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub ebn0_db: f64,
    pub sigma2: f64,
    pub schedule: ScheduleKind,
    #[serde(rename = "G")]
    pub n_groups: usize,
    pub r: f64,
    pub fairness: Fairness,
    pub iteration_limit: usize,
    pub frames: u64,
    pub bit_errors: u64,
    pub frame_errors: u64,
    pub ber: f64,
    pub fer: f64,
    pub converged_frames: u64,
    /// Mean iterations over frames whose syndrome reached zero.
    pub mean_iterations_converged: Option<f64>,
    pub mean_iterations: f64,
    /// Check updates per frame, averaged.
    pub mean_check_updates: f64,
    /// Largest check-update count of any frame.
    pub max_check_updates: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
struct Tally {
    frames: u64,
    bit_errors: u64,
    frame_errors: u64,
    converged: u64,
    iterations: u64,
    iterations_converged: u64,
    check_updates: u64,
    max_check_updates: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            frames: self.frames + o.frames,
            bit_errors: self.bit_errors + o.bit_errors,
            frame_errors: self.frame_errors + o.frame_errors,
            converged: self.converged + o.converged,
            iterations: self.iterations + o.iterations,
            iterations_converged: self.iterations_converged + o.iterations_converged,
            check_updates: self.check_updates + o.check_updates,
            max_check_updates: self.max_check_updates.max(o.max_check_updates),
        }
    }
}

/// Iteration limit for `spec` on a graph with `n_checks` checks.
pub fn iteration_limit(n_checks: usize, cfg: &SimConfig) -> Result<usize, SimError> {
    match cfg.fairness {
        Fairness::Raw => Ok(cfg.max_iterations),
        Fairness::Budgeted => {
            let probe = cfg.schedule.build(
                n_checks,
                &mut substream(cfg.seed_schedule, Domain::Schedule, 0),
            )?;
            Ok(iteration_budget(n_checks, cfg.max_iterations, &probe).max(1))
        }
    }
}

fn decode_frame(
    g: &TannerGraph,
    cfg: &SimConfig,
    channel: &ChannelConfig,
    limit: usize,
    frame: u64,
) -> Result<Tally, SimError> {
    let llr = channel.transmit_all_zero(g.n_vars(), frame);
    let mut rng = substream(cfg.seed_schedule, Domain::Schedule, frame);
    let schedule = cfg.schedule.build(g.n_checks(), &mut rng)?;
    let out = if cfg.regroup {
        decode_regrouped(g, &schedule, &llr, limit, &mut rng)?
    } else {
        decode(g, &schedule, &llr, limit)?
    };
    let bit_errors = out.bits.iter().filter(|&&b| b != 0).count() as u64;
    let iterations = out.iterations as u64;
    Ok(Tally {
        frames: 1,
        bit_errors,
        frame_errors: u64::from(bit_errors > 0),
        converged: u64::from(out.converged),
        iterations,
        iterations_converged: if out.converged { iterations } else { 0 },
        check_updates: out.check_updates as u64,
        max_check_updates: out.check_updates as u64,
    })
}

/// Simulate a single `Eb/N0` point.
pub fn run_point(g: &TannerGraph, cfg: &SimConfig, ebn0_db: f64) -> Result<SnrPoint, SimError> {
    cfg.validate()?;
    let start = Instant::now();
    let rate = cfg
        .rate
        .unwrap_or(1.0 - g.n_checks() as f64 / g.n_vars() as f64);
    let channel = ChannelConfig::from_ebn0(ebn0_db, rate, cfg.seed_channel)?;
    let limit = iteration_limit(g.n_checks(), cfg)?;
    let mut tally = Tally::default();
    while tally.frames < cfg.max_frames && tally.frame_errors < cfg.min_frame_errors {
        let end = (tally.frames + BATCH_FRAMES).min(cfg.max_frames);
        let batch = (tally.frames..end)
            .into_par_iter()
            .map(|frame| decode_frame(g, cfg, &channel, limit, frame))
            .try_reduce(Tally::default, |a, b| Ok(a.merge(b)))?;
        tally = tally.merge(batch);
    }
    let frames = tally.frames as f64;
    Ok(SnrPoint {
        ebn0_db,
        sigma2: channel.sigma2,
        schedule: cfg.schedule.kind,
        n_groups: cfg.schedule.n_groups,
        r: cfg.schedule.overlap,
        fairness: cfg.fairness,
        iteration_limit: limit,
        frames: tally.frames,
        bit_errors: tally.bit_errors,
        frame_errors: tally.frame_errors,
        ber: tally.bit_errors as f64 / (frames * g.n_vars() as f64),
        fer: tally.frame_errors as f64 / frames,
        converged_frames: tally.converged,
        mean_iterations_converged: (tally.converged > 0)
            .then(|| tally.iterations_converged as f64 / tally.converged as f64),
        mean_iterations: tally.iterations as f64 / frames,
        mean_check_updates: tally.check_updates as f64 / frames,
        max_check_updates: tally.max_check_updates,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Simulate every configured `Eb/N0` point in order.
pub fn run_sweep(g: &TannerGraph, cfg: &SimConfig) -> Result<Vec<SnrPoint>, SimError> {
    cfg.validate()?;
    cfg.ebn0_db
        .iter()
        .map(|&eb| run_point(g, cfg, eb))
        .collect()
}
