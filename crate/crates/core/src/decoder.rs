//! Sum-product decoding under an arbitrary check-group schedule.
//!
//! One sub-iteration processes one group of checks in two phases separated by
//! a barrier: every check in the group recomputes its outgoing messages from
//! the current variable-to-check messages, then every variable adjacent to
//! the group refreshes its outgoing messages on *all* of its edges. Because
//! the refresh also reaches edges into groups not yet processed, later groups
//! in the same iteration see the new information. A flooding iteration is
//! the special case of a single group holding every check.
//!
//! Check nodes use the log-domain form of the tanh rule,
//! `|L_{m→n}| = φ(Σ_{n'≠n} φ(|L_{n'→m}|))` with `φ(x) = −ln tanh(x/2)`, and
//! forward/backward exclusion sums so each check costs `O(d_c)` without any
//! division. All messages are clamped to `±LLR_MAX`.

use rand::Rng;
use thiserror::Error;

use crate::schedule::{GroupSchedule, ScheduleError};
use crate::tanner::TannerGraph;

/// Saturation level for every LLR message.
pub const LLR_MAX: f64 = 30.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecodeError {
    #[error("expected {expected} channel LLRs, got {found}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("check {check} is not adjacent to variable {var}")]
    NotNeighbor { var: usize, check: usize },
    #[error("max_iters must be at least 1")]
    ZeroIterations,
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

#[inline]
fn clamp_llr(x: f64) -> f64 {
    x.clamp(-LLR_MAX, LLR_MAX)
}

/// `φ(x) = ln((e^x + 1)/(e^x − 1))` for `x ≥ 0`; an involution with
/// `φ(0) = ∞` and `φ(∞) = 0`.
#[inline]
pub fn phi_llr(x: f64) -> f64 {
    (2.0 / x.exp_m1()).ln_1p()
}

/// Scratch space for the check kernel.
#[derive(Debug, Clone, Default)]
pub struct CheckScratch {
    sum: Vec<f64>,
    min: Vec<f64>,
    neg: Vec<bool>,
}

/// Tanh-rule check update: `outputs[k]` receives the extrinsic message for
/// the `k`-th edge computed from all other `inputs`.
pub fn check_node_kernel(inputs: &[f64], outputs: &mut [f64], scratch: &mut CheckScratch) {
    let d = inputs.len();
    debug_assert_eq!(outputs.len(), d);
    let CheckScratch { sum, min, neg } = scratch;
    sum.clear();
    min.clear();
    neg.clear();

    // forward pass: exclusive prefix sum / min / sign parity
    let (mut s, mut lo, mut parity) = (0.0f64, f64::INFINITY, false);
    for &x in inputs {
        sum.push(s);
        min.push(lo);
        neg.push(parity);
        let x = clamp_llr(x);
        s += phi_llr(x.abs());
        lo = lo.min(x.abs());
        parity ^= x < 0.0;
    }
    // backward pass combines with the exclusive suffix
    let (mut s, mut lo, mut parity) = (0.0f64, f64::INFINITY, false);
    for k in (0..d).rev() {
        let magnitude = phi_llr(sum[k] + s).min(min[k].min(lo)).min(LLR_MAX);
        outputs[k] = if neg[k] ^ parity {
            -magnitude
        } else {
            magnitude
        };
        let x = clamp_llr(inputs[k]);
        s += phi_llr(x.abs());
        lo = lo.min(x.abs());
        parity ^= x < 0.0;
    }
}

/// Per-frame message state.
#[derive(Debug, Clone)]
pub struct DecoderState {
    channel_llr: Vec<f64>,
    v2c: Vec<f64>,
    c2v: Vec<f64>,
    total_llr: Vec<f64>,
    hard_decision: Vec<u8>,
    iteration: usize,
    scratch: CheckScratch,
    var_stamp: Vec<usize>,
    stamp: usize,
}

impl DecoderState {
    /// Loads channel LLRs: every variable-to-check message starts at its
    /// variable's channel LLR and check-to-variable messages start at zero.
    pub fn new(g: &TannerGraph, channel_llr: &[f64]) -> Result<Self, DecodeError> {
        if channel_llr.len() != g.n_vars() {
            return Err(DecodeError::LengthMismatch {
                expected: g.n_vars(),
                found: channel_llr.len(),
            });
        }
        let channel_llr: Vec<f64> = channel_llr.iter().map(|&x| clamp_llr(x)).collect();
        let v2c = (0..g.n_edges())
            .map(|e| channel_llr[g.edge_endpoints(e).1])
            .collect();
        Ok(Self {
            total_llr: channel_llr.clone(),
            hard_decision: channel_llr.iter().map(|&x| u8::from(x < 0.0)).collect(),
            channel_llr,
            v2c,
            c2v: vec![0.0; g.n_edges()],
            iteration: 0,
            scratch: CheckScratch::default(),
            var_stamp: vec![0; g.n_vars()],
            stamp: 0,
        })
    }

    pub fn channel_llr(&self) -> &[f64] {
        &self.channel_llr
    }

    /// Variable-to-check messages indexed by edge id.
    pub fn v2c(&self) -> &[f64] {
        &self.v2c
    }

    /// Check-to-variable messages indexed by edge id.
    pub fn c2v(&self) -> &[f64] {
        &self.c2v
    }

    pub fn total_llr(&self) -> &[f64] {
        &self.total_llr
    }

    pub fn hard_decision(&self) -> &[u8] {
        &self.hard_decision
    }

    pub fn iteration(&self) -> usize {
        self.iteration
    }

    /// Recomputes every outgoing message of check `m`.
    pub fn check_update(&mut self, g: &TannerGraph, m: usize) {
        let edges = g.check_edges(m);
        check_node_kernel(
            &self.v2c[edges.clone()],
            &mut self.c2v[edges],
            &mut self.scratch,
        );
    }

    /// `L_n + Σ_{m' ∈ M(n) \ exclude} L_{m'→n}`, summed in adjacency order.
    pub fn var_update(
        &self,
        g: &TannerGraph,
        n: usize,
        exclude: usize,
    ) -> Result<f64, DecodeError> {
        let skip = g
            .var_neighbors(n)
            .iter()
            .position(|&m| m == exclude)
            .ok_or(DecodeError::NotNeighbor {
                var: n,
                check: exclude,
            })?;
        Ok(self.extrinsic(g, n, skip))
    }

    fn extrinsic(&self, g: &TannerGraph, n: usize, skip: usize) -> f64 {
        g.var_edges(n)
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != skip)
            .fold(self.channel_llr[n], |acc, (_, &e)| acc + self.c2v[e])
    }

    fn refresh_var(&mut self, g: &TannerGraph, n: usize) {
        for (k, &e) in g.var_edges(n).iter().enumerate() {
            self.v2c[e] = clamp_llr(self.extrinsic(g, n, k));
        }
    }

    /// Check phase for `group`, then refresh of every adjacent variable.
    pub fn run_subiteration(&mut self, g: &TannerGraph, group: &[usize]) {
        for &m in group {
            self.check_update(g, m);
        }
        self.stamp += 1;
        for &m in group {
            for &n in g.check_neighbors(m) {
                if self.var_stamp[n] != self.stamp {
                    self.var_stamp[n] = self.stamp;
                    self.refresh_var(g, n);
                }
            }
        }
    }

    /// Total LLRs and hard decisions; ties decode to 0.
    pub fn update_decisions(&mut self, g: &TannerGraph) {
        for n in 0..g.n_vars() {
            let total = g
                .var_edges(n)
                .iter()
                .fold(self.channel_llr[n], |acc, &e| acc + self.c2v[e]);
            self.total_llr[n] = total;
            self.hard_decision[n] = u8::from(total < 0.0);
        }
    }

    /// One full iteration over `schedule`. Returns the syndrome weight of the
    /// resulting hard decisions.
    pub fn iterate(&mut self, g: &TannerGraph, schedule: &GroupSchedule) -> usize {
        for group in &schedule.groups {
            self.run_subiteration(g, group);
        }
        self.update_decisions(g);
        self.iteration += 1;
        g.syndrome_weight(&self.hard_decision)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeOutcome {
    pub bits: Vec<u8>,
    /// Set when the final hard decisions satisfy every check.
    pub converged: bool,
    pub iterations: usize,
    /// Syndrome weight after each iteration.
    pub syndrome_trace: Vec<usize>,
    /// Check-node updates executed, summed over sub-iterations.
    pub check_updates: usize,
}

/// Decodes with a fixed schedule.
pub fn decode(
    g: &TannerGraph,
    schedule: &GroupSchedule,
    channel_llr: &[f64],
    max_iters: usize,
) -> Result<DecodeOutcome, DecodeError> {
    run(
        g,
        schedule,
        channel_llr,
        max_iters,
        None::<&mut rand_chacha::ChaCha8Rng>,
    )
}

/// Decodes with a fresh draw of the schedule's groups at the start of every
/// iteration after the first. `schedule` is used for the first iteration.
pub fn decode_regrouped<R: Rng>(
    g: &TannerGraph,
    schedule: &GroupSchedule,
    channel_llr: &[f64],
    max_iters: usize,
    rng: &mut R,
) -> Result<DecodeOutcome, DecodeError> {
    run(g, schedule, channel_llr, max_iters, Some(rng))
}

fn run<R: Rng>(
    g: &TannerGraph,
    schedule: &GroupSchedule,
    channel_llr: &[f64],
    max_iters: usize,
    mut regroup: Option<&mut R>,
) -> Result<DecodeOutcome, DecodeError> {
    if max_iters == 0 {
        return Err(DecodeError::ZeroIterations);
    }
    let mut state = DecoderState::new(g, channel_llr)?;
    let spec = schedule.spec();
    let mut current = schedule.clone();
    let mut syndrome_trace = Vec::new();
    let mut check_updates = 0;
    for l in 0..max_iters {
        if l > 0 {
            if let Some(rng) = regroup.as_deref_mut() {
                current = spec.build(g.n_checks(), rng)?;
            }
        }
        let weight = state.iterate(g, &current);
        check_updates += current.work_per_iteration();
        syndrome_trace.push(weight);
        if weight == 0 {
            break;
        }
    }
    Ok(DecodeOutcome {
        converged: syndrome_trace.last() == Some(&0),
        iterations: syndrome_trace.len(),
        bits: state.hard_decision,
        syndrome_trace,
        check_updates,
    })
}
