//! Check-node group schedules.
//!
//! A schedule is an ordered list of check-node groups. One decoding iteration
//! runs one sub-iteration per group, in order. Three kinds are supported:
//!
//! - **flooding**: a single group holding every check;
//! - **disjoint** (group-shuffled BP): a random partition into `G` groups;
//! - **non-disjoint**: `G` groups of nominal size `N_G` where each group after
//!   the first re-uses `k = round(N_G·r)` checks drawn from the fresh part of
//!   its predecessor and fills the rest with checks not yet scheduled.
//!
//! Non-disjoint groups overlap only with their immediate neighbors, so every
//! check sits in at most two groups.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tanner::TannerGraph;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScheduleError {
    #[error("group count {n_groups} must be between 1 and the number of checks {n_checks}")]
    GroupCountOutOfRange { n_groups: usize, n_checks: usize },
    #[error("overlap ratio {0} must lie in [0, 1)")]
    OverlapOutOfRange(f64),
    #[error("schedule (G={n_groups}, r={overlap}) is infeasible: {reason}")]
    Infeasible {
        n_groups: usize,
        overlap: f64,
        reason: String,
    },
    #[error("schedule is invalid: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScheduleKind {
    Flooding,
    Disjoint,
    NonDisjoint,
}

/// Parameters from which concrete schedules are drawn.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleSpec {
    pub kind: ScheduleKind,
    pub n_groups: usize,
    pub overlap: f64,
}

impl ScheduleSpec {
    pub fn flooding() -> Self {
        Self {
            kind: ScheduleKind::Flooding,
            n_groups: 1,
            overlap: 0.0,
        }
    }

    pub fn disjoint(n_groups: usize) -> Self {
        Self {
            kind: ScheduleKind::Disjoint,
            n_groups,
            overlap: 0.0,
        }
    }

    pub fn non_disjoint(n_groups: usize, overlap: f64) -> Self {
        Self {
            kind: ScheduleKind::NonDisjoint,
            n_groups,
            overlap,
        }
    }

    /// Nominal group size `N_G = ⌈M / (G − (G−1)·r)⌉`.
    pub fn nominal_group_size(&self, n_checks: usize) -> usize {
        match self.kind {
            ScheduleKind::Flooding => n_checks,
            ScheduleKind::Disjoint => n_checks.div_ceil(self.n_groups),
            ScheduleKind::NonDisjoint => {
                let g = self.n_groups as f64;
                let exact = n_checks as f64 / (g - (g - 1.0) * self.overlap);
                // 252 / 7.6 style quotients must not round up on representation error
                let nearest = exact.round();
                let size = if (exact - nearest).abs() < 1e-9 {
                    nearest
                } else {
                    exact.ceil()
                };
                (size as usize).min(n_checks)
            }
        }
    }

    /// Checks shared by consecutive groups, `round(N_G·r)`.
    pub fn overlap_count(&self, n_checks: usize) -> usize {
        match self.kind {
            ScheduleKind::NonDisjoint => {
                (self.nominal_group_size(n_checks) as f64 * self.overlap).round() as usize
            }
            _ => 0,
        }
    }

    /// Draws a concrete schedule over `n_checks` checks.
    pub fn build<R: Rng + ?Sized>(
        &self,
        n_checks: usize,
        rng: &mut R,
    ) -> Result<GroupSchedule, ScheduleError> {
        if self.n_groups == 0 || self.n_groups > n_checks {
            return Err(ScheduleError::GroupCountOutOfRange {
                n_groups: self.n_groups,
                n_checks,
            });
        }
        if !(0.0..1.0).contains(&self.overlap) {
            return Err(ScheduleError::OverlapOutOfRange(self.overlap));
        }
        match self.kind {
            ScheduleKind::Flooding => Ok(GroupSchedule {
                kind: ScheduleKind::Flooding,
                groups: vec![(0..n_checks).collect()],
                group_size: n_checks,
                overlap_ratio: 0.0,
            }),
            ScheduleKind::Disjoint => Ok(disjoint_partition(
                ScheduleKind::Disjoint,
                n_checks,
                self.n_groups,
                rng,
            )),
            ScheduleKind::NonDisjoint if self.overlap_count(n_checks) == 0 => {
                let mut s =
                    disjoint_partition(ScheduleKind::NonDisjoint, n_checks, self.n_groups, rng);
                s.overlap_ratio = self.overlap;
                Ok(s)
            }
            ScheduleKind::NonDisjoint => self.build_overlapping(n_checks, rng),
        }
    }

    fn build_overlapping<R: Rng + ?Sized>(
        &self,
        n_checks: usize,
        rng: &mut R,
    ) -> Result<GroupSchedule, ScheduleError> {
        let n_groups = self.n_groups;
        let size = self.nominal_group_size(n_checks);
        let k = self.overlap_count(n_checks);
        let infeasible = |reason: String| ScheduleError::Infeasible {
            n_groups,
            overlap: self.overlap,
            reason,
        };

        let mut unused: Vec<usize> = (0..n_checks).collect();
        unused.shuffle(rng);
        let mut unused = unused.into_iter();

        let mut groups: Vec<Vec<usize>> = Vec::with_capacity(n_groups);
        // Fresh (not shared with the group before) part of the latest group.
        let mut prev_fresh: Vec<usize> = unused.by_ref().take(size).collect();
        groups.push(prev_fresh.clone());

        for g in 2..=n_groups {
            let is_last = g == n_groups;
            if prev_fresh.len() < k && !is_last {
                return Err(infeasible(format!(
                    "group {g} needs {k} shared checks but its predecessor has only {} unshared ones",
                    prev_fresh.len()
                )));
            }
            let shared: Vec<usize> = prev_fresh
                .choose_multiple(rng, k.min(prev_fresh.len()))
                .copied()
                .collect();
            let fresh: Vec<usize> = if is_last {
                unused.by_ref().collect()
            } else {
                unused.by_ref().take(size - shared.len()).collect()
            };
            if fresh.is_empty() {
                return Err(infeasible(format!(
                    "no unscheduled checks remain for group {g}"
                )));
            }
            let mut group = shared;
            group.extend_from_slice(&fresh);
            groups.push(group);
            prev_fresh = fresh;
        }
        for group in &mut groups {
            group.sort_unstable();
        }
        Ok(GroupSchedule {
            kind: ScheduleKind::NonDisjoint,
            groups,
            group_size: size,
            overlap_ratio: self.overlap,
        })
    }
}

fn disjoint_partition<R: Rng + ?Sized>(
    kind: ScheduleKind,
    n_checks: usize,
    n_groups: usize,
    rng: &mut R,
) -> GroupSchedule {
    let mut order: Vec<usize> = (0..n_checks).collect();
    order.shuffle(rng);
    let base = n_checks / n_groups;
    let larger = n_checks % n_groups;
    let mut groups = Vec::with_capacity(n_groups);
    let mut rest = order.as_slice();
    for g in 0..n_groups {
        let (head, tail) = rest.split_at(base + usize::from(g < larger));
        let mut group = head.to_vec();
        group.sort_unstable();
        groups.push(group);
        rest = tail;
    }
    GroupSchedule {
        kind,
        groups,
        group_size: n_checks.div_ceil(n_groups),
        overlap_ratio: 0.0,
    }
}

/// An ordered list of check-node groups.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupSchedule {
    pub kind: ScheduleKind,
    pub groups: Vec<Vec<usize>>,
    /// Nominal group size `N_G`; the last non-disjoint group may differ.
    pub group_size: usize,
    pub overlap_ratio: f64,
}

impl GroupSchedule {
    pub fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn spec(&self) -> ScheduleSpec {
        ScheduleSpec {
            kind: self.kind,
            n_groups: self.n_groups(),
            overlap: self.overlap_ratio,
        }
    }

    /// `|𝒢_g ∩ 𝒢_{g+1}|` for each consecutive pair.
    pub fn overlaps(&self) -> Vec<usize> {
        self.groups
            .windows(2)
            .map(|w| w[0].iter().filter(|m| w[1].contains(m)).count())
            .collect()
    }

    /// Check-node updates performed per iteration.
    pub fn work_per_iteration(&self) -> usize {
        self.groups.iter().map(Vec::len).sum()
    }

    /// Checks the structural invariants for this schedule's kind.
    pub fn validate(&self, n_checks: usize) -> Result<(), ScheduleError> {
        let mut membership = vec![Vec::new(); n_checks];
        for (g, group) in self.groups.iter().enumerate() {
            for &m in group {
                let slot = membership.get_mut(m).ok_or_else(|| {
                    ScheduleError::Invalid(format!("group {g} references check {m} >= {n_checks}"))
                })?;
                if slot.last() == Some(&g) {
                    return Err(ScheduleError::Invalid(format!(
                        "check {m} repeated in group {g}"
                    )));
                }
                slot.push(g);
            }
        }
        for (m, groups) in membership.iter().enumerate() {
            match (self.kind, groups.as_slice()) {
                (_, []) => {
                    return Err(ScheduleError::Invalid(format!(
                        "check {m} is not scheduled"
                    )))
                }
                (_, [_]) => {}
                (ScheduleKind::NonDisjoint, [a, b]) if b - a == 1 => {}
                _ => {
                    return Err(ScheduleError::Invalid(format!(
                        "check {m} appears in groups {groups:?}"
                    )))
                }
            }
        }
        Ok(())
    }
}

pub fn flooding_schedule(g: &TannerGraph) -> GroupSchedule {
    ScheduleSpec::flooding()
        .build(g.n_checks(), &mut ChaCha8Rng::seed_from_u64(0))
        .expect("flooding is always valid")
}

pub fn make_disjoint_schedule(
    g: &TannerGraph,
    n_groups: usize,
    seed: u64,
) -> Result<GroupSchedule, ScheduleError> {
    ScheduleSpec::disjoint(n_groups).build(g.n_checks(), &mut ChaCha8Rng::seed_from_u64(seed))
}

pub fn make_nondisjoint_schedule(
    g: &TannerGraph,
    n_groups: usize,
    overlap: f64,
    seed: u64,
) -> Result<GroupSchedule, ScheduleError> {
    ScheduleSpec::non_disjoint(n_groups, overlap)
        .build(g.n_checks(), &mut ChaCha8Rng::seed_from_u64(seed))
}

/// Connectivity of consecutive sub-graphs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CocsgReport {
    /// For each transition `g-1 → g`, the number of variables adjacent to both groups.
    pub transitions: Vec<usize>,
    /// Mean over transitions; `None` for single-group schedules.
    pub mean: Option<f64>,
}

pub fn measure_cocsg(g: &TannerGraph, s: &GroupSchedule) -> CocsgReport {
    let touched = |group: &[usize]| {
        let mut mark = vec![false; g.n_vars()];
        for &m in group {
            for &n in g.check_neighbors(m) {
                mark[n] = true;
            }
        }
        mark
    };
    let marks: Vec<Vec<bool>> = s.groups.iter().map(|grp| touched(grp)).collect();
    let transitions: Vec<usize> = marks
        .windows(2)
        .map(|w| w[0].iter().zip(&w[1]).filter(|(a, b)| **a && **b).count())
        .collect();
    let mean = (!transitions.is_empty())
        .then(|| transitions.iter().sum::<usize>() as f64 / transitions.len() as f64);
    CocsgReport { transitions, mean }
}

/// Iterations allowed to a schedule so that its check-update work matches
/// `i_max` flooding iterations: `⌊M·I_max / (M + (G−1)·N_G·r)⌋`.
pub fn iteration_budget(n_checks: usize, i_max: usize, s: &GroupSchedule) -> usize {
    if s.overlap_ratio == 0.0 || s.kind != ScheduleKind::NonDisjoint {
        return i_max;
    }
    let m = n_checks as f64;
    let extra = (s.n_groups() as f64 - 1.0) * s.group_size as f64 * s.overlap_ratio;
    ((m * i_max as f64) / (m + extra)).floor() as usize
}
