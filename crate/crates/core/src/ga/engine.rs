use serde::{Deserialize, Serialize};

use super::{GaError, PhiKernel, PhiModel};
use crate::schedule::{ScheduleKind, ScheduleSpec};
use crate::tanner::DegreeDistribution;

/// How the mean of check messages at the end of an iteration is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FinalMeanRule {
    /// Average over every group of the iteration (the class-`d` mean after
    /// the last group).
    #[default]
    GroupAverage,
    /// Mix of the last group's class-`b` and class-`c` means, see
    /// [`iteration_final_mean`].
    LastGroup,
}

/// Convergence declared once the iteration mean reaches this value.
pub const DEFAULT_MU_CAP: f64 = 128.0;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaConfig {
    pub degrees: DegreeDistribution,
    pub schedule: ScheduleSpec,
    /// Mean of the channel LLR, `2/σ²`.
    pub mu0: f64,
    pub mu_cap: f64,
    pub max_iterations: usize,
    pub kernel: PhiKernel,
    pub final_mean: FinalMeanRule,
}

impl GaConfig {
    pub fn new(degrees: DegreeDistribution, schedule: ScheduleSpec, mu0: f64) -> Self {
        Self {
            degrees,
            schedule,
            mu0,
            mu_cap: DEFAULT_MU_CAP,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            kernel: PhiKernel::default(),
            final_mean: FinalMeanRule::default(),
        }
    }

    /// Configuration at a given `Eb/N0`, using the ensemble's design rate.
    pub fn at_ebn0(degrees: DegreeDistribution, schedule: ScheduleSpec, ebn0_db: f64) -> Self {
        let mu0 = mu0_from_ebn0(ebn0_db, degrees.design_rate());
        Self::new(degrees, schedule, mu0)
    }

    pub fn n_groups(&self) -> usize {
        self.schedule.n_groups
    }

    /// Overlap ratio actually seen by the recursion (zero unless non-disjoint).
    pub fn overlap(&self) -> f64 {
        match self.schedule.kind {
            ScheduleKind::NonDisjoint => self.schedule.overlap,
            _ => 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), GaError> {
        let fail = |msg: String| Err(GaError::Config(msg));
        if !(self.mu0 > 0.0 && self.mu0.is_finite()) {
            return fail(format!("mu0 = {} must be positive", self.mu0));
        }
        if !(self.mu_cap > self.mu0) {
            return fail(format!(
                "mu_cap = {} must exceed mu0 = {}",
                self.mu_cap, self.mu0
            ));
        }
        if self.schedule.n_groups == 0 {
            return fail("at least one group is required".into());
        }
        if self.schedule.kind == ScheduleKind::Flooding && self.schedule.n_groups != 1 {
            return fail("flooding uses a single group".into());
        }
        let r = self.schedule.overlap;
        if !(0.0..1.0).contains(&r) {
            return fail(format!("overlap ratio {r} outside [0, 1)"));
        }
        if self.max_iterations == 0 {
            return fail("max_iterations must be positive".into());
        }
        if self.degrees.lambda.is_empty() || self.degrees.rho.is_empty() {
            return fail("empty degree distribution".into());
        }
        Ok(())
    }
}

/// `μ₀ = 2/σ² = 4R·10^{Eb/N0/10}`.
pub fn mu0_from_ebn0(ebn0_db: f64, rate: f64) -> f64 {
    4.0 * rate * 10f64.powf(ebn0_db / 10.0)
}

pub fn ebn0_from_mu0(mu0: f64, rate: f64) -> f64 {
    10.0 * (mu0 / (4.0 * rate)).log10()
}

/// Probabilities that a given other neighbor of a variable is a class-`d`
/// or class-`b` check during subiteration `g`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassFractions {
    pub d: f64,
    pub b: f64,
}

impl ClassFractions {
    /// `x = 1/D` at `g = 1`; `y = g(1−r)/D`, `z = r/D` afterwards, with
    /// `D = G − (G−1)r`.
    pub fn at(g: usize, n_groups: usize, overlap: f64) -> Result<Self, GaError> {
        let bad = GaError::Fractions {
            g,
            n_groups,
            overlap,
        };
        if g == 0 || g > n_groups {
            return Err(bad);
        }
        let denom = n_groups as f64 - (n_groups as f64 - 1.0) * overlap;
        let fr = if g == 1 {
            Self {
                d: 1.0 / denom,
                b: 0.0,
            }
        } else {
            Self {
                d: g as f64 * (1.0 - overlap) / denom,
                b: overlap / denom,
            }
        };
        // rounding at g = G can push the sum a hair past one
        let tol = 1e-12;
        if !(fr.d >= 0.0 && fr.b >= 0.0 && fr.d + fr.b <= 1.0 + tol) {
            return Err(bad);
        }
        Ok(fr)
    }

    fn rest(&self) -> f64 {
        (1.0 - self.d - self.b).max(0.0)
    }
}

/// Means of the four check-message classes as seen by a variable.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct ClassMeans {
    pub mu0: f64,
    pub d: f64,
    pub b: f64,
    /// Class `a`: last iteration's final mean.
    pub prev: f64,
}

/// Mean of a degree-`i` variable's outgoing message when `p` of its other
/// neighbors are class `d`, `q` class `b` and the rest class `a`.
pub fn vn_mean(i: usize, p: usize, q: usize, m: &ClassMeans) -> Result<f64, GaError> {
    let limit = i.saturating_sub(1);
    if i == 0 || p + q > limit {
        return Err(GaError::Infeasible { sum: p + q, limit });
    }
    Ok(m.mu0 + p as f64 * m.d + q as f64 * m.b + (limit - p - q) as f64 * m.prev)
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, t| acc * (n - t) as f64 / (t + 1) as f64)
}

/// Multinomial weight of the split `(p, q, i−1−p−q)`.
pub fn omega_with(i: usize, p: usize, q: usize, fr: &ClassFractions) -> Result<f64, GaError> {
    let limit = i.saturating_sub(1);
    if i == 0 || p + q > limit {
        return Err(GaError::Infeasible { sum: p + q, limit });
    }
    let rest = limit - p - q;
    Ok(binomial(limit, p)
        * binomial(limit - p, q)
        * fr.d.powi(p as i32)
        * fr.b.powi(q as i32)
        * fr.rest().powi(rest as i32))
}

/// [`omega_with`] using the fractions of subiteration `g` under `cfg`.
pub fn omega(i: usize, p: usize, q: usize, g: usize, cfg: &GaConfig) -> Result<f64, GaError> {
    omega_with(
        i,
        p,
        q,
        &ClassFractions::at(g, cfg.n_groups(), cfg.overlap())?,
    )
}

/// `Σ_{p,q} ω(i,p,q) μ(i,p,q)`.
pub fn vn_mean_avg(i: usize, m: &ClassMeans, fr: &ClassFractions) -> Result<f64, GaError> {
    let mut acc = 0.0;
    for p in 0..i {
        for q in 0..i - p {
            acc += omega_with(i, p, q, fr)? * vn_mean(i, p, q, m)?;
        }
    }
    Ok(acc)
}

/// Mean of the same sum conditioned on at least one class-`d` neighbor.
pub fn vn_mean_overlap(i: usize, m: &ClassMeans, fr: &ClassFractions) -> Result<f64, GaError> {
    if i < 2 {
        return Err(GaError::NoConditioningMass(i));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for p in 1..i {
        for q in 0..i - p {
            let w = omega_with(i, p, q, fr)?;
            num += w * vn_mean(i, p, q, m)?;
            den += w;
        }
    }
    if den <= 0.0 {
        return Err(GaError::NoConditioningMass(i));
    }
    Ok(num / den)
}

/// Mean of check messages given per-degree variable means
/// (`mu_v[k]` pairs with the `k`-th entry of `λ`).
///
/// `Σ_j ρ_j Φ⁻¹(1 − (1 − Σ_i λ_i Φ(μ_{v_i}))^{j−1})`, evaluated in the log
/// domain so that tiny `Φ` values keep full relative precision.
pub fn cn_mean(
    mu_v: &[f64],
    degrees: &DegreeDistribution,
    model: &dyn PhiModel,
) -> Result<f64, GaError> {
    let mut terms = Vec::with_capacity(mu_v.len());
    for (&mu, (_, &lambda)) in mu_v.iter().zip(&degrees.lambda) {
        if !(mu >= 0.0) {
            return Err(GaError::NegativeMean(mu));
        }
        if lambda > 0.0 {
            terms.push(lambda.ln() + model.ln_phi(mu));
        }
    }
    let peak = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ln_s = peak + terms.iter().map(|t| (t - peak).exp()).sum::<f64>().ln();
    if ln_s >= 0.0 {
        return Ok(0.0);
    }
    let s = ln_s.exp();
    let mut out = 0.0;
    for (&j, &rho) in &degrees.rho {
        if rho == 0.0 {
            continue;
        }
        let e = (j - 1) as f64;
        let ln_y = if s > 1e-8 {
            (-(e * (-s).ln_1p()).exp_m1()).ln()
        } else {
            e.ln() + ln_s + (-(e - 1.0) * s / 2.0).ln_1p()
        };
        if !(ln_y <= 0.0) {
            return Err(GaError::PhiDomain(ln_y.exp()));
        }
        out += rho * model.ln_phi_inverse(ln_y);
    }
    Ok(out)
}

/// Class-`c` mean: checks fed by the averaged variable means.
pub fn cn_mean_class_c(state: &GaState, cfg: &GaConfig) -> Result<f64, GaError> {
    cn_mean(&state.mu_v, &cfg.degrees, cfg.kernel.model())
}

/// Class-`b` mean: checks fed by the overlap-conditioned variable means.
pub fn cn_mean_class_b(state: &GaState, cfg: &GaConfig) -> Result<f64, GaError> {
    cn_mean(&state.mu_v_overlap, &cfg.degrees, cfg.kernel.model())
}

/// Class-`d` mean after subiteration `g` (1-based) from the per-group
/// class-`c` and class-`b` means (`c[k]`, `b[k]` belong to group `k+1`).
pub fn cn_mean_class_d(c: &[f64], b: &[f64], g: usize, overlap: f64) -> Result<f64, GaError> {
    if g == 0 || c.len() < g || (g > 2 && b.len() < g - 1) {
        return Err(GaError::Config(format!(
            "class means missing for subiteration {g}"
        )));
    }
    if g == 1 {
        return Ok(c[0]);
    }
    if !(0.0..1.0).contains(&overlap) {
        return Err(GaError::Config(format!(
            "overlap ratio {overlap} outside [0, 1)"
        )));
    }
    let middle: f64 = (1..g - 1)
        .map(|k| {
            if overlap < 0.5 {
                overlap / (1.0 - overlap) * b[k] + (1.0 - 2.0 * overlap) / (1.0 - overlap) * c[k]
            } else {
                b[k]
            }
        })
        .sum();
    Ok((c[0] + c[g - 1] + middle) / g as f64)
}

/// `(r μ_b + (G − G r) μ_c) / (G − (G−1) r)` for the last group.
pub fn iteration_final_mean(mu_b_last: f64, mu_c_last: f64, n_groups: usize, overlap: f64) -> f64 {
    let g = n_groups as f64;
    let denom = g - (g - 1.0) * overlap;
    (overlap * mu_b_last + (g - g * overlap) * mu_c_last) / denom
}

/// Class means tracked through one iteration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaState {
    /// Completed iterations.
    pub iteration: usize,
    pub mu_c_prev_iter: f64,
    /// Per-group class-`b` means of the current iteration (zero for group 1).
    pub mu_c_b: Vec<f64>,
    pub mu_c_c: Vec<f64>,
    pub mu_c_d: f64,
    /// Per-degree variable means, in `λ` order.
    pub mu_v: Vec<f64>,
    /// Per-degree variable means conditioned on a class-`d` neighbor.
    pub mu_v_overlap: Vec<f64>,
}

impl GaState {
    pub fn new(cfg: &GaConfig) -> Self {
        let n = cfg.degrees.lambda.len();
        Self {
            iteration: 0,
            mu_c_prev_iter: 0.0,
            mu_c_b: Vec::new(),
            mu_c_c: Vec::new(),
            mu_c_d: 0.0,
            mu_v: vec![cfg.mu0; n],
            mu_v_overlap: vec![cfg.mu0; n],
        }
    }

    fn check(values: &[f64]) -> Result<(), GaError> {
        match values.iter().find(|v| !(**v >= 0.0)) {
            Some(&v) => Err(GaError::NegativeMean(v)),
            None => Ok(()),
        }
    }

    /// Run one full iteration (every group once) and return the iteration mean.
    pub fn step(&mut self, cfg: &GaConfig) -> Result<f64, GaError> {
        let n_groups = cfg.n_groups();
        let r = cfg.overlap();
        let degrees: Vec<usize> = cfg.degrees.lambda.keys().copied().collect();
        let prev = self.mu_c_prev_iter;
        let mut means = ClassMeans {
            mu0: cfg.mu0,
            d: 0.0,
            b: 0.0,
            prev,
        };
        self.mu_c_b.clear();
        self.mu_c_c.clear();

        // entering the iteration every neighbor is still class a
        for (k, &i) in degrees.iter().enumerate() {
            self.mu_v[k] = cfg.mu0 + (i - 1) as f64 * prev;
        }
        let mut fractions = ClassFractions::at(1, n_groups, r)?;
        for g in 1..=n_groups {
            let c = cn_mean_class_c(self, cfg)?;
            let b = if g > 1 && r > 0.0 {
                for (k, &i) in degrees.iter().enumerate() {
                    self.mu_v_overlap[k] = if i >= 2 {
                        vn_mean_overlap(i, &means, &fractions)?
                    } else {
                        self.mu_v[k]
                    };
                }
                cn_mean_class_b(self, cfg)?
            } else {
                0.0
            };
            self.mu_c_c.push(c);
            self.mu_c_b.push(b);
            self.mu_c_d = cn_mean_class_d(&self.mu_c_c, &self.mu_c_b, g, r)?;
            Self::check(&[c, b, self.mu_c_d])?;

            fractions = ClassFractions::at(g, n_groups, r)?;
            means = ClassMeans {
                mu0: cfg.mu0,
                d: self.mu_c_d,
                b,
                prev,
            };
            for (k, &i) in degrees.iter().enumerate() {
                self.mu_v[k] = vn_mean_avg(i, &means, &fractions)?;
            }
            Self::check(&self.mu_v)?;
        }

        let last = n_groups - 1;
        let final_mean = match cfg.final_mean {
            _ if n_groups == 1 => self.mu_c_c[0],
            FinalMeanRule::GroupAverage => self.mu_c_d,
            FinalMeanRule::LastGroup => {
                iteration_final_mean(self.mu_c_b[last], self.mu_c_c[last], n_groups, r)
            }
        };
        Self::check(&[final_mean])?;
        self.mu_c_prev_iter = final_mean;
        self.iteration += 1;
        Ok(final_mean)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum GaOutcome {
    Converged {
        iterations: usize,
    },
    /// Stopped at `iterations` without reaching the cap. `plateau` is set when
    /// the mean had stopped moving.
    NoConvergence {
        iterations: usize,
        final_mean: f64,
        plateau: bool,
    },
}

impl GaOutcome {
    pub fn iterations(&self) -> Option<usize> {
        match *self {
            GaOutcome::Converged { iterations } => Some(iterations),
            GaOutcome::NoConvergence { .. } => None,
        }
    }

    pub fn converged(&self) -> bool {
        matches!(self, GaOutcome::Converged { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaRun {
    pub outcome: GaOutcome,
    /// Iteration means, one per completed iteration.
    pub mu_trace: Vec<f64>,
}

const PLATEAU_TOLERANCE: f64 = 1e-13;
const PLATEAU_RUN: usize = 5;

/// Run the recursion until the mean reaches `mu_cap`, stalls, or the
/// iteration limit is hit.
pub fn run_ga(cfg: &GaConfig) -> Result<GaRun, GaError> {
    cfg.validate()?;
    let mut state = GaState::new(cfg);
    let mut trace = Vec::new();
    let mut still = 0;
    let mut last = 0.0;
    while state.iteration < cfg.max_iterations {
        let mean = state.step(cfg)?;
        trace.push(mean);
        if mean >= cfg.mu_cap {
            return Ok(GaRun {
                outcome: GaOutcome::Converged {
                    iterations: state.iteration,
                },
                mu_trace: trace,
            });
        }
        if (mean - last).abs() <= PLATEAU_TOLERANCE * mean.max(1.0) {
            still += 1;
            if still >= PLATEAU_RUN {
                let outcome = GaOutcome::NoConvergence {
                    iterations: state.iteration,
                    final_mean: mean,
                    plateau: true,
                };
                return Ok(GaRun {
                    outcome,
                    mu_trace: trace,
                });
            }
        } else {
            still = 0;
        }
        last = mean;
    }
    let outcome = GaOutcome::NoConvergence {
        iterations: state.iteration,
        final_mean: last,
        plateau: false,
    };
    Ok(GaRun {
        outcome,
        mu_trace: trace,
    })
}

pub fn iterations_to_convergence(cfg: &GaConfig) -> Result<GaOutcome, GaError> {
    run_ga(cfg).map(|run| run.outcome)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdOptions {
    pub lo_db: f64,
    pub hi_db: f64,
    pub resolution_db: f64,
    pub mu_cap: f64,
    pub max_iterations: usize,
    pub kernel: PhiKernel,
    pub final_mean: FinalMeanRule,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            lo_db: 0.0,
            hi_db: 4.0,
            resolution_db: 0.001,
            mu_cap: DEFAULT_MU_CAP,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            kernel: PhiKernel::default(),
            final_mean: FinalMeanRule::default(),
        }
    }
}

/// Smallest `Eb/N0` (dB, to within the resolution) at which the recursion
/// reaches the cap within the iteration limit.
pub fn threshold_search(
    degrees: &DegreeDistribution,
    schedule: ScheduleSpec,
    opts: &ThresholdOptions,
) -> Result<f64, GaError> {
    let converges = |db: f64| -> Result<bool, GaError> {
        let mut cfg = GaConfig::at_ebn0(degrees.clone(), schedule, db);
        cfg.mu_cap = opts.mu_cap;
        cfg.max_iterations = opts.max_iterations;
        cfg.kernel = opts.kernel;
        cfg.final_mean = opts.final_mean;
        Ok(iterations_to_convergence(&cfg)?.converged())
    };
    let (mut lo, mut hi) = (opts.lo_db, opts.hi_db);
    let (lo_converges, hi_converges) = (converges(lo)?, converges(hi)?);
    if lo_converges || !hi_converges {
        return Err(GaError::Bracket {
            lo_db: lo,
            hi_db: hi,
            lo_converges,
            hi_converges,
        });
    }
    while hi - lo > opts.resolution_db {
        let mid = 0.5 * (lo + hi);
        if converges(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

/// Smallest power of two, starting at or above `start`, for which every
/// configuration's iteration count moves by at most one when the cap doubles.
/// Configurations that do not converge must not converge at either cap.
pub fn stable_mu_cap(configs: &[GaConfig], start: f64, limit: f64) -> Result<f64, GaError> {
    let counts = |cap: f64| -> Result<Vec<Option<usize>>, GaError> {
        configs
            .iter()
            .map(|c| {
                let mut c = c.clone();
                c.mu_cap = cap;
                iterations_to_convergence(&c).map(|o| o.iterations())
            })
            .collect()
    };
    let mut cap = start.max(1.0).log2().ceil().exp2();
    let mut current = counts(cap)?;
    while cap <= limit {
        let next = counts(2.0 * cap)?;
        let stable = current.iter().zip(&next).all(|(a, b)| match (a, b) {
            (Some(a), Some(b)) => a.abs_diff(*b) <= 1,
            (None, None) => true,
            _ => false,
        });
        if stable {
            return Ok(cap);
        }
        cap *= 2.0;
        current = next;
    }
    Err(GaError::Config(format!("no stable cap up to {limit}")))
}

/// One analyzer result, as emitted by the command-line tool.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaRecord {
    pub ensemble: String,
    pub schedule: ScheduleKind,
    #[serde(rename = "G")]
    pub n_groups: usize,
    pub r: f64,
    pub ebn0_db: f64,
    pub mu0: f64,
    pub mu_cap: f64,
    pub kernel: PhiKernel,
    pub final_mean: FinalMeanRule,
    pub converged: bool,
    pub iterations: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_trace: Option<Vec<f64>>,
}

/// Short label like `(3,6)` or `λ{2:0.3,3:0.7} ρ{6:1}`.
pub fn ensemble_label(degrees: &DegreeDistribution) -> String {
    if degrees.lambda.len() == 1 && degrees.rho.len() == 1 {
        return format!(
            "({},{})",
            degrees.max_var_degree(),
            degrees.max_check_degree()
        );
    }
    let side = |m: &std::collections::BTreeMap<usize, f64>| {
        m.iter()
            .map(|(d, v)| format!("{d}:{v}"))
            .collect::<Vec<_>>()
            .join(",")
    };
    format!("λ{{{}}} ρ{{{}}}", side(&degrees.lambda), side(&degrees.rho))
}

impl GaRecord {
    pub fn from_run(cfg: &GaConfig, run: &GaRun, keep_trace: bool) -> Self {
        Self {
            ensemble: ensemble_label(&cfg.degrees),
            schedule: cfg.schedule.kind,
            n_groups: cfg.schedule.n_groups,
            r: cfg.overlap(),
            ebn0_db: ebn0_from_mu0(cfg.mu0, cfg.degrees.design_rate()),
            mu0: cfg.mu0,
            mu_cap: cfg.mu_cap,
            kernel: cfg.kernel,
            final_mean: cfg.final_mean,
            converged: run.outcome.converged(),
            iterations: run.outcome.iterations(),
            mu_trace: keep_trace.then(|| run.mu_trace.clone()),
        }
    }
}
