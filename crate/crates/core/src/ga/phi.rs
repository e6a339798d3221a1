//! The Gaussian-approximation transfer function
//!
//! `Φ(μ) = 1 − E[tanh(τ/2)]`, `τ ~ N(μ, 2μ)`, with `Φ(0) = 1`.
//!
//! Writing `1 − tanh(τ/2) = 2/(1 + e^τ)` and completing the square gives a
//! form without cancellation that stays accurate deep into the tail:
//!
//! `Φ(μ) = e^{−μ/4} / √(4πμ) · 2∫₀^∞ sech(t/2) e^{−t²/(4μ)} dt`.
//!
//! Everything here works with `ln Φ` so that means in the thousands, where
//! `Φ` drops below `1e-300`, remain usable.

use std::f64::consts::PI;
use std::sync::OnceLock;

use super::GaError;

const GK_NODES: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const K15_WEIGHTS: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const G7_WEIGHTS: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gauss_kronrod_15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = K15_WEIGHTS[7] * fc;
    let mut gauss = G7_WEIGHTS[3] * fc;
    for k in 0..7 {
        let dx = half * GK_NODES[k];
        let pair = f(center - dx) + f(center + dx);
        kronrod += K15_WEIGHTS[k] * pair;
        if k % 2 == 1 {
            gauss += G7_WEIGHTS[k / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of a non-negative integrand.
pub(crate) fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, rel_tol: f64) -> f64 {
    let (first, _) = gauss_kronrod_15(&f, a, b);
    let target = rel_tol * first.abs().max(f64::MIN_POSITIVE);
    let mut stack = vec![(a, b, 0u32)];
    let mut total = 0.0;
    while let Some((lo, hi, depth)) = stack.pop() {
        let (value, err) = gauss_kronrod_15(&f, lo, hi);
        let share = target * (hi - lo) / (b - a);
        if err <= share || depth >= 40 {
            total += value;
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}

/// `∫₀^∞ sech(t/2) e^{−t²/(4μ)} t^{2k} dt` for `k` in {0, 1}.
fn sech_moment(mu: f64, k: i32) -> f64 {
    // sech(t/2) < 2e^{-45} beyond t = 90; the Gaussian factor is e^{-81} at 18√μ
    let upper = (18.0 * mu.sqrt()).clamp(1e-300, 90.0);
    let kernel = move |t: f64| t.powi(2 * k) * (-t * t / (4.0 * mu)).exp() / (0.5 * t).cosh();
    integrate(kernel, 0.0, upper, 1e-13)
}

const SERIES_BELOW: f64 = 1e-4;

/// `ln Φ(μ)` by adaptive quadrature. `mu` must be non-negative.
///
/// Below `1e-4` the quadrature loses relative precision to cancellation and
/// the expansion `−μ/2 + μ²/8 − μ³/8` is used instead.
pub fn ln_phi_exact(mu: f64) -> f64 {
    if mu <= 0.0 {
        return 0.0;
    }
    if mu < SERIES_BELOW {
        return mu * (-0.5 + mu * (0.125 - 0.125 * mu));
    }
    let i0 = sech_moment(mu, 0);
    (-0.25 * mu - 0.5 * (4.0 * PI * mu).ln() + (2.0 * i0).ln()).min(0.0)
}

/// `ln Φ(μ)` and its derivative with respect to `ln μ`.
fn ln_phi_with_slope(mu: f64) -> (f64, f64) {
    if mu < SERIES_BELOW {
        return (ln_phi_exact(mu), mu * (-0.5 + mu * (0.25 - 0.375 * mu)));
    }
    let i0 = sech_moment(mu, 0);
    let i2 = sech_moment(mu, 1);
    let value = -0.25 * mu - 0.5 * (4.0 * PI * mu).ln() + (2.0 * i0).ln();
    let slope = -0.25 * mu - 0.5 + i2 / (4.0 * mu * i0);
    (value, slope)
}

/// `Φ(μ)` by adaptive quadrature.
pub fn phi(mu: f64) -> Result<f64, GaError> {
    if !(mu >= 0.0) {
        return Err(GaError::NegativeMean(mu));
    }
    Ok(ln_phi_exact(mu).exp())
}

/// `Φ⁻¹(y)` for `y ∈ (0, 1]`, using the shared table.
pub fn phi_inverse(y: f64) -> Result<f64, GaError> {
    if !(y > 0.0 && y <= 1.0) {
        return Err(GaError::PhiDomain(y));
    }
    Ok(PhiTable::shared().ln_phi_inverse(y.ln()))
}

/// A model of `ln Φ` and its inverse, as used by the mean-evolution engine.
pub trait PhiModel: Sync {
    fn ln_phi(&self, mu: f64) -> f64;
    /// Smallest `μ ≥ 0` with `ln Φ(μ) ≤ ln_y`; zero for `ln_y ≥ 0`.
    fn ln_phi_inverse(&self, ln_y: f64) -> f64;
}

/// Bisection on a decreasing function over `[lo, hi]`, growing `hi` as needed.
fn invert_decreasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    while f(hi) > target {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// `ln Φ` tabulated on a log-spaced grid with cubic Hermite interpolation.
///
/// Knot slopes come from the exact derivative of the integral form and are
/// passed through the Fritsch–Carlson limiter, so the interpolant is strictly
/// decreasing. Outside the grid the quadrature is used directly.
#[derive(Debug, Clone)]
pub struct PhiTable {
    log_mu_min: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl PhiTable {
    pub const KNOTS: usize = 10_000;
    pub const MU_MIN: f64 = 1e-6;
    pub const MU_MAX: f64 = 1e4;

    pub fn build(knots: usize, mu_min: f64, mu_max: f64) -> Self {
        assert!(knots >= 2 && mu_min > 0.0 && mu_max > mu_min);
        let log_mu_min = mu_min.ln();
        let step = (mu_max.ln() - log_mu_min) / (knots - 1) as f64;
        let (values, mut slopes): (Vec<f64>, Vec<f64>) = (0..knots)
            .map(|k| ln_phi_with_slope((log_mu_min + k as f64 * step).exp()))
            .unzip();
        for k in 0..knots - 1 {
            let secant = (values[k + 1] - values[k]) / step;
            let (a, b) = (slopes[k] / secant, slopes[k + 1] / secant);
            let norm = a.hypot(b);
            if norm > 3.0 {
                slopes[k] = 3.0 * a / norm * secant;
                slopes[k + 1] = 3.0 * b / norm * secant;
            }
        }
        Self {
            log_mu_min,
            step,
            values,
            slopes,
        }
    }

    /// Process-wide table with [`Self::KNOTS`] knots on `[MU_MIN, MU_MAX]`.
    pub fn shared() -> &'static PhiTable {
        static TABLE: OnceLock<PhiTable> = OnceLock::new();
        TABLE.get_or_init(|| PhiTable::build(Self::KNOTS, Self::MU_MIN, Self::MU_MAX))
    }

    fn mu_max(&self) -> f64 {
        (self.log_mu_min + self.step * (self.values.len() - 1) as f64).exp()
    }

    fn hermite(&self, k: usize, t: f64) -> f64 {
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.values[k]
            + h10 * self.step * self.slopes[k]
            + h01 * self.values[k + 1]
            + h11 * self.step * self.slopes[k + 1]
    }
}

impl PhiModel for PhiTable {
    fn ln_phi(&self, mu: f64) -> f64 {
        if mu <= 0.0 {
            return 0.0;
        }
        let u = mu.ln();
        let pos = (u - self.log_mu_min) / self.step;
        if pos < 0.0 || pos > (self.values.len() - 1) as f64 {
            return ln_phi_exact(mu);
        }
        let k = (pos.floor() as usize).min(self.values.len() - 2);
        self.hermite(k, pos - k as f64)
    }

    fn ln_phi_inverse(&self, ln_y: f64) -> f64 {
        if ln_y >= 0.0 {
            return 0.0;
        }
        let last = self.values.len() - 1;
        if ln_y > self.values[0] {
            return invert_decreasing(ln_phi_exact, ln_y, 0.0, self.log_mu_min.exp());
        }
        if ln_y < self.values[last] {
            let top = self.mu_max();
            return invert_decreasing(ln_phi_exact, ln_y, top, 2.0 * top);
        }
        // values are decreasing: first knot at or below the target
        let k = self.values.partition_point(|&v| v > ln_y).clamp(1, last) - 1;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.hermite(k, mid) > ln_y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        (self.log_mu_min + (k as f64 + t) * self.step).exp()
    }
}

/// The closed-form fit `Φ(μ) ≈ exp(−0.4527 μ^0.86 + 0.0218)` below `μ = 10`,
/// capped at 1, joined to the exact function above.
///
/// This is the approximation commonly used in GA threshold tables; it moves
/// regular-code thresholds by a few hundredths of a dB relative to the exact
/// integral. The jump at `μ = 10` is downward, so the model stays monotone.
#[derive(Debug, Clone, Copy)]
pub struct FittedPhi {
    tail: &'static PhiTable,
}

impl FittedPhi {
    pub const SPLIT: f64 = 10.0;
    const ALPHA: f64 = -0.4527;
    const BETA: f64 = 0.0218;
    const GAMMA: f64 = 0.86;

    pub fn shared() -> &'static FittedPhi {
        static FIT: OnceLock<FittedPhi> = OnceLock::new();
        FIT.get_or_init(|| FittedPhi {
            tail: PhiTable::shared(),
        })
    }

    fn fit(mu: f64) -> f64 {
        (Self::ALPHA * mu.powf(Self::GAMMA) + Self::BETA).min(0.0)
    }
}

impl PhiModel for FittedPhi {
    fn ln_phi(&self, mu: f64) -> f64 {
        if mu <= 0.0 {
            0.0
        } else if mu < Self::SPLIT {
            Self::fit(mu)
        } else {
            self.tail.ln_phi(mu)
        }
    }

    fn ln_phi_inverse(&self, ln_y: f64) -> f64 {
        if ln_y >= 0.0 {
            return 0.0;
        }
        let at_split = Self::ALPHA * Self::SPLIT.powf(Self::GAMMA) + Self::BETA;
        if ln_y >= at_split {
            ((Self::BETA - ln_y) / -Self::ALPHA).powf(1.0 / Self::GAMMA)
        } else {
            self.tail.ln_phi_inverse(ln_y).max(Self::SPLIT)
        }
    }
}

/// Which `Φ` model the engine uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhiKernel {
    /// Tabulated exact integral.
    Exact,
    /// Closed-form fit below `μ = 10`, exact above.
    #[default]
    Fitted,
}

impl PhiKernel {
    pub fn model(self) -> &'static dyn PhiModel {
        match self {
            PhiKernel::Exact => PhiTable::shared(),
            PhiKernel::Fitted => FittedPhi::shared(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Direct trapezoid rule on the defining integral, fine grid.
    fn phi_by_definition(mu: f64) -> f64 {
        let sd = (2.0 * mu).sqrt();
        let (a, b) = (mu - 14.0 * sd, mu + 14.0 * sd);
        let n = 200_000;
        let h = (b - a) / n as f64;
        let f = |tau: f64| (0.5 * tau).tanh() * (-(tau - mu).powi(2) / (4.0 * mu)).exp();
        let mut acc = 0.5 * (f(a) + f(b));
        for k in 1..n {
            acc += f(a + k as f64 * h);
        }
        1.0 - acc * h / (4.0 * PI * mu).sqrt()
    }

    #[test]
    fn quadrature_matches_definition() {
        for mu in [0.05, 0.5, 1.0, 3.7, 10.0, 25.0] {
            let direct = phi_by_definition(mu);
            let ours = phi(mu).unwrap();
            assert!((ours - direct).abs() < 1e-10, "mu={mu}: {ours} vs {direct}");
        }
    }

    #[test]
    fn reference_values() {
        assert_eq!(phi(0.0).unwrap(), 1.0);
        let at_one = phi(1.0).unwrap();
        assert!((at_one - 0.6496).abs() < 1e-3, "{at_one}");
        let fit = (-0.4527f64 + 0.0218).exp();
        assert!((at_one - fit).abs() < 1e-3);
        let far = phi(100.0).unwrap();
        assert!(far > 0.0 && far < 1e-4);
        // asymptote √(π/μ) e^{−μ/4} (1 − π²/(4μ))
        let mu = 1000.0;
        let asym = (PI / mu).sqrt() * (-mu / 4.0f64).exp() * (1.0 - PI * PI / (4.0 * mu));
        assert!((phi(mu).unwrap() / asym - 1.0).abs() < 1e-4);
        assert!(phi(-1.0).is_err());
    }

    #[test]
    fn table_tracks_quadrature() {
        let table = PhiTable::shared();
        for k in 0..400 {
            let mu = 10f64.powf(-5.5 + k as f64 * 0.02);
            let exact = ln_phi_exact(mu);
            let tab = table.ln_phi(mu);
            assert!(
                (tab - exact).abs() <= 1e-9 * exact.abs().max(1e-3),
                "mu={mu}: {tab} vs {exact}"
            );
        }
    }

    #[test]
    fn table_is_strictly_decreasing() {
        let table = PhiTable::shared();
        let mut prev = table.ln_phi(1e-7);
        for k in 1..20_000 {
            let mu = 1e-7 * (1.0016f64).powi(k);
            let v = table.ln_phi(mu);
            assert!(v < prev, "not decreasing at {mu}");
            prev = v;
        }
    }

    #[test]
    fn inverse_round_trips() {
        let table = PhiTable::shared();
        assert_eq!(phi_inverse(1.0).unwrap(), 0.0);
        assert!((phi_inverse(phi(3.7).unwrap()).unwrap() - 3.7).abs() < 1e-5);
        for k in 0..300 {
            let mu = 10f64.powf(-7.0 + k as f64 * 0.039);
            let back = table.ln_phi_inverse(table.ln_phi(mu));
            assert!((back - mu).abs() <= 1e-9 * mu, "mu={mu}: {back}");
        }
        assert!(phi_inverse(0.0).is_err());
        assert!(phi_inverse(1.5).is_err());
    }

    #[test]
    fn inverse_of_small_value_matches_bisection_oracle() {
        let target = 1e-5f64;
        let (mut lo, mut hi) = (0.0f64, 200.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if phi(mid).unwrap() > target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let got = phi_inverse(target).unwrap();
        assert!((got - lo).abs() < 1e-8 * lo, "{got} vs {lo}");
    }

    #[test]
    fn fitted_kernel_is_monotone_and_invertible() {
        let fit = FittedPhi::shared();
        let mut prev = 0.0;
        for k in 1..5000 {
            let mu = 0.05 * k as f64;
            let v = fit.ln_phi(mu);
            assert!(v < prev || (v == 0.0 && prev == 0.0), "mu={mu}");
            prev = v;
            let back = fit.ln_phi_inverse(v);
            assert!((back - mu).abs() < 1e-9 * mu, "mu={mu}: {back}");
        }
        assert_eq!(fit.ln_phi_inverse(0.0), 0.0);
        // values inside the jump at μ = 10 map to the split point
        let gap = 0.5 * (FittedPhi::fit(10.0) + PhiTable::shared().ln_phi(10.0));
        assert_eq!(fit.ln_phi_inverse(gap), 10.0);
    }
}
