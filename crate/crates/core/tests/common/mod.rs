#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use gsbp_core::decoder::LLR_MAX;
use gsbp_core::tanner::parse_alist;
use gsbp_core::TannerGraph;

pub fn shipped_code() -> TannerGraph {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../codes/regular_504_252.alist");
    parse_alist(&std::fs::read_to_string(path).expect("code file")).expect("valid alist")
}

/// Textbook flooding sum-product decoder over `(check, var)`-keyed messages.
///
/// Written against the check lists only: each check output is the product of
/// the other signs times `φ(Σ φ|x|)` over the other inputs, capped by the
/// smallest other magnitude and by `LLR_MAX`.
pub struct FloodingReference {
    checks: Vec<Vec<usize>>,
    vars: Vec<Vec<usize>>,
    channel: Vec<f64>,
    pub v2c: BTreeMap<(usize, usize), f64>,
    pub c2v: BTreeMap<(usize, usize), f64>,
}

/// `φ(x) = ln(1 + 2/(e^x − 1))`, with short series where the direct form
/// cancels (small `x` for `e^x − 1`, large `x` for `ln(1 + u)`).
fn phi_small_safe(x: f64) -> f64 {
    let em1 = if x < 1e-2 {
        (1..=7)
            .rev()
            .fold(1.0, |acc, k| 1.0 + x / (k + 1) as f64 * acc)
            * x
    } else {
        x.exp() - 1.0
    };
    let u = 2.0 / em1;
    if u < 1e-4 {
        u - u * u / 2.0 + u * u * u / 3.0 - u * u * u * u / 4.0
    } else {
        (1.0 + u).ln()
    }
}

impl FloodingReference {
    pub fn new(checks: Vec<Vec<usize>>, n_vars: usize, channel: &[f64]) -> Self {
        let mut vars = vec![Vec::new(); n_vars];
        for (m, list) in checks.iter().enumerate() {
            for &n in list {
                vars[n].push(m);
            }
        }
        let channel: Vec<f64> = channel.iter().map(|x| x.clamp(-LLR_MAX, LLR_MAX)).collect();
        let mut v2c = BTreeMap::new();
        let mut c2v = BTreeMap::new();
        for (m, list) in checks.iter().enumerate() {
            for &n in list {
                v2c.insert((m, n), channel[n]);
                c2v.insert((m, n), 0.0);
            }
        }
        Self {
            checks,
            vars,
            channel,
            v2c,
            c2v,
        }
    }

    pub fn iterate(&mut self) -> Vec<u8> {
        for (m, list) in self.checks.iter().enumerate() {
            for &n in list {
                let mut negative = false;
                let mut sum = 0.0;
                let mut smallest = f64::INFINITY;
                for &other in list.iter().filter(|&&o| o != n) {
                    let x = self.v2c[&(m, other)].clamp(-LLR_MAX, LLR_MAX);
                    negative ^= x < 0.0;
                    sum += phi_small_safe(x.abs());
                    smallest = smallest.min(x.abs());
                }
                let magnitude = phi_small_safe(sum).min(smallest).min(LLR_MAX);
                self.c2v
                    .insert((m, n), if negative { -magnitude } else { magnitude });
            }
        }
        let mut bits = Vec::with_capacity(self.vars.len());
        for (n, neighbors) in self.vars.iter().enumerate() {
            let total: f64 =
                self.channel[n] + neighbors.iter().map(|&m| self.c2v[&(m, n)]).sum::<f64>();
            for &m in neighbors {
                let value = total - self.c2v[&(m, n)];
                self.v2c.insert((m, n), value.clamp(-LLR_MAX, LLR_MAX));
            }
            bits.push(u8::from(total < 0.0));
        }
        bits
    }
}
