//! BPSK over an AWGN channel, all-zero codeword convention.
//!
//! Bit 0 maps to `+1`, so the all-zero codeword is sent as all `+1` symbols
//! and the receiver sees `y_n = 1 + w_n` with `w_n ~ N(0, σ²)`. The channel
//! LLR is `L_n = 2 y_n / σ²`. Noise is related to `Eb/N0` through the code
//! rate: `σ² = 1 / (2 R 10^{Eb/N0 / 10})`.

use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::rng::{substream, Domain};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("code rate {0} must lie in (0, 1]")]
    InvalidRate(f64),
    #[error("noise variance {0} must be positive and finite")]
    InvalidVariance(f64),
}

/// Noise variance for a given `Eb/N0` (dB) and code rate.
pub fn sigma2_from_ebn0(ebn0_db: f64, rate: f64) -> Result<f64, ChannelError> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(ChannelError::InvalidRate(rate));
    }
    Ok(1.0 / (2.0 * rate * 10f64.powf(ebn0_db / 10.0)))
}

/// Inverse of [`sigma2_from_ebn0`].
pub fn ebn0_from_sigma2(sigma2: f64, rate: f64) -> Result<f64, ChannelError> {
    if !(rate > 0.0 && rate <= 1.0) {
        return Err(ChannelError::InvalidRate(rate));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(ChannelError::InvalidVariance(sigma2));
    }
    Ok(10.0 * (1.0 / (2.0 * rate * sigma2)).log10())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub ebn0_db: f64,
    pub code_rate: f64,
    pub sigma2: f64,
    pub seed: u64,
}

impl ChannelConfig {
    pub fn from_ebn0(ebn0_db: f64, code_rate: f64, seed: u64) -> Result<Self, ChannelError> {
        let sigma2 = sigma2_from_ebn0(ebn0_db, code_rate)?;
        Ok(Self {
            ebn0_db,
            code_rate,
            sigma2,
            seed,
        })
    }

    pub fn from_sigma2(sigma2: f64, code_rate: f64, seed: u64) -> Result<Self, ChannelError> {
        let ebn0_db = ebn0_from_sigma2(sigma2, code_rate)?;
        Ok(Self {
            ebn0_db,
            code_rate,
            sigma2,
            seed,
        })
    }

    /// Mean of the channel LLR, `2/σ²`.
    pub fn llr_mean(&self) -> f64 {
        2.0 / self.sigma2
    }

    /// Channel LLRs for frame `frame_id` of the all-zero codeword.
    pub fn transmit_all_zero(&self, n: usize, frame_id: u64) -> Vec<f64> {
        let mut out = vec![0.0; n];
        self.transmit_all_zero_into(&mut out, frame_id);
        out
    }

    pub fn transmit_all_zero_into(&self, out: &mut [f64], frame_id: u64) {
        let mut rng = substream(self.seed, Domain::Channel, frame_id);
        let sigma = self.sigma2.sqrt();
        let scale = 2.0 / self.sigma2;
        for llr in out.iter_mut() {
            let w: f64 = StandardNormal.sample(&mut rng);
            *llr = scale * (1.0 + sigma * w);
        }
    }
}
