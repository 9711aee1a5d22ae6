//! Intermittent block fading: per-transmitter on/off blockage driven by a
//! two-state Markov chain, with i.i.d. uniform phases per block.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::rng::RngStream;

/// Transition probabilities of the per-link blockage chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockageParams {
    /// connected -> blocked
    p: f64,
    /// blocked -> connected
    q: f64,
}

impl BlockageParams {
    pub fn new(p: f64, q: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) || !(q > 0.0 && q < 1.0) {
            return Err(invalid(format!(
                "transition probabilities must lie in (0,1), got p={p}, q={q}"
            )));
        }
        Ok(Self { p, q })
    }

    /// Symmetric-rate chain with a prescribed stationary blockage probability.
    ///
    /// Picks `p + q = 1`, i.e. `p = p_B`, `q = 1 - p_B`, which makes
    /// consecutive blocks independent.
    pub fn from_blockage_prob(p_b: f64) -> Result<Self> {
        Self::new(p_b, 1.0 - p_b)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn blockage_prob(&self) -> f64 {
        stationary_blockage_prob(self)
    }
}

pub fn stationary_blockage_prob(params: &BlockageParams) -> f64 {
    params.p / (params.p + params.q)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelConfig {
    /// number of transmitters
    pub l: usize,
    /// per-transmitter SNR, linear
    pub snr: f64,
    pub blockage: BlockageParams,
    /// channel uses per fading block
    pub block_len: usize,
}

impl ChannelConfig {
    pub fn new(l: usize, snr: f64, blockage: BlockageParams, block_len: usize) -> Result<Self> {
        if l == 0 {
            return Err(invalid("need at least one transmitter"));
        }
        if !(snr > 0.0 && snr.is_finite()) {
            return Err(invalid(format!("SNR must be positive, got {snr}")));
        }
        if block_len == 0 {
            return Err(invalid("block length must be at least 1"));
        }
        Ok(Self {
            l,
            snr,
            blockage,
            block_len,
        })
    }

    pub fn blockage_prob(&self) -> f64 {
        self.blockage.blockage_prob()
    }
}

/// One block-fading realization `h_l = β_l e^{jθ_l}`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelState {
    pub beta: Vec<bool>,
    pub theta: Vec<f64>,
}

impl ChannelState {
    pub fn new(beta: Vec<bool>, theta: Vec<f64>) -> Result<Self> {
        if beta.len() != theta.len() {
            return Err(crate::Error::DimensionMismatch {
                expected: beta.len(),
                got: theta.len(),
            });
        }
        let theta = theta.into_iter().map(|t| t.rem_euclid(TAU)).collect();
        Ok(Self { beta, theta })
    }

    pub fn len(&self) -> usize {
        self.beta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.beta.is_empty()
    }

    /// Number of non-blocked transmitters.
    pub fn alpha(&self) -> usize {
        self.beta.iter().filter(|&&b| b).count()
    }

    pub fn coefficients(&self) -> impl Iterator<Item = Complex64> + '_ {
        self.beta.iter().zip(&self.theta).map(|(&b, &t)| {
            if b {
                Complex64::from_polar(1.0, t)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, j| acc * (n - j) as f64 / (j + 1) as f64)
}

/// P(α = i) for i = 0..=L with α ~ Binomial(L, 1 - p_B).
///
/// Accepts the closed interval `p_B ∈ [0, 1]` so limiting cases can be
/// evaluated directly.
pub fn alpha_pmf(l: usize, p_b: f64) -> Vec<f64> {
    let on = 1.0 - p_b;
    (0..=l)
        .map(|i| binomial(l, i) * on.powi(i as i32) * p_b.powi((l - i) as i32))
        .collect()
}

/// P(α ≥ i) for i = 0..=L.
pub fn alpha_ccdf(l: usize, p_b: f64) -> Vec<f64> {
    let pmf = alpha_pmf(l, p_b);
    let mut out = vec![0.0; l + 1];
    let mut acc = 0.0;
    for i in (0..=l).rev() {
        acc += pmf[i];
        out[i] = acc;
    }
    out[0] = 1.0;
    if l >= 1 {
        // exact form avoids cancellation at small p_B^L
        out[1] = 1.0 - p_b.powi(l as i32);
    }
    out
}

pub fn sample_stationary_state<R: Rng + ?Sized>(rng: &mut R, cfg: &ChannelConfig) -> ChannelState {
    let p_b = cfg.blockage_prob();
    let beta = (0..cfg.l).map(|_| rng.random::<f64>() >= p_b).collect();
    let theta = (0..cfg.l).map(|_| rng.random::<f64>() * TAU).collect();
    ChannelState { beta, theta }
}

/// Convenience wrapper drawing from a fresh generator for `stream`.
pub fn sample_stationary_state_from(stream: &RngStream, cfg: &ChannelConfig) -> ChannelState {
    sample_stationary_state(&mut stream.rng(), cfg)
}

/// One Markov step of every link's blockage indicator (`true` = connected).
pub fn step_blockage<R: Rng + ?Sized>(
    rng: &mut R,
    beta: &[bool],
    params: &BlockageParams,
) -> Vec<bool> {
    beta.iter()
        .map(|&connected| {
            let u: f64 = rng.random();
            if connected {
                u >= params.p
            } else {
                u < params.q
            }
        })
        .collect()
}

/// `h = Σ β_l e^{jθ_l}`, the scalar channel seen under non-coherent superposition.
pub fn effective_scalar_channel(state: &ChannelState) -> Complex64 {
    state.coefficients().sum()
}
