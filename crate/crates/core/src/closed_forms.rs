//! Analytic rates of the synchronous and worst-case asynchronous models.
//!
//! Everything returned here is in bits per channel use. Internal
//! expressions are in natural log and converted once via [`RateBits::from_nats`].

use std::f64::consts::LN_2;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::channel::{alpha_ccdf, alpha_pmf};
use crate::error::{invalid, Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RateBits(pub f64);

impl RateBits {
    pub const ZERO: RateBits = RateBits(0.0);

    pub fn from_nats(nats: f64) -> Self {
        RateBits(nats / LN_2)
    }

    pub fn bits(self) -> f64 {
        self.0
    }
}

impl fmt::Display for RateBits {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.6} bit/ch.use", self.0)
    }
}

/// Best fixed rate together with the smallest maximizing number of
/// non-blocked transmitters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutageSolution {
    pub rate: RateBits,
    pub argmax_index: usize,
}

/// `max_{i=1..L} P(α ≥ i) · rate(i)`, ties resolved toward the smaller `i`.
pub fn maximize_over_alpha(l: usize, p_b: f64, rate: impl Fn(usize) -> f64) -> OutageSolution {
    let ccdf = alpha_ccdf(l, p_b);
    let mut best = OutageSolution {
        rate: RateBits::ZERO,
        argmax_index: 1,
    };
    let mut best_val = f64::NEG_INFINITY;
    for (i, &tail) in ccdf.iter().enumerate().skip(1) {
        let v = tail * rate(i);
        if v > best_val {
            best_val = v;
            best = OutageSolution {
                rate: RateBits(v.max(0.0)),
                argmax_index: i,
            };
        }
    }
    best
}

/// `E_α[f(α)]` under Binomial(L, 1 - p_B).
pub fn expect_over_alpha(l: usize, p_b: f64, f: impl Fn(usize) -> f64) -> f64 {
    alpha_pmf(l, p_b)
        .iter()
        .enumerate()
        .filter(|(_, &w)| w > 0.0)
        .map(|(i, &w)| w * f(i))
        .sum()
}

fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

/// `E[log2(1 + |x + e^{jθ} y|²)]` for θ ~ Uniform[0, 2π), as a function of `|x|`, `|y|`.
pub fn ring_expectation(x_mag: f64, y_mag: f64) -> RateBits {
    debug_assert!(x_mag >= 0.0 && y_mag >= 0.0);
    let a = x_mag * x_mag + y_mag * y_mag;
    // (1+a)² - b² factored to avoid cancellation when b ≈ 1+a
    let d = x_mag - y_mag;
    let s = x_mag + y_mag;
    let root = ((1.0 + d * d) * (1.0 + s * s)).sqrt();
    RateBits::from_nats(((1.0 + a + root) / 2.0).ln())
}

/// Ergodic capacity with partial CSIT, `E[log2(1 + αP)]`.
pub fn ergodic_capacity(l: usize, p_b: f64, snr: f64) -> RateBits {
    RateBits(expect_over_alpha(l, p_b, |i| log2_1p(i as f64 * snr)))
}

/// Outage capacity `max_i P(α ≥ i) log2(1 + iP)`.
pub fn outage_capacity(l: usize, p_b: f64, snr: f64) -> OutageSolution {
    maximize_over_alpha(l, p_b, |i| log2_1p(i as f64 * snr))
}

/// Transmitter selection: one non-blocked transmitter whenever any exists.
pub fn ts_ergodic_rate(l: usize, p_b: f64, snr: f64) -> RateBits {
    RateBits((1.0 - p_b.powi(l as i32)) * log2_1p(snr))
}

/// Alamouti over a selected pair of transmitters.
pub fn two_tx_alamouti_rate(l: usize, p_b: f64, snr: f64) -> Result<RateBits> {
    if l < 2 {
        return Err(invalid(format!(
            "two-transmitter selection needs L >= 2, got {l}"
        )));
    }
    let pmf = alpha_pmf(l, p_b);
    let ccdf = alpha_ccdf(l, p_b);
    Ok(RateBits(
        ccdf[2] * log2_1p(2.0 * snr) + pmf[1] * log2_1p(snr),
    ))
}

/// `R̄(i) = E[log2(1 + |Σ_{l≤i} e^{jθ_l}|² P)]` for the cases with a closed form.
pub fn rbar_closed(i: usize, snr: f64) -> Result<RateBits> {
    match i {
        0 => Ok(RateBits::ZERO),
        1 => Ok(RateBits(log2_1p(snr))),
        2 => {
            let amp = snr.sqrt();
            Ok(ring_expectation(amp, amp))
        }
        _ => Err(Error::NoClosedForm(i)),
    }
}

/// Large-K effective SNR of the worst-case (half-sample offset) OFDM link
/// for received power `s` (e.g. `αP` or `|h|²P`): `s/4 + (√(1+s) - 1)/2`.
pub fn async_snr(s: f64) -> f64 {
    // √(1+s) - 1 written as s / (√(1+s) + 1) for small s
    s / 4.0 + 0.5 * s / ((1.0 + s).sqrt() + 1.0)
}

pub fn async_effective_snr(i: usize, snr: f64) -> f64 {
    async_snr(i as f64 * snr)
}

pub fn async_capacity_limit(l: usize, p_b: f64, snr: f64) -> RateBits {
    RateBits(expect_over_alpha(l, p_b, |i| {
        log2_1p(async_effective_snr(i, snr))
    }))
}

pub fn async_outage_limit(l: usize, p_b: f64, snr: f64) -> OutageSolution {
    maximize_over_alpha(l, p_b, |i| log2_1p(async_effective_snr(i, snr)))
}
