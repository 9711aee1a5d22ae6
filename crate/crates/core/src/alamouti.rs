//! Symbol-level check of the two-transmitter Alamouti code over one block.
//!
//! Symbols `s1, s2 ~ CN(0, P)` are sent as `(s1, s2)` then `(-s2*, s1*)`
//! through `h_l = β_l e^{jθ_l}` with unit-variance noise. The orthogonal
//! combiner output is normalized by `‖h‖`, which should leave the scalar
//! channel `√α s + z`.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::channel::ChannelState;
use crate::error::{Error, Result};
use crate::rng::RngStream;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlamoutiReport {
    pub alpha: usize,
    /// least-squares gain of the combined symbol on the transmitted one
    pub effective_gain: f64,
    pub gain_std_error: f64,
    pub residual_noise_var: f64,
    pub noise_std_error: f64,
    /// bias-corrected `ĝ² P / σ̂²`
    pub effective_snr: f64,
    pub snr_std_error: f64,
}

fn cn<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * s, im * s)
}

pub fn alamouti_symbol_check(
    state: &ChannelState,
    snr: f64,
    n_symbols: usize,
    stream: &RngStream,
) -> Result<AlamoutiReport> {
    if state.len() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: state.len(),
        });
    }
    let pairs = (n_symbols / 2).max(1);
    let h: Vec<Complex64> = state.coefficients().collect();
    let (h1, h2) = (h[0], h[1]);
    let norm = (h1.norm_sqr() + h2.norm_sqr()).sqrt();
    let mut rng = stream.rng();

    let mut sent = Vec::with_capacity(2 * pairs);
    let mut combined = Vec::with_capacity(2 * pairs);
    for _ in 0..pairs {
        let s1 = cn(&mut rng, snr);
        let s2 = cn(&mut rng, snr);
        let y1 = h1 * s1 + h2 * s2 + cn(&mut rng, 1.0);
        let y2 = -h1 * s2.conj() + h2 * s1.conj() + cn(&mut rng, 1.0);
        let (r1, r2) = if norm > 0.0 {
            (
                (h1.conj() * y1 + h2 * y2.conj()) / norm,
                (h2.conj() * y1 - h1 * y2.conj()) / norm,
            )
        } else {
            // nothing to combine: the receiver sees noise only
            (y1, y2.conj())
        };
        sent.extend([s1, s2]);
        combined.extend([r1, r2]);
    }

    let n = sent.len() as f64;
    let energy: f64 = sent.iter().map(|s| s.norm_sqr()).sum();
    let cross: f64 = sent
        .iter()
        .zip(&combined)
        .map(|(s, r)| (r * s.conj()).re)
        .sum();
    let gain = cross / energy;
    let noise_var = sent
        .iter()
        .zip(&combined)
        .map(|(s, r)| (r - gain * s).norm_sqr())
        .sum::<f64>()
        / n;
    let se_gain2 = noise_var / (2.0 * energy);
    let se_gain = se_gain2.sqrt();
    // |w|² ~ Exp(1) for unit complex Gaussian noise
    let se_noise = noise_var / n.sqrt();

    let snr_hat = (gain * gain - se_gain2) * snr / noise_var;
    let d_gain = 2.0 * gain * snr / noise_var;
    let d_noise = gain * gain * snr / (noise_var * noise_var);
    let snr_var = d_gain * d_gain * se_gain2
        + 2.0 * (snr * se_gain2 / noise_var).powi(2)
        + (d_noise * se_noise).powi(2);

    Ok(AlamoutiReport {
        alpha: state.alpha(),
        effective_gain: gain,
        gain_std_error: se_gain,
        residual_noise_var: noise_var,
        noise_std_error: se_noise,
        effective_snr: snr_hat,
        snr_std_error: snr_var.sqrt(),
    })
}
