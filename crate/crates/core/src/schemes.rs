//! Instantaneous rates of the transmission schemes and their Monte Carlo
//! ergodic/outage estimators.

use std::f64::consts::{LN_2, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{
    alpha_pmf, effective_scalar_channel, sample_stationary_state, ChannelConfig, ChannelState,
};
use crate::closed_forms::{maximize_over_alpha, ring_expectation, OutageSolution, RateBits};
use crate::error::{invalid, Error, Result};
use crate::par::map_trials;
use crate::rng::RngStream;
use crate::stats::{mean_and_variance, outage_detail, EmpiricalOutage, RateEstimate};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchemeKind {
    /// capacity-achieving signaling with partial CSIT
    Capacity,
    TransmitterSelection,
    Ncjt,
    /// NCJT with `k` pseudo-random phase rotations per frame
    PhaseDiversity {
        k: usize,
    },
    /// deterministic phases `2π k d_l / K`
    CyclicDelayDiversity {
        k: usize,
        delays: Vec<usize>,
    },
    /// Alamouti over a selected pair of transmitters
    TwoTxSelection,
    /// non-coherent joint Alamouti with phase diversity over two clusters
    Ncja {
        k: usize,
    },
}

impl SchemeKind {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeKind::Capacity => "capacity",
            SchemeKind::TransmitterSelection => "ts",
            SchemeKind::Ncjt => "ncjt",
            SchemeKind::PhaseDiversity { .. } => "phase_div",
            SchemeKind::CyclicDelayDiversity { .. } => "cdd",
            SchemeKind::TwoTxSelection => "two_tx",
            SchemeKind::Ncja { .. } => "ncja",
        }
    }

    /// Replace the frame length of the phase-diversity style schemes.
    pub fn with_frames(&self, k: usize, l: usize) -> SchemeKind {
        match self {
            SchemeKind::PhaseDiversity { .. } => SchemeKind::PhaseDiversity { k },
            SchemeKind::Ncja { .. } => SchemeKind::Ncja { k },
            SchemeKind::CyclicDelayDiversity { .. } => SchemeKind::CyclicDelayDiversity {
                k,
                delays: default_cdd_delays(l, k),
            },
            other => other.clone(),
        }
    }
}

/// Distinct delays `d_l = l mod K` for `l = 0..L`.
pub fn default_cdd_delays(l: usize, k: usize) -> Vec<usize> {
    (0..l).map(|i| i % k.max(1)).collect()
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    /// Frame-based schemes parse with `k = 1`; callers set `k` via [`SchemeKind::with_frames`].
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "capacity" => SchemeKind::Capacity,
            "ts" | "transmitter_selection" => SchemeKind::TransmitterSelection,
            "ncjt" => SchemeKind::Ncjt,
            "phase_div" | "phase_diversity" => SchemeKind::PhaseDiversity { k: 1 },
            "cdd" => SchemeKind::CyclicDelayDiversity {
                k: 1,
                delays: Vec::new(),
            },
            "two_tx" | "two_tx_selection" => SchemeKind::TwoTxSelection,
            "ncja" => SchemeKind::Ncja { k: 1 },
            other => return Err(Error::Config(format!("unknown scheme `{other}`"))),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchemeSpec {
    pub kind: SchemeKind,
    pub cfg: ChannelConfig,
}

impl SchemeSpec {
    pub fn new(kind: SchemeKind, cfg: ChannelConfig) -> Result<Self> {
        let spec = Self { kind, cfg };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.cfg.l;
        match &self.kind {
            SchemeKind::PhaseDiversity { k } if *k == 0 => {
                Err(invalid("phase diversity needs K >= 1"))
            }
            SchemeKind::Ncja { k } if *k == 0 => Err(invalid("NCJA needs K >= 1")),
            SchemeKind::Ncja { .. } if !l.is_multiple_of(2) => {
                Err(invalid(format!("NCJA needs an even L, got {l}")))
            }
            SchemeKind::CyclicDelayDiversity { k, delays } => {
                if *k == 0 {
                    return Err(invalid("CDD needs K >= 1"));
                }
                if delays.len() != l {
                    return Err(Error::DimensionMismatch {
                        expected: l,
                        got: delays.len(),
                    });
                }
                match delays.iter().find(|&&d| d >= *k) {
                    Some(d) => Err(invalid(format!("CDD delay {d} outside 0..{k}"))),
                    None => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InstantRateSample {
    pub alpha: usize,
    pub rate: RateBits,
}

#[inline]
fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

fn uniform_phase<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random::<f64>() * TAU
}

/// Frame average of `log2(1 + |Σ_l h_l e^{jφ_{l,k}}|² P)` with i.i.d. uniform φ.
fn phase_diversity_rate<R: Rng + ?Sized>(
    coeffs: &[Complex64],
    k: usize,
    snr: f64,
    rng: &mut R,
) -> f64 {
    let mut acc = 0.0;
    for _ in 0..k {
        let h: Complex64 = coeffs
            .iter()
            .map(|&c| c * Complex64::from_polar(1.0, uniform_phase(rng)))
            .sum();
        acc += log2_1p(h.norm_sqr() * snr);
    }
    acc / k as f64
}

/// Instantaneous rate of `spec` on block `state`.
///
/// `rng` supplies the shared phase-diversity rotations; schemes without
/// them ignore it.
pub fn inst_rate<R: Rng + ?Sized>(
    spec: &SchemeSpec,
    state: &ChannelState,
    rng: &mut R,
) -> Result<InstantRateSample> {
    let l = spec.cfg.l;
    if state.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            got: state.len(),
        });
    }
    let snr = spec.cfg.snr;
    let alpha = state.alpha();
    if alpha == 0 {
        return Ok(InstantRateSample {
            alpha,
            rate: RateBits::ZERO,
        });
    }
    let rate = match &spec.kind {
        SchemeKind::Capacity => log2_1p(alpha as f64 * snr),
        SchemeKind::TransmitterSelection => log2_1p(snr),
        SchemeKind::TwoTxSelection => log2_1p(alpha.min(2) as f64 * snr),
        SchemeKind::Ncjt => log2_1p(effective_scalar_channel(state).norm_sqr() * snr),
        SchemeKind::PhaseDiversity { k } => {
            let coeffs: Vec<Complex64> = state.coefficients().collect();
            phase_diversity_rate(&coeffs, *k, snr, rng)
        }
        SchemeKind::CyclicDelayDiversity { k, delays } => {
            let coeffs: Vec<Complex64> = state.coefficients().collect();
            let kf = *k as f64;
            let mut acc = 0.0;
            for sub in 0..*k {
                let h: Complex64 = coeffs
                    .iter()
                    .zip(delays)
                    .map(|(&c, &d)| {
                        c * Complex64::from_polar(1.0, TAU * ((sub * d) % k) as f64 / kf)
                    })
                    .sum();
                acc += log2_1p(h.norm_sqr() * snr);
            }
            acc / kf
        }
        SchemeKind::Ncja { k } => {
            let coeffs: Vec<Complex64> = state.coefficients().collect();
            let (first, second) = coeffs.split_at(l / 2);
            let mut acc = 0.0;
            for _ in 0..*k {
                let h1: Complex64 = first
                    .iter()
                    .map(|&c| c * Complex64::from_polar(1.0, uniform_phase(rng)))
                    .sum();
                let h2: Complex64 = second
                    .iter()
                    .map(|&c| c * Complex64::from_polar(1.0, uniform_phase(rng)))
                    .sum();
                acc += log2_1p((h1.norm_sqr() + h2.norm_sqr()) * snr);
            }
            acc / *k as f64
        }
    };
    Ok(InstantRateSample {
        alpha,
        rate: RateBits(rate),
    })
}

/// How block realizations are drawn by [`ergodic_estimate`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// i.i.d. stationary blocks
    #[default]
    Plain,
    /// draw α per stratum with proportional allocation, then a uniformly
    /// random set of α non-blocked transmitters and fresh phases
    StratifiedAlpha,
}

/// `n` i.i.d. instantaneous rates, trial `t` drawn from `stream.substream(t)`.
pub fn rate_samples(spec: &SchemeSpec, n: usize, stream: &RngStream) -> Result<Vec<f64>> {
    spec.validate()?;
    if n == 0 {
        return Err(invalid("need at least one trial"));
    }
    let out = map_trials(n, |t| {
        let mut rng = stream.substream(t).rng();
        let state = sample_stationary_state(&mut rng, &spec.cfg);
        inst_rate(spec, &state, &mut rng).map(|s| s.rate.bits())
    });
    out.into_iter().collect()
}

/// Block with exactly `alpha` non-blocked transmitters at random positions.
fn conditional_state<R: Rng + ?Sized>(rng: &mut R, l: usize, alpha: usize) -> ChannelState {
    let mut beta = vec![false; l];
    for idx in sample_indices(rng, l, alpha) {
        beta[idx] = true;
    }
    let theta = (0..l).map(|_| uniform_phase(rng)).collect();
    ChannelState { beta, theta }
}

pub fn ergodic_estimate(
    spec: &SchemeSpec,
    n: usize,
    stream: &RngStream,
    sampling: Sampling,
) -> Result<RateEstimate> {
    match sampling {
        Sampling::Plain => RateEstimate::from_samples(&rate_samples(spec, n, stream)?),
        Sampling::StratifiedAlpha => stratified_estimate(spec, n, stream),
    }
}

fn stratified_estimate(spec: &SchemeSpec, n: usize, stream: &RngStream) -> Result<RateEstimate> {
    spec.validate()?;
    if n == 0 {
        return Err(invalid("need at least one trial"));
    }
    let l = spec.cfg.l;
    let pmf = alpha_pmf(l, spec.cfg.blockage_prob());
    let (mut mean, mut var, mut total) = (0.0, 0.0, 0usize);
    // α = 0 contributes a zero rate for every scheme
    for (alpha, &w) in pmf.iter().enumerate().skip(1) {
        if w <= 0.0 {
            continue;
        }
        let n_i = ((n as f64 * w).round() as usize).max(2);
        let sub = stream.substream(alpha as u64);
        let draws: Result<Vec<f64>> = map_trials(n_i, |t| {
            let mut rng = sub.substream(t).rng();
            let state = conditional_state(&mut rng, l, alpha);
            inst_rate(spec, &state, &mut rng).map(|s| s.rate.bits())
        })
        .into_iter()
        .collect();
        let (m, v) = mean_and_variance(&draws?)?;
        mean += w * m;
        var += w * w * v / n_i as f64;
        total += n_i;
    }
    Ok(RateEstimate {
        mean: RateBits(mean),
        std_error: var.sqrt(),
        n_trials: total.max(1),
    })
}

/// Plug-in outage rate from `n` i.i.d. blocks.
pub fn outage_estimate(spec: &SchemeSpec, n: usize, stream: &RngStream) -> Result<EmpiricalOutage> {
    outage_detail(&rate_samples(spec, n, stream)?)
}

/// One draw of `log2(1 + |Σ_{l≤i} e^{jθ_l}|² P)`, or its conditional
/// expectation over the last phase when `rao_blackwell` is set.
fn rbar_draw<R: Rng + ?Sized>(i: usize, snr: f64, rng: &mut R, rao_blackwell: bool) -> f64 {
    if i == 0 {
        return 0.0;
    }
    // rotation invariance: the first phase is fixed at 0
    let mut x = Complex64::new(1.0, 0.0);
    let free = if rao_blackwell { i - 1 } else { i };
    for _ in 1..free {
        x += Complex64::from_polar(1.0, uniform_phase(rng));
    }
    if rao_blackwell {
        if i == 1 {
            return log2_1p(snr);
        }
        let amp = snr.sqrt();
        ring_expectation(x.norm() * amp, amp).bits()
    } else {
        log2_1p(x.norm_sqr() * snr)
    }
}

/// Monte Carlo estimate of `R̄(i)`.
pub fn rbar_mc(
    i: usize,
    snr: f64,
    n: usize,
    stream: &RngStream,
    rao_blackwell: bool,
) -> RateEstimate {
    let draws = map_trials(n.max(1), |t| {
        rbar_draw(i, snr, &mut stream.substream(t).rng(), rao_blackwell)
    });
    RateEstimate::from_samples(&draws).expect("non-empty")
}

/// Paired estimate of `R̄(i+1) - R̄(i)`, sharing the first `i` phases and
/// integrating the added phase in closed form.
pub fn rbar_increment_mc(i: usize, snr: f64, n: usize, stream: &RngStream) -> RateEstimate {
    let amp = snr.sqrt();
    let draws = map_trials(n.max(1), |t| {
        let mut rng = stream.substream(t).rng();
        let x: Complex64 = (0..i)
            .map(|_| Complex64::from_polar(1.0, uniform_phase(&mut rng)))
            .sum();
        ring_expectation(x.norm() * amp, amp).bits() - log2_1p(x.norm_sqr() * snr)
    });
    RateEstimate::from_samples(&draws).expect("non-empty")
}

/// Monte Carlo estimate of `R̄(i1, i2) = E[log2(1 + |Σ_{i1}|² P + |Σ_{i2}|² P)]`.
pub fn rbar2_mc(i1: usize, i2: usize, snr: f64, n: usize, stream: &RngStream) -> RateEstimate {
    let draws = map_trials(n.max(1), |t| {
        let mut rng = stream.substream(t).rng();
        let a: Complex64 = (0..i1)
            .map(|_| Complex64::from_polar(1.0, uniform_phase(&mut rng)))
            .sum();
        let b: Complex64 = (0..i2)
            .map(|_| Complex64::from_polar(1.0, uniform_phase(&mut rng)))
            .sum();
        log2_1p((a.norm_sqr() + b.norm_sqr()) * snr)
    });
    RateEstimate::from_samples(&draws).expect("non-empty")
}

/// Paired estimate of `R_NCJT(L+1) - R_NCJT(L)`: the first `L` links are
/// shared and the extra link's phase is integrated in closed form.
pub fn ncjt_increment_mc(
    l: usize,
    p_b: f64,
    snr: f64,
    n: usize,
    stream: &RngStream,
) -> RateEstimate {
    let amp = snr.sqrt();
    let draws = map_trials(n.max(1), |t| {
        let mut rng = stream.substream(t).rng();
        let h: Complex64 = (0..l)
            .filter_map(|_| {
                let on = rng.random::<f64>() >= p_b;
                let th = uniform_phase(&mut rng);
                on.then(|| Complex64::from_polar(1.0, th))
            })
            .sum();
        if rng.random::<f64>() >= p_b {
            ring_expectation(h.norm() * amp, amp).bits() - log2_1p(h.norm_sqr() * snr)
        } else {
            0.0
        }
    });
    RateEstimate::from_samples(&draws).expect("non-empty")
}

/// `max_i P(α ≥ i) R̄(i)` from estimates `rbar_values[i]` of `R̄(i)`, `i = 0..=L`.
pub fn rbar_out(l: usize, p_b: f64, rbar_values: &[f64]) -> Result<OutageSolution> {
    if rbar_values.len() != l + 1 {
        return Err(Error::DimensionMismatch {
            expected: l + 1,
            got: rbar_values.len(),
        });
    }
    Ok(maximize_over_alpha(l, p_b, |i| rbar_values[i]))
}

/// Spread of the phase-diversity frame rate around its conditional mean.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ConditionalSpread {
    /// average over blocks of the conditional variance given `(β, θ)`
    pub mean_variance: f64,
    pub std_error: f64,
}

impl ConditionalSpread {
    pub fn std(&self) -> f64 {
        self.mean_variance.sqrt()
    }
}

/// For each of `n_blocks` stationary blocks, draws `n_draws` independent
/// phase-rotation sets and measures the variance of the `k`-frame rate.
pub fn phase_diversity_conditional_spread(
    cfg: &ChannelConfig,
    k: usize,
    n_blocks: usize,
    n_draws: usize,
    stream: &RngStream,
) -> Result<ConditionalSpread> {
    if k == 0 || n_blocks == 0 || n_draws < 2 {
        return Err(invalid(
            "need K >= 1, at least one block and two draws per block",
        ));
    }
    let spec = SchemeSpec::new(SchemeKind::PhaseDiversity { k }, *cfg)?;
    let block_stream = stream.substream(0);
    let phase_stream = stream.substream(1 + k as u64);
    let per_block = map_trials(n_blocks, |b| {
        let state = sample_stationary_state(&mut block_stream.substream(b).rng(), cfg);
        let sub = phase_stream.substream(b);
        let draws: Vec<f64> = (0..n_draws as u64)
            .map(|d| {
                inst_rate(&spec, &state, &mut sub.substream(d).rng())
                    .map(|s| s.rate.bits())
                    .unwrap_or(0.0)
            })
            .collect();
        mean_and_variance(&draws).map(|(_, v)| v).unwrap_or(0.0)
    });
    let (m, v) = mean_and_variance(&per_block)?;
    Ok(ConditionalSpread {
        mean_variance: m,
        std_error: (v / n_blocks as f64).sqrt(),
    })
}
