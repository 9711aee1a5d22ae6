//! Worst-case OFDM analysis under residual timing offsets.
//!
//! Each transmitter's delay `τ_l = d_l + δ_l` splits into an integer part,
//! absorbed by the cyclic prefix, and a fractional part, which shapes the
//! per-subcarrier gain `G_l[k] = (1-δ_l) + δ_l e^{-j2πk/K}` of the
//! triangular pulse autocorrelation.

use std::f64::consts::{LN_2, TAU};

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::closed_forms::{
    async_snr, expect_over_alpha, maximize_over_alpha, ring_expectation, OutageSolution, RateBits,
};
use crate::error::{invalid, Error, Result};
use crate::par::map_trials;
use crate::rng::RngStream;
use crate::stats::{compensated_sum, RateEstimate};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OfdmConfig {
    /// subcarriers
    pub k: usize,
    /// cyclic prefix length
    pub d: usize,
    pub tau_max: f64,
}

impl OfdmConfig {
    pub fn new(k: usize, d: usize, tau_max: f64) -> Result<Self> {
        if k < 2 {
            return Err(invalid(format!("need at least 2 subcarriers, got {k}")));
        }
        if !(tau_max >= 0.0 && tau_max.is_finite()) {
            return Err(invalid(format!(
                "tau_max must be finite and non-negative, got {tau_max}"
            )));
        }
        let min_d = tau_max.ceil() as usize + 1;
        if d < min_d {
            return Err(invalid(format!(
                "cyclic prefix {d} shorter than ceil(tau_max)+1 = {min_d}"
            )));
        }
        Ok(Self { k, d, tau_max })
    }

    /// Largest `tau_max` the prefix `d` tolerates.
    pub fn with_prefix(k: usize, d: usize) -> Result<Self> {
        Self::new(k, d, d.saturating_sub(1) as f64)
    }

    pub fn overhead(&self) -> f64 {
        self.k as f64 / (self.k + self.d) as f64
    }

    fn symbol_len(&self) -> f64 {
        (self.k + self.d) as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DelayProfile {
    tau: Vec<f64>,
}

impl DelayProfile {
    pub fn new(tau: Vec<f64>, ofdm: &OfdmConfig) -> Result<Self> {
        if let Some(t) = tau.iter().find(|&&t| !(0.0..=ofdm.tau_max).contains(&t)) {
            return Err(invalid(format!("delay {t} outside [0, {}]", ofdm.tau_max)));
        }
        Ok(Self { tau })
    }

    /// Build from integer and fractional parts.
    pub fn from_parts(int_parts: &[usize], fractions: &[f64], ofdm: &OfdmConfig) -> Result<Self> {
        if int_parts.len() != fractions.len() {
            return Err(Error::DimensionMismatch {
                expected: int_parts.len(),
                got: fractions.len(),
            });
        }
        if let Some(f) = fractions.iter().find(|&&f| !(0.0..1.0).contains(&f)) {
            return Err(invalid(format!("fractional delay {f} outside [0,1)")));
        }
        Self::new(
            int_parts
                .iter()
                .zip(fractions)
                .map(|(&d, &f)| d as f64 + f)
                .collect(),
            ofdm,
        )
    }

    pub fn len(&self) -> usize {
        self.tau.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tau.is_empty()
    }

    pub fn tau(&self) -> &[f64] {
        &self.tau
    }

    pub fn integer_part(&self, l: usize) -> usize {
        self.tau[l].floor() as usize
    }

    pub fn fractional_part(&self, l: usize) -> f64 {
        self.tau[l] - self.tau[l].floor()
    }
}

/// Triangular autocorrelation of the square pulse.
pub fn pulse_autocorr(x: f64) -> f64 {
    if x.abs() < 1.0 {
        1.0 - x.abs()
    } else {
        0.0
    }
}

pub fn subcarrier_gain(delta: f64, k: usize, n_sub: usize) -> Complex64 {
    Complex64::new(1.0 - delta, 0.0)
        + delta * Complex64::from_polar(1.0, -TAU * k as f64 / n_sub as f64)
}

/// `|G[k]|²` at the half-sample offset: `(1 + cos(2πk/K)) / 2` for `k = 0..K`.
pub fn worst_case_factors(n_sub: usize) -> Vec<f64> {
    (0..n_sub)
        .map(|k| 0.5 * (1.0 + (TAU * k as f64 / n_sub as f64).cos()))
        .collect()
}

#[inline]
fn log2_1p(x: f64) -> f64 {
    x.ln_1p() / LN_2
}

fn subcarrier_average(ofdm: &OfdmConfig, factors: &[f64], snr_sum: f64) -> f64 {
    compensated_sum(factors.iter().map(|&c| log2_1p(snr_sum * c))) / ofdm.symbol_len()
}

/// Per-subcarrier capacity-achieving signaling at the worst-case offsets.
pub fn worst_case_capacity(l: usize, p_b: f64, snr: f64, ofdm: &OfdmConfig) -> RateBits {
    let factors = worst_case_factors(ofdm.k);
    RateBits(expect_over_alpha(l, p_b, |i| {
        subcarrier_average(ofdm, &factors, i as f64 * snr)
    }))
}

pub fn worst_case_outage(l: usize, p_b: f64, snr: f64, ofdm: &OfdmConfig) -> OutageSolution {
    let factors = worst_case_factors(ofdm.k);
    maximize_over_alpha(l, p_b, |i| {
        subcarrier_average(ofdm, &factors, i as f64 * snr)
    })
}

fn random_sum<R: Rng + ?Sized>(rng: &mut R, count: usize) -> Complex64 {
    (0..count)
        .map(|_| Complex64::from_polar(1.0, rng.random::<f64>() * TAU))
        .sum()
}

fn random_h<R: Rng + ?Sized>(rng: &mut R, l: usize, p_b: f64) -> Complex64 {
    let mut h = Complex64::new(0.0, 0.0);
    for _ in 0..l {
        let on = rng.random::<f64>() >= p_b;
        let th = rng.random::<f64>() * TAU;
        if on {
            h += Complex64::from_polar(1.0, th);
        }
    }
    h
}

/// Worst-case NCJT ergodic rate: Monte Carlo over `h = Σ β_l e^{jθ_l}`,
/// exact sum over subcarriers.
pub fn ncjt_async_ergodic(
    l: usize,
    p_b: f64,
    snr: f64,
    ofdm: &OfdmConfig,
    n: usize,
    stream: &RngStream,
) -> RateEstimate {
    let factors = worst_case_factors(ofdm.k);
    let draws = map_trials(n.max(1), |t| {
        let h = random_h(&mut stream.substream(t).rng(), l, p_b);
        subcarrier_average(ofdm, &factors, h.norm_sqr() * snr)
    });
    RateEstimate::from_samples(&draws).expect("non-empty")
}

/// Large-K limit of [`ncjt_async_ergodic`]: `E[log2(1 + s/4 + (√(1+s)-1)/2)]`, `s = |h|² P`.
pub fn ncjt_async_limit(
    l: usize,
    p_b: f64,
    snr: f64,
    n: usize,
    stream: &RngStream,
) -> RateEstimate {
    let draws = map_trials(n.max(1), |t| {
        let h = random_h(&mut stream.substream(t).rng(), l, p_b);
        log2_1p(async_snr(h.norm_sqr() * snr))
    });
    RateEstimate::from_samples(&draws).expect("non-empty")
}

/// Scheme evaluated by [`rate_at_delays`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AsyncScheme {
    /// capacity-achieving signaling applied per subcarrier
    CapacityPerSubcarrier,
    Ncjt,
    NcjtPhaseDiversity,
}

/// Ergodic rate at a fixed delay vector.
///
/// The capacity-achieving scheme is evaluated exactly by enumerating the
/// blockage patterns (up to 16 links); the NCJT variants by Monte Carlo
/// over blockage and phases.
#[allow(clippy::too_many_arguments)]
pub fn rate_at_delays(
    scheme: AsyncScheme,
    delays: &DelayProfile,
    l: usize,
    p_b: f64,
    snr: f64,
    ofdm: &OfdmConfig,
    n: usize,
    stream: &RngStream,
) -> Result<RateEstimate> {
    if delays.len() != l {
        return Err(Error::DimensionMismatch {
            expected: l,
            got: delays.len(),
        });
    }
    let k_n = ofdm.k;
    // H_l[k] without β and θ: e^{-j2πk d_l/K} G_l[k]
    let resp: Vec<Vec<Complex64>> = (0..l)
        .map(|li| {
            let d = delays.integer_part(li);
            let delta = delays.fractional_part(li);
            (0..k_n)
                .map(|k| {
                    Complex64::from_polar(1.0, -TAU * ((k * d) % k_n) as f64 / k_n as f64)
                        * subcarrier_gain(delta, k, k_n)
                })
                .collect()
        })
        .collect();

    match scheme {
        AsyncScheme::CapacityPerSubcarrier if l <= 16 => {
            let power: Vec<Vec<f64>> = resp
                .iter()
                .map(|r| r.iter().map(|g| g.norm_sqr()).collect())
                .collect();
            let mut total = crate::stats::KahanSum::default();
            for mask in 0u32..(1u32 << l) {
                let on = mask.count_ones() as i32;
                let w = (1.0 - p_b).powi(on) * p_b.powi(l as i32 - on);
                if w == 0.0 || on == 0 {
                    continue;
                }
                let r = compensated_sum((0..k_n).map(|k| {
                    let g: f64 = (0..l)
                        .filter(|&li| mask >> li & 1 == 1)
                        .map(|li| power[li][k])
                        .sum();
                    log2_1p(g * snr)
                })) / ofdm.symbol_len();
                total.add(w * r);
            }
            Ok(RateEstimate::exact(total.value()))
        }
        _ => {
            let draws = map_trials(n.max(1), |t| {
                let mut rng = stream.substream(t).rng();
                let mut beta = vec![false; l];
                let mut theta = vec![0.0; l];
                for li in 0..l {
                    beta[li] = rng.random::<f64>() >= p_b;
                    theta[li] = rng.random::<f64>() * TAU;
                }
                let acc = compensated_sum((0..k_n).map(|k| match scheme {
                    AsyncScheme::CapacityPerSubcarrier => {
                        let g: f64 = (0..l)
                            .filter(|&li| beta[li])
                            .map(|li| resp[li][k].norm_sqr())
                            .sum();
                        log2_1p(g * snr)
                    }
                    AsyncScheme::Ncjt | AsyncScheme::NcjtPhaseDiversity => {
                        let h: Complex64 = (0..l)
                            .filter(|&li| beta[li])
                            .map(|li| {
                                let phi = if scheme == AsyncScheme::NcjtPhaseDiversity {
                                    rng.random::<f64>() * TAU
                                } else {
                                    0.0
                                };
                                resp[li][k] * Complex64::from_polar(1.0, theta[li] + phi)
                            })
                            .sum();
                        log2_1p(h.norm_sqr() * snr)
                    }
                }));
                acc / ofdm.symbol_len()
            });
            RateEstimate::from_samples(&draws)
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct WorstCaseDeltaReport {
    pub grid: Vec<f64>,
    /// fractional delays of the smallest grid rate
    pub argmin: Vec<f64>,
    pub min_rate: f64,
    /// rate at δ = (0.5, …, 0.5)
    pub half_offset_rate: f64,
    pub worst_case_capacity: f64,
    /// rate at δ = 0
    pub on_grid_rate: f64,
    /// `K/(K+D)` times the synchronous ergodic capacity
    pub synchronous_scaled: f64,
    pub passed: bool,
}

/// Exhaustive search over a product grid of fractional delays (integer
/// parts zero) for the capacity-achieving per-subcarrier scheme.
///
/// The grid has `grid_resolution` evenly spaced points on `[0, 1]`; the
/// endpoint `δ = 1` is the next integer delay with no fractional part.
pub fn verify_worst_case_delta(
    l: usize,
    p_b: f64,
    snr: f64,
    ofdm: &OfdmConfig,
    grid_resolution: usize,
) -> Result<WorstCaseDeltaReport> {
    if grid_resolution < 3 {
        return Err(invalid("grid needs at least 3 points"));
    }
    if l > 4 {
        return Err(invalid("grid search is limited to L <= 4"));
    }
    let grid: Vec<f64> = (0..grid_resolution)
        .map(|j| j as f64 / (grid_resolution - 1) as f64)
        .collect();
    // d_l = 0 fixed, so τ_l = δ_l ∈ [0,1]; needs tau_max >= 1 for δ = 1
    let search = OfdmConfig {
        tau_max: ofdm.tau_max.max(1.0),
        ..*ofdm
    };
    let eval = |deltas: &[f64]| -> Result<f64> {
        let profile = DelayProfile::new(deltas.to_vec(), &search)?;
        Ok(rate_at_delays(
            AsyncScheme::CapacityPerSubcarrier,
            &profile,
            l,
            p_b,
            snr,
            ofdm,
            1,
            &RngStream::new(0, 0),
        )?
        .value())
    };

    let n_points = grid_resolution.pow(l as u32);
    let mut best = (f64::INFINITY, vec![0.0; l]);
    for idx in 0..n_points {
        let mut rem = idx;
        let deltas: Vec<f64> = (0..l)
            .map(|_| {
                let j = rem % grid_resolution;
                rem /= grid_resolution;
                grid[j]
            })
            .collect();
        let r = eval(&deltas)?;
        if r < best.0 - 1e-13 {
            best = (r, deltas);
        }
    }
    let half_offset_rate = eval(&vec![0.5; l])?;
    let on_grid_rate = eval(&vec![0.0; l])?;
    let wcc = worst_case_capacity(l, p_b, snr, ofdm).bits();
    let sync = ofdm.overhead() * crate::closed_forms::ergodic_capacity(l, p_b, snr).bits();
    let step = 1.0 / (grid_resolution - 1) as f64;
    let passed = best
        .1
        .iter()
        .all(|&d| (d - 0.5).abs() <= step / 2.0 + 1e-12)
        && half_offset_rate <= best.0 + 1e-12
        && (half_offset_rate - wcc).abs() <= 1e-9
        && (on_grid_rate - sync).abs() <= 1e-9;
    Ok(WorstCaseDeltaReport {
        grid,
        argmin: best.1,
        min_rate: best.0,
        half_offset_rate,
        worst_case_capacity: wcc,
        on_grid_rate,
        synchronous_scaled: sync,
        passed,
    })
}

/// `E[log2(1 + |Σ_l g_l e^{jψ_l}|² P)]` for i.i.d. uniform phases.
///
/// Up to four links this is deterministic: the first phase is fixed by
/// rotation invariance, the last is integrated in closed form and the
/// rest by the periodic trapezoid rule. Larger sets fall back to a fixed
/// seed Monte Carlo with the same conditioning.
pub fn ring_sum_expectation(mags: &[f64], snr: f64) -> f64 {
    let mags: Vec<f64> = mags.iter().copied().filter(|&g| g > 0.0).collect();
    let amp = snr.sqrt();
    match mags.len() {
        0 => 0.0,
        1 => log2_1p(mags[0] * mags[0] * snr),
        2 => ring_expectation(mags[0] * amp, mags[1] * amp).bits(),
        3 => {
            let n = 256;
            compensated_sum((0..n).map(|j| {
                let x = mags[0] + mags[1] * Complex64::from_polar(1.0, TAU * j as f64 / n as f64);
                ring_expectation(x.norm() * amp, mags[2] * amp).bits()
            })) / n as f64
        }
        4 => {
            let n = 96;
            compensated_sum((0..n * n).map(|jj| {
                let (a, b) = (jj / n, jj % n);
                let x = mags[0]
                    + mags[1] * Complex64::from_polar(1.0, TAU * a as f64 / n as f64)
                    + mags[2] * Complex64::from_polar(1.0, TAU * b as f64 / n as f64);
                ring_expectation(x.norm() * amp, mags[3] * amp).bits()
            })) / (n * n) as f64
        }
        m => {
            let stream = RngStream::new(0x5eed, m as u64);
            let n = 200_000;
            let mut rng = stream.rng();
            compensated_sum((0..n).map(|_| {
                let mut x = Complex64::new(mags[0], 0.0);
                for &g in &mags[1..m - 1] {
                    x += g * Complex64::from_polar(1.0, rng.random::<f64>() * TAU);
                }
                ring_expectation(x.norm() * amp, mags[m - 1] * amp).bits()
            })) / n as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HoeffdingRow {
    pub k: usize,
    pub epsilon: f64,
    pub n_samples: usize,
    pub empirical: f64,
    pub bound: f64,
}

impl HoeffdingRow {
    pub fn holds(&self) -> bool {
        self.empirical <= self.bound
    }
}

/// `2 exp(-2 K ε² / log2²(1 + L² P))`, with ε in bits.
pub fn hoeffding_bound(l: usize, snr: f64, k: usize, epsilon: f64) -> f64 {
    let range = log2_1p((l * l) as f64 * snr);
    2.0 * (-2.0 * k as f64 * epsilon * epsilon / (range * range)).exp()
}

/// Concentration of the phase-diversity OFDM rate around its conditional mean.
///
/// Each block draws `(β, θ)` and delays uniformly in `[0, τ_max]`, then
/// `n_draws` independent rotation sets φ. The deviation
/// `(1/(K+D)) Σ_k (R_k - R̄_k(β))` is compared against `epsilons`.
#[allow(clippy::too_many_arguments)]
pub fn hoeffding_check(
    l: usize,
    p_b: f64,
    snr: f64,
    ofdm: &OfdmConfig,
    n_blocks: usize,
    n_draws: usize,
    epsilons: &[f64],
    stream: &RngStream,
) -> Result<Vec<HoeffdingRow>> {
    if n_blocks == 0 || n_draws == 0 {
        return Err(invalid("need at least one block and one draw"));
    }
    let k_n = ofdm.k;
    let mut exceed = vec![0usize; epsilons.len()];
    for b in 0..n_blocks as u64 {
        let mut rng = stream.substream(b).rng();
        let beta: Vec<bool> = (0..l).map(|_| rng.random::<f64>() >= p_b).collect();
        let theta: Vec<f64> = (0..l).map(|_| rng.random::<f64>() * TAU).collect();
        let tau: Vec<f64> = (0..l).map(|_| rng.random::<f64>() * ofdm.tau_max).collect();
        let profile = DelayProfile::new(tau, ofdm)?;
        let active: Vec<usize> = (0..l).filter(|&li| beta[li]).collect();
        if active.is_empty() {
            continue;
        }
        let resp: Vec<Vec<Complex64>> = active
            .iter()
            .map(|&li| {
                let d = profile.integer_part(li);
                let delta = profile.fractional_part(li);
                (0..k_n)
                    .map(|k| {
                        Complex64::from_polar(
                            1.0,
                            theta[li] - TAU * ((k * d) % k_n) as f64 / k_n as f64,
                        ) * subcarrier_gain(delta, k, k_n)
                    })
                    .collect()
            })
            .collect();
        let cond_mean: f64 = compensated_sum((0..k_n).map(|k| {
            let mags: Vec<f64> = resp.iter().map(|r| r[k].norm()).collect();
            ring_sum_expectation(&mags, snr)
        })) / ofdm.symbol_len();
        let draw_stream = stream.substream(b).substream(u64::MAX);
        let devs = map_trials(n_draws, |t| {
            let mut rng = draw_stream.substream(t).rng();
            let total = compensated_sum((0..k_n).map(|k| {
                let h: Complex64 = resp
                    .iter()
                    .map(|r| r[k] * Complex64::from_polar(1.0, rng.random::<f64>() * TAU))
                    .sum();
                log2_1p(h.norm_sqr() * snr)
            }));
            total / ofdm.symbol_len() - cond_mean
        });
        for (e, count) in epsilons.iter().zip(exceed.iter_mut()) {
            *count += devs.iter().filter(|d| d.abs() >= *e).count();
        }
    }
    // blocks with α = 0 have zero deviation and still count as samples
    let total = (n_blocks * n_draws) as f64;
    Ok(epsilons
        .iter()
        .zip(exceed)
        .map(|(&epsilon, c)| HoeffdingRow {
            k: k_n,
            epsilon,
            n_samples: n_blocks * n_draws,
            empirical: c as f64 / total,
            bound: hoeffding_bound(l, snr, k_n, epsilon),
        })
        .collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct AsyncOutageReport {
    pub solution: OutageSolution,
    /// estimate of the per-index rate, `i = 0..=L`
    pub per_index: Vec<RateEstimate>,
}

/// Asymptotically achievable worst-case outage rate of NCJT with phase
/// diversity at finite `K`: `max_i P(α ≥ i) (1/(K+D)) Σ_k R̄'_k(i)`.
pub fn async_phase_div_outage(
    l: usize,
    p_b: f64,
    snr: f64,
    ofdm: &OfdmConfig,
    n: usize,
    stream: &RngStream,
    rao_blackwell: bool,
) -> AsyncOutageReport {
    let factors = worst_case_factors(ofdm.k);
    let per_index: Vec<RateEstimate> = (0..=l)
        .map(|i| {
            if i == 0 {
                return RateEstimate::exact(0.0);
            }
            let sub = stream.substream(i as u64);
            let draws = map_trials(n.max(1), |t| {
                let mut rng = sub.substream(t).rng();
                if rao_blackwell {
                    let x = if i == 1 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        Complex64::new(1.0, 0.0) + random_sum(&mut rng, i - 2)
                    };
                    compensated_sum(factors.iter().map(|&c| {
                        let a = (snr * c).sqrt();
                        ring_expectation(x.norm() * a, a).bits()
                    })) / ofdm.symbol_len()
                } else {
                    let s = random_sum(&mut rng, i).norm_sqr();
                    subcarrier_average(ofdm, &factors, s * snr)
                }
            });
            RateEstimate::from_samples(&draws).expect("non-empty")
        })
        .collect();
    let solution = maximize_over_alpha(l, p_b, |i| per_index[i].value());
    AsyncOutageReport {
        solution,
        per_index,
    }
}

/// Large-K limit of [`async_phase_div_outage`].
pub fn async_phase_div_outage_limit(
    l: usize,
    p_b: f64,
    snr: f64,
    n: usize,
    stream: &RngStream,
) -> AsyncOutageReport {
    let per_index: Vec<RateEstimate> = (0..=l)
        .map(|i| {
            let sub = stream.substream(i as u64);
            let draws = map_trials(n.max(1), |t| {
                let s = random_sum(&mut sub.substream(t).rng(), i).norm_sqr();
                log2_1p(async_snr(s * snr))
            });
            RateEstimate::from_samples(&draws).expect("non-empty")
        })
        .collect();
    let solution = maximize_over_alpha(l, p_b, |i| per_index[i].value());
    AsyncOutageReport {
        solution,
        per_index,
    }
}
