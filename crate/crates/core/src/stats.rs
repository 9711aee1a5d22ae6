//! Sample statistics shared by the estimators: compensated sums, mean and
//! standard error, the plug-in outage estimator and empirical CCDFs.

use serde::{Deserialize, Serialize};

use crate::closed_forms::RateBits;
use crate::error::{Error, Result};

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = KahanSum::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

pub fn compensated_sum(xs: impl IntoIterator<Item = f64>) -> f64 {
    xs.into_iter().collect::<KahanSum>().value()
}

/// Point estimate with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub mean: RateBits,
    pub std_error: f64,
    pub n_trials: usize,
}

impl RateEstimate {
    /// Exact value with no sampling error.
    pub fn exact(value: f64) -> Self {
        Self {
            mean: RateBits(value),
            std_error: 0.0,
            n_trials: 1,
        }
    }

    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let (mean, var) = mean_and_variance(samples)?;
        let n = samples.len();
        Ok(Self {
            mean: RateBits(mean),
            std_error: (var / n as f64).sqrt(),
            n_trials: n,
        })
    }

    pub fn value(&self) -> f64 {
        self.mean.bits()
    }

    /// `|self - other|` in units of the combined standard error.
    pub fn z_distance(&self, other: f64) -> f64 {
        let d = (self.value() - other).abs();
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

/// Mean and unbiased sample variance (zero for a single sample).
pub fn mean_and_variance(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = samples.len() as f64;
    let mean = compensated_sum(samples.iter().copied()) / n;
    if samples.len() == 1 {
        return Ok((mean, 0.0));
    }
    let ss = compensated_sum(samples.iter().map(|&x| (x - mean) * (x - mean)));
    Ok((mean, ss / (n - 1.0)))
}

fn sorted_descending(samples: &[f64]) -> Vec<f64> {
    let mut v = samples.to_vec();
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

/// Result of the plug-in maximization of `r · P̂(X ≥ r)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EmpiricalOutage {
    pub rate: RateBits,
    /// the maximizing threshold `r*`
    pub threshold: f64,
    /// `P̂(X ≥ r*)`
    pub tail: f64,
    /// delta-method standard error `r* sqrt(p(1-p)/n)`
    pub std_error: f64,
}

/// Plug-in estimate of `sup_r r · P(X ≥ r)`.
///
/// With samples sorted so that `r_(1) ≥ … ≥ r_(n)`, returns
/// `max_j r_(j) · j / n`.
pub fn outage_from_samples(rates: &[f64]) -> Result<RateBits> {
    Ok(outage_detail(rates)?.rate)
}

pub fn outage_detail(rates: &[f64]) -> Result<EmpiricalOutage> {
    if rates.is_empty() {
        return Err(Error::EmptySamples);
    }
    let n = rates.len();
    let sorted = sorted_descending(rates);
    let mut best = (0.0, 0.0, 0.0);
    for (j, &r) in sorted.iter().enumerate() {
        let tail = (j + 1) as f64 / n as f64;
        let v = r * tail;
        if v > best.0 {
            best = (v, r, tail);
        }
    }
    let (v, r, p) = best;
    Ok(EmpiricalOutage {
        rate: RateBits(v),
        threshold: r,
        tail: p,
        std_error: r * (p * (1.0 - p) / n as f64).sqrt(),
    })
}

/// Empirical CCDF `(r, P̂(X ≥ r))` at each distinct sample value, ascending in `r`.
pub fn ccdf_points(samples: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut v = samples.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len() as f64;
    let mut out: Vec<(f64, f64)> = Vec::new();
    for (j, &x) in v.iter().enumerate() {
        if out.last().is_none_or(|&(r, _)| r != x) {
            out.push((x, (v.len() - j) as f64 / n));
        }
    }
    Ok(out)
}

/// Two-sample Kolmogorov-Smirnov statistic `sup |F_a - F_b|`.
pub fn ks_statistic(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(|x, y| x.total_cmp(y));
    b.sort_by(|x, y| x.total_cmp(y));
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < a.len() && j < b.len() {
        let x = a[i].min(b[j]);
        while i < a.len() && a[i] <= x {
            i += 1;
        }
        while j < b.len() && b[j] <= x {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Asymptotic two-sample KS critical value at significance `level`.
pub fn ks_critical(level: f64, na: usize, nb: usize) -> f64 {
    let c = (-0.5 * (level / 2.0).ln()).sqrt();
    c * ((na + nb) as f64 / (na as f64 * nb as f64)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn outage_examples() {
        assert_abs_diff_eq!(
            outage_from_samples(&[1.0, 2.0, 3.0]).unwrap().bits(),
            4.0 / 3.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            outage_from_samples(&[2.5; 17]).unwrap().bits(),
            2.5,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            outage_from_samples(&[0.0, 0.0, 5.0]).unwrap().bits(),
            5.0 / 3.0,
            epsilon = 1e-15
        );
        assert!(matches!(outage_from_samples(&[]), Err(Error::EmptySamples)));
    }

    #[test]
    fn ccdf_steps() {
        let pts = ccdf_points(&[3.0, 1.0, 1.0, 2.0]).unwrap();
        assert_eq!(pts, vec![(1.0, 1.0), (2.0, 0.5), (3.0, 0.25)]);
        assert!(ccdf_points(&[]).is_err());
    }

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut xs = vec![1e16];
        xs.extend(std::iter::repeat_n(1.0, 1000));
        xs.push(-1e16);
        assert_eq!(compensated_sum(xs), 1000.0);
    }

    #[test]
    fn estimate_from_samples() {
        let e = RateEstimate::from_samples(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(e.value(), 2.5);
        assert_abs_diff_eq!(e.std_error, (5.0f64 / 3.0 / 4.0).sqrt(), epsilon = 1e-15);
        let e = RateEstimate::from_samples(&[1.5; 10]).unwrap();
        assert_eq!(e.std_error, 0.0);
        assert_eq!(e.z_distance(1.5), 0.0);
    }

    #[test]
    fn ks_identical_and_disjoint() {
        let a: Vec<f64> = (0..100).map(f64::from).collect();
        assert_eq!(ks_statistic(&a, &a), 0.0);
        let b: Vec<f64> = (200..300).map(f64::from).collect();
        assert_eq!(ks_statistic(&a, &b), 1.0);
    }

    proptest! {
        #[test]
        fn outage_bounded_by_mean_and_max(xs in prop::collection::vec(0.0..10.0f64, 1..200)) {
            let o = outage_from_samples(&xs).unwrap().bits();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let max = xs.iter().cloned().fold(0.0, f64::max);
            prop_assert!(o <= mean + 1e-12);
            prop_assert!(o <= max);
            prop_assert!(o >= max / xs.len() as f64 - 1e-12);
        }

        #[test]
        fn ccdf_non_increasing(xs in prop::collection::vec(-5.0..5.0f64, 1..200)) {
            let pts = ccdf_points(&xs).unwrap();
            prop_assert_eq!(pts[0].1, 1.0);
            prop_assert!(pts.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 > w[1].1));
        }
    }
}
