//! Self-checks behind `macrodiv verify`: closed forms against Monte Carlo,
//! the worst-case delay search and the concentration bound.

use crate::channel::{BlockageParams, ChannelConfig};
use crate::closed_forms::{
    async_capacity_limit, async_effective_snr, ergodic_capacity, outage_capacity, rbar_closed,
};
use crate::ofdm::{hoeffding_check, verify_worst_case_delta, worst_case_capacity, OfdmConfig};
use crate::rng::RngStream;
use crate::schemes::{outage_estimate, rbar_mc, SchemeKind, SchemeSpec};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

/// Run all checks; `scale` multiplies every Monte Carlo trial count.
pub fn run_checks(seed: u64, scale: f64) -> Result<Vec<Check>> {
    let n = |base: f64| ((base * scale).round() as usize).max(1000);
    let mut out = Vec::new();

    for (j, &p) in [0.1, 1.0, 10.0].iter().enumerate() {
        let est = rbar_mc(2, p, n(1e6), &RngStream::new(seed, 100 + j as u64), false);
        let exact = rbar_closed(2, p)?.bits();
        let z = est.z_distance(exact);
        out.push(Check::new(
            format!("rbar(2) closed form, P={p}"),
            z < 4.0,
            format!(
                "mc {:.6} ± {:.2e}, exact {exact:.6}, z={z:.2}",
                est.value(),
                est.std_error
            ),
        ));
    }

    for (j, &(l, pb, p)) in [(2usize, 0.5, 1.0), (4, 0.1, 10.0), (8, 0.3, 3.0)]
        .iter()
        .enumerate()
    {
        let cfg = ChannelConfig::new(l, p, BlockageParams::from_blockage_prob(pb)?, 1)?;
        let spec = SchemeSpec::new(SchemeKind::Capacity, cfg)?;
        let emp = outage_estimate(&spec, n(1e6), &RngStream::new(seed, 200 + j as u64))?
            .rate
            .bits();
        let exact = outage_capacity(l, pb, p).rate.bits();
        let rel = (emp - exact).abs() / exact;
        out.push(Check::new(
            format!("outage capacity, L={l} p_B={pb} P={p}"),
            rel < 0.01,
            format!("empirical {emp:.6}, exact {exact:.6}, rel err {rel:.2e}"),
        ));
    }

    for l in [1usize, 2] {
        let ofdm = OfdmConfig::with_prefix(64, 4)?;
        let rep = verify_worst_case_delta(l, 0.2, 10.0, &ofdm, 21)?;
        out.push(Check::new(
            format!("worst-case delay grid, L={l}"),
            rep.passed,
            format!(
                "argmin {:?}, min {:.9}, closed {:.9}",
                rep.argmin, rep.min_rate, rep.worst_case_capacity
            ),
        ));
    }

    let (l, pb, p) = (4, 0.2, 10.0);
    let mut gaps = Vec::new();
    for k in [64usize, 256, 1024, 4096] {
        let ofdm = OfdmConfig::with_prefix(k, 16)?;
        let limit = ofdm.overhead() * async_capacity_limit(l, pb, p).bits();
        gaps.push((worst_case_capacity(l, pb, p, &ofdm).bits() - limit).abs());
    }
    let shrinking = gaps.windows(2).all(|w| w[1] < w[0] || w[1] < 1e-12);
    out.push(Check::new(
        "finite-K worst case approaches its limit",
        shrinking && gaps[3] < 2e-3,
        gaps.iter()
            .map(|g| format!("{g:.3e}"))
            .collect::<Vec<_>>()
            .join(" > "),
    ));

    let six_db = (0..=16).all(|i| {
        (-30..=30).all(|db| {
            let p = 10f64.powf(db as f64 / 10.0);
            async_effective_snr(i, p) >= i as f64 * p / 4.0
        })
    });
    out.push(Check::new(
        "large-K SNR loss at most 6 dB",
        six_db,
        "i <= 16, P in [-30, 30] dB",
    ));

    for k in [16usize, 64, 256] {
        let ofdm = OfdmConfig::with_prefix(k, 4)?;
        let rows = hoeffding_check(
            4,
            0.2,
            1.0,
            &ofdm,
            8,
            n(2e3),
            &[0.1, 0.2, 0.5],
            &RngStream::new(seed, 300 + k as u64),
        )?;
        let ok = rows.iter().all(|r| r.holds());
        let detail = rows
            .iter()
            .map(|r| format!("ε={} {:.2e}≤{:.2e}", r.epsilon, r.empirical, r.bound))
            .collect::<Vec<_>>()
            .join(", ");
        out.push(Check::new(
            format!("concentration bound, K={k}"),
            ok,
            detail,
        ));
    }

    let points = [(1usize, 0.3, 1.0), (6, 0.1, 100.0)];
    let sync_vs_async = points.iter().all(|&(l, pb, p)| {
        async_capacity_limit(l, pb, p).bits() <= ergodic_capacity(l, pb, p).bits()
    });
    let detail = points
        .iter()
        .map(|&(l, pb, p)| {
            format!(
                "L={l} p_B={pb} P={p}: {:.6} <= {:.6}",
                async_capacity_limit(l, pb, p).bits(),
                ergodic_capacity(l, pb, p).bits()
            )
        })
        .collect::<Vec<_>>()
        .join(", ");
    out.push(Check::new(
        "worst-case limit below synchronous capacity",
        sync_vs_async,
        detail,
    ));

    Ok(out)
}
