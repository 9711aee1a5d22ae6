//! Exit criteria, one line per criterion.
//!
//! Runs as a plain binary (`harness = false`) so every criterion is
//! reported even when an earlier one fails.

use std::time::Instant;

use macrodiv::alamouti::alamouti_symbol_check;
use macrodiv::channel::{alpha_ccdf, BlockageParams, ChannelConfig, ChannelState};
use macrodiv::closed_forms::{
    async_capacity_limit, async_effective_snr, ergodic_capacity, outage_capacity, rbar_closed,
    ts_ergodic_rate, two_tx_alamouti_rate,
};
use macrodiv::experiments::{rows_to_csv, run_sweep, Axis, FixedParams, Metric, SweepConfig};
use macrodiv::ofdm::{
    hoeffding_check, rate_at_delays, verify_worst_case_delta, worst_case_capacity, AsyncScheme,
    DelayProfile, OfdmConfig,
};
use macrodiv::par::with_workers;
use macrodiv::schemes::{
    ergodic_estimate, ncjt_increment_mc, outage_estimate, phase_diversity_conditional_spread,
    rbar_increment_mc, rbar_mc, Sampling, SchemeKind, SchemeSpec,
};
use macrodiv::RngStream;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

const SEED: u64 = 20_240_611;

fn cfg(l: usize, p_b: f64, snr: f64) -> ChannelConfig {
    ChannelConfig::new(l, snr, BlockageParams::from_blockage_prob(p_b).unwrap(), 1).unwrap()
}

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn c01_rbar_closed_form() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (j, &p) in [0.1, 1.0, 10.0].iter().enumerate() {
        let t0 = Instant::now();
        let est = rbar_mc(2, p, 1_000_000, &RngStream::new(SEED, 10 + j as u64), false);
        let secs = t0.elapsed().as_secs_f64();
        let exact = rbar_closed(2, p).unwrap().bits();
        let z = est.z_distance(exact);
        ok &= z < 4.0 && secs < 10.0;
        parts.push(format!("P={p}: z={z:.2} ({secs:.2}s)"));
    }
    // frozen quadrature value of the ring integrand at P = 1
    let at_one = rbar_closed(2, 1.0).unwrap().bits();
    ok &= (at_one - 1.388_483_827).abs() < 1e-8;
    ensure(ok, format!("{}; R̄(2)|P=1 = {at_one:.6}", parts.join(", ")))
}

fn c02_outage_consistency() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for (j, &(l, pb, p)) in [(2usize, 0.5, 1.0), (4, 0.1, 10.0), (8, 0.3, 3.0)]
        .iter()
        .enumerate()
    {
        let spec = SchemeSpec::new(SchemeKind::Capacity, cfg(l, pb, p)).unwrap();
        let emp = outage_estimate(&spec, 1_000_000, &RngStream::new(SEED, 20 + j as u64))
            .unwrap()
            .rate
            .bits();
        let exact = outage_capacity(l, pb, p).rate.bits();
        let rel = (emp - exact).abs() / exact;
        ok &= rel < 0.01;
        parts.push(format!("({l},{pb},{p}) rel={rel:.1e}"));
    }
    ensure(ok, parts.join(", "))
}

fn c03_monotonicity() -> Outcome {
    let mut ok = true;
    let mut worst_rbar = f64::INFINITY;
    for &p in &[0.5, 5.0] {
        for i in 1..=7usize {
            let d = rbar_increment_mc(
                i,
                p,
                200_000,
                &RngStream::new(SEED, 300 + 10 * i as u64 + (p * 2.0) as u64),
            );
            let z = d.value() / d.std_error;
            worst_rbar = worst_rbar.min(z);
            ok &= d.value() > 4.0 * d.std_error;
        }
    }
    let mut worst_l = f64::INFINITY;
    for &pb in &[0.1, 0.5] {
        for &p in &[0.5, 5.0] {
            for l in 1..8usize {
                let d = ncjt_increment_mc(
                    l,
                    pb,
                    p,
                    200_000,
                    &RngStream::new(
                        SEED,
                        400 + 100 * l as u64 + (pb * 10.0) as u64 + (p * 2.0) as u64,
                    ),
                );
                let z = d.value() / d.std_error;
                worst_l = worst_l.min(z);
                ok &= d.value() > 4.0 * d.std_error;
            }
        }
    }
    let mut worst_ts = f64::INFINITY;
    for &l in &[1usize, 2, 4, 8] {
        for &pb in &[0.1, 0.3, 0.5] {
            for &p in &[0.5, 5.0] {
                let spec = SchemeSpec::new(SchemeKind::Ncjt, cfg(l, pb, p)).unwrap();
                let e = ergodic_estimate(
                    &spec,
                    100_000,
                    &RngStream::new(SEED, 500 + l as u64),
                    Sampling::Plain,
                )
                .unwrap();
                let ts = ts_ergodic_rate(l, pb, p).bits();
                let slack = (e.value() - ts) / e.std_error.max(1e-300);
                worst_ts = worst_ts.min(slack);
                ok &= e.value() >= ts - 4.0 * e.std_error;
            }
        }
    }
    ensure(
        ok,
        format!("min z R̄(i+1)-R̄(i) = {worst_rbar:.1}, min z R(L+1)-R(L) = {worst_l:.1}, min (NCJT-TS)/se = {worst_ts:.1}"),
    )
}

fn c04_phase_diversity_concentration() -> Outcome {
    let c = cfg(4, 0.2, 4.0);
    let stream = RngStream::new(SEED, 40);
    let stds: Vec<f64> = [16usize, 64, 256]
        .iter()
        .map(|&k| {
            phase_diversity_conditional_spread(&c, k, 10_000, 100, &stream)
                .unwrap()
                .std()
        })
        .collect();
    let r1 = stds[0] / stds[1];
    let r2 = stds[1] / stds[2];
    ensure(
        r1 >= 1.8 && r2 >= 1.8,
        format!(
            "std {:.4} -> {:.4} -> {:.4}; ratios {r1:.3}, {r2:.3}",
            stds[0], stds[1], stds[2]
        ),
    )
}

fn c05_asymptotic_outage() -> Outcome {
    let (l, pb, p) = (4usize, 0.2, 4.0);
    let rbar: Vec<f64> = (0..=l)
        .map(|i| match rbar_closed(i, p) {
            Ok(r) => r.bits(),
            Err(_) => rbar_mc(i, p, 2_000_000, &RngStream::new(SEED, 50 + i as u64), true).value(),
        })
        .collect();
    let ccdf = alpha_ccdf(l, pb);
    let target = (1..=l).map(|i| ccdf[i] * rbar[i]).fold(f64::MIN, f64::max);
    let spec = SchemeSpec::new(SchemeKind::PhaseDiversity { k: 256 }, cfg(l, pb, p)).unwrap();
    let emp = outage_estimate(&spec, 100_000, &RngStream::new(SEED, 55)).unwrap();
    let rel = (emp.rate.bits() - target).abs() / target;
    // The gap is driven by the O(1/sqrt(K)) spread of the frame rate, so a
    // larger K is reported alongside to show the trend.
    let wide = SchemeSpec::new(SchemeKind::PhaseDiversity { k: 4096 }, cfg(l, pb, p)).unwrap();
    let wide_emp = outage_estimate(&wide, 20_000, &RngStream::new(SEED, 56))
        .unwrap()
        .rate
        .bits();
    let wide_rel = (wide_emp - target).abs() / target;
    ensure(
        rel < 0.05,
        format!(
            "K=256 empirical {:.4} vs max_i P(α≥i)R̄(i) = {target:.4}, rel err {rel:.3}; K=4096 rel err {wide_rel:.3}",
            emp.rate.bits()
        ),
    )
}

fn c06_alamouti() -> Outcome {
    let p = 3.0;
    let mut ok = true;
    let mut parts = Vec::new();
    for (beta, want) in [
        ([false, false], 0.0),
        ([true, false], p),
        ([true, true], 2.0 * p),
    ] {
        let state = ChannelState::new(beta.to_vec(), vec![0.7, 2.2]).unwrap();
        let r = alamouti_symbol_check(
            &state,
            p,
            100_000,
            &RngStream::new(SEED, 60 + r_alpha(&beta)),
        )
        .unwrap();
        let dev = (r.effective_snr - want).abs();
        ok &= dev <= 4.0 * r.snr_std_error;
        parts.push(format!(
            "α={}: snr {:.4} (want {want}, 4σ={:.4})",
            r.alpha,
            r.effective_snr,
            4.0 * r.snr_std_error
        ));
    }
    let mut max_diff = 0.0f64;
    for &pb in &[0.01, 0.2, 0.5, 0.9] {
        for &snr in &[0.1, 1.0, 10.0, 1000.0] {
            let d = (two_tx_alamouti_rate(2, pb, snr).unwrap().bits()
                - ergodic_capacity(2, pb, snr).bits())
            .abs();
            max_diff = max_diff.max(d);
        }
    }
    ok &= max_diff < 1e-12;
    parts.push(format!("max |two_tx - C| at L=2: {max_diff:.1e}"));
    ensure(ok, parts.join("; "))
}

fn r_alpha(beta: &[bool; 2]) -> u64 {
    beta.iter().filter(|&&b| b).count() as u64
}

fn c07_worst_case_delay() -> Outcome {
    let ofdm = OfdmConfig::with_prefix(64, 4).unwrap();
    let (pb, p) = (0.2, 10.0);
    let mut ok = true;
    let mut parts = Vec::new();
    for l in [1usize, 2] {
        let rep = verify_worst_case_delta(l, pb, p, &ofdm, 21).unwrap();
        let at_half = rep.argmin.iter().all(|&d| (d - 0.5).abs() < 1e-12);
        ok &= rep.passed && at_half;
        let profile = DelayProfile::new(vec![0.0; l], &ofdm).unwrap();
        let on_grid = rate_at_delays(
            AsyncScheme::CapacityPerSubcarrier,
            &profile,
            l,
            pb,
            p,
            &ofdm,
            1,
            &RngStream::new(0, 0),
        )
        .unwrap();
        let diff = (on_grid.value() - ofdm.overhead() * ergodic_capacity(l, pb, p).bits()).abs();
        ok &= diff < 1e-9;
        parts.push(format!(
            "L={l}: argmin {:?}, |R(δ=0) - K/(K+D)·C| = {diff:.1e}",
            rep.argmin
        ));
    }
    ensure(ok, parts.join("; "))
}

fn c08_riemann_limit() -> Outcome {
    let ks = [64usize, 256, 1024, 4096];
    let mut ok = true;
    let mut parts = Vec::new();
    for &(l, pb, p) in &[(4usize, 0.2, 10.0), (8, 0.1, 1000.0), (16, 0.05, 1e4)] {
        let limit = async_capacity_limit(l, pb, p).bits();
        let mut adjusted = Vec::new();
        let mut raw = Vec::new();
        for &k in &ks {
            let ofdm = OfdmConfig::with_prefix(k, 16).unwrap();
            let r = worst_case_capacity(l, pb, p, &ofdm).bits();
            adjusted.push((r - ofdm.overhead() * limit).abs());
            raw.push((r - limit).abs());
        }
        let shrinking = adjusted.windows(2).all(|w| w[1] < w[0] || w[1] < 1e-12);
        let raw_shrinking = raw.windows(2).all(|w| w[1] < w[0]);
        ok &= shrinking && raw_shrinking && adjusted[3] < 2e-3;
        parts.push(format!(
            "({l},{pb},{p}) gap {:.1e}/{:.1e}/{:.1e}/{:.1e} (raw at 4096: {:.1e})",
            adjusted[0], adjusted[1], adjusted[2], adjusted[3], raw[3]
        ));
    }
    ensure(ok, parts.join("; "))
}

fn c09_hoeffding() -> Outcome {
    let mut ok = true;
    let mut parts = Vec::new();
    for &k in &[16usize, 64, 256] {
        let ofdm = OfdmConfig::with_prefix(k, 4).unwrap();
        let rows = hoeffding_check(
            4,
            0.2,
            1.0,
            &ofdm,
            20,
            10_000,
            &[0.1, 0.2, 0.5],
            &RngStream::new(SEED, 90 + k as u64),
        )
        .unwrap();
        for r in rows {
            ok &= r.holds();
            parts.push(format!(
                "K={k} ε={}: {:.2e}≤{:.2e}",
                r.epsilon, r.empirical, r.bound
            ));
        }
    }
    ensure(ok, parts.join(", "))
}

fn c10_six_db() -> Outcome {
    let mut worst = f64::INFINITY;
    for i in 0..=16usize {
        for step in -60..=60 {
            let p = 10f64.powf(step as f64 / 10.0);
            let margin = async_effective_snr(i, p) - i as f64 * p / 4.0;
            worst = worst.min(margin);
        }
    }
    ensure(
        worst >= 0.0,
        format!("min margin over i<=16, P in [-60,60] dB: {worst:.3e}"),
    )
}

fn c11_determinism() -> Outcome {
    let config = SweepConfig {
        axis: Axis::BlockageProb,
        axis_values: vec![0.1, 0.3],
        fixed: FixedParams {
            l: 4,
            p_b: 0.2,
            snr_db: 5.0,
            k: 8,
            d: 2,
        },
        schemes: [
            "capacity",
            "ts",
            "ncjt",
            "phase_div",
            "cdd",
            "two_tx",
            "ncja",
        ]
        .iter()
        .map(|s| s.parse().unwrap())
        .collect(),
        metrics: vec![Metric::Ergodic, Metric::Outage],
        n_trials: Some(20_000),
        seed: 99,
        sampling: Sampling::Plain,
    };
    let runs: Vec<String> = [1usize, 4, 16]
        .iter()
        .map(|&w| rows_to_csv(&with_workers(w, || run_sweep(&config)).unwrap().rows))
        .collect();
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    ensure(
        same && runs[0].lines().count() == 29,
        format!(
            "{} bytes, identical at 1/4/16 workers: {same}",
            runs[0].len()
        ),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("AC1 closed-form R̄(2) vs Monte Carlo", c01_rbar_closed_form),
        (
            "AC2 empirical outage vs outage capacity",
            c02_outage_consistency,
        ),
        ("AC3 monotonicity suite", c03_monotonicity),
        (
            "AC4 phase-diversity concentration",
            c04_phase_diversity_concentration,
        ),
        (
            "AC5 asymptotic phase-diversity outage",
            c05_asymptotic_outage,
        ),
        ("AC6 Alamouti effective channel", c06_alamouti),
        ("AC7 worst-case fractional delay", c07_worst_case_delay),
        ("AC8 finite-K to large-K convergence", c08_riemann_limit),
        ("AC9 concentration bound", c09_hoeffding),
        ("AC10 6 dB loss bound", c10_six_db),
        ("AC11 determinism across worker counts", c11_determinism),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let t0 = Instant::now();
        let outcome = run();
        let secs = t0.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} [{secs:.1}s]: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name} [{secs:.1}s]: {detail}");
            }
        }
    }
    if failed > 0 {
        panic!("{failed} acceptance criteria failed");
    }
}
