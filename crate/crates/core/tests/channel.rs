use macrodiv::channel::{
    alpha_pmf, sample_stationary_state_from, step_blockage, BlockageParams, ChannelConfig,
};
use macrodiv::RngStream;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn markov_chain_spends_stationary_fraction_blocked() {
    let params = BlockageParams::new(0.1, 0.3).unwrap();
    let p_b = params.blockage_prob();
    let mut rng = RngStream::new(7, 0).rng();
    let mut beta = vec![true];
    let steps = 1_000_000usize;
    let mut blocked = 0usize;
    for _ in 0..steps {
        beta = step_blockage(&mut rng, &beta, &params);
        blocked += usize::from(!beta[0]);
    }
    let frac = blocked as f64 / steps as f64;
    // successive states are correlated; inflate the i.i.d. error by the
    // chain's integrated autocorrelation time (1 + λ) / (1 - λ)
    let lambda = 1.0 - params.p() - params.q();
    let se = (p_b * (1.0 - p_b) / steps as f64 * (1.0 + lambda) / (1.0 - lambda)).sqrt();
    assert!(
        (frac - p_b).abs() < 4.0 * se,
        "fraction {frac} vs {p_b} (se {se})"
    );
}

#[test]
fn transition_frequencies_match_parameters() {
    let params = BlockageParams::new(0.2, 0.45).unwrap();
    let mut rng = RngStream::new(11, 0).rng();
    let mut beta = vec![true];
    let (mut from_on, mut on_to_off, mut from_off, mut off_to_on) =
        (0usize, 0usize, 0usize, 0usize);
    for _ in 0..400_000 {
        let next = step_blockage(&mut rng, &beta, &params);
        if beta[0] {
            from_on += 1;
            on_to_off += usize::from(!next[0]);
        } else {
            from_off += 1;
            off_to_on += usize::from(next[0]);
        }
        beta = next;
    }
    let p_hat = on_to_off as f64 / from_on as f64;
    let q_hat = off_to_on as f64 / from_off as f64;
    assert!((p_hat - 0.2).abs() < 4.0 * (0.2 * 0.8 / from_on as f64).sqrt());
    assert!((q_hat - 0.45).abs() < 4.0 * (0.45 * 0.55 / from_off as f64).sqrt());
}

#[test]
fn alpha_histogram_passes_chi_square() {
    let l = 6;
    let p_b = 0.35;
    let cfg =
        ChannelConfig::new(l, 1.0, BlockageParams::from_blockage_prob(p_b).unwrap(), 1).unwrap();
    let n = 200_000usize;
    let stream = RngStream::new(3, 1);
    let mut counts = vec![0usize; l + 1];
    for t in 0..n {
        counts[sample_stationary_state_from(&stream.substream(t as u64), &cfg).alpha()] += 1;
    }
    let pmf = alpha_pmf(l, p_b);
    let stat: f64 = counts
        .iter()
        .zip(&pmf)
        .map(|(&c, &p)| {
            let e = p * n as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum();
    let critical = ChiSquared::new(l as f64).unwrap().inverse_cdf(0.999);
    assert!(stat < critical, "chi-square {stat} >= {critical}");
}

#[test]
fn same_stream_gives_same_state() {
    let cfg =
        ChannelConfig::new(8, 2.0, BlockageParams::from_blockage_prob(0.4).unwrap(), 1).unwrap();
    let s = RngStream::new(42, 9).substream(123);
    assert_eq!(
        sample_stationary_state_from(&s, &cfg),
        sample_stationary_state_from(&s, &cfg)
    );
    let other = sample_stationary_state_from(&RngStream::new(42, 9).substream(124), &cfg);
    assert_ne!(sample_stationary_state_from(&s, &cfg), other);
}
