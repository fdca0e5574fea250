use erasure_core::simulator::*;
use erasure_core::{ChannelFamily, Dmc, ExponentTable};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;

fn bits(s: &str) -> Vec<u8> {
    s.bytes().map(|b| b - b'0').collect()
}

#[test]
fn codewords_stay_in_the_type_class() {
    let cfg = SimConfig::bsc(4, 0.4, 0.0, 0.1, 1, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..50 {
        for w in sample_codebook(&cfg, &mut rng).unwrap() {
            assert_eq!(w.iter().filter(|&&b| b == 1).count(), 2);
        }
    }
}

#[test]
fn type_class_draws_are_uniform() {
    // 20 sequences of length 6 with three ones; chi-square with 19 degrees of freedom.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let draws = 100_000;
    let mut hist: HashMap<Vec<u8>, usize> = HashMap::new();
    for w in sample_type_class(&[3, 3], draws, &mut rng) {
        *hist.entry(w).or_default() += 1;
    }
    assert_eq!(hist.len(), 20);
    let expected = draws as f64 / 20.0;
    let chi2: f64 = hist
        .values()
        .map(|&c| (c as f64 - expected).powi(2) / expected)
        .sum();
    assert!(chi2 < 36.19, "chi-square {chi2}");
}

#[test]
fn same_seed_same_codebook() {
    let cfg = SimConfig::bsc(8, 0.3, 0.0, 0.1, 1, 0).unwrap();
    let a = sample_codebook(&cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    let b = sample_codebook(&cfg, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn dominant_likelihood_is_decoded() {
    let code = vec![bits("000111"), bits("111000")];
    let w = Dmc::bsc(0.01).unwrap();
    assert_eq!(forney_decode(&code[0], &code, &w, 0.0).messages, vec![0]);
}

#[test]
fn deep_list_mode_lists_everything() {
    let code = vec![bits("0011"), bits("0101"), bits("1100"), bits("1010")];
    let w = Dmc::bsc(0.2).unwrap();
    let d = forney_decode(&bits("1111"), &code, &w, -50.0);
    assert_eq!(d.messages, vec![0, 1, 2, 3]);
}

/// Decision regions rebuilt from the ratio definition with plain sums of likelihoods.
fn region_oracle(
    y: &[u8],
    code: &[Vec<u8>],
    metric: impl Fn(&[u8], &[u8]) -> f64,
    t: f64,
) -> Vec<usize> {
    let n = y.len() as f64;
    let vals: Vec<f64> = code.iter().map(|x| metric(x, y)).collect();
    (0..code.len())
        .filter(|&m| {
            let others: f64 = (0..code.len()).filter(|&k| k != m).map(|k| vals[k]).sum();
            vals[m] >= (n * t).exp() * others
        })
        .collect()
}

fn all_outputs(n: usize) -> impl Iterator<Item = Vec<u8>> {
    (0..1u32 << n).map(move |v| (0..n).map(|i| ((v >> i) & 1) as u8).collect())
}

fn bsc_w(theta: f64, x: &[u8], y: &[u8]) -> f64 {
    x.iter()
        .zip(y)
        .map(|(a, b)| if a == b { 1.0 - theta } else { theta })
        .product()
}

#[test]
fn forney_regions_match_brute_force() {
    let code = vec![bits("000111"), bits("011010"), bits("110001")];
    let w = Dmc::bsc(0.25).unwrap();
    for y in all_outputs(6) {
        let want = region_oracle(&y, &code, |x, y| bsc_w(0.25, x, y), 0.1);
        assert_eq!(
            forney_decode(&y, &code, &w, 0.1).messages,
            want,
            "y = {y:?}"
        );
    }
}

fn two_bsc() -> (ChannelFamily, ExponentTable) {
    let fam = ChannelFamily::bsc_grid(&[0.1, 0.3], vec![0.5, 0.5]).unwrap();
    let table = ExponentTable::new(0.1, 0.05, vec![0.12, 0.02]);
    (fam, table)
}

#[test]
fn universal_regions_match_brute_force() {
    let (fam, table) = two_bsc();
    let xi = 0.8;
    let code = vec![bits("000111"), bits("011010"), bits("110001")];
    let n = 6.0;
    let f = |x: &[u8], y: &[u8]| {
        [(0.1, 0.12), (0.3, 0.02)]
            .iter()
            .map(|&(th, e1)| (n * (xi * e1 + 0.05_f64)).exp() * bsc_w(th, x, y))
            .fold(0.0, f64::max)
    };
    for y in all_outputs(6) {
        let want = region_oracle(&y, &code, f, 0.05);
        let got = universal_decode(&y, &code, &fam, &table, xi).unwrap();
        assert_eq!(got.messages, want, "y = {y:?}");
    }
}

#[test]
fn singleton_metric_is_offset_likelihood() {
    let fam = ChannelFamily::bsc_grid(&[0.2], vec![0.5, 0.5]).unwrap();
    let table = ExponentTable::new(0.1, 0.05, vec![0.07]);
    let (x, y) = (bits("00110101"), bits("01110100"));
    let got = universal_metric(&x, &y, &fam, &table, 0.6).unwrap();
    let want = 8.0 * (0.6 * 0.07 + 0.05) + bsc_w(0.2, &x, &y).ln();
    assert!((got - want).abs() < 1e-12);
}

#[test]
fn zero_weights_give_generalized_likelihood() {
    let fam = ChannelFamily::bsc_grid(&[0.1, 0.3], vec![0.5, 0.5]).unwrap();
    let table = ExponentTable::new(0.1, 0.0, vec![0.12, 0.02]);
    let x = bits("00110101");
    for y in all_outputs(8).step_by(7) {
        let got = universal_metric(&x, &y, &fam, &table, 0.0).unwrap();
        let want = bsc_w(0.1, &x, &y).max(bsc_w(0.3, &x, &y)).ln();
        assert!((got - want).abs() < 1e-12);
    }
}

#[test]
fn two_bsc_envelope_crosses_where_predicted() {
    let (fam, table) = two_bsc();
    let (xi, n) = (0.8, 10usize);
    // Affine in distance d: c_k + d·log(θ_k/(1−θ_k)) with c_k = n[ξE₁ + T + log(1−θ_k)].
    let line = |th: f64, e1: f64| {
        (
            n as f64 * (xi * e1 + 0.05 + (1.0 - th).ln()),
            (th / (1.0 - th)).ln(),
        )
    };
    let (a, b) = (line(0.1, 0.12), line(0.3, 0.02));
    let cross = (b.0 - a.0) / (a.1 - b.1);
    let x = vec![0u8; n];
    for d in 0..=n {
        let y: Vec<u8> = (0..n).map(|i| u8::from(i < d)).collect();
        let got = universal_metric(&x, &y, &fam, &table, xi).unwrap();
        let want = if (d as f64) < cross {
            a.0 + d as f64 * a.1
        } else {
            b.0 + d as f64 * b.1
        };
        assert!((got - want).abs() < 1e-9, "d = {d}, crossover {cross}");
    }
}

#[test]
fn singleton_universal_equals_forney() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..2000 {
        let theta: f64 = rng.random_range(0.02..0.45);
        let t: f64 = rng.random_range(-0.5..0.5);
        let xi: f64 = rng.random_range(0.0..1.0);
        let fam = ChannelFamily::bsc_grid(&[theta], vec![0.5, 0.5]).unwrap();
        let table = ExponentTable::new(0.2, t, vec![rng.random_range(0.0..0.3)]);
        let code = sample_type_class(&[4, 4], rng.random_range(2..6), &mut rng);
        let y: Vec<u8> = (0..8).map(|_| rng.random_range(0..2)).collect();
        let w = Dmc::bsc(theta).unwrap();
        assert_eq!(
            universal_decode(&y, &code, &fam, &table, xi).unwrap(),
            forney_decode(&y, &code, &w, t)
        );
    }
}

#[test]
fn unreachable_threshold_always_erases() {
    let mut cfg = SimConfig::bsc(8, 0.13, 50.0, 0.1, 2000, 4).unwrap();
    let r = estimate(&cfg).unwrap();
    assert_eq!(
        (r.p_e1.value, r.p_e2.value, r.p_erasure.value),
        (1.0, 0.0, 1.0)
    );
    cfg.method = Method::Exhaustive;
    cfg.trials = 5;
    let r = estimate(&cfg).unwrap();
    assert!((r.p_e1.value - 1.0).abs() < 1e-12 && r.p_e2.value == 0.0);
}

#[test]
fn monte_carlo_agrees_with_exhaustive() {
    let mut cfg = SimConfig::bsc(8, 0.13, 0.05, 0.15, 1_000_000, 5).unwrap();
    assert_eq!(cfg.codewords(), 3);
    let mc = estimate(&cfg).unwrap();
    cfg.method = Method::Exhaustive;
    cfg.trials = 3000;
    let ex = estimate(&cfg).unwrap();
    for (m, e) in [
        (mc.p_e1, ex.p_e1),
        (mc.p_e2, ex.p_e2),
        (mc.p_erasure, ex.p_erasure),
    ] {
        // The exhaustive run averages a finite number of codebooks, so allow its own spread.
        let slack = 3e-3;
        assert!(
            m.lo - slack <= e.value && e.value <= m.hi + slack,
            "{m:?} vs {}",
            e.value
        );
    }
}

#[test]
fn a_terms_of_singleton_at_full_fraction_are_subexponential() {
    let fam = ChannelFamily::bsc_grid(&[0.1], vec![0.5, 0.5]).unwrap();
    let mut rates = Vec::new();
    for n in [4usize, 6, 8, 10, 12] {
        let mut cfg = SimConfig::bsc(n, 0.1, 0.05, 0.1, 40, 6).unwrap();
        cfg.family = Some(fam.clone());
        cfg.xi = 1.0;
        cfg.mode = DecoderMode::Universal;
        cfg.method = Method::Exhaustive;
        let (a1, a2) = estimate_a_terms(&cfg).unwrap();
        rates.push((n, -(a1 + a2).ln() / n as f64));
    }
    // −(1/n) log(A₁ + A₂) stays above a polynomial-factor margin that vanishes with n.
    for &(n, rate) in &rates {
        let eps = 2.0 * ((n + 1) as f64).ln() / n as f64;
        assert!(rate >= -eps, "{rates:?}");
    }
}

#[test]
fn large_threshold_scales_first_term() {
    let fam = ChannelFamily::bsc_grid(&[0.1], vec![0.5, 0.5]).unwrap();
    let mut cfg = SimConfig::bsc(6, 0.2, 2.0, 0.1, 10, 7).unwrap();
    cfg.family = Some(fam);
    cfg.xi = 1.0;
    cfg.mode = DecoderMode::Universal;
    cfg.method = Method::Exhaustive;
    let (a1, _) = estimate_a_terms(&cfg).unwrap();
    // Every output is erased, so A₁ = e^{−nT}·Σ_y f(x_m, y) = e^{nξE₁}.
    let e1 = cfg.family.as_ref().unwrap().exponents(0.2, 2.0).unwrap().e1[0];
    assert!((a1 - (6.0 * e1).exp()).abs() < 1e-9 * a1, "{a1}");
}

#[test]
fn exhaustive_scale_is_checked() {
    let mut cfg = SimConfig::bsc(24, 0.1, 0.0, 0.1, 1, 0).unwrap();
    cfg.method = Method::Exhaustive;
    assert!(estimate(&cfg).is_err());
}

#[test]
fn slope_fit_flags_zero_estimates() {
    let pts = vec![(4, 0.5), (6, 0.0), (8, 0.1), (10, 0.05)];
    let f = slope_fit(&pts).unwrap();
    assert_eq!(f.excluded, vec![6]);
    assert!(slope_fit(&pts[..3]).is_err());
}
