mod common;

use common::*;
use erasure_core::known_exponents::{e_a_general, e_b_general};
use erasure_core::lower_bound::{e_gallager, f_term};
use erasure_core::ExponentQuery;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 2e-3;

#[test]
fn general_solvers_match_grid_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..5 {
        let w = random_channel(&mut rng);
        let p0: f64 = rng.random_range(0.25..0.75);
        let r: f64 = rng.random_range(0.0..0.2);
        let t: f64 = rng.random_range(-0.2..0.2);
        let b = Bin::new(p0, &w);
        let q = ExponentQuery::new(r, t, w.clone(), vec![p0, 1.0 - p0]).unwrap();
        let (a, _) = e_a_general(&q).unwrap();
        let (bb, _) = e_b_general(&q).unwrap();
        let (oa, ob) = (e_a_oracle(&b, r, t), e_b_oracle(&b, r, t));
        println!("{w:?} p0={p0} r={r} t={t}: e_a {a} / {oa}, e_b {bb} / {ob}");
        assert!(close(a, oa, TOL), "e_a {a} vs oracle {oa}");
        assert!(close(bb, ob, TOL), "e_b {bb} vs oracle {ob}");
    }
}

#[test]
fn f_term_and_gallager_match_grid_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let (w, w2) = (random_channel(&mut rng), random_channel(&mut rng));
        let p0: f64 = rng.random_range(0.25..0.75);
        let px = [p0, 1.0 - p0];
        let qy: f64 = rng.random_range(0.1..0.9);
        let lam: f64 = rng.random_range(0.0..2.0);
        let b = Bin::new(p0, &w);
        let f = f_term(&[1.0 - qy, qy], lam, &w, &px).unwrap();
        assert!(
            close(f, b.f_term(qy, lam), TOL),
            "{f} vs {}",
            b.f_term(qy, lam)
        );
        let rho: f64 = rng.random_range(0.05..1.0);
        let s: f64 = rng.random_range(0.0..rho);
        let g = e_gallager(&w, &w2, s, rho, &px).unwrap();
        let og = e_gallager_oracle(&b, &Bin::new(p0, &w2), s, rho);
        assert!(close(g, og, TOL), "{g} vs {og}");
    }
}

#[test]
fn bsc_reduction_matches_general_solver() {
    use erasure_core::known_exponents::{e1_bsc, e1_general};
    for &theta in &[0.1, 0.2] {
        for &(r, t) in &[(0.05, 0.0), (0.1, 0.2)] {
            let q = ExponentQuery::bsc(r, t, theta).unwrap();
            let g = e1_general(&q).unwrap().e1;
            let s = e1_bsc(r, t, theta).unwrap().e1;
            assert!(close(g, s, 1e-3), "θ={theta} R={r} T={t}: {g} vs {s}");
        }
    }
}
