//! Structure-level properties of the Shapley operator: order preservation,
//! additive homogeneity, nonexpansiveness, the recession limit, and the
//! policy envelope identities, checked on seeded random games.

mod common;

use proptest::prelude::*;
use rand::Rng;

use mpg_core::fixture;

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[test]
fn monotone_and_nonexpansive_on_random_games() {
    let mut rng = common::rng(11);
    for _ in 0..50 {
        let n = rng.gen_range(1..=6);
        let spec = common::random_game(&mut rng, n, 3, 3);
        let r = common::random_payment(&mut rng, &spec);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();

        // monotonicity on the pair (min(x,y), max(x,y))
        let lo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a.min(*b)).collect();
        let hi: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a.max(*b)).collect();
        let tlo = spec.shapley_apply(&r, &lo);
        let thi = spec.shapley_apply(&r, &hi);
        for (a, b) in tlo.iter().zip(&thi) {
            assert!(a <= &(b + 1e-12));
        }

        // sup-norm nonexpansiveness
        let tx = spec.shapley_apply(&r, &x);
        let ty = spec.shapley_apply(&r, &y);
        assert!(max_diff(&tx, &ty) <= max_diff(&x, &y) + 1e-12);
    }
}

#[test]
fn additively_homogeneous() {
    let mut rng = common::rng(12);
    for _ in 0..50 {
        let n = rng.gen_range(1..=6);
        let spec = common::random_game(&mut rng, n, 3, 3);
        let r = common::random_payment(&mut rng, &spec);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let c: f64 = rng.gen_range(-10.0..10.0);
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let tx = spec.shapley_apply(&r, &x);
        let ts = spec.shapley_apply(&r, &shifted);
        for (a, b) in tx.iter().zip(&ts) {
            let scale = 1.0 + a.abs().max(b.abs());
            assert!((b - a - c).abs() <= 1e-12 * scale);
        }
    }
}

#[test]
fn recession_is_the_scaling_limit() {
    let mut rng = common::rng(13);
    for _ in 0..25 {
        let n = rng.gen_range(1..=6);
        let spec = common::random_game(&mut rng, n, 3, 3);
        let r = common::random_payment(&mut rng, &spec);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let hat = spec.recession_apply(&x);
        for alpha in [1e2, 1e4, 1e6] {
            let ax: Vec<f64> = x.iter().map(|v| v * alpha).collect();
            let t: Vec<f64> = spec
                .shapley_apply(&r, &ax)
                .iter()
                .map(|v| v / alpha)
                .collect();
            // payments enter once per stage, so the gap shrinks like max|r|/alpha
            assert!(max_diff(&t, &hat) <= (r.max_abs() + 1e-9) / alpha);
        }
    }
}

#[test]
fn recession_is_positively_homogeneous() {
    let mut rng = common::rng(14);
    for _ in 0..25 {
        let n = rng.gen_range(1..=6);
        let spec = common::random_game(&mut rng, n, 3, 3);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect();
        let two_x: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        let a: Vec<f64> = spec.recession_apply(&x).iter().map(|v| 2.0 * v).collect();
        let b = spec.recession_apply(&two_x);
        assert!(max_diff(&a, &b) <= 1e-12);
    }
}

#[test]
fn policy_envelope_by_full_enumeration() {
    let mut rng = common::rng(15);
    for _ in 0..30 {
        let n = rng.gen_range(1..=4);
        let spec = common::random_game(&mut rng, n, 3, 3);
        let r = common::random_payment(&mut rng, &spec);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
        let t = spec.shapley_apply(&r, &x);

        let mut min_over_sigma = vec![f64::INFINITY; n];
        for sigma in spec.policies() {
            let reduced = spec.reduce_min(&r, &sigma);
            let ts = reduced.apply(&x);

            // inner identity: the reduced operator is the max over pi of the
            // affine maps r + P x
            let mut max_over_pi = vec![f64::NEG_INFINITY; n];
            for pi in spec.counter_policies(&sigma) {
                let (pay, p) = spec.matrix_of(&r, &sigma, &pi);
                for i in 0..n {
                    let v = pay[i] + p[i].iter().zip(&x).map(|(a, b)| a * b).sum::<f64>();
                    max_over_pi[i] = max_over_pi[i].max(v);
                }
            }
            assert!(max_diff(&ts, &max_over_pi) <= 1e-12);

            for i in 0..n {
                min_over_sigma[i] = min_over_sigma[i].min(ts[i]);
            }
        }
        assert!(max_diff(&t, &min_over_sigma) <= 1e-12);
    }
}

proptest! {
    // homogeneity and monotonicity on the three-state fixture under
    // arbitrary inputs, not just seeded samples
    #[test]
    fn fixture_shapley_is_monotone_homogeneous(
        x in proptest::array::uniform3(-1e6f64..1e6),
        y in proptest::array::uniform3(-1e6f64..1e6),
        c in -1e6f64..1e6,
    ) {
        let (spec, r) = fixture::example_game();
        let lo: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a.min(*b)).collect();
        let hi: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a.max(*b)).collect();
        let tlo = spec.shapley_apply(&r, &lo);
        let thi = spec.shapley_apply(&r, &hi);
        for (a, b) in tlo.iter().zip(&thi) {
            prop_assert!(a <= &(b + 1e-9));
        }
        let shifted: Vec<f64> = x.iter().map(|v| v + c).collect();
        let tx = spec.shapley_apply(&r, &x);
        let ts = spec.shapley_apply(&r, &shifted);
        for (a, b) in tx.iter().zip(&ts) {
            let scale = 1.0 + a.abs().max(b.abs());
            prop_assert!((b - a - c).abs() <= 1e-12 * scale);
        }
    }
}
