mod common;

use common::{worked_example, worked_example_closed_form};
use hesscraft::oracles::{dense_hessian_nested, hessian_vector_product, DEFAULT_DENSE_CAP};
use hesscraft::random::{random_tape, RandomTape};
use hesscraft::{
    edge_pushing_hessian, hessian, reverse_gradient, structural_pattern, EdgePushingOptions,
    HessError, SparseHessian, Tape, TapeBuilder,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn worked_example_matches_closed_form_at_many_points() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let tape = worked_example();
    for _ in 0..50 {
        let RandomTape { x, .. } = random_tape(&mut rng, 3, 1);
        let x = [
            x[0],
            x.get(1).copied().unwrap_or(0.3),
            x.get(2).copied().unwrap_or(-0.7),
        ];
        let h = hessian(&tape.swept_at(&x).unwrap()).unwrap();
        for (r, c, v) in worked_example_closed_form(&x) {
            assert!((h.get(r, c) - v).abs() <= 1e-12 * v.abs().max(1.0));
        }
    }
}

#[test]
fn small_product_example() {
    let b = TapeBuilder::new();
    let x = b.inputs(2);
    let f = (x[0] * x[1]) * (x[0] + x[1]);
    let tape = b.finish(f).unwrap().swept_at(&[1.0, 2.0]).unwrap();
    let values: Vec<f64> = tape.nodes().iter().map(|n| n.value).collect();
    assert_eq!(values, vec![1.0, 2.0, 2.0, 3.0, 6.0]);
    assert_eq!(reverse_gradient(&tape).unwrap().gradient, vec![8.0, 5.0]);
    assert_eq!(hessian(&tape).unwrap().to_dense(), vec![4.0, 6.0, 6.0, 2.0]);
}

#[test]
fn adjoints_equal_reverse_gradient_bitwise() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..200 {
        let RandomTape { tape, x } = random_tape(&mut rng, 8, 40);
        let tape = tape.swept_at(&x).unwrap();
        let ep = edge_pushing_hessian(&tape, &EdgePushingOptions::default()).unwrap();
        let rg = reverse_gradient(&tape).unwrap();
        assert_eq!(ep.adjoints.vbar, rg.adjoints.vbar);
    }
}

#[test]
fn pushing_order_does_not_change_the_result() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for seed in 0..200 {
        let RandomTape { tape, x } = random_tape(&mut rng, 8, 40);
        let tape = tape.swept_at(&x).unwrap();
        let base = hessian(&tape).unwrap();
        let shuffled = edge_pushing_hessian(
            &tape,
            &EdgePushingOptions {
                shuffle_seed: Some(seed),
                ..Default::default()
            },
        )
        .unwrap()
        .hessian;
        assert!(shuffled.max_rel_diff(&base) <= 1e-12);
    }
}

#[test]
fn numeric_support_lies_inside_structural_pattern() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..200 {
        let RandomTape { tape, x } = random_tape(&mut rng, 8, 40);
        let tape = tape.swept_at(&x).unwrap();
        let structural = structural_pattern(&tape);
        for (r, c) in hessian(&tape).unwrap().pattern() {
            assert_eq!(
                structural.get(r, c),
                1.0,
                "({r}, {c}) missing from the pattern"
            );
        }
    }
}

#[test]
fn dense_oracle_agrees_and_is_symmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for _ in 0..100 {
        let RandomTape { tape, x } = random_tape(&mut rng, 8, 40);
        let tape = tape.swept_at(&x).unwrap();
        let dense = dense_hessian_nested(&tape, DEFAULT_DENSE_CAP).unwrap();
        assert_eq!(dense.block_support_violations, 0);
        assert!(dense.max_asymmetry <= 1e-12 * dense.w.max_abs().max(1.0));
        assert!(hessian(&tape).unwrap().max_rel_diff(&dense.hessian) <= 1e-9);
    }
}

#[test]
fn hessian_vector_products_match() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    for _ in 0..100 {
        let RandomTape { tape, x } = random_tape(&mut rng, 8, 40);
        let tape = tape.swept_at(&x).unwrap();
        let h = hessian(&tape).unwrap();
        let d: Vec<f64> = (0..tape.n()).map(|k| 0.5 - k as f64 * 0.25).collect();
        let hv = hessian_vector_product(&tape, &d).unwrap();
        let expect = h.mul_vec(&d);
        let scale = expect.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in hv.iter().zip(&expect) {
            assert!((a - b).abs() <= 1e-10 * scale);
        }
    }
}

#[test]
fn drop_tolerance_removes_small_entries() {
    let tape = worked_example().swept_at(&[1.0, 0.0, 2.0]).unwrap();
    let out = edge_pushing_hessian(
        &tape,
        &EdgePushingOptions {
            drop_tol: 5.0,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(out.hessian.entries(), &[(1, 1, 10.0)]);
}

#[test]
fn unswept_tape_is_rejected() {
    assert!(matches!(
        hessian(&worked_example()),
        Err(HessError::NotSwept)
    ));
}

#[test]
fn text_format_round_trips_random_tapes() {
    let mut rng = ChaCha8Rng::seed_from_u64(16);
    for _ in 0..100 {
        let RandomTape { tape, x } = random_tape(&mut rng, 8, 40);
        let parsed: Tape = tape.to_string().parse().unwrap();
        assert_eq!(parsed, tape);
        let a = hessian(&tape.swept_at(&x).unwrap()).unwrap();
        let b = hessian(&parsed.swept_at(&x).unwrap()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn matrix_market_round_trip_of_a_computed_hessian() {
    let tape = worked_example().swept_at(&[1.0, 0.0, 2.0]).unwrap();
    let h = hessian(&tape).unwrap();
    let back = SparseHessian::from_matrix_market(&h.to_matrix_market()).unwrap();
    assert_eq!(back, h);
}
