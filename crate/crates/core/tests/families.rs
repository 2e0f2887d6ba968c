mod common;

use common::{expected_pattern, fd_pattern, Pattern};
use hesscraft::bench::{seeded_point, Family};
use hesscraft::oracles::{fd_hessian, DEFAULT_FD_STEP};
use hesscraft::{edge_pushing_hessian, hessian, structural_pattern, EdgePushingOptions};

fn pattern_of(family: Family, n: usize) -> Pattern {
    structural_pattern(&family.build(n).unwrap())
        .pattern()
        .into_iter()
        .collect()
}

#[test]
fn small_patterns_match_finite_difference_support() {
    for family in Family::ALL {
        for n in [10, 20, 50] {
            let tape = family.build(n).unwrap();
            let fd = fd_pattern(&tape, &seeded_point(n, 3));
            assert_eq!(pattern_of(family, n), fd, "{family} n={n}");
            assert_eq!(fd.len(), family.expected_nnz(n), "{family} n={n}");
        }
    }
}

#[test]
fn patterns_have_the_expected_shape() {
    for family in Family::ALL {
        for n in [50, 500] {
            let expected = expected_pattern(family, n);
            assert_eq!(pattern_of(family, n), expected, "{family} n={n}");
            assert_eq!(expected.len(), family.expected_nnz(n));
        }
    }
}

#[test]
fn values_match_finite_differences() {
    for family in Family::ALL {
        for n in [50, 500] {
            let tape = family.build(n).unwrap();
            for seed in 0..3 {
                let x = seeded_point(n, seed);
                let swept = tape.swept_at(&x).unwrap();
                let h = hessian(&swept).unwrap();
                let fd = fd_hessian(&tape, &x, DEFAULT_FD_STEP).unwrap();
                let d = h.max_rel_diff(&fd);
                assert!(d <= 1e-4, "{family} n={n} seed={seed}: {d:e}");
            }
        }
    }
}

#[test]
fn accumulator_invariants_hold_on_families() {
    for family in Family::ALL {
        let tape = family
            .build(200)
            .unwrap()
            .swept_at(&seeded_point(200, 1))
            .unwrap();
        let out = edge_pushing_hessian(
            &tape,
            &EdgePushingOptions {
                check_invariants: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(out.stats.symmetry_violations, 0, "{family}");
        assert_eq!(out.stats.block_support_violations, 0, "{family}");
    }
}

#[test]
fn linear_family_allocates_nothing() {
    let tape = Family::Linear
        .build(1000)
        .unwrap()
        .swept_at(&seeded_point(1000, 0))
        .unwrap();
    let out = edge_pushing_hessian(&tape, &EdgePushingOptions::default()).unwrap();
    assert_eq!(out.stats.edges_allocated, 0);
    assert!(out.hessian.is_empty());
    assert!(out.adjoints.vbar[..1000].iter().all(|&g| g == 3.0));
}

#[test]
fn small_families_are_rejected() {
    for family in Family::ALL {
        if family.min_n() > 1 {
            assert!(family.build(family.min_n() - 1).is_err());
        }
        assert!(family.build(family.min_n()).is_ok());
    }
}
