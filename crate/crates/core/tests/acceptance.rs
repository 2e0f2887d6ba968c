//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{expected_pattern, fd_gradient, fd_pattern, rel_vec_diff, worked_example, Pattern};
use hesscraft::bench::{
    forward_sweep_time_ns, median_time_ns, run_bench, seeded_point, Family, Phase,
};
use hesscraft::check::{
    cross_validate, hvp_hessian, CheckConfig, DENSE_TOL, FD_TOL, HVP_TOL, PATH_TOL,
};
use hesscraft::graph::{build_folded_graph, path_weight_sums, PATH_ENUMERATION_CAP};
use hesscraft::random::{random_tape, RandomTape};
use hesscraft::{
    edge_pushing_hessian, hessian, reverse_gradient, structural_pattern, EdgePushingOptions,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn worked_example_exact() -> Outcome {
    let x = [1.0, 0.0, 2.0];
    let tape = worked_example().swept_at(&x).unwrap();
    let h = hessian(&tape).unwrap();
    let stated = [
        (1, 0, 3.0),
        (1, 1, 10.0),
        (2, 0, 4.0),
        (2, 1, 4.0),
        (2, 2, 4.0),
    ];
    let mut err = 0.0f64;
    for &(r, c, v) in &stated {
        err = err.max((h.get(r, c) - v).abs());
    }
    for (r, c, v) in common::worked_example_closed_form(&x) {
        err = err.max((h.get(r, c) - v).abs());
    }
    let extra = h
        .entries()
        .iter()
        .filter(|e| !stated.iter().any(|s| (s.0, s.1) == (e.0, e.1)) && e.2 != 0.0)
        .count();
    let ns = median_time_ns(11, || {
        let mut t = worked_example();
        t.forward_sweep(&x).unwrap();
        hessian(&t).unwrap()
    });
    let ms = ns as f64 / 1e6;
    outcome(
        err <= 1e-12 && extra == 0 && ms < 1.0,
        format!("abs error {err:e}, unexpected entries {extra}, {ms:.4} ms"),
    )
}

fn oracle_fuzz() -> (Outcome, Outcome) {
    let start = Instant::now();
    let report = cross_validate(&CheckConfig::default()).unwrap();
    let secs = start.elapsed().as_secs_f64();
    let fuzz = outcome(
        report.trials == 1000
            && report.max_dense_diff <= DENSE_TOL
            && report.max_path_diff <= PATH_TOL
            && report.max_fd_diff <= FD_TOL
            && secs < 60.0,
        format!(
            "{} tapes: dense {:e}, paths {:e} ({} tapes), fd {:e}, {secs:.2} s",
            report.trials,
            report.max_dense_diff,
            report.max_path_diff,
            report.path_trials,
            report.max_fd_diff
        ),
    );
    let invariants = outcome(
        report.accumulator_symmetry_violations == 0 && report.accumulator_block_violations == 0,
        format!(
            "symmetry violations {}, block-support violations {}",
            report.accumulator_symmetry_violations, report.accumulator_block_violations
        ),
    );
    (fuzz, invariants)
}

fn gradient_checks() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9e37);
    let mut worst_fd = 0.0f64;
    for _ in 0..1000 {
        let RandomTape { tape, x } = random_tape(&mut rng, 8, 40);
        let tape = tape.swept_at(&x).unwrap();
        let g = reverse_gradient(&tape).unwrap().gradient;
        worst_fd = worst_fd.max(rel_vec_diff(&g, &fd_gradient(&tape, &x)));
    }
    let mut worst_paths = 0.0f64;
    let mut enumerated = 0;
    while enumerated < 100 {
        let RandomTape { tape, x } = random_tape(&mut rng, 8, 24);
        if tape.len() > PATH_ENUMERATION_CAP {
            continue;
        }
        let tape = tape.swept_at(&x).unwrap();
        let adj = reverse_gradient(&tape).unwrap().adjoints;
        let succ = build_folded_graph(&tape, &adj)
            .unwrap()
            .weighted_successors();
        let sums: Vec<f64> = (0..tape.len())
            .map(|k| path_weight_sums(&succ, k)[tape.output()])
            .collect();
        worst_paths = worst_paths.max(rel_vec_diff(&adj.vbar, &sums));
        enumerated += 1;
    }
    outcome(
        worst_fd <= 1e-5 && worst_paths <= 1e-12,
        format!("fd {worst_fd:e} over 1000 tapes, path identity {worst_paths:e} over {enumerated} tapes"),
    )
}

fn linear_property() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for n in [1_000, 100_000] {
        let tape = Family::Linear
            .build(n)
            .unwrap()
            .swept_at(&seeded_point(n, 0))
            .unwrap();
        let out = edge_pushing_hessian(&tape, &EdgePushingOptions::default()).unwrap();
        let hess = run_bench(Family::Linear, n, 21, Phase::HessianOnly)
            .unwrap()
            .median_ns;
        let fwd = forward_sweep_time_ns(Family::Linear, n, 21).unwrap();
        let ratio = hess as f64 / fwd as f64;
        pass &= out.stats.edges_allocated == 0 && ratio <= 3.0;
        parts.push(format!(
            "n={n}: edges {}, hessian/forward {ratio:.2}",
            out.stats.edges_allocated
        ));
    }
    outcome(pass, parts.join("; "))
}

fn pattern_fidelity() -> Outcome {
    let mut failures = Vec::new();
    for family in Family::ALL {
        // The nnz law is first confirmed against brute-force support at small n.
        for n in [10, 20] {
            let tape = family.build(n).unwrap();
            let brute = fd_pattern(&tape, &seeded_point(n, 7));
            if brute != expected_pattern(family, n) || brute.len() != family.expected_nnz(n) {
                failures.push(format!("{family} brute force n={n}"));
            }
        }
        for n in [50, 500] {
            let got: Pattern = structural_pattern(&family.build(n).unwrap())
                .pattern()
                .into_iter()
                .collect();
            if got != expected_pattern(family, n) || got.len() != family.expected_nnz(n) {
                failures.push(format!("{family} n={n}"));
            }
        }
    }
    let detail = if failures.is_empty() {
        format!("{} families at n=50 and n=500", Family::ALL.len())
    } else {
        format!("mismatch: {}", failures.join(", "))
    };
    outcome(failures.is_empty(), detail)
}

fn scaling_shape() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    for family in [Family::Band1, Family::Band5] {
        let small = run_bench(family, 10_000, 21, Phase::HessianOnly)
            .unwrap()
            .median_ns;
        let large = run_bench(family, 100_000, 21, Phase::HessianOnly)
            .unwrap()
            .median_ns;
        let ratio = large as f64 / small as f64;
        pass &= (5.0..=15.0).contains(&ratio);
        parts.push(format!("{family} {ratio:.2}"));
    }
    let elapsed = start.elapsed();
    pass &= elapsed < Duration::from_secs(300);
    outcome(
        pass,
        format!(
            "time(1e5)/time(1e4): {}, {:.1} s",
            parts.join(", "),
            elapsed.as_secs_f64()
        ),
    )
}

fn hvp_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc0ffee);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let RandomTape { tape, x } = random_tape(&mut rng, 8, 40);
        let tape = tape.swept_at(&x).unwrap();
        let h = hessian(&tape).unwrap();
        worst = worst.max(h.max_rel_diff(&hvp_hessian(&tape).unwrap()));
    }
    outcome(
        worst <= HVP_TOL,
        format!("200 tapes, max relative {worst:e}"),
    )
}

fn main() -> ExitCode {
    let (fuzz, invariants) = oracle_fuzz();
    let results = [
        ("worked example Hessian", worked_example_exact()),
        ("oracle equivalence fuzz", fuzz),
        ("gradient correctness", gradient_checks()),
        ("accumulator invariants", invariants),
        ("linear function property", linear_property()),
        ("pattern fidelity", pattern_fidelity()),
        ("scaling shape", scaling_shape()),
        ("hessian-vector consistency", hvp_consistency()),
    ];
    let mut failed = 0;
    for (k, (name, o)) in results.iter().enumerate() {
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] {}. {name}: {}", k + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    }
}
