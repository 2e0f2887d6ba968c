#![allow(dead_code)]

use std::collections::BTreeSet;

use hesscraft::bench::Family;
use hesscraft::oracles::{fd_hessian, DEFAULT_FD_STEP};
use hesscraft::{Tape, TapeBuilder};

pub type Pattern = BTreeSet<(usize, usize)>;

/// `f = (x0 + exp(x1)) * (3 x1 + x2²)`.
pub fn worked_example() -> Tape {
    let b = TapeBuilder::new();
    let x = b.inputs(3);
    let f = (x[0] + x[1].exp()) * (3.0 * x[1] + x[2].square());
    b.finish(f).unwrap()
}

/// Closed-form lower triangle of the worked example's Hessian.
pub fn worked_example_closed_form(x: &[f64]) -> Vec<(usize, usize, f64)> {
    let u = x[0] + x[1].exp();
    let v = 3.0 * x[1] + x[2] * x[2];
    let e = x[1].exp();
    vec![
        (0, 0, 0.0),
        (1, 0, 3.0),
        (1, 1, e * (v + 6.0)),
        (2, 0, 2.0 * x[2]),
        (2, 1, 2.0 * x[2] * e),
        (2, 2, 2.0 * u),
    ]
}

/// Central differences of the function value alone.
pub fn fd_gradient(tape: &Tape, x: &[f64]) -> Vec<f64> {
    let mut work = tape.clone();
    let mut pt = x.to_vec();
    (0..x.len())
        .map(|k| {
            let h = 1e-7 * x[k].abs().max(1.0);
            pt[k] = x[k] + h;
            let hi = work.forward_sweep(&pt).unwrap();
            pt[k] = x[k] - h;
            let lo = work.forward_sweep(&pt).unwrap();
            pt[k] = x[k];
            (hi - lo) / (2.0 * h)
        })
        .collect()
}

pub fn rel_vec_diff(a: &[f64], reference: &[f64]) -> f64 {
    let scale = reference.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    a.iter()
        .zip(reference)
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
        / scale
}

/// Nonzero positions of a finite-difference Hessian at `x`.
pub fn fd_pattern(tape: &Tape, x: &[f64]) -> Pattern {
    fd_hessian(tape, x, DEFAULT_FD_STEP)
        .unwrap()
        .pattern()
        .into_iter()
        .collect()
}

fn lower(a: usize, b: usize) -> (usize, usize) {
    (a.max(b), a.min(b))
}

fn lcg_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut s: u64 = 0x2545_f491_4f6c_dd1d;
    let mut next = move || {
        s = s
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        (s >> 33) as usize % n
    };
    let mut pairs = Vec::new();
    while pairs.len() < 2 * n {
        let i = next();
        let j = loop {
            let j = next();
            if j != i {
                break j;
            }
        };
        pairs.push((i, j));
    }
    pairs
}

/// Lower-triangle pattern each family should produce, from its shape alone.
pub fn expected_pattern(family: Family, n: usize) -> Pattern {
    let mut p = Pattern::new();
    match family {
        Family::Band1 | Family::Band5 => {
            let bw = if family == Family::Band1 { 1 } else { 5 };
            for r in 0..n {
                for c in r.saturating_sub(bw)..=r {
                    p.insert((r, c));
                }
            }
        }
        Family::Arrow => {
            for r in 0..n {
                p.insert((r, r));
                p.insert((n - 1, r));
            }
        }
        Family::FrameDiag => {
            for r in 0..n {
                p.insert((r, r));
                p.insert(lower(r, 0));
                p.insert((n - 1, r));
            }
        }
        Family::BlockDiag5 => {
            for r in 0..n {
                for c in (r / 5 * 5)..=r {
                    p.insert((r, c));
                }
            }
        }
        Family::Irregular => {
            for (i, j) in lcg_pairs(n) {
                p.insert((i, i));
                p.insert((j, j));
                p.insert(lower(i, j));
            }
        }
        Family::Linear => {}
    }
    p
}
