//! Random tapes over safe domains for fuzzing the oracles.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::tape::{OpCode, Tape, TapeNode};

const VALUE_BOUND: f64 = 1e3;
const DERIVATIVE_BOUND: f64 = 1e4;
const DOMAIN_MARGIN: f64 = 0.1;

const OPS: [OpCode; 20] = [
    OpCode::Add,
    OpCode::Sub,
    OpCode::Mul,
    OpCode::Mul,
    OpCode::Div,
    OpCode::Neg,
    OpCode::Scale(-1.5),
    OpCode::AddConst(0.75),
    OpCode::Sin,
    OpCode::Cos,
    OpCode::Exp,
    OpCode::Ln,
    OpCode::Sqrt,
    OpCode::Square,
    OpCode::PowConst(3.0),
    OpCode::PowConst(-1.0),
    OpCode::PowConst(1.5),
    OpCode::Tanh,
    OpCode::Const(0.5),
    OpCode::Mul,
];

/// A random tape and a point interior to every elemental's domain.
#[derive(Debug, Clone)]
pub struct RandomTape {
    pub tape: Tape,
    pub x: Vec<f64>,
}

fn safe(op: OpCode, args: &[f64]) -> bool {
    let margin_ok = match op {
        OpCode::Ln | OpCode::Sqrt | OpCode::PowConst(_) => args[0] >= DOMAIN_MARGIN,
        OpCode::Div => args[1].abs() >= 2.0 * DOMAIN_MARGIN,
        OpCode::Exp => args[0] <= 4.0,
        _ => true,
    };
    if !margin_ok {
        return false;
    }
    match op.eval(args) {
        Some((v, d1, d2)) => {
            v.abs() <= VALUE_BOUND
                && d1.iter().all(|d| d.abs() <= DERIVATIVE_BOUND)
                && d2.iter().all(|d| d.abs() <= DERIVATIVE_BOUND)
        }
        None => false,
    }
}

/// Draws `n` in `1..=max_n` independents and up to `max_ell` elementals
/// (fewer after dead-node removal). Independents lie in `±[0.5, 1.5]`.
pub fn random_tape<R: Rng>(rng: &mut R, max_n: usize, max_ell: usize) -> RandomTape {
    let n = rng.gen_range(1..=max_n.max(1));
    let ell = rng.gen_range(1..=max_ell.max(1));
    let x: Vec<f64> = (0..n)
        .map(|_| {
            let mag = rng.gen_range(0.5..=1.5);
            if rng.gen_bool(0.25) {
                -mag
            } else {
                mag
            }
        })
        .collect();
    let mut nodes: Vec<TapeNode> = (0..n).map(|_| TapeNode::new(OpCode::Input, &[])).collect();
    let mut values = x.clone();

    let pick = |rng: &mut R, len: usize| -> usize {
        if rng.gen_bool(0.7) {
            rng.gen_range(len.saturating_sub(6)..len)
        } else {
            rng.gen_range(0..len)
        }
    };

    for _ in 0..ell {
        let len = nodes.len();
        let mut chosen = None;
        for _attempt in 0..20 {
            let op = *OPS.choose(rng).expect("non-empty");
            let preds: Vec<usize> = match op.arity() {
                0 => vec![],
                1 => vec![pick(rng, len)],
                _ if len < 2 => continue,
                _ => {
                    let a = pick(rng, len);
                    let mut b = pick(rng, len);
                    while b == a {
                        b = rng.gen_range(0..len);
                    }
                    vec![a, b]
                }
            };
            let args: Vec<f64> = preds.iter().map(|&p| values[p]).collect();
            if safe(op, &args) {
                chosen = Some((op, preds));
                break;
            }
        }
        let (op, preds) = chosen.unwrap_or((OpCode::AddConst(0.75), vec![len - 1]));
        let args: Vec<f64> = preds.iter().map(|&p| values[p]).collect();
        let (value, _, _) = op.eval(&args).expect("checked safe");
        values.push(value);
        nodes.push(TapeNode::new(op, &preds));
    }
    let output = nodes.len() - 1;
    let tape = Tape::from_nodes(nodes, output).expect("generated tapes are well formed");
    RandomTape { tape, x }
}
