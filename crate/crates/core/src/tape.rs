//! The recorded sequential list of elementals and its forward sweep.
//!
//! Nodes `0..n` are the independent variables, nodes `n..n+ell` are the
//! intermediate elementals in creation order and the last node is the
//! dependent. Every predecessor id is strictly smaller than the id of the
//! node consuming it, so creation order is a topological order.

use std::fmt;
use std::str::FromStr;

use crate::error::{HessError, Result};

/// Elemental function of a tape node. Constants are folded into payloads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OpCode {
    Input,
    Const(f64),
    Add,
    Sub,
    Mul,
    Div,
    Neg,
    Scale(f64),
    AddConst(f64),
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Square,
    PowConst(f64),
    Tanh,
}

impl OpCode {
    pub fn arity(&self) -> usize {
        use OpCode::*;
        match self {
            Input | Const(_) => 0,
            Add | Sub | Mul | Div => 2,
            _ => 1,
        }
    }

    pub fn name(&self) -> &'static str {
        use OpCode::*;
        match self {
            Input => "input",
            Const(_) => "const",
            Add => "add",
            Sub => "sub",
            Mul => "mul",
            Div => "div",
            Neg => "neg",
            Scale(_) => "scale",
            AddConst(_) => "addconst",
            Sin => "sin",
            Cos => "cos",
            Exp => "exp",
            Ln => "ln",
            Sqrt => "sqrt",
            Square => "square",
            PowConst(_) => "pow",
            Tanh => "tanh",
        }
    }

    pub fn payload(&self) -> Option<f64> {
        match *self {
            OpCode::Const(c) | OpCode::Scale(c) | OpCode::AddConst(c) | OpCode::PowConst(c) => {
                Some(c)
            }
            _ => None,
        }
    }

    /// Which local second partials can be nonzero for some input, in the
    /// `d2` layout `[aa, ab, bb]` (unary ops use slot 0 only).
    pub fn structural_d2(&self) -> [bool; 3] {
        use OpCode::*;
        match *self {
            Mul => [false, true, false],
            Div => [false, true, true],
            Sin | Cos | Exp | Ln | Sqrt | Square | Tanh => [true, false, false],
            PowConst(p) => [p != 0.0 && p != 1.0, false, false],
            _ => [false; 3],
        }
    }

    pub fn is_linear(&self) -> bool {
        self.structural_d2().iter().all(|s| !s)
    }

    /// Value, first partials and second partials `[aa, ab, bb]` at `args`.
    /// Returns `None` when the arguments fall outside the elemental's domain.
    pub fn eval(&self, args: &[f64]) -> Option<(f64, [f64; 2], [f64; 3])> {
        use OpCode::*;
        let a = args.first().copied().unwrap_or(0.0);
        let b = args.get(1).copied().unwrap_or(0.0);
        let out = match *self {
            Input => (a, [0.0; 2], [0.0; 3]),
            Const(c) => (c, [0.0; 2], [0.0; 3]),
            Add => (a + b, [1.0, 1.0], [0.0; 3]),
            Sub => (a - b, [1.0, -1.0], [0.0; 3]),
            Mul => (a * b, [b, a], [0.0, 1.0, 0.0]),
            Div => {
                if b == 0.0 {
                    return None;
                }
                let inv = 1.0 / b;
                let q = a * inv;
                (q, [inv, -q * inv], [0.0, -inv * inv, 2.0 * q * inv * inv])
            }
            Neg => (-a, [-1.0, 0.0], [0.0; 3]),
            Scale(s) => (s * a, [s, 0.0], [0.0; 3]),
            AddConst(c) => (a + c, [1.0, 0.0], [0.0; 3]),
            Sin => {
                let (s, c) = a.sin_cos();
                (s, [c, 0.0], [-s, 0.0, 0.0])
            }
            Cos => {
                let (s, c) = a.sin_cos();
                (c, [-s, 0.0], [-c, 0.0, 0.0])
            }
            Exp => {
                let e = a.exp();
                (e, [e, 0.0], [e, 0.0, 0.0])
            }
            Ln => {
                if a <= 0.0 {
                    return None;
                }
                let inv = 1.0 / a;
                (a.ln(), [inv, 0.0], [-inv * inv, 0.0, 0.0])
            }
            Sqrt => {
                if a <= 0.0 {
                    return None;
                }
                let s = a.sqrt();
                (s, [0.5 / s, 0.0], [-0.25 / (a * s), 0.0, 0.0])
            }
            Square => (a * a, [2.0 * a, 0.0], [2.0, 0.0, 0.0]),
            PowConst(0.0) => (1.0, [0.0; 2], [0.0; 3]),
            PowConst(1.0) => (a, [1.0, 0.0], [0.0; 3]),
            PowConst(p) => {
                let integral = p.fract() == 0.0 && p.abs() < i32::MAX as f64;
                if a < 0.0 && !integral || a == 0.0 && p < 2.0 {
                    return None;
                }
                let pow = |e: f64| {
                    if integral {
                        a.powi(e as i32)
                    } else {
                        a.powf(e)
                    }
                };
                (
                    pow(p),
                    [p * pow(p - 1.0), 0.0],
                    [p * (p - 1.0) * pow(p - 2.0), 0.0, 0.0],
                )
            }
            Tanh => {
                let t = a.tanh();
                let s = 1.0 - t * t;
                (t, [s, 0.0], [-2.0 * t * s, 0.0, 0.0])
            }
        };
        Some(out)
    }
}

/// One elemental on the tape together with the data recorded by the
/// forward sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct TapeNode {
    pub op: OpCode,
    preds: [usize; 2],
    /// Value `v_i` at the swept point.
    pub value: f64,
    /// `∂φ_i/∂v_j` for each predecessor, in predecessor order.
    pub d1: [f64; 2],
    /// Second partials `[aa, ab, bb]` over the predecessors.
    pub d2: [f64; 3],
}

impl TapeNode {
    pub(crate) fn new(op: OpCode, preds: &[usize]) -> Self {
        let mut p = [usize::MAX; 2];
        p[..preds.len()].copy_from_slice(preds);
        TapeNode {
            op,
            preds: p,
            value: 0.0,
            d1: [0.0; 2],
            d2: [0.0; 3],
        }
    }

    pub fn preds(&self) -> &[usize] {
        &self.preds[..self.op.arity()]
    }

    pub fn arity(&self) -> usize {
        self.op.arity()
    }

    /// Index into `d2` for the predecessor pair `(a, b)` with `a <= b`.
    #[inline]
    pub fn d2_slot(a: usize, b: usize) -> usize {
        a + b
    }
}

/// A finalized computational tape.
#[derive(Debug, Clone, PartialEq)]
pub struct Tape {
    n: usize,
    nodes: Vec<TapeNode>,
    swept: bool,
}

impl Tape {
    /// Validates raw nodes, wraps a bare-input output and removes nodes the
    /// output does not depend on. `output` designates the dependent.
    pub fn from_nodes(nodes: Vec<TapeNode>, output: usize) -> Result<Self> {
        let n = nodes.iter().take_while(|nd| nd.op == OpCode::Input).count();
        if n == 0 {
            return Err(HessError::NoInputs);
        }
        if output >= nodes.len() {
            return Err(HessError::NoOutput);
        }
        for (id, node) in nodes.iter().enumerate() {
            if id >= n && node.op == OpCode::Input {
                return Err(HessError::InvalidNode {
                    node: id,
                    reason: "inputs must precede all elementals".into(),
                });
            }
            let preds = node.preds();
            if let Some(&p) = preds.iter().find(|&&p| p >= id) {
                return Err(HessError::InvalidNode {
                    node: id,
                    reason: format!("predecessor {p} does not precede the node"),
                });
            }
            if preds.len() == 2 && preds[0] == preds[1] {
                return Err(HessError::InvalidNode {
                    node: id,
                    reason: "repeated predecessor in a binary elemental".into(),
                });
            }
        }
        let mut nodes = nodes;
        let mut output = output;
        if output < n {
            nodes.push(TapeNode::new(OpCode::Scale(1.0), &[output]));
            output = nodes.len() - 1;
        }
        Ok(Tape {
            n,
            nodes: eliminate_dead_nodes(nodes, n, output),
            swept: false,
        })
    }

    /// Number of independent variables.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of intermediate elementals.
    pub fn ell(&self) -> usize {
        self.nodes.len() - self.n
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn output(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn nodes(&self) -> &[TapeNode] {
        &self.nodes
    }

    pub fn node(&self, id: usize) -> &TapeNode {
        &self.nodes[id]
    }

    pub fn is_swept(&self) -> bool {
        self.swept
    }

    pub(crate) fn require_swept(&self) -> Result<()> {
        if self.swept {
            Ok(())
        } else {
            Err(HessError::NotSwept)
        }
    }

    /// Function value at the swept point.
    pub fn value(&self) -> Result<f64> {
        self.require_swept()?;
        Ok(self.nodes[self.output()].value)
    }

    /// The independent values of the swept point.
    pub fn point(&self) -> Result<Vec<f64>> {
        self.require_swept()?;
        Ok(self.nodes[..self.n].iter().map(|nd| nd.value).collect())
    }

    /// Records values and local first/second partials of every node at `x`
    /// and returns `f(x)`.
    pub fn forward_sweep(&mut self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(HessError::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        self.swept = false;
        for (id, &xi) in x.iter().enumerate() {
            if !xi.is_finite() {
                return Err(HessError::NonFinite { node: id });
            }
            self.nodes[id].value = xi;
        }
        for id in self.n..self.nodes.len() {
            let node = &self.nodes[id];
            let mut args = [0.0; 2];
            for (slot, &p) in node.preds().iter().enumerate() {
                args[slot] = self.nodes[p].value;
            }
            let op = node.op;
            let args = &args[..op.arity()];
            let (value, d1, d2) = op.eval(args).ok_or(HessError::Domain {
                node: id,
                op: op.name(),
                value: args.first().copied().unwrap_or(0.0),
            })?;
            if !(value.is_finite()
                && d1.iter().all(|d| d.is_finite())
                && d2.iter().all(|d| d.is_finite()))
            {
                return Err(HessError::NonFinite { node: id });
            }
            let node = &mut self.nodes[id];
            node.value = value;
            node.d1 = d1;
            node.d2 = d2;
        }
        self.swept = true;
        Ok(self.nodes[self.output()].value)
    }

    /// Clone of the tape swept at `x`.
    pub fn swept_at(&self, x: &[f64]) -> Result<Tape> {
        let mut tape = self.clone();
        tape.forward_sweep(x)?;
        Ok(tape)
    }

    /// Successor lists of the computational graph.
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut succ = vec![Vec::new(); self.nodes.len()];
        for (id, node) in self.nodes.iter().enumerate() {
            for &p in node.preds() {
                succ[p].push(id);
            }
        }
        succ
    }
}

/// Drops intermediates the output does not depend on, keeps all inputs and
/// renumbers the survivors in their original order. The output ends last.
fn eliminate_dead_nodes(nodes: Vec<TapeNode>, n: usize, output: usize) -> Vec<TapeNode> {
    let mut live = vec![false; nodes.len()];
    live[..n].iter_mut().for_each(|l| *l = true);
    live[output] = true;
    for id in (n..=output).rev() {
        if live[id] {
            for &p in nodes[id].preds() {
                live[p] = true;
            }
        }
    }
    let mut remap = vec![usize::MAX; nodes.len()];
    let mut kept = Vec::with_capacity(nodes.len());
    for (id, mut node) in nodes.into_iter().enumerate().take(output + 1) {
        if !live[id] {
            continue;
        }
        for slot in 0..node.arity() {
            node.preds[slot] = remap[node.preds[slot]];
        }
        remap[id] = kept.len();
        kept.push(node);
    }
    kept
}

/// Line-oriented debug format: `id op pred0 [pred1] [payload]`.
impl fmt::Display for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (id, node) in self.nodes.iter().enumerate() {
            write!(f, "{id} {}", node.op.name())?;
            for p in node.preds() {
                write!(f, " {p}")?;
            }
            if let Some(c) = node.op.payload() {
                write!(f, " {c:?}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for Tape {
    type Err = HessError;

    fn from_str(s: &str) -> Result<Self> {
        let mut nodes = Vec::new();
        for (lineno, raw) in s.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| HessError::Parse {
                line: lineno + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() < 2 {
                return Err(err("expected `id op ...`".into()));
            }
            let id: usize = fields[0]
                .parse()
                .map_err(|_| err(format!("bad node id `{}`", fields[0])))?;
            if id != nodes.len() {
                return Err(err(format!("expected node id {}, found {id}", nodes.len())));
            }
            let name = fields[1];
            let mut rest = fields[2..].iter();
            let mut next_id = || -> Result<usize> {
                let tok = rest
                    .next()
                    .ok_or_else(|| err(format!("`{name}` is missing an operand")))?;
                tok.parse()
                    .map_err(|_| err(format!("bad predecessor `{tok}`")))
            };
            let (op, preds): (OpCode, Vec<usize>) = match name {
                "input" => (OpCode::Input, vec![]),
                "const" => (OpCode::Const(0.0), vec![]),
                "add" => (OpCode::Add, vec![next_id()?, next_id()?]),
                "sub" => (OpCode::Sub, vec![next_id()?, next_id()?]),
                "mul" => (OpCode::Mul, vec![next_id()?, next_id()?]),
                "div" => (OpCode::Div, vec![next_id()?, next_id()?]),
                "neg" => (OpCode::Neg, vec![next_id()?]),
                "scale" => (OpCode::Scale(0.0), vec![next_id()?]),
                "addconst" => (OpCode::AddConst(0.0), vec![next_id()?]),
                "sin" => (OpCode::Sin, vec![next_id()?]),
                "cos" => (OpCode::Cos, vec![next_id()?]),
                "exp" => (OpCode::Exp, vec![next_id()?]),
                "ln" => (OpCode::Ln, vec![next_id()?]),
                "sqrt" => (OpCode::Sqrt, vec![next_id()?]),
                "square" => (OpCode::Square, vec![next_id()?]),
                "pow" => (OpCode::PowConst(0.0), vec![next_id()?]),
                "tanh" => (OpCode::Tanh, vec![next_id()?]),
                other => return Err(err(format!("unknown op `{other}`"))),
            };
            let op = match op.payload() {
                Some(_) => {
                    let tok = fields
                        .get(2 + preds.len())
                        .ok_or_else(|| err(format!("`{name}` is missing its constant")))?;
                    let c: f64 = tok
                        .parse()
                        .map_err(|_| err(format!("bad constant `{tok}`")))?;
                    match op {
                        OpCode::Const(_) => OpCode::Const(c),
                        OpCode::Scale(_) => OpCode::Scale(c),
                        OpCode::AddConst(_) => OpCode::AddConst(c),
                        _ => OpCode::PowConst(c),
                    }
                }
                None => op,
            };
            let expected = 2 + preds.len() + usize::from(op.payload().is_some());
            if fields.len() != expected {
                return Err(err("trailing tokens".into()));
            }
            nodes.push(TapeNode::new(op, &preds));
        }
        if nodes.is_empty() {
            return Err(HessError::NoInputs);
        }
        let output = nodes.len() - 1;
        Tape::from_nodes(nodes, output)
    }
}
