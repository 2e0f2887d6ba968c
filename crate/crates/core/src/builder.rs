//! Operator-overloading recorder producing a [`Tape`].
//!
//! ```
//! use hesscraft::TapeBuilder;
//!
//! let b = TapeBuilder::new();
//! let x = b.inputs(2);
//! let f = (x[0] * x[1]) * (x[0] + x[1]);
//! let mut tape = b.finish(f).unwrap();
//! assert_eq!(tape.forward_sweep(&[1.0, 2.0]).unwrap(), 6.0);
//! ```

use std::cell::RefCell;
use std::ops::{Add, Div, Mul, Neg, Sub};

use crate::error::{HessError, Result};
use crate::tape::{OpCode, Tape, TapeNode};

/// Records elementals in creation order. Single-threaded by construction.
#[derive(Debug, Default)]
pub struct TapeBuilder {
    nodes: RefCell<Vec<TapeNode>>,
    n: RefCell<usize>,
}

/// Handle to a recorded node.
#[derive(Debug, Clone, Copy)]
pub struct Var<'a> {
    builder: &'a TapeBuilder,
    id: usize,
}

impl TapeBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Declares `count` independent variables. Must be called before any
    /// elemental is recorded.
    pub fn inputs(&self, count: usize) -> Vec<Var<'_>> {
        let mut nodes = self.nodes.borrow_mut();
        assert_eq!(
            nodes.len(),
            *self.n.borrow(),
            "inputs must be declared before elementals"
        );
        let start = nodes.len();
        for _ in 0..count {
            nodes.push(TapeNode::new(OpCode::Input, &[]));
        }
        *self.n.borrow_mut() += count;
        (start..start + count)
            .map(|id| Var { builder: self, id })
            .collect()
    }

    pub fn input(&self) -> Var<'_> {
        self.inputs(1)[0]
    }

    pub fn constant(&self, c: f64) -> Var<'_> {
        self.push(OpCode::Const(c), &[])
    }

    /// Sum of `terms` as a left-to-right chain of binary additions.
    pub fn sum<'a>(&'a self, terms: impl IntoIterator<Item = Var<'a>>) -> Var<'a> {
        terms
            .into_iter()
            .reduce(|acc, t| acc + t)
            .unwrap_or_else(|| self.constant(0.0))
    }

    /// Designates `output` as the dependent and returns the finalized tape.
    pub fn finish(&self, output: Var<'_>) -> Result<Tape> {
        if *self.n.borrow() == 0 {
            return Err(HessError::NoInputs);
        }
        let nodes = self.nodes.borrow().clone();
        Tape::from_nodes(nodes, output.id)
    }

    /// Number of nodes recorded so far.
    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, op: OpCode, preds: &[usize]) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(TapeNode::new(op, preds));
        Var {
            builder: self,
            id: nodes.len() - 1,
        }
    }

    fn const_value(&self, id: usize) -> Option<f64> {
        match self.nodes.borrow()[id].op {
            OpCode::Const(c) => Some(c),
            _ => None,
        }
    }
}

impl<'a> Var<'a> {
    pub fn id(&self) -> usize {
        self.id
    }

    fn unary(self, op: OpCode) -> Var<'a> {
        self.builder.push(op, &[self.id])
    }

    fn binary(self, op: OpCode, rhs: Var<'a>) -> Var<'a> {
        assert!(
            std::ptr::eq(self.builder, rhs.builder),
            "operands belong to different tapes"
        );
        let b = self.builder;
        match (b.const_value(self.id), b.const_value(rhs.id)) {
            (Some(x), Some(y)) => {
                let (v, _, _) = op.eval(&[x, y]).unwrap_or((f64::NAN, [0.0; 2], [0.0; 3]));
                return b.constant(v);
            }
            (Some(c), None) => return scalar_lhs(op, c, rhs),
            (None, Some(c)) => return scalar_rhs(op, self, c),
            (None, None) => {}
        }
        if self.id == rhs.id {
            // Repeated predecessors are normalized into unary forms.
            return match op {
                OpCode::Add => self.unary(OpCode::Scale(2.0)),
                OpCode::Mul => self.unary(OpCode::Square),
                OpCode::Sub => b.constant(0.0),
                OpCode::Div => b.constant(1.0),
                _ => unreachable!("not a binary elemental"),
            };
        }
        b.push(op, &[self.id, rhs.id])
    }

    pub fn sin(self) -> Var<'a> {
        self.unary(OpCode::Sin)
    }

    pub fn cos(self) -> Var<'a> {
        self.unary(OpCode::Cos)
    }

    pub fn exp(self) -> Var<'a> {
        self.unary(OpCode::Exp)
    }

    pub fn ln(self) -> Var<'a> {
        self.unary(OpCode::Ln)
    }

    pub fn sqrt(self) -> Var<'a> {
        self.unary(OpCode::Sqrt)
    }

    pub fn square(self) -> Var<'a> {
        self.unary(OpCode::Square)
    }

    pub fn tanh(self) -> Var<'a> {
        self.unary(OpCode::Tanh)
    }

    pub fn powf(self, p: f64) -> Var<'a> {
        self.unary(OpCode::PowConst(p))
    }

    pub fn scale(self, s: f64) -> Var<'a> {
        self.unary(OpCode::Scale(s))
    }
}

fn scalar_rhs(op: OpCode, v: Var<'_>, c: f64) -> Var<'_> {
    match op {
        OpCode::Add => v.unary(OpCode::AddConst(c)),
        OpCode::Sub => v.unary(OpCode::AddConst(-c)),
        OpCode::Mul => v.unary(OpCode::Scale(c)),
        OpCode::Div => v.unary(OpCode::Scale(1.0 / c)),
        _ => unreachable!("not a binary elemental"),
    }
}

fn scalar_lhs(op: OpCode, c: f64, v: Var<'_>) -> Var<'_> {
    match op {
        OpCode::Add => v.unary(OpCode::AddConst(c)),
        OpCode::Sub => v.unary(OpCode::Scale(-1.0)).unary(OpCode::AddConst(c)),
        OpCode::Mul => v.unary(OpCode::Scale(c)),
        OpCode::Div if c == 1.0 => v.unary(OpCode::PowConst(-1.0)),
        OpCode::Div => v.unary(OpCode::PowConst(-1.0)).unary(OpCode::Scale(c)),
        _ => unreachable!("not a binary elemental"),
    }
}

macro_rules! impl_binary {
    ($trait:ident, $method:ident, $op:expr) => {
        impl<'a> $trait<Var<'a>> for Var<'a> {
            type Output = Var<'a>;
            fn $method(self, rhs: Var<'a>) -> Var<'a> {
                self.binary($op, rhs)
            }
        }

        impl<'a> $trait<f64> for Var<'a> {
            type Output = Var<'a>;
            fn $method(self, rhs: f64) -> Var<'a> {
                scalar_rhs($op, self, rhs)
            }
        }

        impl<'a> $trait<Var<'a>> for f64 {
            type Output = Var<'a>;
            fn $method(self, rhs: Var<'a>) -> Var<'a> {
                scalar_lhs($op, self, rhs)
            }
        }
    };
}

impl_binary!(Add, add, OpCode::Add);
impl_binary!(Sub, sub, OpCode::Sub);
impl_binary!(Mul, mul, OpCode::Mul);
impl_binary!(Div, div, OpCode::Div);

impl<'a> Neg for Var<'a> {
    type Output = Var<'a>;
    fn neg(self) -> Var<'a> {
        self.unary(OpCode::Neg)
    }
}
