//! Reverse-mode automatic differentiation on a recorded tape, with sparse
//! Hessians computed by `edge_pushing`.
//!
//! A [`TapeBuilder`] records a scalar function of `n` independents as a
//! sequence of unary and binary elementals. After [`Tape::forward_sweep`],
//! [`reverse_gradient`] gives the gradient and [`edge_pushing_hessian`] the
//! lower triangle of the Hessian in one reverse sweep. The [`oracles`] and
//! [`graph`] modules compute the same Hessian by independent routes.

pub mod accumulator;
pub mod bench;
pub mod builder;
pub mod check;
pub mod edge_pushing;
pub mod error;
pub mod gradient;
pub mod graph;
pub mod hessian;
pub mod oracles;
pub mod random;
pub mod tape;

pub use accumulator::SparseSymAccumulator;
pub use builder::{TapeBuilder, Var};
pub use edge_pushing::{edge_pushing_hessian, hessian, structural_pattern, EdgePushingOptions};
pub use error::{HessError, Result};
pub use gradient::{reverse_gradient, AdjointVector};
pub use hessian::SparseHessian;
pub use tape::{OpCode, Tape, TapeNode};
