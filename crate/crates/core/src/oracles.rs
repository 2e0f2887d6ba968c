//! Independent Hessian computations used to validate `edge_pushing`.

use crate::error::{HessError, Result};
use crate::gradient::reverse_gradient;
use crate::hessian::SparseHessian;
use crate::tape::{Tape, TapeNode};

/// Default node limit for [`dense_hessian_nested`].
pub const DEFAULT_DENSE_CAP: usize = 200;

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        DenseMatrix {
            dim,
            data: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m[(k, k)] = 1.0;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.dim);
        for r in 0..self.dim {
            for c in 0..self.dim {
                t[(c, r)] = self[(r, c)];
            }
        }
        t
    }

    pub fn matmul(&self, rhs: &DenseMatrix) -> Self {
        assert_eq!(self.dim, rhs.dim);
        let d = self.dim;
        let mut out = Self::zeros(d);
        for r in 0..d {
            let row = &mut out.data[r * d..(r + 1) * d];
            for k in 0..d {
                let a = self.data[r * d + k];
                let rk = &rhs.data[k * d..(k + 1) * d];
                for (o, &b) in row.iter_mut().zip(rk) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `x^T M` for a row vector `x`.
    pub fn left_mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim;
        let mut out = vec![0.0; d];
        for (r, &xr) in x.iter().enumerate() {
            for (o, &m) in out.iter_mut().zip(&self.data[r * d..(r + 1) * d]) {
                *o += xr * m;
            }
        }
        out
    }

    pub fn add_assign(&mut self, rhs: &DenseMatrix) {
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }

    /// Largest `|m_rc - m_cr|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for r in 0..self.dim {
            for c in 0..r {
                worst = worst.max((self[(r, c)] - self[(c, r)]).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl std::ops::Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (r, c): (usize, usize)) -> &f64 {
        &self.data[r * self.dim + c]
    }
}

impl std::ops::IndexMut<(usize, usize)> for DenseMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut f64 {
        &mut self.data[r * self.dim + c]
    }
}

/// Jacobian of the state transformation of node `i`: the identity with row
/// `i` replaced by the padded gradient of `φ_i`.
pub fn state_jacobian(tape: &Tape, i: usize) -> DenseMatrix {
    let mut j = DenseMatrix::identity(tape.len());
    j[(i, i)] = 0.0;
    let node = tape.node(i);
    for (slot, &p) in node.preds().iter().enumerate() {
        j[(i, p)] = node.d1[slot];
    }
    j
}

/// Dense second derivative of `φ_i`, embedded in the full node space.
pub fn elemental_hessian(tape: &Tape, i: usize) -> DenseMatrix {
    let mut h = DenseMatrix::zeros(tape.len());
    let node = tape.node(i);
    let preds = node.preds();
    for a in 0..preds.len() {
        for b in 0..preds.len() {
            h[(preds[a], preds[b])] = node.d2[TapeNode::d2_slot(a.min(b), a.max(b))];
        }
    }
    h
}

/// Result of the nested dense recurrence.
#[derive(Debug, Clone)]
pub struct NestedOutput {
    pub hessian: SparseHessian,
    /// The full accumulated `W`.
    pub w: DenseMatrix,
    /// Largest `|W_rc - W_cr|` seen after any node.
    pub max_asymmetry: f64,
    /// Nonzero entries found in rows or columns `>= i` after node `i`.
    pub block_support_violations: usize,
}

/// Hessian by the nested recurrence `W ← Φ'ᵢᵀ W Φ'ᵢ + v̄ᵢ Φ''ᵢ` evaluated
/// with full dense matrices, adjoints included (`v̄ᵀ ← v̄ᵀ Φ'ᵢ`).
pub fn dense_hessian_nested(tape: &Tape, cap: usize) -> Result<NestedOutput> {
    tape.require_swept()?;
    let dim = tape.len();
    if dim > cap {
        return Err(HessError::DenseCapExceeded { cap, nodes: dim });
    }
    let mut w = DenseMatrix::zeros(dim);
    let mut vbar = vec![0.0; dim];
    vbar[dim - 1] = 1.0;
    let mut max_asymmetry = 0.0f64;
    let mut block_support_violations = 0;
    for i in (tape.n()..dim).rev() {
        let jac = state_jacobian(tape, i);
        let mut next = jac.transpose().matmul(&w).matmul(&jac);
        let mut curvature = elemental_hessian(tape, i);
        curvature.data.iter_mut().for_each(|v| *v *= vbar[i]);
        next.add_assign(&curvature);
        w = next;
        vbar = jac.left_mul_vec(&vbar);

        max_asymmetry = max_asymmetry.max(w.asymmetry());
        for r in 0..dim {
            for c in 0..dim {
                if (r >= i || c >= i) && w[(r, c)] != 0.0 {
                    block_support_violations += 1;
                }
            }
        }
    }
    let n = tape.n();
    let hessian = SparseHessian::from_triplets(
        n,
        (0..n)
            .flat_map(|r| (0..=r).map(move |c| (r, c)))
            .map(|(r, c)| (r, c, w[(r, c)]))
            .filter(|e| e.2 != 0.0),
    );
    Ok(NestedOutput {
        hessian,
        w,
        max_asymmetry,
        block_support_violations,
    })
}

/// Default relative step for [`fd_hessian`].
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// Central differences of the reverse gradient. Coordinate `k` moves by
/// `step * max(1, |x_k|)`; the result is symmetrized and entries with
/// `|h| <= 1e-7 * max(1, max|H|)` are dropped.
pub fn fd_hessian(tape: &Tape, x: &[f64], step: f64) -> Result<SparseHessian> {
    let n = tape.n();
    if x.len() != n {
        return Err(HessError::DimensionMismatch {
            expected: n,
            got: x.len(),
        });
    }
    let mut work = tape.clone();
    let mut grad_at = |pt: &[f64]| -> Result<Vec<f64>> {
        work.forward_sweep(pt)?;
        Ok(reverse_gradient(&work)?.gradient)
    };
    let mut dense = vec![0.0; n * n];
    let mut pt = x.to_vec();
    for k in 0..n {
        let h = step * x[k].abs().max(1.0);
        pt[k] = x[k] + h;
        let hi = grad_at(&pt)?;
        pt[k] = x[k] - h;
        let lo = grad_at(&pt)?;
        pt[k] = x[k];
        for r in 0..n {
            dense[r * n + k] = (hi[r] - lo[r]) / (2.0 * h);
        }
    }
    for r in 0..n {
        for c in 0..r {
            let avg = 0.5 * (dense[r * n + c] + dense[c * n + r]);
            dense[r * n + c] = avg;
            dense[c * n + r] = avg;
        }
    }
    let scale = dense.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    Ok(SparseHessian::from_dense(n, &dense, |v| {
        v.abs() > 1e-7 * scale
    }))
}

/// `f''(x) d` by forward tangent propagation followed by a reverse sweep
/// carrying both adjoints and their tangents.
pub fn hessian_vector_product(tape: &Tape, d: &[f64]) -> Result<Vec<f64>> {
    tape.require_swept()?;
    let n = tape.n();
    if d.len() != n {
        return Err(HessError::DimensionMismatch {
            expected: n,
            got: d.len(),
        });
    }
    let len = tape.len();
    let mut dot = vec![0.0; len];
    dot[..n].copy_from_slice(d);
    for i in n..len {
        let node = tape.node(i);
        dot[i] = node
            .preds()
            .iter()
            .enumerate()
            .map(|(slot, &p)| node.d1[slot] * dot[p])
            .sum();
    }
    let mut bar = vec![0.0; len];
    let mut bar_dot = vec![0.0; len];
    bar[len - 1] = 1.0;
    for i in (n..len).rev() {
        let node = tape.node(i);
        let preds = node.preds();
        for (a, &p) in preds.iter().enumerate() {
            let mut curvature = 0.0;
            for (b, &q) in preds.iter().enumerate() {
                curvature += node.d2[TapeNode::d2_slot(a.min(b), a.max(b))] * dot[q];
            }
            bar[p] += bar[i] * node.d1[a];
            bar_dot[p] += bar_dot[i] * node.d1[a] + bar[i] * curvature;
        }
    }
    bar_dot.truncate(n);
    Ok(bar_dot)
}
