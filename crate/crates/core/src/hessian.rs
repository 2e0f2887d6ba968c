//! Sparse symmetric Hessian in lower-triangle coordinate form.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::error::{HessError, Result};

/// Lower triangle (diagonal included) of a symmetric `n x n` matrix,
/// sorted by `(row, col)` with `row >= col`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseHessian {
    n: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl SparseHessian {
    pub fn empty(n: usize) -> Self {
        SparseHessian {
            n,
            entries: Vec::new(),
        }
    }

    /// Builds from triplets in either triangle; duplicates are summed.
    pub fn from_triplets(
        n: usize,
        triplets: impl IntoIterator<Item = (usize, usize, f64)>,
    ) -> Self {
        let mut entries: Vec<(usize, usize, f64)> = triplets
            .into_iter()
            .map(|(r, c, v)| {
                assert!(r < n && c < n, "entry ({r}, {c}) outside a {n}x{n} matrix");
                if r >= c {
                    (r, c, v)
                } else {
                    (c, r, v)
                }
            })
            .collect();
        entries.sort_by_key(|e| (e.0, e.1));
        entries.dedup_by(|later, kept| {
            if (later.0, later.1) == (kept.0, kept.1) {
                kept.2 += later.2;
                true
            } else {
                false
            }
        });
        SparseHessian { n, entries }
    }

    /// Lower triangle of a dense row-major matrix, dropping entries for which
    /// `keep` is false.
    pub fn from_dense(n: usize, dense: &[f64], keep: impl Fn(f64) -> bool) -> Self {
        assert_eq!(dense.len(), n * n);
        let entries = (0..n)
            .flat_map(|r| (0..=r).map(move |c| (r, c)))
            .map(|(r, c)| (r, c, dense[r * n + c]))
            .filter(|&(_, _, v)| keep(v))
            .collect();
        SparseHessian { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Position set of the lower triangle.
    pub fn pattern(&self) -> Vec<(usize, usize)> {
        self.entries.iter().map(|&(r, c, _)| (r, c)).collect()
    }

    /// Value at `(r, c)` in either triangle; absent entries are zero.
    pub fn get(&self, r: usize, c: usize) -> f64 {
        let key = if r >= c { (r, c) } else { (c, r) };
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&key))
            .map(|k| self.entries[k].2)
            .unwrap_or(0.0)
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let n = self.n;
        let mut dense = vec![0.0; n * n];
        for &(r, c, v) in &self.entries {
            dense[r * n + c] = v;
            dense[c * n + r] = v;
        }
        dense
    }

    pub fn mul_vec(&self, d: &[f64]) -> Vec<f64> {
        assert_eq!(d.len(), self.n);
        let mut out = vec![0.0; self.n];
        for &(r, c, v) in &self.entries {
            out[r] += v * d[c];
            if r != c {
                out[c] += v * d[r];
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, e| m.max(e.2.abs()))
    }

    /// Removes entries with `|w| < tol`.
    pub fn drop_below(&mut self, tol: f64) {
        self.entries.retain(|e| e.2.abs() >= tol || e.2.is_nan());
    }

    /// Largest entrywise difference to `reference`, scaled by
    /// `max(1, max|reference|)`.
    pub fn max_rel_diff(&self, reference: &SparseHessian) -> f64 {
        assert_eq!(self.n, reference.n, "dimension mismatch");
        let scale = reference.max_abs().max(1.0);
        let mut worst = 0.0f64;
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &reference.entries);
        while i < a.len() || j < b.len() {
            let ka = a.get(i).map(|e| (e.0, e.1));
            let kb = b.get(j).map(|e| (e.0, e.1));
            let diff = match (ka, kb) {
                (Some(x), Some(y)) if x == y => {
                    i += 1;
                    j += 1;
                    a[i - 1].2 - b[j - 1].2
                }
                (Some(x), Some(y)) if x < y => {
                    i += 1;
                    a[i - 1].2
                }
                (Some(_), None) => {
                    i += 1;
                    a[i - 1].2
                }
                _ => {
                    j += 1;
                    b[j - 1].2
                }
            };
            worst = worst.max(diff.abs());
        }
        worst / scale
    }

    /// Matrix Market coordinate symmetric real, 1-based, lower triangle.
    pub fn to_matrix_market(&self) -> String {
        let mut out = String::new();
        out.push_str("%%MatrixMarket matrix coordinate real symmetric\n");
        let _ = writeln!(out, "{} {} {}", self.n, self.n, self.entries.len());
        for &(r, c, v) in &self.entries {
            let _ = writeln!(out, "{} {} {:?}", r + 1, c + 1, v);
        }
        out
    }

    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(self.to_matrix_market().as_bytes())
    }

    /// Reads a symmetric coordinate real Matrix Market document.
    pub fn from_matrix_market(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let err = |line: usize, message: &str| HessError::Parse {
            line: line + 1,
            message: message.to_string(),
        };
        let (_, header) = lines.next().ok_or_else(|| err(0, "empty document"))?;
        let banner: Vec<String> = header.split_whitespace().map(str::to_lowercase).collect();
        if banner
            != [
                "%%matrixmarket",
                "matrix",
                "coordinate",
                "real",
                "symmetric",
            ]
        {
            return Err(err(0, "expected a coordinate real symmetric banner"));
        }
        let mut body =
            lines.filter(|(_, l)| !l.trim_start().starts_with('%') && !l.trim().is_empty());
        let (sl, size) = body.next().ok_or_else(|| err(1, "missing size line"))?;
        let dims: Vec<usize> = size
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| err(sl, "bad size line")))
            .collect::<Result<_>>()?;
        if dims.len() != 3 || dims[0] != dims[1] {
            return Err(err(sl, "expected `n n nnz` for a square matrix"));
        }
        let n = dims[0];
        let mut triplets = Vec::with_capacity(dims[2]);
        for (ln, line) in body {
            let f: Vec<&str> = line.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err(ln, "expected `row col value`"));
            }
            let r: usize = f[0].parse().map_err(|_| err(ln, "bad row"))?;
            let c: usize = f[1].parse().map_err(|_| err(ln, "bad column"))?;
            let v: f64 = f[2].parse().map_err(|_| err(ln, "bad value"))?;
            if r == 0 || c == 0 || r > n || c > n || r < c {
                return Err(err(ln, "index outside the lower triangle"));
            }
            triplets.push((r - 1, c - 1, v));
        }
        if triplets.len() != dims[2] {
            return Err(err(sl, "entry count does not match the size line"));
        }
        Ok(SparseHessian::from_triplets(n, triplets))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn triplets_are_folded_sorted_and_summed() {
        let h = SparseHessian::from_triplets(3, [(0, 2, 1.0), (2, 0, 0.5), (1, 1, 2.0)]);
        assert_eq!(h.entries(), &[(1, 1, 2.0), (2, 0, 1.5)]);
        assert_eq!(h.get(0, 2), 1.5);
        assert_eq!(h.get(0, 0), 0.0);
        assert_eq!(h.mul_vec(&[1.0, 1.0, 1.0]), vec![1.5, 2.0, 1.5]);
    }

    #[test]
    fn matrix_market_layout() {
        let h = SparseHessian::from_triplets(3, [(1, 0, 3.0), (2, 2, 4.0)]);
        assert_eq!(
            h.to_matrix_market(),
            "%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n2 1 3.0\n3 3 4.0\n"
        );
    }

    #[test]
    fn matrix_market_rejects_upper_entries() {
        let doc = "%%MatrixMarket matrix coordinate real symmetric\n2 2 1\n1 2 1.0\n";
        assert!(SparseHessian::from_matrix_market(doc).is_err());
    }

    #[test]
    fn rel_diff_counts_missing_entries() {
        let a = SparseHessian::from_triplets(2, [(0, 0, 2.0)]);
        let b = SparseHessian::from_triplets(2, [(0, 0, 2.0), (1, 0, 0.5)]);
        assert_eq!(a.max_rel_diff(&b), 0.25);
        assert_eq!(b.max_rel_diff(&a), 0.25);
        let small = SparseHessian::from_triplets(2, [(1, 1, 0.1)]);
        assert_eq!(small.max_rel_diff(&SparseHessian::empty(2)), 0.1);
    }

    proptest! {
        #[test]
        fn matrix_market_round_trip(
            n in 1usize..12,
            raw in prop::collection::vec((0usize..12, 0usize..12, -1e6f64..1e6), 0..40),
        ) {
            let h = SparseHessian::from_triplets(n, raw.into_iter().map(|(r, c, v)| (r % n, c % n, v)));
            let back = SparseHessian::from_matrix_market(&h.to_matrix_market()).unwrap();
            prop_assert_eq!(back, h);
        }
    }
}
