//! Adjacency-list storage for the symmetric matrix `W` swept by
//! `edge_pushing`.

use std::fmt::Debug;

/// Arithmetic needed by the sweep. `f64` gives numeric Hessians; [`Presence`]
/// gives structural patterns.
pub trait Weight: Copy + Debug + PartialEq {
    const ONE: Self;
    fn add(self, other: Self) -> Self;
    fn mul(self, other: Self) -> Self;
    fn double(self) -> Self;
    fn is_finite(self) -> bool;
}

impl Weight for f64 {
    const ONE: f64 = 1.0;

    #[inline]
    fn add(self, other: f64) -> f64 {
        self + other
    }

    #[inline]
    fn mul(self, other: f64) -> f64 {
        self * other
    }

    #[inline]
    fn double(self) -> f64 {
        2.0 * self
    }

    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

/// Boolean semiring element: an edge exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Presence;

impl Weight for Presence {
    const ONE: Presence = Presence;

    fn add(self, _: Presence) -> Presence {
        Presence
    }

    fn mul(self, _: Presence) -> Presence {
        Presence
    }

    fn double(self) -> Presence {
        Presence
    }

    fn is_finite(self) -> bool {
        true
    }
}

/// Weighted undirected graph `G_W`, one neighbor list per node.
///
/// An edge `{a, b}` with `a != b` appears in both lists with the same weight;
/// a loop `{a, a}` appears once in the list of `a`.
#[derive(Debug, Clone)]
pub struct SparseSymAccumulator<W> {
    adj: Vec<Vec<(usize, W)>>,
    live: usize,
    peak: usize,
    allocated: usize,
}

impl<W: Weight> SparseSymAccumulator<W> {
    pub fn new(nodes: usize) -> Self {
        SparseSymAccumulator {
            adj: vec![Vec::new(); nodes],
            live: 0,
            peak: 0,
            allocated: 0,
        }
    }

    pub fn neighbors(&self, node: usize) -> &[(usize, W)] {
        &self.adj[node]
    }

    /// `w_{ab} += w`, allocating the edge if absent. Returns the new weight.
    pub fn add(&mut self, a: usize, b: usize, w: W) -> W {
        let list = &mut self.adj[a];
        if let Some(slot) = list.iter_mut().find(|e| e.0 == b) {
            slot.1 = slot.1.add(w);
            let updated = slot.1;
            if a != b {
                let mirror = self.adj[b]
                    .iter_mut()
                    .find(|e| e.0 == a)
                    .expect("asymmetric accumulator");
                mirror.1 = mirror.1.add(w);
            }
            return updated;
        }
        list.push((b, w));
        if a != b {
            self.adj[b].push((a, w));
        }
        self.allocated += 1;
        self.live += 1;
        self.peak = self.peak.max(self.live);
        w
    }

    pub fn get(&self, a: usize, b: usize) -> Option<W> {
        self.adj[a].iter().find(|e| e.0 == b).map(|e| e.1)
    }

    /// Removes and returns every edge incident to `node`, loop included.
    pub fn take_incident(&mut self, node: usize) -> Vec<(usize, W)> {
        let incident = std::mem::take(&mut self.adj[node]);
        for &(p, _) in &incident {
            if p != node {
                let list = &mut self.adj[p];
                if let Some(k) = list.iter().position(|e| e.0 == node) {
                    list.swap_remove(k);
                }
            }
        }
        self.live -= incident.len();
        incident
    }

    /// Every edge once, as `(a, b, w)` with `a >= b`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, W)> + '_ {
        self.adj.iter().enumerate().flat_map(|(a, list)| {
            list.iter()
                .filter(move |e| e.0 <= a)
                .map(move |&(b, w)| (a, b, w))
        })
    }

    /// Number of edges currently stored.
    pub fn live_edges(&self) -> usize {
        self.live
    }

    pub fn peak_live_edges(&self) -> usize {
        self.peak
    }

    /// Number of edge allocations over the lifetime of the accumulator.
    pub fn edges_allocated(&self) -> usize {
        self.allocated
    }

    /// Count of symmetry defects: missing or mismatched mirrors, duplicated
    /// neighbors.
    pub fn symmetry_violations(&self) -> usize {
        let mut bad = 0;
        for (a, list) in self.adj.iter().enumerate() {
            for (k, &(b, w)) in list.iter().enumerate() {
                if list[..k].iter().any(|e| e.0 == b) {
                    bad += 1;
                }
                if b != a && self.adj[b].iter().filter(|e| e.0 == a && e.1 == w).count() != 1 {
                    bad += 1;
                }
            }
        }
        bad
    }

    /// Count of edge endpoints with id `>= bound`.
    pub fn block_support_violations(&self, bound: usize) -> usize {
        self.adj
            .iter()
            .enumerate()
            .map(|(a, list)| {
                if a >= bound {
                    list.len()
                } else {
                    list.iter().filter(|e| e.0 >= bound).count()
                }
            })
            .sum()
    }
}
