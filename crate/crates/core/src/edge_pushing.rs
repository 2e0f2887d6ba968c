//! Sparse Hessians in a single reverse sweep by pushing and creating
//! nonlinear arcs.
//!
//! The accumulator `W` starts empty. Sweeping node `i` (from the output down
//! to the first intermediate) does three things, in order:
//!
//! 1. **pushing**: every edge `{i, p}` is removed and its weight is pushed to
//!    `i`'s predecessors:
//!    - `p == i` (loop): `w_{jk} += c_j c_k w_{ii}` over unordered predecessor
//!      pairs, `w_{jj} += c_j² w_{ii}` on the diagonal;
//!    - `p` a predecessor of `i`: `w_{jp} += c_j w_{ip}` for `j != p` and
//!      `w_{pp} += 2 c_p w_{ip}`;
//!    - otherwise: `w_{jp} += c_j w_{ip}` for every predecessor `j`;
//! 2. **creating**: `w_{jk} += v̄_i ∂²φ_i/∂v_j∂v_k` for every structurally
//!    nonzero second partial;
//! 3. **adjoint**: `v̄_j += v̄_i c_j`.
//!
//! At termination the edges among independents are the Hessian.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::accumulator::{Presence, SparseSymAccumulator, Weight};
use crate::error::{HessError, Result};
use crate::gradient::AdjointVector;
use crate::hessian::SparseHessian;
use crate::tape::{Tape, TapeNode};

#[derive(Debug, Clone, Default)]
pub struct EdgePushingOptions {
    /// Entries with `|w| < drop_tol` are removed from the result.
    pub drop_tol: f64,
    /// Verify accumulator symmetry and block support after every node.
    pub check_invariants: bool,
    /// Push incident edges in a seeded random order instead of storage order.
    pub shuffle_seed: Option<u64>,
    /// Record the accumulator after every node.
    pub record_snapshots: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SweepStats {
    pub node_visits: usize,
    pub edges_allocated: usize,
    pub peak_live_edges: usize,
    pub symmetry_violations: usize,
    pub block_support_violations: usize,
}

/// State of `W` right after a node was swept.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSnapshot {
    pub node: usize,
    /// Edges `{node, p}` consumed by the pushing step, with their weights.
    pub pushed: Vec<(usize, f64)>,
    /// Live edges `(a, b, w)`, `a >= b`, sorted.
    pub live: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct EdgePushingOutput {
    pub hessian: SparseHessian,
    pub adjoints: AdjointVector,
    pub stats: SweepStats,
    pub snapshots: Vec<SweepSnapshot>,
}

/// Per-node weights fed to the generic sweep.
trait Partials<W: Weight> {
    fn d1(&self, node: &TapeNode, slot: usize) -> W;
    fn d2(&self, node: &TapeNode, slot: usize) -> W;
}

struct Numeric;

impl Partials<f64> for Numeric {
    #[inline]
    fn d1(&self, node: &TapeNode, slot: usize) -> f64 {
        node.d1[slot]
    }

    #[inline]
    fn d2(&self, node: &TapeNode, slot: usize) -> f64 {
        node.d2[slot]
    }
}

struct Structural;

impl Partials<Presence> for Structural {
    fn d1(&self, _: &TapeNode, _: usize) -> Presence {
        Presence
    }

    fn d2(&self, _: &TapeNode, _: usize) -> Presence {
        Presence
    }
}

type RawSnapshot<W> = (usize, Vec<(usize, W)>, Vec<(usize, usize, W)>);

struct Sweep<W> {
    acc: SparseSymAccumulator<W>,
    vbar: Vec<W>,
    stats: SweepStats,
    snapshots: Vec<RawSnapshot<W>>,
}

fn sweep<W: Weight, P: Partials<W>>(
    tape: &Tape,
    partials: &P,
    zero: W,
    opts: &EdgePushingOptions,
) -> Result<Sweep<W>> {
    let len = tape.len();
    let mut acc = SparseSymAccumulator::new(len);
    let mut vbar = vec![zero; len];
    vbar[len - 1] = W::ONE;
    let mut stats = SweepStats::default();
    let mut snapshots = Vec::new();
    let mut rng = opts.shuffle_seed.map(ChaCha8Rng::seed_from_u64);

    for i in (tape.n()..len).rev() {
        stats.node_visits += 1;
        let node = tape.node(i);
        let preds = node.preds();
        let arity = preds.len();
        let mut c = [zero; 2];
        for (slot, cj) in c.iter_mut().enumerate().take(arity) {
            *cj = partials.d1(node, slot);
        }

        // pushing
        let mut finite = true;
        let mut incident = acc.take_incident(i);
        if let Some(rng) = rng.as_mut() {
            incident.shuffle(rng);
        }
        for &(p, w) in &incident {
            if p == i {
                for a in 0..arity {
                    for b in a..arity {
                        let scale = c[a].mul(c[b]);
                        finite &= acc.add(preds[a], preds[b], scale.mul(w)).is_finite();
                    }
                }
            } else if let Some(pos) = preds.iter().position(|&q| q == p) {
                for a in 0..arity {
                    if a == pos {
                        finite &= acc.add(p, p, c[a].mul(w).double()).is_finite();
                    } else {
                        finite &= acc.add(preds[a], p, c[a].mul(w)).is_finite();
                    }
                }
            } else {
                for a in 0..arity {
                    finite &= acc.add(preds[a], p, c[a].mul(w)).is_finite();
                }
            }
        }

        // creating
        let structural = node.op.structural_d2();
        for a in 0..arity {
            for b in a..arity {
                let slot = TapeNode::d2_slot(a, b);
                if structural[slot] {
                    finite &= acc
                        .add(preds[a], preds[b], vbar[i].mul(partials.d2(node, slot)))
                        .is_finite();
                }
            }
        }

        // adjoint
        let vi = vbar[i];
        for (slot, &p) in preds.iter().enumerate() {
            vbar[p] = vbar[p].add(vi.mul(c[slot]));
        }

        if !finite {
            return Err(HessError::NonFinite { node: i });
        }
        if opts.check_invariants {
            stats.symmetry_violations += acc.symmetry_violations();
            stats.block_support_violations += acc.block_support_violations(i);
        }
        if opts.record_snapshots {
            let mut live: Vec<_> = acc.edges().collect();
            live.sort_by_key(|e| (e.0, e.1));
            snapshots.push((i, incident, live));
        }
    }
    stats.edges_allocated = acc.edges_allocated();
    stats.peak_live_edges = acc.peak_live_edges();
    Ok(Sweep {
        acc,
        vbar,
        stats,
        snapshots,
    })
}

fn independent_block<W: Weight>(acc: &SparseSymAccumulator<W>, n: usize) -> Vec<(usize, usize, W)> {
    let mut entries: Vec<_> = (0..n)
        .flat_map(|a| {
            acc.neighbors(a)
                .iter()
                .filter(move |e| e.0 <= a)
                .map(move |&(b, w)| (a, b, w))
        })
        .collect();
    entries.sort_by_key(|e| (e.0, e.1));
    entries
}

/// Hessian of a swept tape. Also returns the adjoints, which equal those of
/// [`reverse_gradient`](crate::reverse_gradient) bit for bit.
pub fn edge_pushing_hessian(tape: &Tape, opts: &EdgePushingOptions) -> Result<EdgePushingOutput> {
    tape.require_swept()?;
    let Sweep {
        acc,
        vbar,
        stats,
        snapshots,
    } = sweep(tape, &Numeric, 0.0, opts)?;
    let mut hessian = SparseHessian::from_triplets(tape.n(), independent_block(&acc, tape.n()));
    if opts.drop_tol > 0.0 {
        hessian.drop_below(opts.drop_tol);
    }
    Ok(EdgePushingOutput {
        hessian,
        adjoints: AdjointVector { vbar },
        stats,
        snapshots: snapshots
            .into_iter()
            .map(|(node, pushed, live)| SweepSnapshot { node, pushed, live })
            .collect(),
    })
}

/// Hessian of a swept tape with default options.
pub fn hessian(tape: &Tape) -> Result<SparseHessian> {
    edge_pushing_hessian(tape, &EdgePushingOptions::default()).map(|out| out.hessian)
}

/// Positions that can be nonzero for some point: the same sweep run over
/// edge presence, with every first partial and every structurally nonzero
/// second partial treated as present. Needs no point. Values are all 1.
pub fn structural_pattern(tape: &Tape) -> SparseHessian {
    let sweep = sweep(tape, &Structural, Presence, &EdgePushingOptions::default())
        .expect("presence weights are always finite");
    SparseHessian::from_triplets(
        tape.n(),
        independent_block(&sweep.acc, tape.n())
            .into_iter()
            .map(|(a, b, _)| (a, b, 1.0)),
    )
}
