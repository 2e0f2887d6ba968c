//! Gradient graph model: the folded gradient graph with its nonlinear arcs,
//! the unfolded graph with mirror nodes, and Hessians by path enumeration.

use std::collections::BTreeMap;

use crate::error::{HessError, Result};
use crate::gradient::AdjointVector;
use crate::hessian::SparseHessian;
use crate::tape::{Tape, TapeNode};

/// Largest graph [`path_enumeration_hessian`] accepts.
pub const PATH_ENUMERATION_CAP: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectedArc {
    pub from: usize,
    pub to: usize,
    pub weight: f64,
}

/// Undirected arc `{a, b}` stored with `a >= b`; `a == b` is a loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NonlinearArc {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldedGradientGraph {
    pub n: usize,
    pub nodes: usize,
    pub directed_arcs: Vec<DirectedArc>,
    pub nonlinear_arcs: Vec<NonlinearArc>,
}

fn check_adjoints(tape: &Tape, adjoints: &AdjointVector) -> Result<()> {
    tape.require_swept()?;
    if adjoints.len() != tape.len() {
        return Err(HessError::DimensionMismatch {
            expected: tape.len(),
            got: adjoints.len(),
        });
    }
    Ok(())
}

fn directed_arcs(tape: &Tape) -> Vec<DirectedArc> {
    tape.nodes()
        .iter()
        .enumerate()
        .flat_map(|(to, node)| {
            node.preds()
                .iter()
                .enumerate()
                .map(move |(slot, &from)| DirectedArc {
                    from,
                    to,
                    weight: node.d1[slot],
                })
        })
        .collect()
}

/// Nonlinear arc weights `Σ_k v̄_k ∂²φ_k/∂v_j∂v_i` over common successors
/// `k`, omitting structurally zero second partials.
pub fn build_folded_graph(tape: &Tape, adjoints: &AdjointVector) -> Result<FoldedGradientGraph> {
    check_adjoints(tape, adjoints)?;
    let mut weights: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for (k, node) in tape.nodes().iter().enumerate().skip(tape.n()) {
        let preds = node.preds();
        let structural = node.op.structural_d2();
        for a in 0..preds.len() {
            for b in a..preds.len() {
                let slot = TapeNode::d2_slot(a, b);
                if structural[slot] {
                    let key = (preds[a].max(preds[b]), preds[a].min(preds[b]));
                    *weights.entry(key).or_insert(0.0) += adjoints.vbar[k] * node.d2[slot];
                }
            }
        }
    }
    Ok(FoldedGradientGraph {
        n: tape.n(),
        nodes: tape.len(),
        directed_arcs: directed_arcs(tape),
        nonlinear_arcs: weights
            .into_iter()
            .map(|((a, b), weight)| NonlinearArc { a, b, weight })
            .collect(),
    })
}

/// `sums[r]` is the total weight of all directed paths from `from` to `r`
/// (the empty path contributes 1 at `from`), found by exhaustive DFS.
pub fn path_weight_sums(successors: &[Vec<(usize, f64)>], from: usize) -> Vec<f64> {
    fn walk(succ: &[Vec<(usize, f64)>], node: usize, weight: f64, sums: &mut [f64]) {
        sums[node] += weight;
        for &(next, w) in &succ[node] {
            walk(succ, next, weight * w, sums);
        }
    }
    let mut sums = vec![0.0; successors.len()];
    walk(successors, from, 1.0, &mut sums);
    sums
}

impl FoldedGradientGraph {
    pub fn weighted_successors(&self) -> Vec<Vec<(usize, f64)>> {
        let mut succ = vec![Vec::new(); self.nodes];
        for arc in &self.directed_arcs {
            succ[arc.from].push((arc.to, arc.weight));
        }
        succ
    }
}

/// Hessian from tri-parted paths: a directed path `i → r`, a nonlinear arc
/// `{r, s}`, then a reversed directed path `s → j`. Non-loop arcs are used in
/// both orientations, loops once.
pub fn path_enumeration_hessian(graph: &FoldedGradientGraph) -> Result<SparseHessian> {
    if graph.nodes > PATH_ENUMERATION_CAP {
        return Err(HessError::PathCapExceeded {
            cap: PATH_ENUMERATION_CAP,
            nodes: graph.nodes,
        });
    }
    let succ = graph.weighted_successors();
    let reach: Vec<Vec<f64>> = (0..graph.n).map(|i| path_weight_sums(&succ, i)).collect();
    let mut triplets = Vec::new();
    for i in 0..graph.n {
        for j in 0..=i {
            let mut h = 0.0;
            for arc in &graph.nonlinear_arcs {
                let (r, s) = (arc.a, arc.b);
                h += reach[i][r] * arc.weight * reach[j][s];
                if r != s {
                    h += reach[i][s] * arc.weight * reach[j][r];
                }
            }
            if h != 0.0 {
                triplets.push((i, j, h));
            }
        }
    }
    Ok(SparseHessian::from_triplets(graph.n, triplets))
}

/// Node of the unfolded gradient graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum GNode {
    Original(usize),
    Adjoint(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArcKind {
    /// Original arc `(j, i)`.
    Original,
    /// Mirror arc `(ī, j̄)`.
    Mirror,
    /// Nonlinear arc `(j, ī)`.
    Nonlinear,
}

/// Gradient graph with separate adjoint nodes. Debug construction used to
/// check mirror symmetry and the one-nonlinear-arc property of paths.
#[derive(Debug, Clone)]
pub struct UnfoldedGradientGraph {
    pub n: usize,
    pub nodes: usize,
    pub arcs: Vec<(GNode, GNode, ArcKind, f64)>,
}

impl UnfoldedGradientGraph {
    pub fn build(tape: &Tape, adjoints: &AdjointVector) -> Result<Self> {
        let folded = build_folded_graph(tape, adjoints)?;
        let mut arcs = Vec::new();
        for arc in &folded.directed_arcs {
            arcs.push((
                GNode::Original(arc.from),
                GNode::Original(arc.to),
                ArcKind::Original,
                arc.weight,
            ));
            arcs.push((
                GNode::Adjoint(arc.to),
                GNode::Adjoint(arc.from),
                ArcKind::Mirror,
                arc.weight,
            ));
        }
        for arc in &folded.nonlinear_arcs {
            arcs.push((
                GNode::Original(arc.a),
                GNode::Adjoint(arc.b),
                ArcKind::Nonlinear,
                arc.weight,
            ));
            if arc.a != arc.b {
                arcs.push((
                    GNode::Original(arc.b),
                    GNode::Adjoint(arc.a),
                    ArcKind::Nonlinear,
                    arc.weight,
                ));
            }
        }
        Ok(UnfoldedGradientGraph {
            n: tape.n(),
            nodes: tape.len(),
            arcs,
        })
    }

    fn index(&self, node: GNode) -> usize {
        match node {
            GNode::Original(k) => k,
            GNode::Adjoint(k) => self.nodes + k,
        }
    }

    /// Sum of path weights from `x_i` to `x̄_j`, the number of such paths and
    /// how many of them cross a number of nonlinear arcs other than one.
    pub fn second_derivative_by_paths(&self, i: usize, j: usize) -> (f64, usize, usize) {
        let mut succ: Vec<Vec<(usize, bool, f64)>> = vec![Vec::new(); 2 * self.nodes];
        for &(from, to, kind, w) in &self.arcs {
            succ[self.index(from)].push((self.index(to), kind == ArcKind::Nonlinear, w));
        }
        struct Walk<'a> {
            succ: &'a [Vec<(usize, bool, f64)>],
            target: usize,
            total: f64,
            paths: usize,
            bad: usize,
        }
        fn go(walk: &mut Walk<'_>, node: usize, weight: f64, crossings: usize) {
            if node == walk.target {
                walk.total += weight;
                walk.paths += 1;
                if crossings != 1 {
                    walk.bad += 1;
                }
            }
            for k in 0..walk.succ[node].len() {
                let (next, nonlinear, w) = walk.succ[node][k];
                go(walk, next, weight * w, crossings + usize::from(nonlinear));
            }
        }
        let mut walk = Walk {
            succ: &succ,
            target: self.index(GNode::Adjoint(j)),
            total: 0.0,
            paths: 0,
            bad: 0,
        };
        go(&mut walk, self.index(GNode::Original(i)), 1.0, 0);
        (walk.total, walk.paths, walk.bad)
    }
}

/// Rendering options for DOT output.
#[derive(Debug, Clone, Default)]
pub struct DotOptions {
    /// Print arc weights as edge labels.
    pub weights: bool,
    /// Keep arcs already consumed by pushing in sweep snapshots.
    pub keep_pushed: bool,
}

fn node_label(tape: &Tape, id: usize) -> String {
    let node = tape.node(id);
    if id < tape.n() {
        return format!("x{}", id + 1);
    }
    let mut label = format!("v{}: {}", id - tape.n() + 1, node.op.name());
    if let Some(c) = node.op.payload() {
        label.push_str(&format!("({c})"));
    }
    label
}

fn write_nodes(out: &mut String, tape: &Tape) {
    for id in 0..tape.len() {
        let shape = if id < tape.n() { "box" } else { "ellipse" };
        out.push_str(&format!(
            "  n{id} [label=\"{}\", shape={shape}];\n",
            node_label(tape, id)
        ));
    }
}

fn fmt_weight(w: f64) -> String {
    format!("{w:.6}")
        .trim_end_matches('0')
        .trim_end_matches('.')
        .to_string()
}

fn write_directed(out: &mut String, tape: &Tape, opts: &DotOptions) {
    for (to, node) in tape.nodes().iter().enumerate() {
        for (slot, &from) in node.preds().iter().enumerate() {
            if opts.weights && tape.is_swept() {
                out.push_str(&format!(
                    "  n{from} -> n{to} [label=\"{}\"];\n",
                    fmt_weight(node.d1[slot])
                ));
            } else {
                out.push_str(&format!("  n{from} -> n{to};\n"));
            }
        }
    }
}

fn write_nonlinear(out: &mut String, a: usize, b: usize, w: Option<f64>, style: &str) {
    match w {
        Some(w) => out.push_str(&format!(
            "  n{a} -> n{b} [dir=none, style={style}, label=\"{}\"];\n",
            fmt_weight(w)
        )),
        None => out.push_str(&format!("  n{a} -> n{b} [dir=none, style={style}];\n")),
    }
}

/// Computational graph of a tape.
pub fn tape_to_dot(tape: &Tape, opts: &DotOptions) -> String {
    let mut out = String::from("digraph tape {\n  rankdir=BT;\n");
    write_nodes(&mut out, tape);
    write_directed(&mut out, tape, opts);
    out.push_str("}\n");
    out
}

/// Folded gradient graph: original arcs solid, nonlinear arcs dashed and
/// undirected.
pub fn folded_to_dot(tape: &Tape, graph: &FoldedGradientGraph, opts: &DotOptions) -> String {
    let mut out = String::from("digraph folded {\n  rankdir=BT;\n");
    write_nodes(&mut out, tape);
    write_directed(&mut out, tape, opts);
    for arc in &graph.nonlinear_arcs {
        write_nonlinear(
            &mut out,
            arc.a,
            arc.b,
            opts.weights.then_some(arc.weight),
            "dashed",
        );
    }
    out.push_str("}\n");
    out
}

/// One digraph per swept node, showing the live nonlinear arcs of the
/// accumulator. Pushed arcs are hidden unless `keep_pushed` is set, in which
/// case they are drawn dotted.
pub fn snapshots_to_dot(
    tape: &Tape,
    snapshots: &[crate::edge_pushing::SweepSnapshot],
    opts: &DotOptions,
) -> String {
    let mut out = String::new();
    let mut pushed_so_far: Vec<(usize, usize, f64)> = Vec::new();
    for snap in snapshots {
        for &(p, w) in &snap.pushed {
            pushed_so_far.push((snap.node.max(p), snap.node.min(p), w));
        }
        out.push_str(&format!(
            "digraph after_v{} {{\n  rankdir=BT;\n",
            snap.node - tape.n() + 1
        ));
        write_nodes(&mut out, tape);
        out.push_str(&format!(
            "  n{} [style=filled, fillcolor=lightgray];\n",
            snap.node
        ));
        write_directed(&mut out, tape, opts);
        if opts.keep_pushed {
            for &(a, b, w) in &pushed_so_far {
                write_nonlinear(&mut out, a, b, opts.weights.then_some(w), "dotted");
            }
        }
        for &(a, b, w) in &snap.live {
            write_nonlinear(&mut out, a, b, opts.weights.then_some(w), "dashed");
        }
        out.push_str("}\n");
    }
    out
}
