//! Componentwise reverse sweep for the gradient.

use crate::error::Result;
use crate::tape::Tape;

/// Adjoints `v̄` over every node of a tape.
///
/// Seeded with `v̄[output] = 1`. Node entries are not reset after they are
/// swept, so at termination `v̄[i] = ∂f/∂v_i` for every node.
#[derive(Debug, Clone, PartialEq)]
pub struct AdjointVector {
    pub vbar: Vec<f64>,
}

impl AdjointVector {
    pub fn seeded(len: usize) -> Self {
        let mut vbar = vec![0.0; len];
        if let Some(last) = vbar.last_mut() {
            *last = 1.0;
        }
        AdjointVector { vbar }
    }

    pub fn len(&self) -> usize {
        self.vbar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vbar.is_empty()
    }

    /// Distributes `v̄[i]` to the predecessors of node `i`, pred0 first.
    /// Returns the number of multiply-adds performed.
    #[inline]
    pub(crate) fn distribute(&mut self, tape: &Tape, i: usize) -> usize {
        let node = tape.node(i);
        let vi = self.vbar[i];
        for (slot, &p) in node.preds().iter().enumerate() {
            self.vbar[p] += vi * node.d1[slot];
        }
        node.arity()
    }
}

/// Work done by a gradient sweep.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GradientStats {
    pub node_visits: usize,
    pub mul_adds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    pub gradient: Vec<f64>,
    pub adjoints: AdjointVector,
    pub stats: GradientStats,
}

/// Reverse gradient of a swept tape.
pub fn reverse_gradient(tape: &Tape) -> Result<Gradient> {
    tape.require_swept()?;
    let mut adjoints = AdjointVector::seeded(tape.len());
    let mut stats = GradientStats::default();
    for i in (tape.n()..tape.len()).rev() {
        stats.node_visits += 1;
        stats.mul_adds += adjoints.distribute(tape, i);
    }
    Ok(Gradient {
        gradient: adjoints.vbar[..tape.n()].to_vec(),
        adjoints,
        stats,
    })
}
