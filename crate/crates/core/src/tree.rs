//! Bookkeeping shared by both branch-and-bound drivers: termination status,
//! counters, and an optional trace of every node and every bound update.

use std::time::Duration;

use crate::geometry::Polytope;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    /// Gap closed to tolerance, or no leaves left.
    Converged,
    TimeLimit,
    IterationLimit,
}

impl SolveStatus {
    pub fn is_converged(self) -> bool {
        self == SolveStatus::Converged
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SolveStats {
    /// Branchings performed.
    pub iterations: usize,
    pub nodes_created: usize,
    /// Children discarded as empty at branch time.
    pub empty_children: usize,
    pub elapsed: Duration,
    /// Wall time spent inside separation oracles.
    pub separation_time: Duration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    Branched,
    /// Removed because `U ≤ L_global`.
    Pruned,
    /// Removed because it cannot be refined further (full label / all
    /// candidates accurate).
    Fathomed,
}

#[derive(Debug, Clone)]
pub struct TraceNode {
    pub id: usize,
    pub parent: Option<usize>,
    pub polytope: Polytope,
    /// Branching label (piecewise-linear solver only).
    pub label: Vec<(usize, usize)>,
    pub upper: f64,
    pub lower: f64,
    pub incumbent: Option<Vec<f64>>,
    /// Iteration in which the node was created (0 = root).
    pub created: usize,
    pub closed: Option<(usize, Closure)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundSnapshot {
    pub iteration: usize,
    pub lower: f64,
    pub upper: f64,
    pub leaves: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub nodes: Vec<TraceNode>,
    pub bounds: Vec<BoundSnapshot>,
}

impl Trace {
    pub(crate) fn node_mut(&mut self, id: usize) -> Option<&mut TraceNode> {
        // Ids are handed out in creation order.
        self.nodes.get_mut(id).filter(|n| n.id == id)
    }

    pub(crate) fn close(&mut self, id: usize, iteration: usize, how: Closure) {
        if let Some(n) = self.node_mut(id) {
            n.closed.get_or_insert((iteration, how));
        }
    }

    pub fn node(&self, id: usize) -> Option<&TraceNode> {
        self.nodes.get(id).filter(|n| n.id == id)
    }

    /// Nodes that, at the end of `iteration`, had not been branched. Pruned
    /// and fathomed nodes are included: together with live leaves they
    /// partition the feasible set.
    pub fn frontier(&self, iteration: usize) -> impl Iterator<Item = &TraceNode> {
        self.nodes.iter().filter(move |n| {
            n.created <= iteration
                && !matches!(n.closed, Some((it, Closure::Branched)) if it <= iteration)
        })
    }

    pub fn last_iteration(&self) -> usize {
        self.bounds.last().map_or(0, |b| b.iteration)
    }
}
