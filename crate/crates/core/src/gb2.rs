//! Exact geometric branch-and-bound for piecewise-linear candidates.
//!
//! A node is the intersection of dominance regions, one per candidate that
//! has been branched on along its path. Branching on candidate `k` splits a
//! node into one child per piece of `f_k`. The node LP
//!
//! ```text
//! max θ  s.t.  θ ≤ a_ki·x + b_ki  for every (k, i) in the label,  x ∈ P
//! ```
//!
//! gives the upper bound; `f` at its argmax gives the lower bound. Once a
//! node's label covers every candidate both bounds coincide.

use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::functions::{dominance_region, PiecewiseLinear, RobustObjective};
use crate::geometry::Polytope;
use crate::lp::{solve_lp, LpOutcome};
use crate::rng::{stream, Stream};
use crate::tree::{BoundSnapshot, Closure, SolveStats, SolveStatus, Trace, TraceNode};

/// `(candidate, piece)` pairs fixing the active piece of each branched candidate.
pub type NodeLabel = Vec<(usize, usize)>;

#[derive(Debug, Clone)]
pub struct GbNode {
    pub id: usize,
    pub label: NodeLabel,
    pub polytope: Polytope,
    pub upper: f64,
    pub lower: f64,
    pub incumbent: Option<Vec<f64>>,
}

impl GbNode {
    pub fn root(polytope: Polytope) -> Self {
        Self {
            id: 0,
            label: Vec::new(),
            polytope,
            upper: f64::INFINITY,
            lower: f64::NEG_INFINITY,
            incumbent: None,
        }
    }

    pub fn uses(&self, k: usize) -> bool {
        self.label.iter().any(|&(kk, _)| kk == k)
    }

    pub fn is_full(&self, num_candidates: usize) -> bool {
        self.label.len() >= num_candidates
    }
}

/// Which unbranched candidate to branch on next.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FunctionSelection {
    /// Uniform over unused candidates, seeded.
    Random { seed: u64 },
    /// Smallest `max_{x∈X} f_k` first, precomputed once.
    MinMax,
    /// Lowest unused index.
    InOrder,
}

impl Default for FunctionSelection {
    fn default() -> Self {
        FunctionSelection::Random { seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct Gb2Options {
    pub tolerance: f64,
    pub selection: FunctionSelection,
    pub time_limit: Option<Duration>,
    pub max_iterations: usize,
    /// Disable to keep every leaf (for checking that pruning is safe).
    pub prune: bool,
    pub record_trace: bool,
    /// A known feasible value and point, e.g. from a warm start.
    pub initial_lower: Option<(f64, Vec<f64>)>,
}

impl Default for Gb2Options {
    fn default() -> Self {
        Self {
            tolerance: 1e-6,
            selection: FunctionSelection::default(),
            time_limit: None,
            max_iterations: usize::MAX,
            prune: true,
            record_trace: false,
            initial_lower: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct GbSolveState {
    pub leaves: Vec<GbNode>,
    pub lower: f64,
    pub upper: f64,
    pub best: Option<Vec<f64>>,
    pub iterations: usize,
    next_id: usize,
}

impl GbSolveState {
    fn refresh_upper(&mut self) {
        let leaf_max = self
            .leaves
            .iter()
            .map(|n| n.upper)
            .fold(f64::NEG_INFINITY, f64::max);
        self.upper = leaf_max.max(self.lower);
    }
}

#[derive(Debug, Clone)]
pub struct Gb2Solution {
    pub value: f64,
    pub point: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    pub status: SolveStatus,
    pub stats: SolveStats,
    pub trace: Option<Trace>,
}

fn pl(objective: &RobustObjective, k: usize) -> Result<&PiecewiseLinear> {
    objective.candidate(k).as_piecewise_linear().ok_or_else(|| {
        Error::InvalidInput(format!("candidate {k} is not piecewise-linear"))
    })
}

/// `(L, U, argmax of the node LP)`.
pub type NodeBounds = (f64, f64, Option<Vec<f64>>);

/// Node LP bounds; `None` when the node is infeasible.
/// An empty label leaves θ unbounded: `(−∞, +∞, None)`.
pub fn node_bounds(
    label: &[(usize, usize)],
    polytope: &Polytope,
    objective: &RobustObjective,
) -> Result<Option<NodeBounds>> {
    if label.is_empty() {
        return Ok(Some((f64::NEG_INFINITY, f64::INFINITY, None)));
    }
    let n = polytope.dim();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut lp = polytope.linear_program(c);
    for &(k, i) in label {
        let piece = &pl(objective, k)?.pieces()[i];
        // θ − a·x ≤ b
        let mut row: Vec<f64> = piece.slope.iter().map(|a| -a).collect();
        row.push(1.0);
        lp.add_le(row, piece.intercept);
    }
    match solve_lp(&lp)? {
        LpOutcome::Optimal { mut point, value } => {
            point.truncate(n);
            let lower = objective.value(&point);
            Ok(Some((lower, value, Some(point))))
        }
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => unreachable!("θ is capped by a label piece and x is box-bounded"),
    }
}

/// Index into `state.leaves` of a max-U leaf; the oldest wins ties.
pub fn select_leaf(state: &GbSolveState) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, n) in state.leaves.iter().enumerate() {
        best = match best {
            None => Some(i),
            Some(b) => {
                let cur = &state.leaves[b];
                if n.upper > cur.upper || n.upper == cur.upper && n.id < cur.id {
                    Some(i)
                } else {
                    Some(b)
                }
            }
        };
    }
    best
}

/// Stateful function-selection policy.
#[derive(Debug, Clone)]
pub struct FunctionSelector {
    policy: FunctionSelection,
    rng: Option<ChaCha8Rng>,
    maxima: Vec<f64>,
}

impl FunctionSelector {
    pub fn new(
        policy: FunctionSelection,
        objective: &RobustObjective,
        domain: &Polytope,
    ) -> Result<Self> {
        let rng = match policy {
            FunctionSelection::Random { seed } => Some(stream(seed, Stream::FunctionSelection)),
            _ => None,
        };
        let maxima = match policy {
            FunctionSelection::MinMax => candidate_maxima(objective, domain)?,
            _ => Vec::new(),
        };
        Ok(Self { policy, rng, maxima })
    }

    pub fn maxima(&self) -> &[f64] {
        &self.maxima
    }
}

/// `max_{x∈X} f_k` for every PL candidate: max over pieces of a piece LP.
pub fn candidate_maxima(objective: &RobustObjective, domain: &Polytope) -> Result<Vec<f64>> {
    (0..objective.len())
        .map(|k| {
            let mut best = f64::NEG_INFINITY;
            for p in pl(objective, k)?.pieces() {
                let (_, v) = domain.maximize_linear(&p.slope)?.ok_or(Error::EmptyPolytope)?;
                best = best.max(v + p.intercept);
            }
            Ok(best)
        })
        .collect()
}

/// A candidate not yet in the node's label; `None` if the label is full.
pub fn select_function(node: &GbNode, k_total: usize, selector: &mut FunctionSelector) -> Option<usize> {
    let unused: Vec<usize> = (0..k_total).filter(|&k| !node.uses(k)).collect();
    match selector.policy {
        _ if unused.is_empty() => None,
        FunctionSelection::InOrder => unused.first().copied(),
        FunctionSelection::Random { .. } => unused
            .choose(selector.rng.as_mut().expect("random policy owns an rng"))
            .copied(),
        FunctionSelection::MinMax => unused
            .iter()
            .copied()
            .min_by(|&a, &b| selector.maxima[a].total_cmp(&selector.maxima[b]).then(a.cmp(&b))),
    }
}

/// One child per piece of candidate `k`; empty children are dropped.
/// Children come back unbounded with placeholder ids.
pub fn branch_gb(node: &GbNode, k: usize, objective: &RobustObjective) -> Result<(Vec<GbNode>, usize)> {
    if node.uses(k) {
        return Err(Error::InvalidInput(format!(
            "candidate {k} already branched on at node {}",
            node.id
        )));
    }
    let f = pl(objective, k)?;
    let mut children = Vec::with_capacity(f.pieces().len());
    let mut empty = 0;
    for i in 0..f.pieces().len() {
        let polytope = dominance_region(f, i, &node.polytope)?;
        if polytope.is_empty()? {
            empty += 1;
            continue;
        }
        let mut label = node.label.clone();
        label.push((k, i));
        children.push(GbNode {
            id: usize::MAX,
            label,
            polytope,
            upper: f64::INFINITY,
            lower: f64::NEG_INFINITY,
            incumbent: None,
        });
    }
    Ok((children, empty))
}

fn trace_node(node: &GbNode, parent: Option<usize>, created: usize) -> TraceNode {
    TraceNode {
        id: node.id,
        parent,
        polytope: node.polytope.clone(),
        label: node.label.clone(),
        upper: node.upper,
        lower: node.lower,
        incumbent: node.incumbent.clone(),
        created,
        closed: None,
    }
}

/// Maximizes `min_k f_k` over `domain` for piecewise-linear candidates.
pub fn solve_gb2(objective: &RobustObjective, domain: &Polytope, options: &Gb2Options) -> Result<Gb2Solution> {
    let start = Instant::now();
    if objective.dim() != domain.dim() {
        return Err(Error::Dimension {
            expected: domain.dim(),
            got: objective.dim(),
        });
    }
    if !objective.all_piecewise_linear() {
        return Err(Error::InvalidInput(
            "gb2 requires piecewise-linear candidates".into(),
        ));
    }
    if domain.is_empty()? {
        return Err(Error::EmptyPolytope);
    }
    let k_total = objective.len();
    let mut selector = FunctionSelector::new(options.selection, objective, domain)?;
    let mut trace = options.record_trace.then(Trace::default);
    let mut stats = SolveStats::default();

    let root = GbNode::root(domain.clone());
    if let Some(t) = trace.as_mut() {
        t.nodes.push(trace_node(&root, None, 0));
    }
    let (lower, best) = match &options.initial_lower {
        Some((v, x)) => (*v, Some(x.clone())),
        None => (f64::NEG_INFINITY, None),
    };
    let mut state = GbSolveState {
        leaves: vec![root],
        lower,
        upper: f64::INFINITY,
        best,
        iterations: 0,
        next_id: 1,
    };
    stats.nodes_created = 1;

    let status = loop {
        state.refresh_upper();
        if let Some(t) = trace.as_mut() {
            t.bounds.push(BoundSnapshot {
                iteration: state.iterations,
                lower: state.lower,
                upper: state.upper,
                leaves: state.leaves.len(),
            });
        }
        if state.leaves.is_empty() || state.upper - state.lower <= options.tolerance {
            break SolveStatus::Converged;
        }
        if state.iterations >= options.max_iterations {
            break SolveStatus::IterationLimit;
        }
        if options.time_limit.is_some_and(|lim| start.elapsed() >= lim) {
            break SolveStatus::TimeLimit;
        }

        let idx = select_leaf(&state).expect("leaves nonempty");
        let node = state.leaves.remove(idx);
        let iteration = state.iterations + 1;
        let Some(k) = select_function(&node, k_total, &mut selector) else {
            // Full label: L = U up to rounding, nothing left to refine.
            if let Some(t) = trace.as_mut() {
                t.close(node.id, iteration, Closure::Fathomed);
            }
            continue;
        };
        let (children, empty) = branch_gb(&node, k, objective)?;
        stats.empty_children += empty;
        state.iterations = iteration;
        if let Some(t) = trace.as_mut() {
            t.close(node.id, iteration, Closure::Branched);
        }
        for mut child in children {
            let Some((lo, up, x)) = node_bounds(&child.label, &child.polytope, objective)? else {
                stats.empty_children += 1;
                continue;
            };
            child.id = state.next_id;
            state.next_id += 1;
            stats.nodes_created += 1;
            child.lower = lo;
            child.upper = up;
            child.incumbent = x;
            if lo > state.lower {
                state.lower = lo;
                state.best = child.incumbent.clone();
            }
            if let Some(t) = trace.as_mut() {
                t.nodes.push(trace_node(&child, Some(node.id), iteration));
            }
            state.leaves.push(child);
        }
        if options.prune {
            let cutoff = state.lower;
            state.leaves.retain(|n| {
                let keep = n.upper > cutoff;
                if !keep {
                    if let Some(t) = trace.as_mut() {
                        t.close(n.id, iteration, Closure::Pruned);
                    }
                }
                keep
            });
        }
    };

    stats.iterations = state.iterations;
    stats.elapsed = start.elapsed();
    let point = state.best.ok_or(Error::EmptyPolytope)?;
    Ok(Gb2Solution {
        value: state.lower,
        point,
        lower: state.lower,
        upper: state.upper,
        status,
        stats,
        trace,
    })
}
