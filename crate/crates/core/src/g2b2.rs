//! Generalized geometric branch-and-bound for convex candidates.
//!
//! Every node carries one affine underestimator per candidate. A separation
//! oracle measures how far each candidate rises above its plane on the
//! node; the node LP lifts each plane by that gap (plus ε) and maximizes
//! their minimum, which bounds `max_{x∈P} min_k f_k` from above. Branching
//! adds a tangent plane to the worst-approximated candidate and splits the
//! node where the old plane or the new one dominates.

use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::functions::{AffinePiece, RobustObjective};
use crate::geometry::{AxisBox, Halfspace, Polytope, MEMBERSHIP_TOL};
use crate::lp::{solve_lp, LpOutcome};
use crate::oracles::{
    ascent_path, NodeSeparation, OracleKind, SeparationOracle, SeparationResult, SeparationTask,
};
use crate::tree::{BoundSnapshot, Closure, SolveStats, SolveStatus, Trace, TraceNode};

pub const DEFAULT_EPSILON: f64 = 1e-4;
/// Cuts closer than this to the current plane count as identical.
const DEGENERATE_CUT_TOL: f64 = 1e-9;
/// Relative rounding allowed on top of ε in the gap test; the LP bounds
/// themselves carry errors of this order.
const GAP_ROUNDING: f64 = 1e-12;
/// Box edges shorter than this are not bisected.
const MIN_BISECT_WIDTH: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct G2Node {
    pub id: usize,
    pub polytope: Polytope,
    /// Current affine approximation of each candidate.
    pub approx: Vec<AffinePiece>,
    /// `accurate[k]`: separation value of `k` is ≤ ε.
    pub accurate: Vec<bool>,
    /// Latest separation result for every candidate.
    pub separation: Vec<SeparationResult>,
    pub upper: f64,
    pub lower: f64,
    pub incumbent: Option<Vec<f64>>,
    /// Circumscribed box and the LP points touching its faces.
    pub hull: AxisBox,
    pub extremes: Vec<Vec<f64>>,
}

impl G2Node {
    fn from_separation(polytope: Polytope, approx: Vec<AffinePiece>, sep: NodeSeparation, epsilon: f64) -> Self {
        let accurate = sep.results.iter().map(|r| r.value <= epsilon).collect();
        Self {
            id: usize::MAX,
            polytope,
            approx,
            accurate,
            separation: sep.results,
            upper: f64::INFINITY,
            lower: f64::NEG_INFINITY,
            incumbent: None,
            hull: sep.hull,
            extremes: sep.extremes,
        }
    }

    pub fn inaccurate(&self) -> impl Iterator<Item = usize> + '_ {
        self.accurate
            .iter()
            .enumerate()
            .filter(|(_, &a)| !a)
            .map(|(k, _)| k)
    }
}

#[derive(Debug, Clone)]
pub struct G2b2Options {
    pub epsilon: f64,
    pub oracle: SeparationOracle,
    pub time_limit: Option<Duration>,
    pub max_iterations: usize,
    /// Initial plane per candidate; defaults to tangents at `anchor`.
    pub initial_planes: Option<Vec<AffinePiece>>,
    /// Tangent point for the initial planes; defaults to the box center.
    pub anchor: Option<Vec<f64>>,
    pub initial_lower: Option<(f64, Vec<f64>)>,
    pub prune: bool,
    pub record_trace: bool,
}

impl Default for G2b2Options {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            oracle: SeparationOracle::new(OracleKind::Box),
            time_limit: None,
            max_iterations: usize::MAX,
            initial_planes: None,
            anchor: None,
            initial_lower: None,
            prune: true,
            record_trace: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct G2b2Solution {
    pub value: f64,
    pub point: Vec<f64>,
    pub lower: f64,
    pub upper: f64,
    /// `false` when a heuristic oracle produced the node bounds: `upper` is
    /// then only an estimate.
    pub certified: bool,
    pub status: SolveStatus,
    pub stats: SolveStats,
    /// Tangent planes added per candidate.
    pub cuts_per_candidate: Vec<usize>,
    pub trace: Option<Trace>,
}

impl G2b2Solution {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Separation of candidate `k` at `node` against its current plane.
pub fn node_separation(
    node: &G2Node,
    k: usize,
    objective: &RobustObjective,
    oracle: &SeparationOracle,
) -> Result<SeparationResult> {
    oracle.separate(&SeparationTask::new(
        &node.polytope,
        objective.candidate(k),
        &node.approx[k],
    ))
}

/// Solves the node LP; returns `(argmax, θ)` or `None` if infeasible.
pub fn node_lp(node: &G2Node, epsilon: f64) -> Result<Option<(Vec<f64>, f64)>> {
    let n = node.polytope.dim();
    let mut c = vec![0.0; n + 1];
    c[n] = 1.0;
    let mut lp = node.polytope.linear_program(c);
    for (k, plane) in node.approx.iter().enumerate() {
        let lift = if node.accurate[k] {
            epsilon
        } else {
            node.separation[k].value + epsilon
        };
        let mut row: Vec<f64> = plane.slope.iter().map(|a| -a).collect();
        row.push(1.0);
        lp.add_le(row, plane.intercept + lift);
    }
    match solve_lp(&lp)? {
        LpOutcome::Optimal { mut point, value } => {
            point.truncate(n);
            Ok(Some((point, value)))
        }
        LpOutcome::Infeasible => Ok(None),
        LpOutcome::Unbounded => unreachable!("θ is capped by every plane and x is box-bounded"),
    }
}

/// Inaccurate candidate with the largest separation value (first on ties).
pub fn pick_refinement_target(node: &G2Node) -> Option<usize> {
    node.inaccurate().fold(None, |best, k| match best {
        Some(b) if node.separation[b].value >= node.separation[k].value => Some(b),
        _ => Some(k),
    })
}

/// How a node gets split.
#[derive(Debug, Clone, PartialEq)]
pub enum Split {
    /// Tangent of the target candidate at this point.
    Tangent(Vec<f64>),
    /// Halve the circumscribed box along coordinate `axis` at `at`.
    Bisect { axis: usize, at: f64 },
}

#[derive(Debug, Clone)]
pub enum BranchOutcome {
    Children { split: Split, children: Vec<G2Node>, empty: usize },
    /// Neither a useful cut nor a bisection is available.
    Stalled,
}

/// Picks the split for candidate `k`. The oracle's point is used when it
/// lies in the node; a box-corner point outside the node is replaced by the
/// best in-node point reachable by ascent from the hull's extreme points, and
/// if even that is within ε of the plane the box is bisected instead so its
/// over-estimate shrinks.
pub fn choose_split(node: &G2Node, k: usize, objective: &RobustObjective, epsilon: f64) -> Result<Option<Split>> {
    let sep = &node.separation[k];
    if node.polytope.max_residual(&sep.point) <= MEMBERSHIP_TOL {
        return Ok(Some(Split::Tangent(sep.point.clone())));
    }
    let task = SeparationTask::new(&node.polytope, objective.candidate(k), &node.approx[k]);
    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in &node.extremes {
        let v = task.objective(start);
        if best.as_ref().is_none_or(|(_, bv)| v > *bv) {
            best = Some((start.clone(), v));
        }
    }
    if let Some((start, _)) = best.take() {
        best = ascent_path(&task, &start)?.pop();
    }
    if let Some((x, v)) = best {
        if v > epsilon {
            return Ok(Some(Split::Tangent(x)));
        }
    }
    let (axis, width) = node.hull.longest_edge();
    if width <= MIN_BISECT_WIDTH {
        return Ok(None);
    }
    let at = 0.5 * (node.hull.lo()[axis] + node.hull.hi()[axis]);
    Ok(Some(Split::Bisect { axis, at }))
}

/// Splits `node` for candidate `k` and re-runs separation for every
/// candidate on each nonempty child. Children are returned without LP bounds.
pub fn branch_g2(
    node: &G2Node,
    k: usize,
    objective: &RobustObjective,
    oracle: &SeparationOracle,
    epsilon: f64,
    stream_base: u64,
) -> Result<BranchOutcome> {
    let Some(mut split) = choose_split(node, k, objective, epsilon)? else {
        return Ok(BranchOutcome::Stalled);
    };
    let n = node.polytope.dim();
    let mut parts: Vec<(Polytope, Vec<AffinePiece>)> = Vec::with_capacity(2);
    if let Split::Tangent(x) = &split {
        let old = &node.approx[k];
        let cut = objective.candidate(k).tangent(x);
        let slope_diff = cut
            .slope
            .iter()
            .zip(&old.slope)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if slope_diff <= DEGENERATE_CUT_TOL && (cut.intercept - old.intercept).abs() <= DEGENERATE_CUT_TOL {
            let (axis, width) = node.hull.longest_edge();
            if width <= MIN_BISECT_WIDTH {
                return Ok(BranchOutcome::Stalled);
            }
            let at = 0.5 * (node.hull.lo()[axis] + node.hull.hi()[axis]);
            split = Split::Bisect { axis, at };
        } else {
            parts.push((node.polytope.intersect(old.dominates(&cut))?, node.approx.clone()));
            let mut approx = node.approx.clone();
            approx[k] = cut.clone();
            parts.push((node.polytope.intersect(cut.dominates(old))?, approx));
        }
    }
    if let Split::Bisect { axis, at } = split {
        let mut e = vec![0.0; n];
        e[axis] = 1.0;
        parts.push((node.polytope.intersect(Halfspace::new(e.clone(), at))?, node.approx.clone()));
        e[axis] = -1.0;
        parts.push((node.polytope.intersect(Halfspace::new(e, -at))?, node.approx.clone()));
    }

    let mut children = Vec::with_capacity(2);
    let mut empty = 0;
    for (i, (polytope, approx)) in parts.into_iter().enumerate() {
        if polytope.is_empty()? {
            empty += 1;
            continue;
        }
        let sep = oracle.separate_all(&polytope, objective.candidates(), &approx, stream_base + i as u64)?;
        children.push(G2Node::from_separation(polytope, approx, sep, epsilon));
    }
    Ok(BranchOutcome::Children {
        split,
        children,
        empty,
    })
}

fn trace_node(node: &G2Node, parent: Option<usize>, created: usize) -> TraceNode {
    TraceNode {
        id: node.id,
        parent,
        polytope: node.polytope.clone(),
        label: Vec::new(),
        upper: node.upper,
        lower: node.lower,
        incumbent: node.incumbent.clone(),
        created,
        closed: None,
    }
}

struct Driver<'a> {
    objective: &'a RobustObjective,
    options: &'a G2b2Options,
    leaves: Vec<G2Node>,
    lower: f64,
    upper: f64,
    best: Option<Vec<f64>>,
    /// Largest U among nodes closed without being dominated by `lower`.
    closed_upper: f64,
    next_id: usize,
    sep_calls: u64,
    stats: SolveStats,
    cuts: Vec<usize>,
    trace: Option<Trace>,
}

impl Driver<'_> {
    fn separate(&mut self, polytope: &Polytope, approx: &[AffinePiece]) -> Result<NodeSeparation> {
        let t = Instant::now();
        let out = self
            .options
            .oracle
            .separate_all(polytope, self.objective.candidates(), approx, self.sep_calls);
        self.sep_calls += 1;
        self.stats.separation_time += t.elapsed();
        out
    }

    /// Bounds `node` and adds it as a leaf; `false` if its LP is infeasible.
    /// The node's U is capped by its parent's, which bounds a superset.
    fn admit(&mut self, mut node: G2Node, parent: Option<(usize, f64)>, iteration: usize) -> Result<bool> {
        let Some((x, theta)) = node_lp(&node, self.options.epsilon)? else {
            return Ok(false);
        };
        node.lower = self.objective.value(&x);
        node.upper = parent.map_or(theta, |(_, u)| theta.min(u));
        node.incumbent = Some(x);
        node.id = self.next_id;
        self.next_id += 1;
        self.stats.nodes_created += 1;
        if node.lower > self.lower || self.best.is_none() {
            self.lower = self.lower.max(node.lower);
            if node.lower >= self.lower {
                self.best = node.incumbent.clone();
            }
        }
        if let Some(t) = self.trace.as_mut() {
            t.nodes.push(trace_node(&node, parent.map(|p| p.0), iteration));
        }
        self.leaves.push(node);
        Ok(true)
    }

    fn refresh_upper(&mut self) {
        let leaf_max = self
            .leaves
            .iter()
            .map(|n| n.upper)
            .fold(f64::NEG_INFINITY, f64::max);
        self.upper = leaf_max.max(self.closed_upper).max(self.lower);
    }

    fn select_leaf(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, n) in self.leaves.iter().enumerate() {
            best = match best {
                Some(b) if self.leaves[b].upper > n.upper
                    || self.leaves[b].upper == n.upper && self.leaves[b].id < n.id => Some(b),
                _ => Some(i),
            };
        }
        best
    }

    fn close(&mut self, node: &G2Node, iteration: usize, how: Closure) {
        if how == Closure::Fathomed {
            self.closed_upper = self.closed_upper.max(node.upper);
        }
        if let Some(t) = self.trace.as_mut() {
            t.close(node.id, iteration, how);
        }
    }
}

/// Initial planes: the given ones, or tangents at the anchor.
fn initial_planes(objective: &RobustObjective, domain: &Polytope, options: &G2b2Options) -> Result<Vec<AffinePiece>> {
    let n = domain.dim();
    if let Some(planes) = &options.initial_planes {
        if planes.len() != objective.len() {
            return Err(Error::InvalidInput(format!(
                "{} initial planes for {} candidates",
                planes.len(),
                objective.len()
            )));
        }
        if let Some(p) = planes.iter().find(|p| p.dim() != n) {
            return Err(Error::Dimension {
                expected: n,
                got: p.dim(),
            });
        }
        return Ok(planes.clone());
    }
    let anchor = options.anchor.clone().unwrap_or_else(|| domain.bounds().center());
    if anchor.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: anchor.len(),
        });
    }
    Ok(objective.candidates().iter().map(|c| c.tangent(&anchor)).collect())
}

/// Maximizes `min_k f_k` over `domain` to within `options.epsilon`.
pub fn solve_g2b2(objective: &RobustObjective, domain: &Polytope, options: &G2b2Options) -> Result<G2b2Solution> {
    let start = Instant::now();
    if objective.dim() != domain.dim() {
        return Err(Error::Dimension {
            expected: domain.dim(),
            got: objective.dim(),
        });
    }
    if options.epsilon.is_nan() || options.epsilon <= 0.0 {
        return Err(Error::InvalidInput("epsilon must be positive".into()));
    }
    if domain.is_empty()? {
        return Err(Error::EmptyPolytope);
    }
    let certified = options.oracle.kind.certified();
    let epsilon = options.epsilon;
    let approx = initial_planes(objective, domain, options)?;

    let mut d = Driver {
        objective,
        options,
        leaves: Vec::new(),
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
        best: None,
        closed_upper: f64::NEG_INFINITY,
        next_id: 0,
        sep_calls: 0,
        stats: SolveStats::default(),
        cuts: vec![0; objective.len()],
        trace: options.record_trace.then(Trace::default),
    };
    if let Some((v, x)) = &options.initial_lower {
        d.lower = *v;
        d.best = Some(x.clone());
    }
    let sep = d.separate(domain, &approx)?;
    let root = G2Node::from_separation(domain.clone(), approx, sep, epsilon);
    if !d.admit(root, None, 0)? {
        return Err(Error::EmptyPolytope);
    }

    let mut iteration = 0usize;
    let status = loop {
        d.refresh_upper();
        if let Some(t) = d.trace.as_mut() {
            t.bounds.push(BoundSnapshot {
                iteration,
                lower: d.lower,
                upper: d.upper,
                leaves: d.leaves.len(),
            });
        }
        if d.leaves.is_empty() || certified && d.upper - d.lower <= epsilon + GAP_ROUNDING * d.upper.abs().max(1.0) {
            break SolveStatus::Converged;
        }
        if iteration >= options.max_iterations {
            break SolveStatus::IterationLimit;
        }
        if options.time_limit.is_some_and(|lim| start.elapsed() >= lim) {
            break SolveStatus::TimeLimit;
        }
        iteration += 1;

        let idx = d.select_leaf().expect("leaves nonempty");
        let node = d.leaves.remove(idx);
        let Some(k) = pick_refinement_target(&node) else {
            d.close(&node, iteration, Closure::Fathomed);
            continue;
        };
        let stream_base = d.sep_calls;
        let t = Instant::now();
        let outcome = branch_g2(&node, k, objective, &options.oracle, epsilon, stream_base)?;
        d.stats.separation_time += t.elapsed();
        d.sep_calls += 2;
        match outcome {
            BranchOutcome::Stalled => d.close(&node, iteration, Closure::Fathomed),
            BranchOutcome::Children {
                split,
                children,
                empty,
            } => {
                if matches!(split, Split::Tangent(_)) {
                    d.cuts[k] += 1;
                }
                d.stats.empty_children += empty;
                d.close(&node, iteration, Closure::Branched);
                for child in children {
                    if !d.admit(child, Some((node.id, node.upper)), iteration)? {
                        d.stats.empty_children += 1;
                    }
                }
            }
        }
        if options.prune {
            let cutoff = d.lower;
            let (keep, drop): (Vec<_>, Vec<_>) = std::mem::take(&mut d.leaves)
                .into_iter()
                .partition(|n| n.upper > cutoff);
            d.leaves = keep;
            for n in &drop {
                d.close(n, iteration, Closure::Pruned);
            }
        }
    };
    d.refresh_upper();
    d.stats.iterations = iteration;
    d.stats.elapsed = start.elapsed();
    let point = d.best.ok_or(Error::EmptyPolytope)?;
    Ok(G2b2Solution {
        value: d.lower,
        point,
        lower: d.lower,
        upper: d.upper,
        certified,
        status,
        stats: d.stats,
        cuts_per_candidate: d.cuts,
        trace: d.trace,
    })
}
