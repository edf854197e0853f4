//! Oracles for the separation problem `max_{x∈P} g(x) − (a·x + b)` with `g`
//! convex: a convex maximization over a polytope, whose optimum sits at a
//! vertex.
//!
//! * `box`: evaluate at the corners of the circumscribed box. Over-estimates,
//!   so the value is a certified upper bound.
//! * `lc1`: linearization ascent from one interior start.
//! * `lc2`: linearization ascent from many interior starts.
//! * `exact`: enumerate the polytope's vertices (small dimension only).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::functions::{AffinePiece, CandidateFunction};
use crate::geometry::{AxisBox, Polytope, BOX_VERTEX_CAP};
use crate::lp::dot;
use crate::rng::{stream_indexed, Stream};

/// Ascent stops once the linearized gain falls to this level.
pub const ASCENT_TOL: f64 = 1e-9;
pub const ASCENT_MAX_STEPS: usize = 100;
pub const DEFAULT_STARTS: usize = 100;
pub const HIT_AND_RUN_BURN_IN: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OracleKind {
    Box,
    Lc1,
    Lc2,
    Exact,
}

impl OracleKind {
    /// Whether the oracle's value over-estimates the true separation max.
    pub fn certified(self) -> bool {
        matches!(self, OracleKind::Box | OracleKind::Exact)
    }

    pub fn name(self) -> &'static str {
        match self {
            OracleKind::Box => "box",
            OracleKind::Lc1 => "lc1",
            OracleKind::Lc2 => "lc2",
            OracleKind::Exact => "exact",
        }
    }
}

impl fmt::Display for OracleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OracleKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "box" => Ok(OracleKind::Box),
            "lc1" => Ok(OracleKind::Lc1),
            "lc2" => Ok(OracleKind::Lc2),
            "exact" => Ok(OracleKind::Exact),
            other => Err(Error::InvalidInput(format!(
                "unknown oracle '{other}' (expected box, lc1, lc2 or exact)"
            ))),
        }
    }
}

/// Maximize `candidate − affine` over `polytope`.
#[derive(Debug, Clone, Copy)]
pub struct SeparationTask<'a> {
    pub polytope: &'a Polytope,
    pub candidate: &'a CandidateFunction,
    pub affine: &'a AffinePiece,
}

impl<'a> SeparationTask<'a> {
    pub fn new(
        polytope: &'a Polytope,
        candidate: &'a CandidateFunction,
        affine: &'a AffinePiece,
    ) -> Self {
        Self {
            polytope,
            candidate,
            affine,
        }
    }

    pub fn objective(&self, x: &[f64]) -> f64 {
        self.candidate.value(x) - self.affine.value(x)
    }

    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        self.candidate
            .subgradient(x)
            .into_iter()
            .zip(&self.affine.slope)
            .map(|(g, a)| g - a)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeparationResult {
    pub point: Vec<f64>,
    pub value: f64,
    /// `true`: value ≥ true max. `false`: heuristic lower bound.
    pub certified_upper: bool,
}

fn argmax_over<'p>(
    task: &SeparationTask<'_>,
    points: impl IntoIterator<Item = &'p Vec<f64>>,
) -> Option<(Vec<f64>, f64)> {
    let mut best: Option<(&Vec<f64>, f64)> = None;
    for p in points {
        let v = task.objective(p);
        if best.is_none_or(|(_, bv)| v > bv) {
            best = Some((p, v));
        }
    }
    best.map(|(p, v)| (p.clone(), v))
}

/// Max over the corners of the circumscribed box (2n LPs plus 2^n evaluations).
/// The returned point may lie outside the polytope.
pub fn oracle_box(task: &SeparationTask<'_>) -> Result<SeparationResult> {
    let hull = task.polytope.bounding_box()?;
    box_on_hull(task, &hull, BOX_VERTEX_CAP)
}

fn box_on_hull(task: &SeparationTask<'_>, hull: &AxisBox, cap: usize) -> Result<SeparationResult> {
    let corners = hull.vertices(cap)?;
    let (point, value) = argmax_over(task, &corners).expect("a box has at least one corner");
    Ok(SeparationResult {
        point,
        value,
        certified_upper: true,
    })
}

/// Enumerates the vertices of the polytope (dimension ≤ 4).
pub fn oracle_exact(task: &SeparationTask<'_>) -> Result<SeparationResult> {
    let verts = task.polytope.enumerate_vertices()?;
    exact_on_vertices(task, &verts)
}

fn exact_on_vertices(task: &SeparationTask<'_>, verts: &[Vec<f64>]) -> Result<SeparationResult> {
    let (point, value) = argmax_over(task, verts).ok_or(Error::EmptyPolytope)?;
    Ok(SeparationResult {
        point,
        value,
        certified_upper: true,
    })
}

/// Objective values along the conditional-gradient ascent from `start`.
/// Each step jumps to `argmax_{y∈P} s(x)·y`; convexity makes the sequence
/// non-decreasing.
pub fn ascent_path(task: &SeparationTask<'_>, start: &[f64]) -> Result<Vec<(Vec<f64>, f64)>> {
    let mut x = start.to_vec();
    let mut fx = task.objective(&x);
    let mut path = vec![(x.clone(), fx)];
    for _ in 0..ASCENT_MAX_STEPS {
        let s = task.subgradient(&x);
        let Some((y, sy)) = task.polytope.maximize_linear(&s)? else {
            return Err(Error::EmptyPolytope);
        };
        if sy - dot(&s, &x) <= ASCENT_TOL {
            break;
        }
        let fy = task.objective(&y);
        if fy < fx {
            // Only rounding can cause this; keep the monotone iterate.
            break;
        }
        x = y;
        fx = fy;
        path.push((x.clone(), fx));
    }
    Ok(path)
}

/// Single-start linearization ascent (uncertified).
pub fn oracle_linearization_ascent(
    task: &SeparationTask<'_>,
    start: &[f64],
) -> Result<SeparationResult> {
    let (point, value) = ascent_path(task, start)?
        .pop()
        .expect("path holds at least the start");
    Ok(SeparationResult {
        point,
        value,
        certified_upper: false,
    })
}

/// Best ascent over `n_starts` hit-and-run samples of the polytope.
pub fn oracle_multistart(
    task: &SeparationTask<'_>,
    n_starts: usize,
    seed: u64,
) -> Result<SeparationResult> {
    let starts = sample_interior(task.polytope, n_starts.max(1), seed, 0)?;
    multistart_from(task, &starts)
}

fn multistart_from(task: &SeparationTask<'_>, starts: &[Vec<f64>]) -> Result<SeparationResult> {
    let mut best: Option<SeparationResult> = None;
    for s in starts {
        let r = oracle_linearization_ascent(task, s)?;
        if best.as_ref().is_none_or(|b| r.value > b.value) {
            best = Some(r);
        }
    }
    best.ok_or(Error::EmptyPolytope)
}

/// Hit-and-run samples of `polytope`, started from its interior point after
/// a burn-in. Deterministic per `(seed, stream_index)`.
pub fn sample_interior(
    polytope: &Polytope,
    count: usize,
    seed: u64,
    stream_index: u64,
) -> Result<Vec<Vec<f64>>> {
    let mut rng = stream_indexed(seed, Stream::InteriorSampling, stream_index);
    let mut x = polytope.interior_point()?;
    let constraints = polytope.all_constraints();
    let n = polytope.dim();
    let mut out = Vec::with_capacity(count);
    for step in 0..HIT_AND_RUN_BURN_IN + count {
        let mut u: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = dot(&u, &u).sqrt();
        if norm > 0.0 {
            u.iter_mut().for_each(|v| *v /= norm);
        }
        let (mut t_lo, mut t_hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for h in &constraints {
            let rate = dot(&h.normal, &u);
            let slack = (h.offset - dot(&h.normal, &x)).max(0.0);
            if rate > 1e-14 {
                t_hi = t_hi.min(slack / rate);
            } else if rate < -1e-14 {
                t_lo = t_lo.max(slack / rate);
            }
        }
        if t_lo.is_finite() && t_hi.is_finite() && t_lo < t_hi {
            let t = rng.gen_range(t_lo..=t_hi);
            for (xi, ui) in x.iter_mut().zip(&u) {
                *xi += t * ui;
            }
        }
        if step >= HIT_AND_RUN_BURN_IN {
            out.push(x.clone());
        }
    }
    Ok(out)
}

/// Oracle configuration used by the branch-and-bound driver.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationOracle {
    pub kind: OracleKind,
    pub box_vertex_cap: usize,
    pub n_starts: usize,
    pub seed: u64,
}

impl SeparationOracle {
    pub fn new(kind: OracleKind) -> Self {
        Self {
            kind,
            box_vertex_cap: BOX_VERTEX_CAP,
            n_starts: DEFAULT_STARTS,
            seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// One task, as the free functions above.
    pub fn separate(&self, task: &SeparationTask<'_>) -> Result<SeparationResult> {
        match self.kind {
            OracleKind::Box => {
                let hull = task.polytope.bounding_box()?;
                box_on_hull(task, &hull, self.box_vertex_cap)
            }
            OracleKind::Exact => oracle_exact(task),
            OracleKind::Lc1 => {
                let start = task.polytope.interior_point()?;
                oracle_linearization_ascent(task, &start)
            }
            OracleKind::Lc2 => oracle_multistart(task, self.n_starts, self.seed),
        }
    }

    /// Separation for every candidate against its approximation on one
    /// polytope, sharing the geometric work (hull LPs, vertices, samples)
    /// across candidates. `node` keys the sampling stream.
    pub fn separate_all(
        &self,
        polytope: &Polytope,
        candidates: &[CandidateFunction],
        approx: &[AffinePiece],
        node: u64,
    ) -> Result<NodeSeparation> {
        let tasks = candidates
            .iter()
            .zip(approx)
            .map(|(c, a)| SeparationTask::new(polytope, c, a));
        let (hull, extremes) = polytope.extremes()?;
        let results = match self.kind {
            OracleKind::Box => {
                let corners = hull.vertices(self.box_vertex_cap)?;
                tasks
                    .map(|t| {
                        let (point, value) = argmax_over(&t, &corners).expect("nonempty corners");
                        Ok(SeparationResult {
                            point,
                            value,
                            certified_upper: true,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            OracleKind::Exact => {
                let verts = polytope.enumerate_vertices()?;
                tasks
                    .map(|t| exact_on_vertices(&t, &verts))
                    .collect::<Result<Vec<_>>>()?
            }
            OracleKind::Lc1 => {
                let start = mean(&extremes);
                tasks
                    .map(|t| oracle_linearization_ascent(&t, &start))
                    .collect::<Result<Vec<_>>>()?
            }
            OracleKind::Lc2 => {
                let starts = sample_interior(polytope, self.n_starts.max(1), self.seed, node)?;
                tasks
                    .map(|t| multistart_from(&t, &starts))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(NodeSeparation {
            results,
            hull,
            extremes,
        })
    }
}

fn mean(points: &[Vec<f64>]) -> Vec<f64> {
    let n = points[0].len();
    let mut c = vec![0.0; n];
    for p in points {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi;
        }
    }
    c.iter_mut().for_each(|v| *v /= points.len() as f64);
    c
}

/// Per-node separation output.
#[derive(Debug, Clone)]
pub struct NodeSeparation {
    pub results: Vec<SeparationResult>,
    /// Circumscribed box of the node polytope.
    pub hull: AxisBox,
    /// LP optimizers realizing the hull faces; all inside the polytope.
    pub extremes: Vec<Vec<f64>>,
}
