//! Halfspace-represented polytopes inside an axis-aligned box.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{dot, solve_lp, LinearProgram, LpOutcome, FEAS_TOL};

/// Constraint residual tolerance for membership and emptiness.
pub const MEMBERSHIP_TOL: f64 = FEAS_TOL;
/// Euclidean distance below which two vertices are the same vertex.
pub const VERTEX_DEDUP_TOL: f64 = 1e-6;
/// Default cap for enumerating the 2^n corners of a box.
pub const BOX_VERTEX_CAP: usize = 20;
/// Dimension cap for exact polytope vertex enumeration.
pub const EXACT_VERTEX_CAP: usize = 4;

const ZERO_NORMAL_TOL: f64 = 1e-12;

/// `{x : normal·x ≤ offset}`
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Halfspace {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Halfspace {
    pub fn new(normal: Vec<f64>, offset: f64) -> Self {
        Self { normal, offset }
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    /// `normal·x − offset`; positive means violated.
    pub fn residual(&self, x: &[f64]) -> f64 {
        dot(&self.normal, x) - self.offset
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        self.residual(x) <= tol
    }

    fn is_zero_normal(&self) -> bool {
        self.normal.iter().all(|v| v.abs() <= ZERO_NORMAL_TOL)
    }
}

/// Axis-aligned box `Π [lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl AxisBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension {
                expected: lo.len(),
                got: hi.len(),
            });
        }
        if lo.is_empty() {
            return Err(Error::InvalidInput("box must have dimension ≥ 1".into()));
        }
        for (i, (l, h)) in lo.iter().zip(&hi).enumerate() {
            if !l.is_finite() || !h.is_finite() || l > h {
                return Err(Error::InvalidInput(format!(
                    "box coordinate {i}: invalid interval [{l}, {h}]"
                )));
            }
        }
        Ok(Self { lo, hi })
    }

    /// `[lo, hi]^dim`
    pub fn cube(dim: usize, lo: f64, hi: f64) -> Result<Self> {
        Self::new(vec![lo; dim], vec![hi; dim])
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            pairs.iter().map(|p| p.0).collect(),
            pairs.iter().map(|p| p.1).collect(),
        )
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[f64] {
        &self.lo
    }

    pub fn hi(&self) -> &[f64] {
        &self.hi
    }

    pub fn pairs(&self) -> Vec<(f64, f64)> {
        self.lo.iter().copied().zip(self.hi.iter().copied()).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn diagonal(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| (h - l) * (h - l))
            .sum::<f64>()
            .sqrt()
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (l, h))| *v >= l - tol && *v <= h + tol)
    }

    /// Index of the longest edge (first on ties) and its length.
    pub fn longest_edge(&self) -> (usize, f64) {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| h - l)
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, w)| if w > acc.1 { (i, w) } else { acc })
    }

    /// All 2^dim corners. Corner `j` takes `hi_i` where bit `i` of `j` is set.
    /// A collapsed interval yields duplicate corners.
    pub fn vertices(&self, cap: usize) -> Result<Vec<Vec<f64>>> {
        let n = self.dim();
        if n > cap {
            return Err(Error::Capability {
                what: "box vertex enumeration",
                dim: n,
                cap,
            });
        }
        Ok((0..1usize << n)
            .map(|mask| {
                (0..n)
                    .map(|i| if mask >> i & 1 == 1 { self.hi[i] } else { self.lo[i] })
                    .collect()
            })
            .collect())
    }
}

/// Polytope `{x ∈ box : h·x ≤ offset for every stored halfspace}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Polytope {
    bounds: AxisBox,
    halfspaces: Vec<Halfspace>,
    /// Set when a zero-normal halfspace with negative offset was added.
    #[serde(default)]
    contradictory: bool,
}

impl Polytope {
    pub fn from_box(bounds: AxisBox) -> Self {
        Self {
            bounds,
            halfspaces: Vec::new(),
            contradictory: false,
        }
    }

    pub fn new(bounds: AxisBox, halfspaces: Vec<Halfspace>) -> Result<Self> {
        halfspaces
            .into_iter()
            .try_fold(Self::from_box(bounds), |p, h| p.intersect(h))
    }

    pub fn dim(&self) -> usize {
        self.bounds.dim()
    }

    pub fn bounds(&self) -> &AxisBox {
        &self.bounds
    }

    pub fn halfspaces(&self) -> &[Halfspace] {
        &self.halfspaces
    }

    /// `self ∩ h`. Zero-normal tautologies are dropped; zero-normal
    /// contradictions mark the result empty.
    pub fn intersect(&self, h: Halfspace) -> Result<Polytope> {
        let mut out = self.clone();
        out.push(h)?;
        Ok(out)
    }

    fn push(&mut self, h: Halfspace) -> Result<()> {
        if h.dim() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: h.dim(),
            });
        }
        if h.normal.iter().any(|v| !v.is_finite()) || !h.offset.is_finite() {
            return Err(Error::InvalidInput("non-finite halfspace".into()));
        }
        if h.is_zero_normal() {
            if h.offset < 0.0 {
                self.contradictory = true;
            }
            return Ok(());
        }
        self.halfspaces.push(h);
        Ok(())
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        !self.contradictory
            && self.bounds.contains(x, tol)
            && self.halfspaces.iter().all(|h| h.contains(x, tol))
    }

    /// Largest residual over box and halfspaces (≤ 0 means inside).
    pub fn max_residual(&self, x: &[f64]) -> f64 {
        let b = x
            .iter()
            .zip(self.bounds.lo.iter().zip(&self.bounds.hi))
            .map(|(v, (l, h))| (l - v).max(v - h))
            .fold(f64::NEG_INFINITY, f64::max);
        self.halfspaces
            .iter()
            .map(|h| h.residual(x))
            .fold(b, f64::max)
    }

    /// LP over `(x, extra...)` with the polytope on the leading `dim`
    /// variables. Extra variables are free.
    pub fn linear_program(&self, objective: Vec<f64>) -> LinearProgram {
        let n = self.dim();
        let total = objective.len();
        debug_assert!(total >= n);
        let mut lp = LinearProgram::maximize(objective);
        for h in &self.halfspaces {
            let mut row = h.normal.clone();
            row.resize(total, 0.0);
            lp.add_le(row, h.offset);
        }
        for i in 0..n {
            lp.set_bounds(i, self.bounds.lo[i], self.bounds.hi[i]);
        }
        lp
    }

    /// `max c·x` over the polytope; `None` when empty.
    pub fn maximize_linear(&self, c: &[f64]) -> Result<Option<(Vec<f64>, f64)>> {
        if self.contradictory {
            return Ok(None);
        }
        match solve_lp(&self.linear_program(c.to_vec()))? {
            LpOutcome::Optimal { point, value } => Ok(Some((point, value))),
            LpOutcome::Infeasible => Ok(None),
            // x is box-bounded.
            LpOutcome::Unbounded => unreachable!("box-bounded LP cannot be unbounded"),
        }
    }

    /// One phase-1 LP.
    pub fn is_empty(&self) -> Result<bool> {
        if self.contradictory {
            return Ok(true);
        }
        if self.halfspaces.is_empty() {
            return Ok(false);
        }
        Ok(self.maximize_linear(&vec![0.0; self.dim()])?.is_none())
    }

    /// Per-coordinate LP min/max (2n solves).
    pub fn bounding_box(&self) -> Result<AxisBox> {
        Ok(self.extremes()?.0)
    }

    /// Circumscribed box together with the 2n LP optimizers that realize its
    /// faces (ordered min x_0, max x_0, min x_1, ...). Every returned point
    /// lies in the polytope.
    pub fn extremes(&self) -> Result<(AxisBox, Vec<Vec<f64>>)> {
        let n = self.dim();
        if self.contradictory {
            return Err(Error::EmptyPolytope);
        }
        if self.halfspaces.is_empty() {
            let mut pts = Vec::with_capacity(2 * n);
            let c = self.bounds.center();
            for i in 0..n {
                let mut lo = c.clone();
                lo[i] = self.bounds.lo[i];
                let mut hi = c.clone();
                hi[i] = self.bounds.hi[i];
                pts.push(lo);
                pts.push(hi);
            }
            return Ok((self.bounds.clone(), pts));
        }
        let mut lo = Vec::with_capacity(n);
        let mut hi = Vec::with_capacity(n);
        let mut pts = Vec::with_capacity(2 * n);
        for i in 0..n {
            let mut c = vec![0.0; n];
            c[i] = -1.0;
            let (p, v) = self.maximize_linear(&c)?.ok_or(Error::EmptyPolytope)?;
            lo.push(-v);
            pts.push(p);
            c[i] = 1.0;
            let (p, v) = self.maximize_linear(&c)?.ok_or(Error::EmptyPolytope)?;
            hi.push(v.max(lo[i]));
            pts.push(p);
        }
        Ok((AxisBox { lo, hi }, pts))
    }

    /// Some point inside the polytope: the mean of the 2n extreme points.
    pub fn interior_point(&self) -> Result<Vec<f64>> {
        let (_, pts) = self.extremes()?;
        let n = self.dim();
        let mut c = vec![0.0; n];
        for p in &pts {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += pi / pts.len() as f64;
            }
        }
        Ok(c)
    }

    /// All constraints (halfspaces, then box faces) as halfspaces.
    pub fn all_constraints(&self) -> Vec<Halfspace> {
        let n = self.dim();
        let mut out = self.halfspaces.clone();
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            out.push(Halfspace::new(e.clone(), self.bounds.hi[i]));
            e[i] = -1.0;
            out.push(Halfspace::new(e, -self.bounds.lo[i]));
        }
        out
    }

    /// Exact vertex set by intersecting every `dim`-subset of constraints.
    /// Only for small dimension.
    pub fn enumerate_vertices(&self) -> Result<Vec<Vec<f64>>> {
        let n = self.dim();
        if n > EXACT_VERTEX_CAP {
            return Err(Error::Capability {
                what: "exact vertex enumeration",
                dim: n,
                cap: EXACT_VERTEX_CAP,
            });
        }
        if self.contradictory {
            return Ok(Vec::new());
        }
        let cons = self.all_constraints();
        let mut verts: Vec<Vec<f64>> = Vec::new();
        let mut idx: Vec<usize> = (0..n).collect();
        if cons.len() < n {
            return Ok(verts);
        }
        loop {
            if let Some(x) = solve_square(&cons, &idx) {
                if self.max_residual(&x) <= MEMBERSHIP_TOL
                    && !verts.iter().any(|v| distance(v, &x) <= VERTEX_DEDUP_TOL)
                {
                    verts.push(x);
                }
            }
            if !next_combination(&mut idx, cons.len()) {
                break;
            }
        }
        Ok(verts)
    }
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn next_combination(idx: &mut [usize], m: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > 0 {
        i -= 1;
        if idx[i] < m - k + i {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// Solves `normal_r·x = offset_r` for the selected rows by Gaussian
/// elimination with partial pivoting; `None` if (nearly) singular.
fn solve_square(cons: &[Halfspace], rows: &[usize]) -> Option<Vec<f64>> {
    let n = rows.len();
    let mut a: Vec<Vec<f64>> = rows
        .iter()
        .map(|&r| {
            let h = &cons[r];
            let scale = h.normal.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let mut row: Vec<f64> = h.normal.iter().map(|v| v / scale).collect();
            row.push(h.offset / scale);
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, piv);
        for r in 0..n {
            if r != col {
                let f = a[r][col] / a[col][col];
                if f != 0.0 {
                    for c in col..=n {
                        a[r][c] -= f * a[col][c];
                    }
                }
            }
        }
    }
    Some((0..n).map(|i| a[i][n] / a[i][i]).collect())
}
