//! Convex candidate functions and the robust objective `f(x) = min_k f_k(x)`.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::geometry::{Halfspace, Polytope};
use crate::lp::dot;

/// Most negative eigenvalue accepted for a quadratic's matrix.
pub const PSD_TOL: f64 = 1e-8;

/// `slope·x + intercept`
#[derive(Debug, Clone, PartialEq)]
pub struct AffinePiece {
    pub slope: Vec<f64>,
    pub intercept: f64,
}

impl AffinePiece {
    pub fn new(slope: Vec<f64>, intercept: f64) -> Self {
        Self { slope, intercept }
    }

    pub fn dim(&self) -> usize {
        self.slope.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        dot(&self.slope, x) + self.intercept
    }

    /// Tangent plane `s·(y − x) + fx`.
    pub fn tangent(x: &[f64], fx: f64, s: Vec<f64>) -> Self {
        let intercept = fx - dot(&s, x);
        Self { slope: s, intercept }
    }

    /// Halfspace `{x : self(x) ≥ other(x)}`.
    pub fn dominates(&self, other: &AffinePiece) -> Halfspace {
        let normal = other
            .slope
            .iter()
            .zip(&self.slope)
            .map(|(o, s)| o - s)
            .collect();
        Halfspace::new(normal, self.intercept - other.intercept)
    }
}

/// `max_i (a_i·x + b_i)`
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    pieces: Vec<AffinePiece>,
}

impl PiecewiseLinear {
    pub fn new(pieces: Vec<AffinePiece>) -> Result<Self> {
        let Some(first) = pieces.first() else {
            return Err(Error::InvalidInput("piecewise-linear function needs ≥ 1 piece".into()));
        };
        let n = first.dim();
        for p in &pieces {
            if p.dim() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: p.dim(),
                });
            }
            if !p.intercept.is_finite() || p.slope.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput("non-finite piece coefficient".into()));
            }
        }
        Ok(Self { pieces })
    }

    pub fn pieces(&self) -> &[AffinePiece] {
        &self.pieces
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].dim()
    }

    /// Index of the first piece attaining the max.
    pub fn active_piece(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut best_val = self.pieces[0].value(x);
        for (i, p) in self.pieces.iter().enumerate().skip(1) {
            let v = p.value(x);
            if v > best_val {
                best = i;
                best_val = v;
            }
        }
        best
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|p| p.value(x))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `x'Mx + b·x + c` with `M` symmetric positive semidefinite.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexQuadratic {
    dim: usize,
    /// Row-major, symmetric.
    m: Vec<f64>,
    b: Vec<f64>,
    c: f64,
}

impl ConvexQuadratic {
    /// `m` is row-major `n×n`; it is symmetrized and checked for PSD.
    pub fn new(m: Vec<f64>, b: Vec<f64>, c: f64) -> Result<Self> {
        let n = b.len();
        if n == 0 || m.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: m.len(),
            });
        }
        if !c.is_finite() || m.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("non-finite quadratic coefficient".into()));
        }
        let mut sym = m;
        for i in 0..n {
            for j in i + 1..n {
                let avg = 0.5 * (sym[i * n + j] + sym[j * n + i]);
                sym[i * n + j] = avg;
                sym[j * n + i] = avg;
            }
        }
        let q = Self { dim: n, m: sym, b, c };
        let min_eig = q.min_eigenvalue();
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidInput(format!(
                "quadratic matrix is not positive semidefinite (min eigenvalue {min_eig:e})"
            )));
        }
        Ok(q)
    }

    /// Builds `x'QᵀQx + b·x + c` from a row-major `rows×n` factor `Q`.
    pub fn from_factor(q: &[f64], rows: usize, b: Vec<f64>, c: f64) -> Result<Self> {
        let n = b.len();
        if q.len() != rows * n {
            return Err(Error::Dimension {
                expected: rows * n,
                got: q.len(),
            });
        }
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                m[i * n + j] = (0..rows).map(|r| q[r * n + i] * q[r * n + j]).sum();
            }
        }
        Self::new(m, b, c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &[f64] {
        &self.m
    }

    pub fn linear(&self) -> &[f64] {
        &self.b
    }

    pub fn constant(&self) -> f64 {
        self.c
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let mat = DMatrix::from_row_slice(self.dim, self.dim, &self.m);
        SymmetricEigen::new(mat).eigenvalues.min()
    }

    fn mx(&self, x: &[f64]) -> Vec<f64> {
        self.m.chunks(self.dim).map(|row| dot(row, x)).collect()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        dot(x, &self.mx(x)) + dot(&self.b, x) + self.c
    }

    /// `2Mx + b`
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        self.mx(x)
            .into_iter()
            .zip(&self.b)
            .map(|(v, b)| 2.0 * v + b)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum CandidateFunction {
    PiecewiseLinear(PiecewiseLinear),
    Quadratic(ConvexQuadratic),
}

impl CandidateFunction {
    pub fn dim(&self) -> usize {
        match self {
            CandidateFunction::PiecewiseLinear(p) => p.dim(),
            CandidateFunction::Quadratic(q) => q.dim(),
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            CandidateFunction::PiecewiseLinear(p) => p.value(x),
            CandidateFunction::Quadratic(q) => q.value(x),
        }
    }

    /// Gradient of the first maximizing piece (PL) or `2Mx + b` (quadratic).
    pub fn subgradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            CandidateFunction::PiecewiseLinear(p) => p.pieces[p.active_piece(x)].slope.clone(),
            CandidateFunction::Quadratic(q) => q.gradient(x),
        }
    }

    /// Tangent plane at `x`; a global underestimator by convexity.
    pub fn tangent(&self, x: &[f64]) -> AffinePiece {
        AffinePiece::tangent(x, self.value(x), self.subgradient(x))
    }

    pub fn as_piecewise_linear(&self) -> Option<&PiecewiseLinear> {
        match self {
            CandidateFunction::PiecewiseLinear(p) => Some(p),
            CandidateFunction::Quadratic(_) => None,
        }
    }

    /// Convex and affine: a PL function with one piece.
    pub fn as_affine(&self) -> Option<&AffinePiece> {
        match self {
            CandidateFunction::PiecewiseLinear(p) if p.pieces.len() == 1 => Some(&p.pieces[0]),
            _ => None,
        }
    }
}

impl From<PiecewiseLinear> for CandidateFunction {
    fn from(p: PiecewiseLinear) -> Self {
        CandidateFunction::PiecewiseLinear(p)
    }
}

impl From<ConvexQuadratic> for CandidateFunction {
    fn from(q: ConvexQuadratic) -> Self {
        CandidateFunction::Quadratic(q)
    }
}

impl From<AffinePiece> for CandidateFunction {
    fn from(a: AffinePiece) -> Self {
        CandidateFunction::PiecewiseLinear(PiecewiseLinear { pieces: vec![a] })
    }
}

/// `f(x) = min_k f_k(x)` over K ≥ 1 candidates of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct RobustObjective {
    candidates: Vec<CandidateFunction>,
}

impl RobustObjective {
    pub fn new(candidates: Vec<CandidateFunction>) -> Result<Self> {
        let Some(first) = candidates.first() else {
            return Err(Error::InvalidInput("robust objective needs ≥ 1 candidate".into()));
        };
        let n = first.dim();
        if let Some(bad) = candidates.iter().find(|c| c.dim() != n) {
            return Err(Error::Dimension {
                expected: n,
                got: bad.dim(),
            });
        }
        Ok(Self { candidates })
    }

    pub fn dim(&self) -> usize {
        self.candidates[0].dim()
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn candidates(&self) -> &[CandidateFunction] {
        &self.candidates
    }

    pub fn candidate(&self, k: usize) -> &CandidateFunction {
        &self.candidates[k]
    }

    /// `(min_k f_k(x), first minimizing k)`
    pub fn robust_value(&self, x: &[f64]) -> (f64, usize) {
        let mut best = (self.candidates[0].value(x), 0);
        for (k, c) in self.candidates.iter().enumerate().skip(1) {
            let v = c.value(x);
            if v < best.0 {
                best = (v, k);
            }
        }
        best
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.robust_value(x).0
    }

    pub fn all_piecewise_linear(&self) -> bool {
        self.candidates
            .iter()
            .all(|c| c.as_piecewise_linear().is_some())
    }
}

/// Region of `region` where piece `i` attains the max of `f`.
pub fn dominance_region(f: &PiecewiseLinear, i: usize, region: &Polytope) -> Result<Polytope> {
    if i >= f.pieces.len() {
        return Err(Error::InvalidInput(format!(
            "piece index {i} out of range ({} pieces)",
            f.pieces.len()
        )));
    }
    let own = &f.pieces[i];
    f.pieces
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .try_fold(region.clone(), |p, (_, other)| p.intersect(own.dominates(other)))
}
