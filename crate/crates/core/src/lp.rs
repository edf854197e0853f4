//! Dense two-phase primal simplex.
//!
//! Problems solved here are small (a handful of variables, tens of rows), so
//! the solver works on a full tableau and favours determinism over speed.
//! Every node bound, emptiness test, bounding box and ascent step in the
//! crate goes through [`solve_lp`].

use thiserror::Error;

/// Primal feasibility tolerance on constraint residuals.
pub const FEAS_TOL: f64 = 1e-7;
/// Reduced-cost tolerance for declaring optimality.
pub const OPT_TOL: f64 = 1e-9;
/// Smallest admissible pivot magnitude.
const PIVOT_TOL: f64 = 1e-9;
/// Hard cap on simplex pivots per solve.
pub const MAX_PIVOTS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("row {row} has length {got}, expected {expected}")]
    DimensionMismatch {
        row: usize,
        expected: usize,
        got: usize,
    },
    #[error("variable {var} has lower bound {lo} above upper bound {hi}")]
    InvertedBounds { var: usize, lo: f64, hi: f64 },
    #[error("non-finite coefficient in linear program")]
    NonFinite,
    #[error("simplex exceeded {0} pivots")]
    IterationLimit(usize),
    #[error("returned point violates constraints by {0:e}")]
    NumericalFailure(f64),
}

/// Entering-variable rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PivotRule {
    /// Smallest-index entering and leaving variables; never cycles.
    #[default]
    Bland,
    /// Largest reduced cost, falling back to Bland after a run of degenerate pivots.
    Dantzig,
}

/// `maximize c·y` subject to `row·y ≤ offset` and per-variable bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    rows: Vec<(Vec<f64>, f64)>,
    bounds: Vec<(f64, f64)>,
}

impl LinearProgram {
    /// New program over `objective.len()` free variables.
    pub fn maximize(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            rows: Vec::new(),
            bounds: vec![(f64::NEG_INFINITY, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn rows(&self) -> &[(Vec<f64>, f64)] {
        &self.rows
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }

    /// Adds `row·y ≤ offset`.
    pub fn add_le(&mut self, row: Vec<f64>, offset: f64) -> &mut Self {
        self.rows.push((row, offset));
        self
    }

    /// Sets `lo ≤ y_var ≤ hi`; infinite values leave that side open.
    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) -> &mut Self {
        self.bounds[var] = (lo, hi);
        self
    }

    pub fn with_le(mut self, row: Vec<f64>, offset: f64) -> Self {
        self.add_le(row, offset);
        self
    }

    pub fn with_bounds(mut self, var: usize, lo: f64, hi: f64) -> Self {
        self.set_bounds(var, lo, hi);
        self
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.objective.iter().any(|v| !v.is_finite()) {
            return Err(LpError::NonFinite);
        }
        for (i, (row, off)) in self.rows.iter().enumerate() {
            if row.len() != n {
                return Err(LpError::DimensionMismatch {
                    row: i,
                    expected: n,
                    got: row.len(),
                });
            }
            if !off.is_finite() || row.iter().any(|v| !v.is_finite()) {
                return Err(LpError::NonFinite);
            }
        }
        for (var, &(lo, hi)) in self.bounds.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo == f64::INFINITY || hi == f64::NEG_INFINITY {
                return Err(LpError::NonFinite);
            }
            if lo > hi {
                return Err(LpError::InvertedBounds { var, lo, hi });
            }
        }
        Ok(())
    }

    /// Largest violation of any row or bound at `y`.
    pub fn max_violation(&self, y: &[f64]) -> f64 {
        let rows = self
            .rows
            .iter()
            .map(|(row, off)| dot(row, y) - off)
            .fold(0.0_f64, f64::max);
        let bounds = self
            .bounds
            .iter()
            .zip(y)
            .map(|(&(lo, hi), &v)| (lo - v).max(v - hi))
            .fold(0.0_f64, f64::max);
        rows.max(bounds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { point: Vec<f64>, value: f64 },
    Infeasible,
    Unbounded,
}

impl LpOutcome {
    pub fn is_optimal(&self) -> bool {
        matches!(self, LpOutcome::Optimal { .. })
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            LpOutcome::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }

    pub fn into_point(self) -> Option<Vec<f64>> {
        match self {
            LpOutcome::Optimal { point, .. } => Some(point),
            _ => None,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solves with the default (Bland) pivot rule.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpOutcome, LpError> {
    solve_lp_with(lp, PivotRule::Bland)
}

pub fn solve_lp_with(lp: &LinearProgram, rule: PivotRule) -> Result<LpOutcome, LpError> {
    lp.validate()?;
    let std = StandardForm::build(lp);
    let mut tab = Tableau::new(&std.a, &std.b, std.c.len());

    let mut pivots = 0usize;
    if tab.n_art > 0 {
        // Phase 1: maximize -(sum of artificials).
        let mut cost = vec![0.0; tab.ncols];
        for c in tab.art_start..tab.ncols {
            cost[c] = -1.0;
        }
        tab.set_objective(&cost);
        match tab.run(tab.ncols, rule, &mut pivots)? {
            Phase::Optimal => {}
            // Bounded below by zero, cannot happen.
            Phase::Unbounded => unreachable!("phase-1 objective is bounded"),
        }
        if -tab.objective_value() > FEAS_TOL {
            return Ok(LpOutcome::Infeasible);
        }
        tab.drive_out_artificials();
    }

    let mut cost = vec![0.0; tab.ncols];
    cost[..std.c.len()].copy_from_slice(&std.c);
    tab.set_objective(&cost);
    let limit = tab.art_start;
    match tab.run(limit, rule, &mut pivots)? {
        Phase::Unbounded => return Ok(LpOutcome::Unbounded),
        Phase::Optimal => {}
    }

    let z = tab.primal(std.c.len());
    let point = std.recover(&z);
    let violation = lp.max_violation(&point);
    if violation > FEAS_TOL * 10.0 {
        return Err(LpError::NumericalFailure(violation));
    }
    let value = dot(&lp.objective, &point);
    Ok(LpOutcome::Optimal { point, value })
}

/// How an original variable maps onto nonnegative standard-form columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// y = lo + z
    Shifted { col: usize, lo: f64 },
    /// y = hi - z
    Mirrored { col: usize, hi: f64 },
    /// y = z⁺ - z⁻
    Split { pos: usize, neg: usize },
}

struct StandardForm {
    a: Vec<Vec<f64>>,
    b: Vec<f64>,
    c: Vec<f64>,
    maps: Vec<VarMap>,
}

impl StandardForm {
    fn build(lp: &LinearProgram) -> Self {
        let mut maps = Vec::with_capacity(lp.num_vars());
        let mut ncols = 0;
        let mut upper_rows = Vec::new();
        for (j, &(lo, hi)) in lp.bounds.iter().enumerate() {
            if lo.is_finite() {
                maps.push(VarMap::Shifted { col: ncols, lo });
                if hi.is_finite() {
                    upper_rows.push((ncols, hi - lo));
                }
                ncols += 1;
            } else if hi.is_finite() {
                maps.push(VarMap::Mirrored { col: ncols, hi });
                ncols += 1;
            } else {
                maps.push(VarMap::Split {
                    pos: ncols,
                    neg: ncols + 1,
                });
                ncols += 2;
            }
            debug_assert_eq!(maps.len(), j + 1);
        }

        let mut c = vec![0.0; ncols];
        for (j, m) in maps.iter().enumerate() {
            let cj = lp.objective[j];
            match *m {
                VarMap::Shifted { col, .. } => c[col] += cj,
                VarMap::Mirrored { col, .. } => c[col] -= cj,
                VarMap::Split { pos, neg } => {
                    c[pos] += cj;
                    c[neg] -= cj;
                }
            }
        }

        let mut a = Vec::with_capacity(lp.rows.len() + upper_rows.len());
        let mut b = Vec::with_capacity(a.capacity());
        for (row, off) in &lp.rows {
            let mut r = vec![0.0; ncols];
            let mut rhs = *off;
            for (j, m) in maps.iter().enumerate() {
                let aj = row[j];
                if aj == 0.0 {
                    continue;
                }
                match *m {
                    VarMap::Shifted { col, lo } => {
                        r[col] += aj;
                        rhs -= aj * lo;
                    }
                    VarMap::Mirrored { col, hi } => {
                        r[col] -= aj;
                        rhs -= aj * hi;
                    }
                    VarMap::Split { pos, neg } => {
                        r[pos] += aj;
                        r[neg] -= aj;
                    }
                }
            }
            a.push(r);
            b.push(rhs);
        }
        for (col, width) in upper_rows {
            let mut r = vec![0.0; ncols];
            r[col] = 1.0;
            a.push(r);
            b.push(width);
        }
        Self { a, b, c, maps }
    }

    fn recover(&self, z: &[f64]) -> Vec<f64> {
        self.maps
            .iter()
            .map(|m| match *m {
                VarMap::Shifted { col, lo } => lo + z[col],
                VarMap::Mirrored { col, hi } => hi - z[col],
                VarMap::Split { pos, neg } => z[pos] - z[neg],
            })
            .collect()
    }
}

enum Phase {
    Optimal,
    Unbounded,
}

/// Row-major tableau `[A | I | art | rhs]` plus a reduced-cost row.
struct Tableau {
    m: usize,
    ncols: usize,
    art_start: usize,
    n_art: usize,
    /// m rows of width ncols + 1; last entry is the rhs.
    t: Vec<f64>,
    /// Reduced costs (ncols) and minus the objective value in the last slot.
    obj: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn new(a: &[Vec<f64>], b: &[f64], nstruct: usize) -> Self {
        let m = a.len();
        let n_art = b.iter().filter(|&&v| v < 0.0).count();
        let art_start = nstruct + m;
        let ncols = art_start + n_art;
        let width = ncols + 1;
        let mut t = vec![0.0; m * width];
        let mut basis = Vec::with_capacity(m);
        let mut next_art = art_start;
        for i in 0..m {
            let row = &mut t[i * width..(i + 1) * width];
            let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
            for (j, v) in a[i].iter().enumerate() {
                row[j] = sign * v;
            }
            row[nstruct + i] = sign;
            row[ncols] = sign * b[i];
            if sign < 0.0 {
                row[next_art] = 1.0;
                basis.push(next_art);
                next_art += 1;
            } else {
                basis.push(nstruct + i);
            }
        }
        Self {
            m,
            ncols,
            art_start,
            n_art,
            t,
            obj: vec![0.0; ncols + 1],
            basis,
        }
    }

    fn width(&self) -> usize {
        self.ncols + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width() + j]
    }

    fn rhs(&self, i: usize) -> f64 {
        self.at(i, self.ncols)
    }

    /// Loads `cost` and prices out the current basis.
    fn set_objective(&mut self, cost: &[f64]) {
        self.obj[..self.ncols].copy_from_slice(cost);
        self.obj[self.ncols] = 0.0;
        let w = self.width();
        for i in 0..self.m {
            let cb = self.obj[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * w..(i + 1) * w];
                for (o, r) in self.obj.iter_mut().zip(row) {
                    *o -= cb * r;
                }
            }
        }
    }

    fn objective_value(&self) -> f64 {
        -self.obj[self.ncols]
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.width();
        let p = self.t[r * w + c];
        for v in &mut self.t[r * w..(r + 1) * w] {
            *v /= p;
        }
        self.t[r * w + c] = 1.0;
        let (before, rest) = self.t.split_at_mut(r * w);
        let (prow, after) = rest.split_at_mut(w);
        for row in before.chunks_mut(w).chain(after.chunks_mut(w)) {
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(prow.iter()) {
                    *v -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = self.obj[c];
        if f != 0.0 {
            for (v, pv) in self.obj.iter_mut().zip(prow.iter()) {
                *v -= f * pv;
            }
            self.obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    fn entering(&self, limit: usize, rule: PivotRule, bland: bool) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..limit {
            let d = self.obj[j];
            if d > OPT_TOL {
                if bland || rule == PivotRule::Bland {
                    return Some(j);
                }
                if best.is_none_or(|(_, bd)| d > bd) {
                    best = Some((j, d));
                }
            }
        }
        best.map(|(j, _)| j)
    }

    fn leaving(&self, c: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for i in 0..self.m {
            let a = self.at(i, c);
            if a > PIVOT_TOL {
                let ratio = self.rhs(i).max(0.0) / a;
                best = match best {
                    None => Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                        if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                            Some((i, ratio))
                        } else {
                            Some((bi, br))
                        }
                    }
                };
            }
        }
        best.map(|(i, _)| i)
    }

    fn run(&mut self, limit: usize, rule: PivotRule, pivots: &mut usize) -> Result<Phase, LpError> {
        let mut degenerate_run = 0usize;
        loop {
            let bland = degenerate_run > 50;
            let Some(c) = self.entering(limit, rule, bland) else {
                return Ok(Phase::Optimal);
            };
            let Some(r) = self.leaving(c) else {
                return Ok(Phase::Unbounded);
            };
            if self.rhs(r).abs() <= FEAS_TOL * 1e-3 {
                degenerate_run += 1;
            } else {
                degenerate_run = 0;
            }
            self.pivot(r, c);
            *pivots += 1;
            if *pivots >= MAX_PIVOTS {
                return Err(LpError::IterationLimit(MAX_PIVOTS));
            }
        }
    }

    /// After phase 1, replaces basic artificials by structural/slack columns.
    /// Rows where that is impossible are redundant and stay pinned at zero.
    fn drive_out_artificials(&mut self) {
        for i in 0..self.m {
            if self.basis[i] < self.art_start {
                continue;
            }
            let col = (0..self.art_start)
                .filter(|&j| self.at(i, j).abs() > PIVOT_TOL)
                .max_by(|&a, &b| self.at(i, a).abs().total_cmp(&self.at(i, b).abs()));
            if let Some(j) = col {
                self.pivot(i, j);
            }
        }
    }

    fn primal(&self, nstruct: usize) -> Vec<f64> {
        let mut z = vec![0.0; nstruct];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < nstruct {
                z[b] = self.rhs(i).max(0.0);
            }
        }
        z
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn optimal(lp: &LinearProgram) -> (Vec<f64>, f64) {
        match solve_lp(lp).unwrap() {
            LpOutcome::Optimal { point, value } => (point, value),
            other => panic!("expected optimal, got {other:?}"),
        }
    }

    #[test]
    fn free_variable_capped_above() {
        let lp = LinearProgram::maximize(vec![1.0]).with_le(vec![1.0], 5.0);
        let (x, v) = optimal(&lp);
        assert!((v - 5.0).abs() < 1e-12);
        assert!((x[0] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let lp = LinearProgram::maximize(vec![1.0])
            .with_le(vec![1.0], 0.0)
            .with_le(vec![-1.0], -1.0);
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let lp = LinearProgram::maximize(vec![1.0, 1.0]).with_le(vec![1.0, -1.0], 1.0);
        assert_eq!(solve_lp(&lp).unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn bounded_variables_only() {
        let lp = LinearProgram::maximize(vec![2.0, -1.0])
            .with_bounds(0, -3.0, 4.0)
            .with_bounds(1, -2.0, f64::INFINITY);
        let (x, v) = optimal(&lp);
        assert_eq!(x, vec![4.0, -2.0]);
        assert!((v - 10.0).abs() < 1e-12);
    }

    #[test]
    fn mirrored_upper_only_bound() {
        let lp = LinearProgram::maximize(vec![1.0]).with_bounds(0, f64::NEG_INFINITY, -2.5);
        let (x, _) = optimal(&lp);
        assert_eq!(x, vec![-2.5]);
    }

    #[test]
    fn negative_rhs_needs_phase_one() {
        // x + y >= 2, x <= 3, y <= 3, maximize -x - 2y  → (2, 0)
        let lp = LinearProgram::maximize(vec![-1.0, -2.0])
            .with_le(vec![-1.0, -1.0], -2.0)
            .with_bounds(0, 0.0, 3.0)
            .with_bounds(1, 0.0, 3.0);
        let (x, v) = optimal(&lp);
        assert!((x[0] - 2.0).abs() < 1e-9 && x[1].abs() < 1e-9);
        assert!((v + 2.0).abs() < 1e-9);
    }

    #[test]
    fn redundant_equal_rows() {
        // x + y = 1 written twice as pairs of inequalities
        let lp = LinearProgram::maximize(vec![1.0, 0.0])
            .with_le(vec![1.0, 1.0], 1.0)
            .with_le(vec![-1.0, -1.0], -1.0)
            .with_le(vec![1.0, 1.0], 1.0)
            .with_le(vec![-1.0, -1.0], -1.0)
            .with_bounds(0, 0.0, f64::INFINITY)
            .with_bounds(1, 0.0, f64::INFINITY);
        let (x, v) = optimal(&lp);
        assert!((v - 1.0).abs() < 1e-9);
        assert!((x[0] + x[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let lp = LinearProgram::maximize(vec![1.0, 1.0]).with_le(vec![1.0], 1.0);
        assert!(matches!(
            solve_lp(&lp),
            Err(LpError::DimensionMismatch { row: 0, .. })
        ));
    }

    #[test]
    fn inverted_bounds_rejected() {
        let lp = LinearProgram::maximize(vec![1.0]).with_bounds(0, 1.0, 0.0);
        assert!(matches!(solve_lp(&lp), Err(LpError::InvertedBounds { .. })));
    }

    #[test]
    fn dantzig_agrees_with_bland() {
        let lp = LinearProgram::maximize(vec![3.0, 2.0, -1.0])
            .with_le(vec![1.0, 1.0, 1.0], 4.0)
            .with_le(vec![1.0, 3.0, 0.0], 6.0)
            .with_le(vec![-1.0, 0.0, 2.0], 1.0)
            .with_bounds(0, 0.0, 3.0)
            .with_bounds(1, 0.0, f64::INFINITY)
            .with_bounds(2, -1.0, f64::INFINITY);
        let a = solve_lp_with(&lp, PivotRule::Bland).unwrap().value().unwrap();
        let b = solve_lp_with(&lp, PivotRule::Dantzig).unwrap().value().unwrap();
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn repeated_solves_are_bitwise_identical() {
        let lp = LinearProgram::maximize(vec![0.3, -0.7, 1.1])
            .with_le(vec![1.0, 2.0, 0.5], 3.0)
            .with_le(vec![-0.2, 1.0, 1.0], 2.0)
            .with_bounds(0, -1.0, 1.0)
            .with_bounds(1, -1.0, 1.0)
            .with_bounds(2, -1.0, 1.0);
        assert_eq!(solve_lp(&lp).unwrap(), solve_lp(&lp).unwrap());
    }
}
