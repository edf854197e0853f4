//! Random-walk warm start: a cheap feasible search whose best value seeds
//! the global lower bound of either solver.

use std::time::{Duration, Instant};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::functions::RobustObjective;
use crate::geometry::{Polytope, MEMBERSHIP_TOL};
use crate::rng::{stream_indexed, Stream};

/// Seconds of walking per dimension when a time budget is derived from `n`.
pub const SECONDS_PER_DIM: f64 = 180.0;
/// Proposals per dimension used by the CLI when no budget is given.
pub const DEFAULT_PROPOSALS_PER_DIM: u64 = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WalkBudget {
    /// Total proposals over all restarts, rejected ones included.
    Proposals(u64),
    Time(Duration),
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkConfig {
    pub budget: WalkBudget,
    pub restarts: usize,
    /// Maximum step as a fraction of the box diagonal.
    pub step_scale: f64,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            budget: WalkBudget::Proposals(0),
            restarts: 10,
            step_scale: 0.05,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn proposals(n: u64, seed: u64) -> Self {
        Self {
            budget: WalkBudget::Proposals(n),
            seed,
            ..Self::default()
        }
    }

    /// Wall-clock budget proportional to the dimension.
    pub fn timed_for_dim(dim: usize, seed: u64) -> Self {
        Self {
            budget: WalkBudget::Time(Duration::from_secs_f64(SECONDS_PER_DIM * dim as f64)),
            seed,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WalkResult {
    pub value: f64,
    pub point: Vec<f64>,
    pub proposals: u64,
    pub accepted: u64,
    pub elapsed: Duration,
}

/// Start point: the box center if it lies in `x`, else an interior point.
pub fn initial_point(x: &Polytope) -> Result<Vec<f64>> {
    let c = x.bounds().center();
    if x.contains(&c, MEMBERSHIP_TOL) {
        Ok(c)
    } else {
        x.interior_point()
    }
}

/// Unit vector uniform on the sphere in `dim` dimensions.
fn direction<R: Rng>(rng: &mut R, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|a| a / norm).collect();
        }
    }
}

pub fn random_walk(f: &RobustObjective, x: &Polytope, cfg: &WalkConfig) -> Result<WalkResult> {
    if f.dim() != x.dim() {
        return Err(Error::Dimension {
            expected: x.dim(),
            got: f.dim(),
        });
    }
    if cfg.restarts == 0 {
        return Err(Error::InvalidInput("restarts must be at least 1".into()));
    }
    if x.is_empty()? {
        return Err(Error::EmptyPolytope);
    }
    let start = Instant::now();
    let x0 = initial_point(x)?;
    let max_step = cfg.step_scale * x.bounds().diagonal();
    let restarts = cfg.restarts as u64;

    let mut best = (f.value(&x0), x0.clone());
    let mut proposals = 0;
    let mut accepted = 0;
    for r in 0..restarts {
        let mut rng = stream_indexed(cfg.seed, Stream::WarmStart, r);
        let (quota, deadline) = match cfg.budget {
            WalkBudget::Proposals(b) => (b / restarts + u64::from(r < b % restarts), None),
            WalkBudget::Time(t) => (u64::MAX, Some(start + t.mul_f64((r + 1) as f64 / restarts as f64))),
        };
        let mut cur = x0.clone();
        let mut used = 0;
        while used < quota && deadline.is_none_or(|d| Instant::now() < d) {
            used += 1;
            let u = direction(&mut rng, cur.len());
            // (0, max_step]: 1 - U[0,1) never hits zero.
            let step = max_step * (1.0 - rng.gen::<f64>());
            let cand: Vec<f64> = cur.iter().zip(&u).map(|(c, d)| c + step * d).collect();
            if !x.contains(&cand, MEMBERSHIP_TOL) {
                continue;
            }
            accepted += 1;
            let v = f.value(&cand);
            if v > best.0 {
                best = (v, cand.clone());
            }
            cur = cand;
        }
        proposals += used;
    }
    Ok(WalkResult {
        value: best.0,
        point: best.1,
        proposals,
        accepted,
        elapsed: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functions::{AffinePiece, CandidateFunction};
    use crate::geometry::{AxisBox, Halfspace};

    fn tilted() -> RobustObjective {
        let a: CandidateFunction = AffinePiece::new(vec![1.0, 0.3], 0.0).into();
        let b: CandidateFunction = AffinePiece::new(vec![-0.2, 1.0], 1.0).into();
        RobustObjective::new(vec![a, b]).unwrap()
    }

    fn square() -> Polytope {
        Polytope::from_box(AxisBox::cube(2, -1.0, 1.0).unwrap())
    }

    #[test]
    fn zero_budget_returns_start_value() {
        let r = random_walk(&tilted(), &square(), &WalkConfig::proposals(0, 1)).unwrap();
        assert_eq!(r.point, vec![0.0, 0.0]);
        assert_eq!(r.value, tilted().value(&[0.0, 0.0]));
        assert_eq!(r.proposals, 0);
    }

    #[test]
    fn constant_objective() {
        let c: CandidateFunction = AffinePiece::new(vec![0.0, 0.0], 4.5).into();
        let f = RobustObjective::new(vec![c]).unwrap();
        let r = random_walk(&f, &square(), &WalkConfig::proposals(500, 3)).unwrap();
        assert_eq!(r.value, 4.5);
    }

    #[test]
    fn quota_split_is_exact() {
        let r = random_walk(&tilted(), &square(), &WalkConfig::proposals(1234, 3)).unwrap();
        assert_eq!(r.proposals, 1234);
        assert!(r.accepted <= r.proposals);
    }

    #[test]
    fn best_point_is_feasible_and_deterministic() {
        let p = square()
            .intersect(Halfspace::new(vec![1.0, 1.0], 0.5))
            .unwrap();
        let cfg = WalkConfig::proposals(2000, 9);
        let a = random_walk(&tilted(), &p, &cfg).unwrap();
        let b = random_walk(&tilted(), &p, &cfg).unwrap();
        assert_eq!(a, WalkResult { elapsed: a.elapsed, ..b });
        assert!(p.contains(&a.point, MEMBERSHIP_TOL));
    }

    #[test]
    fn start_moves_inside_when_center_is_cut_off() {
        let p = square()
            .intersect(Halfspace::new(vec![-1.0, 0.0], -0.5))
            .unwrap();
        let x0 = initial_point(&p).unwrap();
        assert!(p.contains(&x0, MEMBERSHIP_TOL));
    }

    #[test]
    fn directions_are_unit() {
        let mut rng = stream_indexed(0, Stream::WarmStart, 0);
        for dim in 1..6 {
            let u = direction(&mut rng, dim);
            let n: f64 = u.iter().map(|a| a * a).sum();
            assert!((n - 1.0).abs() < 1e-12);
        }
    }
}
