//! Reference oracles and generators shared by the integration tests.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use robustmax::functions::{AffinePiece, CandidateFunction, ConvexQuadratic, PiecewiseLinear, RobustObjective};
use robustmax::geometry::{AxisBox, Halfspace, Polytope};
use robustmax::instances::{load_instance, Instance};
use robustmax::lp::{solve_lp, LinearProgram, LpOutcome};

pub fn fixture(name: &str) -> Instance {
    load_instance(format!("{}/fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random PL instance in 2D with `k` candidates of `pieces` pieces:
/// slopes from U[-3,3], intercepts from U[0,20].
pub fn random_pl(seed: u64, k: usize, pieces: usize) -> RobustObjective {
    let mut r = rng(seed);
    let cands = (0..k)
        .map(|_| {
            let ps = (0..pieces)
                .map(|_| AffinePiece::new(vec![r.gen_range(-3.0..=3.0), r.gen_range(-3.0..=3.0)], r.gen_range(0.0..=20.0)))
                .collect();
            CandidateFunction::from(PiecewiseLinear::new(ps).unwrap())
        })
        .collect();
    RobustObjective::new(cands).unwrap()
}

/// Random 2D quadratics `x'QᵀQx + b·x + c` with Q in [-3,3], b, c in [0,20].
pub fn random_quadratics(seed: u64, k: usize) -> RobustObjective {
    let mut r = rng(seed);
    let cands = (0..k)
        .map(|_| {
            let q: Vec<f64> = (0..4).map(|_| r.gen_range(-3.0..=3.0)).collect();
            let b = vec![r.gen_range(0.0..=20.0), r.gen_range(0.0..=20.0)];
            ConvexQuadratic::from_factor(&q, 2, b, r.gen_range(0.0..=20.0)).unwrap().into()
        })
        .collect();
    RobustObjective::new(cands).unwrap()
}

pub fn square(lo: f64, hi: f64) -> Polytope {
    Polytope::from_box(AxisBox::cube(2, lo, hi).unwrap())
}

/// Brute force over every full label: since each candidate is the max of
/// its pieces, `max_x min_k f_k = max over labels of max_x min_k piece_k`.
pub fn exhaustive_label_value(f: &RobustObjective, x: &AxisBox) -> f64 {
    let pls: Vec<&PiecewiseLinear> = f.candidates().iter().map(|c| c.as_piecewise_linear().unwrap()).collect();
    let n = x.dim();
    let mut best = f64::NEG_INFINITY;
    let mut idx = vec![0usize; pls.len()];
    loop {
        let mut c = vec![0.0; n + 1];
        c[n] = 1.0;
        let mut lp = LinearProgram::maximize(c);
        for (v, (lo, hi)) in x.pairs().into_iter().enumerate() {
            lp.set_bounds(v, lo, hi);
        }
        for (k, &i) in idx.iter().enumerate() {
            let p = &pls[k].pieces()[i];
            let mut row: Vec<f64> = p.slope.iter().map(|a| -a).collect();
            row.push(1.0);
            lp.add_le(row, p.intercept);
        }
        if let LpOutcome::Optimal { value, .. } = solve_lp(&lp).unwrap() {
            best = best.max(value);
        }
        // odometer over labels
        let mut k = 0;
        loop {
            if k == idx.len() {
                return best;
            }
            idx[k] += 1;
            if idx[k] < pls[k].pieces().len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Max of `f` over a `(m+1)×(m+1)` grid on a 2D box, with its argmax.
pub fn grid_max(f: impl Fn(&[f64]) -> f64, x: &AxisBox, m: usize) -> (f64, Vec<f64>) {
    let (lo, hi) = (x.lo(), x.hi());
    let mut best = (f64::NEG_INFINITY, vec![]);
    for i in 0..=m {
        for j in 0..=m {
            let p = [
                lo[0] + (hi[0] - lo[0]) * i as f64 / m as f64,
                lo[1] + (hi[1] - lo[1]) * j as f64 / m as f64,
            ];
            let v = f(&p);
            if v > best.0 {
                best = (v, p.to_vec());
            }
        }
    }
    best
}

/// Lipschitz constant of `min_k f_k` on a box: the largest gradient norm
/// of any quadratic candidate, attained at a box corner.
pub fn quadratic_lipschitz(f: &RobustObjective, x: &AxisBox) -> f64 {
    let corners = x.vertices(20).unwrap();
    f.candidates()
        .iter()
        .flat_map(|c| corners.iter().map(move |v| c.subgradient(v).iter().map(|g| g * g).sum::<f64>().sqrt()))
        .fold(0.0, f64::max)
}

/// Rejection samples of `p` drawn from its bounding box.
pub fn rejection_samples(p: &Polytope, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let bb = p.bounding_box().unwrap();
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            bb.lo()
                .iter()
                .zip(bb.hi())
                .map(|(l, h)| if h > l { r.gen_range(*l..=*h) } else { *l })
                .collect::<Vec<f64>>()
        })
        .filter(|x| p.contains(x, 1e-9))
        .collect()
}

/// Checks a recorded trace: every node's U dominates `f` sampled over its
/// polytope, the global U never rises, the global L never falls, and at each
/// snapshot the unbranched nodes cover the domain. Returns the worst
/// `U − sampled max` slack seen.
pub fn check_trace(
    trace: &robustmax::tree::Trace,
    f: &RobustObjective,
    domain: &Polytope,
    seed: u64,
) -> Result<f64, String> {
    use robustmax::oracles::sample_interior;
    let mut worst = f64::INFINITY;
    for node in &trace.nodes {
        let mut pts = rejection_samples(&node.polytope, 400, seed ^ node.id as u64);
        pts.extend(sample_interior(&node.polytope, 100, seed, node.id as u64).map_err(|e| e.to_string())?);
        pts.extend(node.incumbent.clone());
        let sampled = pts.iter().map(|x| f.value(x)).fold(f64::NEG_INFINITY, f64::max);
        let slack = node.upper - sampled;
        worst = worst.min(slack);
        if slack < -1e-6 {
            return Err(format!("node {}: U {} below sampled max {sampled}", node.id, node.upper));
        }
    }
    for w in trace.bounds.windows(2) {
        if w[1].upper > w[0].upper + 1e-9 * w[0].upper.abs().max(1.0) {
            return Err(format!("global U rose at iteration {}: {} -> {}", w[1].iteration, w[0].upper, w[1].upper));
        }
        if w[1].lower < w[0].lower {
            return Err(format!("global L fell at iteration {}", w[1].iteration));
        }
    }
    let probes = rejection_samples(domain, 300, seed.wrapping_add(17));
    for snap in &trace.bounds {
        let frontier: Vec<_> = trace.frontier(snap.iteration).collect();
        for x in &probes {
            if !frontier.iter().any(|n| n.polytope.contains(x, 1e-7)) {
                return Err(format!("iteration {}: {x:?} not covered by the frontier", snap.iteration));
            }
        }
    }
    Ok(worst)
}

/// A random 2D separation task: a box, optionally cut by 1 to 3 halfspaces
/// that keep its center, a quadratic and a plane.
pub struct SeparationCase {
    pub polytope: Polytope,
    pub f: CandidateFunction,
    pub plane: AffinePiece,
}

pub fn separation_case(seed: u64, cut: bool) -> SeparationCase {
    let mut r = rng(seed);
    let lo = [r.gen_range(-5.0..0.0), r.gen_range(-5.0..0.0)];
    let bx = AxisBox::new(lo.to_vec(), vec![lo[0] + r.gen_range(0.5..6.0), lo[1] + r.gen_range(0.5..6.0)]).unwrap();
    let center = bx.center();
    let mut polytope = Polytope::from_box(bx);
    if cut {
        for _ in 0..r.gen_range(1..4) {
            let a = vec![r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0)];
            let off = a[0] * center[0] + a[1] * center[1] + r.gen_range(0.0..1.0);
            polytope = polytope.intersect(Halfspace::new(a, off)).unwrap();
        }
    }
    let q: Vec<f64> = (0..4).map(|_| r.gen_range(-3.0..3.0)).collect();
    let f = ConvexQuadratic::from_factor(&q, 2, vec![r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0)], 1.0).unwrap().into();
    let plane = AffinePiece::new(vec![r.gen_range(-5.0..5.0), r.gen_range(-5.0..5.0)], r.gen_range(-5.0..5.0));
    SeparationCase { polytope, f, plane }
}
