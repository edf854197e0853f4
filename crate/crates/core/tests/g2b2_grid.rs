mod common;

use common::*;
use robustmax::functions::{AffinePiece, CandidateFunction};
use robustmax::g2b2::{branch_g2, node_lp, solve_g2b2, BranchOutcome, G2b2Options, Split};
use robustmax::geometry::AxisBox;
use robustmax::oracles::{OracleKind, SeparationOracle};
use robustmax::tree::SolveStatus;

fn opts(kind: OracleKind, epsilon: f64) -> G2b2Options {
    G2b2Options {
        epsilon,
        oracle: SeparationOracle::new(kind),
        max_iterations: 100_000,
        ..Default::default()
    }
}

#[test]
fn exact_and_box_reach_grid_optimum() {
    let x = AxisBox::cube(2, -10.0, 10.0).unwrap();
    for (i, k) in [2usize, 5, 3, 8].into_iter().cycle().take(12).enumerate() {
        let f = random_quadratics(300 + i as u64, k);
        let (grid, _) = grid_max(|p| f.value(p), &x, 400);
        let slack = quadratic_lipschitz(&f, &x) * (20.0 / 400.0) * std::f64::consts::FRAC_1_SQRT_2;
        for kind in [OracleKind::Exact, OracleKind::Box] {
            let sol = solve_g2b2(&f, &square(-10.0, 10.0), &opts(kind, 1e-3)).unwrap();
            assert_eq!(sol.status, SolveStatus::Converged, "instance {i} {kind}");
            assert!(sol.certified && sol.gap() <= 1e-3 + 1e-9);
            assert!(sol.value >= grid - 1e-3, "instance {i} {kind}: {} < grid {grid}", sol.value);
            assert!(sol.value <= grid + slack, "instance {i} {kind}: {} > grid {grid} + {slack}", sol.value);
            assert!(sol.upper >= grid - 1e-9);
        }
    }
}

#[test]
fn uncertified_oracles_never_claim_a_gap_stop() {
    let f = random_quadratics(77, 3);
    for kind in [OracleKind::Lc1, OracleKind::Lc2] {
        let sol = solve_g2b2(&f, &square(-10.0, 10.0), &G2b2Options { max_iterations: 2000, ..opts(kind, 1e-3) }).unwrap();
        assert!(!sol.certified);
        let exact = solve_g2b2(&f, &square(-10.0, 10.0), &opts(OracleKind::Exact, 1e-3)).unwrap();
        // still a feasible point's value
        assert!(sol.value <= exact.upper + 1e-9);
        assert!((f.value(&sol.point) - sol.value).abs() < 1e-9);
    }
}

#[test]
fn instance2_iteration_two_uses_true_tangent() {
    let inst = fixture("instance2.json");
    let f = inst.objective().unwrap();
    let oracle = SeparationOracle::new(OracleKind::Exact);
    let approx = inst.initial_planes.clone().unwrap();
    let sep = oracle.separate_all(&inst.domain(), f.candidates(), &approx, 0).unwrap();
    assert_eq!(sep.results[1].point, vec![0.0, 0.0]);
    let root = robustmax::g2b2::G2Node {
        id: 0,
        polytope: inst.domain(),
        approx,
        accurate: vec![false, false],
        separation: sep.results,
        upper: 0.0,
        lower: 0.0,
        incumbent: None,
        hull: sep.hull,
        extremes: sep.extremes,
    };
    let BranchOutcome::Children { split, children, .. } = branch_g2(&root, 1, &f, &oracle, 1e-4, 1).unwrap() else {
        panic!("root must branch");
    };
    assert_eq!(split, Split::Tangent(vec![0.0, 0.0]));
    let cut = &children[1].approx[1];
    let want = [-114.03, -48.87, 780.81];
    for (got, w) in cut.slope.iter().chain([&cut.intercept]).zip(want) {
        assert!((got - w).abs() < 1e-9, "cut {cut:?}");
    }
    for x in rejection_samples(&inst.domain(), 1000, 5) {
        assert!(children.iter().any(|c| c.polytope.contains(&x, 1e-9)));
        assert!(cut.value(&x) <= f.candidate(1).value(&x) + 1e-9);
    }
    for c in &children {
        let (_, theta) = node_lp(c, 1e-4).unwrap().unwrap();
        assert!(theta <= 873.65 + 0.01);
    }
}

#[test]
fn affine_candidates_are_exact_at_root() {
    let a: CandidateFunction = AffinePiece::new(vec![2.0, -1.0], 1.0).into();
    let b: CandidateFunction = AffinePiece::new(vec![-1.0, 0.5], 4.0).into();
    let f = robustmax::functions::RobustObjective::new(vec![a, b]).unwrap();
    let sol = solve_g2b2(&f, &square(0.0, 1.0), &opts(OracleKind::Exact, 1e-6)).unwrap();
    let (grid, _) = grid_max(|p| f.value(p), &AxisBox::cube(2, 0.0, 1.0).unwrap(), 1000);
    // the root closes without branching
    assert_eq!(sol.stats.nodes_created, 1);
    assert!((sol.value - grid).abs() < 5e-3);
}
