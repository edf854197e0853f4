mod common;

use common::*;
use proptest::prelude::*;
use robustmax::oracles::{oracle_box, oracle_exact, oracle_multistart, SeparationTask};

#[test]
fn oracle_ordering_on_random_tasks() {
    for seed in 0..100 {
        let c = separation_case(seed, true);
        let task = SeparationTask::new(&c.polytope, &c.f, &c.plane);
        let bx = oracle_box(&task).unwrap().value;
        let exact = oracle_exact(&task).unwrap().value;
        let multi = oracle_multistart(&task, 100, seed).unwrap().value;
        let single = oracle_multistart(&task, 1, seed).unwrap().value;
        assert!(bx >= exact - 1e-9, "seed {seed}: box {bx} < exact {exact}");
        assert!(exact >= multi - 1e-9, "seed {seed}: exact {exact} < multistart {multi}");
        assert!(multi >= single - 1e-9, "seed {seed}: multistart {multi} < single {single}");
    }
}

#[test]
fn box_equals_exact_on_boxes() {
    for seed in 0..100 {
        let c = separation_case(seed, false);
        let task = SeparationTask::new(&c.polytope, &c.f, &c.plane);
        let bx = oracle_box(&task).unwrap().value;
        let exact = oracle_exact(&task).unwrap().value;
        assert!((bx - exact).abs() <= 1e-9 * (1.0 + exact.abs()), "seed {seed}: {bx} vs {exact}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The exact oracle is at least the best of dense samples of the polytope.
    #[test]
    fn exact_dominates_samples(seed in 0u64..10_000) {
        let c = separation_case(seed, true);
        let task = SeparationTask::new(&c.polytope, &c.f, &c.plane);
        let exact = oracle_exact(&task).unwrap().value;
        for x in rejection_samples(&c.polytope, 500, seed) {
            prop_assert!(task.objective(&x) <= exact + 1e-9);
        }
    }
}
