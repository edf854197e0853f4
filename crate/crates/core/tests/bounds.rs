mod common;

use common::*;
use proptest::prelude::*;
use robustmax::g2b2::{solve_g2b2, G2b2Options};
use robustmax::gb2::{solve_gb2, FunctionSelection, Gb2Options};
use robustmax::oracles::{OracleKind, SeparationOracle};

fn gb2_traced(selection: FunctionSelection) -> Gb2Options {
    Gb2Options { selection, record_trace: true, ..Default::default() }
}

fn g2b2_traced(kind: OracleKind) -> G2b2Options {
    G2b2Options { oracle: SeparationOracle::new(kind), epsilon: 1e-3, record_trace: true, max_iterations: 100_000, ..Default::default() }
}

#[test]
fn fixture_traces_are_valid() {
    let i1 = fixture("instance1.json");
    let f = i1.objective().unwrap();
    let sol = solve_gb2(&f, &i1.domain(), &gb2_traced(FunctionSelection::InOrder)).unwrap();
    check_trace(sol.trace.as_ref().unwrap(), &f, &i1.domain(), 1).unwrap();

    let i2 = fixture("instance2.json");
    let f = i2.objective().unwrap();
    for kind in [OracleKind::Exact, OracleKind::Box] {
        let opts = G2b2Options { initial_planes: i2.initial_planes.clone(), ..g2b2_traced(kind) };
        let sol = solve_g2b2(&f, &i2.domain(), &opts).unwrap();
        check_trace(sol.trace.as_ref().unwrap(), &f, &i2.domain(), 2).unwrap();
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn gb2_traces_are_valid(seed in 0u64..100_000) {
        let f = random_pl(seed, 3, 3);
        let sol = solve_gb2(&f, &square(0.0, 10.0), &gb2_traced(FunctionSelection::Random { seed })).unwrap();
        check_trace(sol.trace.as_ref().unwrap(), &f, &square(0.0, 10.0), seed).map_err(TestCaseError::fail)?;
    }

    #[test]
    fn g2b2_traces_are_valid(seed in 0u64..100_000, k in 2usize..6, boxed in any::<bool>()) {
        let f = random_quadratics(seed, k);
        let kind = if boxed { OracleKind::Box } else { OracleKind::Exact };
        let sol = solve_g2b2(&f, &square(-10.0, 10.0), &g2b2_traced(kind)).unwrap();
        check_trace(sol.trace.as_ref().unwrap(), &f, &square(-10.0, 10.0), seed).map_err(TestCaseError::fail)?;
    }
}
