use std::collections::BTreeSet;

use fefet_am::encoder::{derive_encoding, verify_encoding};
use fefet_am::metric::DistanceMatrix;
use fefet_am::solver::{
    ac3, brute_force_feasible, decompose_dm, enumerate_solutions, searchlines, solve_at_k,
    CurrentRange, FeasibleRegion, SolveOptions, DEFAULT_ORACLE_BUDGET,
};
use proptest::prelude::*;

fn small_dm() -> impl Strategy<Value = DistanceMatrix> {
    (1usize..=3, 1usize..=3).prop_flat_map(|(m, n)| {
        prop::collection::vec(prop::collection::vec(0u32..=3, n), m)
            .prop_map(|rows| DistanceMatrix::from_rows(rows).unwrap())
    })
}

fn range() -> impl Strategy<Value = CurrentRange> {
    prop_oneof![
        Just(CurrentRange::default()),
        Just(CurrentRange::contiguous(3).unwrap()),
        Just(CurrentRange::new(vec![0, 1]).unwrap()),
    ]
}

fn no_symmetry_breaking() -> SolveOptions {
    SolveOptions {
        break_symmetry: false,
        ..SolveOptions::default()
    }
}

fn solution_set(region: &FeasibleRegion) -> BTreeSet<String> {
    enumerate_solutions(region, usize::MAX)
        .iter()
        .map(|ga| serde_json::to_string(ga).unwrap())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn csp_matches_oracle(dm in small_dm(), cr in range(), k in 1usize..=3) {
        let csp = solve_at_k(&dm, k, &cr, &SolveOptions::default()).unwrap();
        let brute = brute_force_feasible(&dm, k, &cr, DEFAULT_ORACLE_BUDGET).unwrap();
        prop_assert_eq!(csp.feasible(), brute.feasible);
        if let Some(ga) = &csp.solution {
            prop_assert!(ga.reproduces(&dm));
        }
    }

    #[test]
    fn feasibility_is_monotone_in_k(dm in small_dm(), cr in range()) {
        let verdicts: Vec<bool> = (1..=4)
            .map(|k| solve_at_k(&dm, k, &cr, &SolveOptions::default()).unwrap().feasible())
            .collect();
        for w in verdicts.windows(2) {
            prop_assert!(!w[0] || w[1], "{:?}", verdicts);
        }
    }

    #[test]
    fn arc_consistency_keeps_every_solution(dm in small_dm(), cr in range(), k in 1usize..=2) {
        let rows = searchlines(&dm, k, &cr, &no_symmetry_breaking()).unwrap();
        let unpruned = solution_set(&FeasibleRegion::unpruned(rows.clone()));
        let pruned = solution_set(&ac3(rows));
        prop_assert_eq!(unpruned, pruned);
    }

    #[test]
    fn symmetry_breaking_keeps_feasibility(dm in small_dm(), cr in range(), k in 1usize..=3) {
        let with = solve_at_k(&dm, k, &cr, &SolveOptions::default()).unwrap().feasible();
        let without = solve_at_k(&dm, k, &cr, &no_symmetry_breaking()).unwrap().feasible();
        prop_assert_eq!(with, without);
    }

    #[test]
    fn solutions_compile_to_verified_encodings(dm in small_dm(), cr in range(), k in 1usize..=3) {
        if let Some(ga) = solve_at_k(&dm, k, &cr, &SolveOptions::default()).unwrap().solution {
            let enc = derive_encoding(&ga).unwrap();
            let report = verify_encoding(&enc, &dm).unwrap();
            prop_assert!(report.pass, "{:?}", report.mismatches);
        }
    }

    #[test]
    fn decompositions_sum_to_target(k in 1usize..=4, value in 0u32..=8, cr in range()) {
        for tuple in decompose_dm(k, value, &cr) {
            prop_assert_eq!(tuple.k(), k);
            prop_assert_eq!(tuple.total(), value);
            prop_assert!(tuple.values().iter().all(|v| cr.contains(*v)));
        }
    }
}

#[test]
fn asymmetric_matrix_is_accepted() {
    // Rows turn on disjoint columns, so one FeFET cannot serve both.
    let dm = DistanceMatrix::from_rows(vec![vec![0, 2], vec![1, 0]]).unwrap();
    let cr = CurrentRange::default();
    for (k, expected) in [(1, false), (2, true)] {
        let csp = solve_at_k(&dm, k, &cr, &SolveOptions::default()).unwrap();
        let brute = brute_force_feasible(&dm, k, &cr, DEFAULT_ORACLE_BUDGET).unwrap();
        assert_eq!(csp.feasible(), expected);
        assert_eq!(brute.feasible, expected);
    }
}
