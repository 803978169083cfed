mod common;

use std::collections::BTreeMap;

use common::gen;
use hrm_core::exact::{
    check_mip_constraints, derive_assignment, exact_optimal_with, mip_makespan, Assignment,
    ExactOptions,
};
use hrm_core::heuristics::place_long_path;
use hrm_core::{
    exact_optimal, makespan, min_servers, place, DelayParams, Edge, HeuristicName, MinServers,
    Placement, SearchMode, Tree,
};

const P: DelayParams = DelayParams::DEFAULT;

/// Brute force over candidate bitmasks, scored by the constraint-(7) sum of
/// the derived assignment rather than by the model's own sweep.
fn enumerate_optimum(tree: &Tree, k: usize) -> (f64, Placement) {
    let cands = tree.candidates();
    let mut best: Option<(f64, Placement)> = None;
    for mask in 0u64..(1 << cands.len()) {
        if mask.count_ones() as usize != k - 1 {
            continue;
        }
        let chosen = (0..cands.len())
            .filter(|i| mask >> i & 1 == 1)
            .map(|i| cands[i]);
        let placement = Placement::new(tree, chosen).unwrap();
        let m = mip_makespan(tree, &derive_assignment(tree, &placement), P);
        let better = match &best {
            None => true,
            Some((b, bp)) => m < *b || (m == *b && placement.servers() < bp.servers()),
        };
        if better {
            best = Some((m, placement));
        }
    }
    best.unwrap()
}

fn small_trees() -> impl Iterator<Item = Tree> {
    (0..40u64)
        .map(|seed| gen(8 + (seed as usize % 18), 500 + seed))
        .filter(|t| t.candidates().len() <= 12)
}

#[test]
fn enumeration_oracle_agrees_with_exact() {
    let mut checked = 0;
    for tree in small_trees() {
        for k in 1..=tree.candidates().len().min(5) + 1 {
            let opt = exact_optimal(&tree, k, P).unwrap();
            let (m, placement) = enumerate_optimum(&tree, k);
            assert!(
                (opt.makespan_ms - m).abs() <= 1e-9 * m,
                "{} vs {m}",
                opt.makespan_ms
            );
            assert_eq!(
                makespan(&tree, &opt.placement, P).makespan_ms,
                makespan(&tree, &placement, P).makespan_ms
            );
            checked += 1;
        }
    }
    assert!(checked > 50);
}

#[test]
fn heuristics_never_beat_the_optimum() {
    for seed in 0..20u64 {
        let tree = gen(30, 900 + seed);
        for k in [2, 3, 4] {
            let opt = exact_optimal(&tree, k, P).unwrap().makespan_ms;
            for h in HeuristicName::ALL {
                let r = place(&tree, h, k, P, seed);
                assert!(r.makespan_ms >= opt * (1.0 - 1e-12), "{h} k={k}");
            }
        }
    }
}

#[test]
fn optimum_and_long_path_are_monotone_in_k() {
    for seed in 0..10u64 {
        let tree = gen(22, 40 + seed);
        let max_k = tree.candidates().len() + 1;
        let mut prev_opt = f64::INFINITY;
        let mut prev_lp = f64::INFINITY;
        for k in 1..=max_k.min(7) {
            let opt = exact_optimal(&tree, k, P).unwrap().makespan_ms;
            let lp = place_long_path(&tree, k, P).makespan_ms;
            assert!(opt <= prev_opt && lp <= prev_lp);
            prev_opt = opt;
            prev_lp = lp;
        }
    }
}

#[test]
fn exact_results_satisfy_all_constraints() {
    for tree in small_trees().take(10) {
        for k in 1..=4.min(tree.candidates().len() + 1) {
            let opt = exact_optimal(&tree, k, P).unwrap();
            let a = derive_assignment(&tree, &opt.placement);
            assert_eq!(a.len(), k + tree.leaves().len() - 1);
            let report = check_mip_constraints(&tree, &opt.placement, &a, k, opt.makespan_ms, P);
            assert!(report.satisfied(), "{:?}", report.violations);
        }
    }
}

/// Every function from assignable nodes to nodes is tried; only the derived
/// one may satisfy constraints (1) through (6).
#[test]
fn derived_assignment_is_the_only_feasible_one() {
    let tree = Tree::from_edges(
        6,
        vec![
            Edge::new(0, 1, 10.0, 0.1),
            Edge::new(1, 2, 12.0, 0.05),
            Edge::new(2, 3, 14.0, 0.0),
            Edge::new(1, 4, 11.0, 0.2),
            Edge::new(0, 5, 30.0, 0.1),
        ],
    )
    .unwrap();
    for servers in [vec![], vec![1], vec![2], vec![1, 2]] {
        let placement = Placement::new(&tree, servers).unwrap();
        let k = placement.k();
        let derived = derive_assignment(&tree, &placement);
        let sources: Vec<usize> = (1..6)
            .filter(|&v| placement.contains(v) || tree.is_leaf(v))
            .collect();
        let n = tree.node_count();
        let mut feasible = Vec::new();
        for code in 0..n.pow(sources.len() as u32) {
            let mut c = code;
            let mut pairs = BTreeMap::new();
            for &s in &sources {
                pairs.insert(s, c % n);
                c /= n;
            }
            let a = Assignment { pairs };
            let report = check_mip_constraints(&tree, &placement, &a, k, f64::INFINITY, P);
            if report.satisfied() {
                feasible.push(a);
            }
        }
        assert_eq!(feasible, vec![derived]);
    }
}

#[test]
fn checker_reports_each_broken_constraint() {
    let tree = Tree::from_edges(
        5,
        vec![
            Edge::new(0, 1, 10.0, 0.1),
            Edge::new(1, 2, 10.0, 0.1),
            Edge::new(2, 3, 10.0, 0.2),
            Edge::new(0, 4, 10.0, 0.0),
        ],
    )
    .unwrap();
    let placement = Placement::new(&tree, [1, 2]).unwrap();
    let good = derive_assignment(&tree, &placement);
    let bound = makespan(&tree, &placement, P).makespan_ms;
    assert!(check_mip_constraints(&tree, &placement, &good, 3, bound, P).satisfied());

    let with = |src: usize, dst: usize| {
        let mut a = good.clone();
        a.pairs.insert(src, dst);
        a
    };
    let cases: Vec<(Assignment, usize, f64, u8)> = vec![
        (good.clone(), 4, bound, 1),
        (with(3, 0), 3, bound, 4),
        (with(3, 4), 3, bound, 2),
        (with(3, 1), 3, bound, 4),
        (with(4, 1), 3, bound, 5),
        (good.clone(), 3, bound * 0.99, 7),
    ];
    for (a, k, b, constraint) in cases {
        let report = check_mip_constraints(&tree, &placement, &a, k, b, P);
        assert!(
            report.violates(constraint),
            "expected ({constraint}): {:?}",
            report.violations
        );
    }
    let mut extra = good.clone();
    extra.pairs.insert(1, 0);
    extra.pairs.remove(&3);
    let report = check_mip_constraints(&tree, &placement, &extra, 3, bound, P);
    assert!(report.violates(6));
    // Node 2 is assigned although only node 1 is a server.
    let p1 = Placement::new(&tree, [1]).unwrap();
    let mut a = derive_assignment(&tree, &p1);
    a.pairs.insert(2, 1);
    assert!(check_mip_constraints(&tree, &p1, &a, 2, f64::INFINITY, P).violates(3));
}

#[test]
fn budget_guard_refuses_large_searches() {
    let tree = gen(200, 1);
    let err = exact_optimal_with(&tree, 10, P, ExactOptions { max_subsets: 1000 }).unwrap_err();
    assert!(err.to_string().contains("refusing"));
}

#[test]
fn min_servers_modes_agree_on_feasibility() {
    for seed in 0..8u64 {
        let tree = gen(20, 70 + seed);
        let full =
            makespan(&tree, &Placement::new(&tree, tree.candidates()).unwrap(), P).makespan_ms;
        let budget = full * 1.05;
        let e = min_servers(&tree, budget, P, SearchMode::Exact).unwrap();
        let g = min_servers(&tree, budget, P, SearchMode::LongPath).unwrap();
        match (e, g) {
            (
                MinServers::Feasible {
                    k: ke,
                    makespan_ms: me,
                    ..
                },
                MinServers::Feasible {
                    k: kg,
                    makespan_ms: mg,
                    ..
                },
            ) => {
                assert!(ke <= kg);
                assert!(me <= budget && mg <= budget);
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            min_servers(&tree, full * 0.99, P, SearchMode::Exact).unwrap(),
            MinServers::Infeasible { .. }
        ));
    }
}
