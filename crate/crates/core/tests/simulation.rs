mod common;

use common::gen;
use hrm_core::tree::root_to_leaf_paths;
use hrm_core::{
    generate_tree, leaf_expected_delay, place, simulate_event, simulate_recursion, DelayParams,
    EventSimConfig, GenConfig, HeuristicName, Placement,
};

const P: DelayParams = DelayParams::DEFAULT;

#[test]
fn recursion_means_track_model_per_leaf() {
    for seed in 0..4u64 {
        let tree = gen(30, 300 + seed);
        let placement = place(&tree, HeuristicName::LongPath, 4, P, 0).placement;
        let stats = simulate_recursion(&tree, &placement, P, 200_000, seed).unwrap();
        for leaf in tree.leaves() {
            let model = leaf_expected_delay(&tree, &placement, leaf, P).unwrap();
            let mean = stats.per_leaf_mean_ms[&leaf];
            assert!(
                (mean - model).abs() / model < 0.01,
                "leaf {leaf}: {mean} vs {model}"
            );
        }
    }
}

#[test]
fn recursion_is_order_independent_of_thread_count() {
    let tree = gen(40, 8);
    let placement = Placement::new(&tree, tree.candidates().into_iter().take(3)).unwrap();
    let a = simulate_recursion(&tree, &placement, P, 5000, 42).unwrap();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let b = pool.install(|| simulate_recursion(&tree, &placement, P, 5000, 42).unwrap());
    assert_eq!(a, b);
}

#[test]
fn event_floor_is_exact_on_generated_trees() {
    for seed in 0..5u64 {
        let cfg = GenConfig::new(50, seed).with_loss(0.0, 0.0);
        let tree = generate_tree(&cfg).unwrap();
        let floor = root_to_leaf_paths(&tree)
            .iter()
            .map(|p| p.delay_sum())
            .fold(0.0, f64::max);
        let placement = place(&tree, HeuristicName::MaxDegree, 5, P, 0).placement;
        let stats = simulate_event(
            &tree,
            &placement,
            EventSimConfig::new(300, 16.0, seed).unwrap(),
        )
        .unwrap();
        assert!(stats.per_packet_makespan_ms.iter().all(|&m| m == floor));
    }
}

#[test]
fn event_delays_never_undercut_propagation() {
    let tree = generate_tree(&GenConfig::new(40, 6).with_loss(0.05, 0.3)).unwrap();
    let placement = place(&tree, HeuristicName::LongPath, 5, P, 0).placement;
    let stats = simulate_event(
        &tree,
        &placement,
        EventSimConfig::new(1000, 16.0, 2).unwrap(),
    )
    .unwrap();
    for path in root_to_leaf_paths(&tree) {
        let floor = path.delay_sum();
        assert!(stats.per_leaf_mean_ms[&path.leaf] >= floor);
        assert!(stats.per_leaf_max_ms[&path.leaf] >= stats.per_leaf_mean_ms[&path.leaf]);
    }
    assert_eq!(stats.per_packet_makespan_ms.len(), 1000);
}

#[test]
fn csv_output_is_stable() {
    let tree = gen(15, 3);
    let placement = Placement::root_only();
    let stats = simulate_recursion(&tree, &placement, P, 50, 1).unwrap();
    let mut a = Vec::new();
    let mut b = Vec::new();
    stats.write_packet_csv(&mut a).unwrap();
    simulate_recursion(&tree, &placement, P, 50, 1)
        .unwrap()
        .write_packet_csv(&mut b)
        .unwrap();
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with("packet,makespan_ms\n"));
    assert_eq!(text.lines().count(), 51);
}
