//! Shared fixtures for the benchmarks.

use hrm_core::{generate_tree, GenConfig, Tree};

/// Generated tree with the default delay and loss ranges.
pub fn fixture(nodes: usize, seed: u64) -> Tree {
    generate_tree(&GenConfig::new(nodes, seed)).expect("valid generator config")
}

/// Generated tree with losses drawn from 0.001 to 0.1.
pub fn lossy_fixture(nodes: usize, seed: u64) -> Tree {
    generate_tree(&GenConfig::new(nodes, seed).with_loss(0.001, 0.1))
        .expect("valid generator config")
}
