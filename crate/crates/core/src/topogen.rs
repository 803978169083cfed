//! Seeded random multicast trees.
//!
//! Uniform attachment with a fan-out cap. The generator is SplitMix64 with
//! its state set to `seed`. For each node `i = 1..nodes`, in id order, three
//! values are drawn:
//!
//! 1. the parent: `eligible[floor(u * eligible.len())]`, where `eligible`
//!    lists, ascending, the nodes `0..i` with fewer than `max_children`
//!    children;
//! 2. the delay: `delay_min_ms + u * (delay_max_ms - delay_min_ms)`;
//! 3. the loss: `loss_min + u * (loss_max - loss_min)`.
//!
//! Each `u` is `(next_u64() >> 11) * 2^-53`.

use crate::rng::{index, splitmix, unit_f64};
use crate::tree::{Edge, Tree};

#[derive(Debug, Clone, PartialEq)]
pub struct GenConfig {
    pub nodes: usize,
    pub seed: u64,
    pub delay_min_ms: f64,
    pub delay_max_ms: f64,
    pub loss_min: f64,
    pub loss_max: f64,
    pub max_children: usize,
}

impl GenConfig {
    /// Delays in [10, 40] ms, losses in [0, 0.1], at most four children.
    pub fn new(nodes: usize, seed: u64) -> Self {
        GenConfig {
            nodes,
            seed,
            delay_min_ms: 10.0,
            delay_max_ms: 40.0,
            loss_min: 0.0,
            loss_max: 0.1,
            max_children: 4,
        }
    }

    pub fn with_loss(mut self, min: f64, max: f64) -> Self {
        self.loss_min = min;
        self.loss_max = max;
        self
    }

    pub fn with_delay(mut self, min_ms: f64, max_ms: f64) -> Self {
        self.delay_min_ms = min_ms;
        self.delay_max_ms = max_ms;
        self
    }

    pub fn validate(&self) -> Result<(), GenError> {
        let fail = |msg: &str| Err(GenError(msg.to_string()));
        if self.nodes < 2 {
            return fail("nodes must be at least 2");
        }
        if self.max_children < 1 {
            return fail("max_children must be at least 1");
        }
        if !(self.delay_min_ms > 0.0 && self.delay_min_ms <= self.delay_max_ms)
            || !self.delay_max_ms.is_finite()
        {
            return fail("delays must satisfy 0 < delay_min <= delay_max");
        }
        if !(0.0 <= self.loss_min && self.loss_min <= self.loss_max && self.loss_max < 1.0) {
            return fail("losses must satisfy 0 <= loss_min <= loss_max < 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid generator config: {0}")]
pub struct GenError(pub String);

pub fn generate_tree(config: &GenConfig) -> Result<Tree, GenError> {
    config.validate()?;
    let mut rng = splitmix(config.seed);
    let mut child_count = vec![0usize; config.nodes];
    let mut eligible = vec![0usize];
    let mut edges = Vec::with_capacity(config.nodes - 1);
    for node in 1..config.nodes {
        let slot = index(&mut rng, eligible.len());
        let parent = eligible[slot];
        let delay =
            config.delay_min_ms + unit_f64(&mut rng) * (config.delay_max_ms - config.delay_min_ms);
        let loss = config.loss_min + unit_f64(&mut rng) * (config.loss_max - config.loss_min);
        edges.push(Edge::new(parent, node, delay, loss));
        child_count[parent] += 1;
        if child_count[parent] == config.max_children {
            eligible.remove(slot);
        }
        eligible.push(node);
    }
    Ok(Tree::from_edges(config.nodes, edges).expect("generator emits valid trees"))
}
