//! Repair-server placement for hierarchical reliable multicast.
//!
//! Given a multicast tree whose links carry a delay and an independent loss
//! rate, this crate computes each receiver's expected delivery delay when
//! repair servers perform local recovery, picks server locations with greedy
//! heuristics or exhaustive search, and checks the analytic model against
//! Monte-Carlo simulation.

pub mod delay_model;
pub mod exact;
pub mod heuristics;
pub mod rng;
pub mod sim;
pub mod topogen;
pub mod tree;

pub use delay_model::{
    leaf_expected_delay, makespan, segment_expected_delay, DelayParams, Makespan, Placement,
    Segment,
};
pub use exact::{exact_optimal, min_servers, MinServers, OptimalResult, SearchMode};
pub use heuristics::{place, HeuristicName, PlacementResult};
pub use sim::{simulate_event, simulate_recursion, EventSimConfig, SimStats};
pub use topogen::{generate_tree, GenConfig};
pub use tree::{parse_tree, serialize_tree, Edge, NodeId, Path, Tree};
