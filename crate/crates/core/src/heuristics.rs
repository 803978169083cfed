//! Greedy repair-server placement.
//!
//! Every policy starts from the sender and adds up to `k - 1` internal nodes.
//! Ties are always broken toward the lowest node id.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use crate::delay_model::{edge_expected_delay, makespan, DelayEvaluator, DelayParams, Placement};
use crate::rng::{index, splitmix};
use crate::tree::{NodeId, Tree, ROOT};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum HeuristicName {
    Random,
    MaxDelay,
    MaxDegree,
    LongPath,
}

impl HeuristicName {
    pub const ALL: [HeuristicName; 4] = [
        HeuristicName::Random,
        HeuristicName::MaxDelay,
        HeuristicName::MaxDegree,
        HeuristicName::LongPath,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            HeuristicName::Random => "random",
            HeuristicName::MaxDelay => "max_delay",
            HeuristicName::MaxDegree => "max_degree",
            HeuristicName::LongPath => "long_path",
        }
    }
}

impl fmt::Display for HeuristicName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown heuristic {0:?} (expected random, max_delay, max_degree or long_path)")]
pub struct UnknownHeuristic(pub String);

impl FromStr for HeuristicName {
    type Err = UnknownHeuristic;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        HeuristicName::ALL
            .into_iter()
            .find(|h| h.as_str() == s)
            .ok_or_else(|| UnknownHeuristic(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementResult {
    pub placement: Placement,
    pub requested_k: usize,
    pub achieved_k: usize,
    pub makespan_ms: f64,
    /// Non-root servers in the order they were picked.
    pub selection_order: Vec<NodeId>,
}

impl PlacementResult {
    fn from_selection(
        tree: &Tree,
        requested_k: usize,
        selection_order: Vec<NodeId>,
        params: DelayParams,
    ) -> Self {
        let placement = Placement::new(tree, selection_order.iter().copied())
            .expect("heuristics only pick internal nodes");
        let makespan_ms = makespan(tree, &placement, params).makespan_ms;
        PlacementResult {
            achieved_k: placement.k(),
            placement,
            requested_k,
            makespan_ms,
            selection_order,
        }
    }
}

/// Runs `heuristic`; `seed` is only consulted by [`HeuristicName::Random`].
pub fn place(
    tree: &Tree,
    heuristic: HeuristicName,
    k: usize,
    params: DelayParams,
    seed: u64,
) -> PlacementResult {
    match heuristic {
        HeuristicName::Random => place_random(tree, k, seed, params),
        HeuristicName::MaxDelay => place_max_delay(tree, k, params),
        HeuristicName::MaxDegree => place_max_degree(tree, k, params),
        HeuristicName::LongPath => place_long_path(tree, k, params),
    }
}

fn quota(k: usize) -> usize {
    k.saturating_sub(1)
}

/// Uniform draw without replacement. The candidates are shuffled once
/// (Fisher-Yates from the back, SplitMix64 seeded with `seed`) and the
/// first `k - 1` kept, so growing `k` extends the same selection.
pub fn place_random(tree: &Tree, k: usize, seed: u64, params: DelayParams) -> PlacementResult {
    let mut pool = tree.candidates();
    let mut rng = splitmix(seed);
    for i in (1..pool.len()).rev() {
        let j = index(&mut rng, i + 1);
        pool.swap(i, j);
    }
    pool.truncate(quota(k));
    PlacementResult::from_selection(tree, k, pool, params)
}

/// Highest score first, then lowest id.
fn by_score_desc(a: &(NodeId, f64), b: &(NodeId, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

fn top_scored(mut scored: Vec<(NodeId, f64)>, take: usize) -> Vec<NodeId> {
    scored.sort_by(by_score_desc);
    scored.into_iter().take(take).map(|(v, _)| v).collect()
}

/// Scores each candidate by the largest single-link expected delay over its
/// outbound links, computed once as if every internal node were a server.
pub fn place_max_delay(tree: &Tree, k: usize, params: DelayParams) -> PlacementResult {
    let scored = tree
        .candidates()
        .into_iter()
        .map(|v| {
            let score = tree
                .children(v)
                .iter()
                .map(|&c| edge_expected_delay(tree.incoming_edge(c).expect("child"), params))
                .fold(f64::NEG_INFINITY, f64::max);
            (v, score)
        })
        .collect();
    PlacementResult::from_selection(tree, k, top_scored(scored, quota(k)), params)
}

pub fn place_max_degree(tree: &Tree, k: usize, params: DelayParams) -> PlacementResult {
    let scored = tree
        .candidates()
        .into_iter()
        .map(|v| (v, tree.out_degree(v) as f64))
        .collect();
    PlacementResult::from_selection(tree, k, top_scored(scored, quota(k)), params)
}

/// Repeatedly finds the leaf with the largest expected delay under the
/// current placement and puts a server on the unmarked node of its path
/// whose outbound on-path link has the largest single-link delay. When the
/// worst path has no unmarked node left, the next worst path is tried.
pub fn place_long_path(tree: &Tree, k: usize, params: DelayParams) -> PlacementResult {
    let n = tree.node_count();
    let mut is_server = vec![false; n];
    is_server[ROOT] = true;
    // Score of each node's link toward a given child, keyed by child.
    let link_score: Vec<f64> = (0..n)
        .map(|c| {
            tree.incoming_edge(c)
                .map_or(f64::NEG_INFINITY, |e| edge_expected_delay(e, params))
        })
        .collect();

    let mut eval = DelayEvaluator::new(tree, params);
    let mut selection = Vec::new();
    while selection.len() < quota(k) {
        let mut leaves = eval.leaf_delays(&is_server);
        leaves.sort_by(by_score_desc);
        let pick = leaves.iter().find_map(|&(leaf, _)| {
            let path = tree.path_nodes(leaf);
            path.windows(2)
                .filter(|w| !is_server[w[0]])
                .map(|w| (w[0], link_score[w[1]]))
                .min_by(by_score_desc)
                .map(|(v, _)| v)
        });
        match pick {
            Some(v) => {
                is_server[v] = true;
                selection.push(v);
            }
            None => break,
        }
    }
    PlacementResult::from_selection(tree, k, selection, params)
}
