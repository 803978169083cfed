//! Analytic expected delivery delay under independent per-link loss.
//!
//! A segment runs from a repair server down to the next server or leaf. With
//! `s` the probability that one transmission crosses every link of the
//! segment, `L` the summed link delay and `t` the sending interval:
//!
//! ```text
//! f    = (1 - s) / s
//! E(N) = f * t + L              expected inter-arrival at the segment end
//! E(D) = L + f * E(N)           expected delivery delay over the segment
//! ```
//!
//! A leaf's delay is the sum of the delays of the segments on its path, and
//! the makespan is the largest leaf delay.

use std::collections::BTreeSet;

use crate::tree::{Edge, NodeId, Tree, ROOT};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DelayError {
    #[error("sending interval must be positive and finite, got {0}")]
    BadInterval(f64),
    #[error("node {0} is not a leaf")]
    NotALeaf(NodeId),
    #[error("node {0} does not exist")]
    UnknownNode(NodeId),
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlacementError {
    #[error("node {node} does not exist (tree has {node_count} nodes)")]
    UnknownNode { node: NodeId, node_count: usize },
    #[error("node {0} is a leaf and cannot host a repair server")]
    Leaf(NodeId),
}

/// Sending (and retransmission) interval: the reciprocal of the sending rate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DelayParams {
    t_ms: f64,
}

impl DelayParams {
    /// 1000-byte packets at 500 kb/s.
    pub const DEFAULT_T_MS: f64 = 16.0;
    pub const DEFAULT: DelayParams = DelayParams {
        t_ms: Self::DEFAULT_T_MS,
    };

    pub fn new(t_ms: f64) -> Result<Self, DelayError> {
        if t_ms > 0.0 && t_ms.is_finite() {
            Ok(DelayParams { t_ms })
        } else {
            Err(DelayError::BadInterval(t_ms))
        }
    }

    pub fn t_ms(&self) -> f64 {
        self.t_ms
    }
}

impl Default for DelayParams {
    fn default() -> Self {
        Self::DEFAULT
    }
}

/// Downward path between a repair server and the next server or leaf.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub from: NodeId,
    pub to: NodeId,
    pub edges: Vec<Edge>,
}

impl Segment {
    pub fn new(from: NodeId, to: NodeId, edges: Vec<Edge>) -> Self {
        debug_assert!(!edges.is_empty());
        Segment { from, to, edges }
    }

    /// Builds the segment `from -> to` out of `tree`'s edges.
    pub fn in_tree(tree: &Tree, from: NodeId, to: NodeId) -> Self {
        Segment::new(from, to, tree.edges_between(from, to))
    }

    /// Probability that one transmission crosses the whole segment.
    pub fn success(&self) -> f64 {
        self.edges.iter().fold(1.0, |acc, e| acc * (1.0 - e.loss))
    }

    pub fn latency_ms(&self) -> f64 {
        self.edges.iter().fold(0.0, |acc, e| acc + e.delay_ms)
    }
}

/// E(N) from a segment's success probability and latency.
pub fn interarrival(success: f64, latency_ms: f64, params: DelayParams) -> f64 {
    let f = (1.0 - success) / success;
    f * params.t_ms + latency_ms
}

/// E(D) from a segment's success probability and latency.
pub fn delay(success: f64, latency_ms: f64, params: DelayParams) -> f64 {
    let f = (1.0 - success) / success;
    latency_ms + f * interarrival(success, latency_ms, params)
}

pub fn expected_interarrival(seg: &Segment, params: DelayParams) -> f64 {
    interarrival(seg.success(), seg.latency_ms(), params)
}

pub fn segment_expected_delay(seg: &Segment, params: DelayParams) -> f64 {
    delay(seg.success(), seg.latency_ms(), params)
}

/// Delay of a single link treated as its own segment.
pub fn edge_expected_delay(edge: &Edge, params: DelayParams) -> f64 {
    delay(1.0 - edge.loss, edge.delay_ms, params)
}

/// Set of repair-server nodes. The sender is always a member.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Placement {
    servers: BTreeSet<NodeId>,
}

impl Placement {
    pub fn root_only() -> Self {
        Placement {
            servers: BTreeSet::from([ROOT]),
        }
    }

    /// Validates `servers` against `tree`; the root is added if absent.
    pub fn new(
        tree: &Tree,
        servers: impl IntoIterator<Item = NodeId>,
    ) -> Result<Self, PlacementError> {
        let mut set = BTreeSet::from([ROOT]);
        for node in servers {
            if node >= tree.node_count() {
                return Err(PlacementError::UnknownNode {
                    node,
                    node_count: tree.node_count(),
                });
            }
            if tree.is_leaf(node) && node != ROOT {
                return Err(PlacementError::Leaf(node));
            }
            set.insert(node);
        }
        Ok(Placement { servers: set })
    }

    pub fn servers(&self) -> &BTreeSet<NodeId> {
        &self.servers
    }

    /// Number of servers, sender included.
    pub fn k(&self) -> usize {
        self.servers.len()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.servers.contains(&node)
    }

    /// Membership indicator per node id.
    pub fn mask(&self, node_count: usize) -> Vec<bool> {
        let mut mask = vec![false; node_count];
        for &s in &self.servers {
            mask[s] = true;
        }
        mask
    }

    /// Sorted, comma-separated server ids.
    pub fn to_list(&self) -> String {
        self.servers
            .iter()
            .map(|s| s.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// Splits the path to `node` at every server in `placement`, top first.
pub fn segments_to(tree: &Tree, placement: &Placement, node: NodeId) -> Vec<Segment> {
    let path = tree.path_nodes(node);
    let mut segments = Vec::new();
    let mut start = 0;
    for i in 1..path.len() {
        let v = path[i];
        if i == path.len() - 1 || placement.contains(v) {
            let edges = path[start + 1..=i]
                .iter()
                .map(|&c| *tree.incoming_edge(c).expect("non-root"))
                .collect();
            segments.push(Segment::new(path[start], v, edges));
            start = i;
        }
    }
    segments
}

pub fn leaf_expected_delay(
    tree: &Tree,
    placement: &Placement,
    leaf: NodeId,
    params: DelayParams,
) -> Result<f64, DelayError> {
    if leaf >= tree.node_count() {
        return Err(DelayError::UnknownNode(leaf));
    }
    if !tree.is_leaf(leaf) || leaf == ROOT {
        return Err(DelayError::NotALeaf(leaf));
    }
    Ok(segments_to(tree, placement, leaf)
        .iter()
        .fold(0.0, |acc, seg| acc + segment_expected_delay(seg, params)))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Makespan {
    pub makespan_ms: f64,
    pub worst_leaf: NodeId,
}

/// Evaluates every leaf's expected delay in one preorder sweep.
///
/// Reuses its scratch buffers, so a single evaluator can score many
/// placements of the same tree without allocating.
#[derive(Debug, Clone)]
pub struct DelayEvaluator<'a> {
    tree: &'a Tree,
    params: DelayParams,
    leaves: Vec<NodeId>,
    // Per node: delay of closed segments above it, then success and latency
    // of the open segment ending at it.
    closed: Vec<f64>,
    success: Vec<f64>,
    latency: Vec<f64>,
}

impl<'a> DelayEvaluator<'a> {
    pub fn new(tree: &'a Tree, params: DelayParams) -> Self {
        let n = tree.node_count();
        DelayEvaluator {
            tree,
            params,
            leaves: tree.leaves(),
            closed: vec![0.0; n],
            success: vec![1.0; n],
            latency: vec![0.0; n],
        }
    }

    pub fn tree(&self) -> &'a Tree {
        self.tree
    }

    pub fn params(&self) -> DelayParams {
        self.params
    }

    pub fn leaves(&self) -> &[NodeId] {
        &self.leaves
    }

    fn sweep(&mut self, is_server: &[bool]) {
        let tree = self.tree;
        for &v in &tree.preorder()[1..] {
            let e = tree.incoming_edge(v).expect("non-root");
            let p = e.parent;
            let s = self.success[p] * (1.0 - e.loss);
            let l = self.latency[p] + e.delay_ms;
            if is_server[v] {
                self.closed[v] = self.closed[p] + delay(s, l, self.params);
                self.success[v] = 1.0;
                self.latency[v] = 0.0;
            } else {
                self.closed[v] = self.closed[p];
                self.success[v] = s;
                self.latency[v] = l;
            }
        }
    }

    /// Expected delay of each leaf, in ascending leaf order.
    pub fn leaf_delays(&mut self, is_server: &[bool]) -> Vec<(NodeId, f64)> {
        self.sweep(is_server);
        self.leaves
            .iter()
            .map(|&l| (l, self.leaf_value(l)))
            .collect()
    }

    fn leaf_value(&self, leaf: NodeId) -> f64 {
        self.closed[leaf] + delay(self.success[leaf], self.latency[leaf], self.params)
    }

    /// Worst leaf under the server mask; ties go to the lowest leaf id.
    pub fn makespan(&mut self, is_server: &[bool]) -> Makespan {
        self.sweep(is_server);
        let mut best = Makespan {
            makespan_ms: f64::NEG_INFINITY,
            worst_leaf: ROOT,
        };
        for &l in &self.leaves {
            let d = self.leaf_value(l);
            if d > best.makespan_ms {
                best = Makespan {
                    makespan_ms: d,
                    worst_leaf: l,
                };
            }
        }
        if self.leaves.is_empty() {
            best.makespan_ms = 0.0;
        }
        best
    }
}

pub fn makespan(tree: &Tree, placement: &Placement, params: DelayParams) -> Makespan {
    DelayEvaluator::new(tree, params).makespan(&placement.mask(tree.node_count()))
}

/// Expected delay of every leaf, ascending by leaf id.
pub fn leaf_delays(tree: &Tree, placement: &Placement, params: DelayParams) -> Vec<(NodeId, f64)> {
    DelayEvaluator::new(tree, params).leaf_delays(&placement.mask(tree.node_count()))
}
