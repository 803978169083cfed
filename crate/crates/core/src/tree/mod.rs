//! Rooted multicast tree with per-link loss and delay.
//!
//! Node `0` is always the sender. Every other node has exactly one parent,
//! reached through the edge stored at the child's index.

mod format;

use std::fmt;

pub use format::{format_sig6, parse_tree, serialize_tree, ParseError};

pub type NodeId = usize;

/// The sender is always node 0.
pub const ROOT: NodeId = 0;

/// A directed link from `parent` down to `child`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub parent: NodeId,
    pub child: NodeId,
    pub delay_ms: f64,
    pub loss: f64,
}

impl Edge {
    pub fn new(parent: NodeId, child: NodeId, delay_ms: f64, loss: f64) -> Self {
        Edge {
            parent,
            child,
            delay_ms,
            loss,
        }
    }

    /// Probability that a single transmission crosses this link.
    pub fn success(&self) -> f64 {
        1.0 - self.loss
    }
}

/// One structural problem found by [`validate_tree`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyTree,
    EdgeCount {
        expected: usize,
        found: usize,
    },
    NodeOutOfRange {
        node: NodeId,
        node_count: usize,
    },
    SelfLoop {
        node: NodeId,
    },
    RootHasParent {
        parent: NodeId,
    },
    TwoParents {
        node: NodeId,
        first: NodeId,
        second: NodeId,
    },
    Unreachable {
        node: NodeId,
    },
    Cycle {
        node: NodeId,
    },
    BadDelay {
        parent: NodeId,
        child: NodeId,
        delay_ms: f64,
    },
    BadLoss {
        parent: NodeId,
        child: NodeId,
        loss: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyTree => write!(f, "tree has no nodes"),
            Violation::EdgeCount { expected, found } => {
                write!(f, "expected {expected} edges, found {found}")
            }
            Violation::NodeOutOfRange { node, node_count } => {
                write!(f, "node {node} out of range 0..{node_count}")
            }
            Violation::SelfLoop { node } => write!(f, "self-loop on node {node}"),
            Violation::RootHasParent { parent } => {
                write!(f, "root 0 cannot have a parent (edge {parent}->0)")
            }
            Violation::TwoParents { node, .. } => write!(f, "node {node} has two parents"),
            Violation::Unreachable { node } => write!(f, "node {node} unreachable from root"),
            Violation::Cycle { node } => write!(f, "cycle through node {node}"),
            Violation::BadDelay {
                parent,
                child,
                delay_ms,
            } => write!(
                f,
                "edge {parent}->{child}: delay must be > 0 (got {delay_ms})"
            ),
            Violation::BadLoss {
                parent,
                child,
                loss,
            } => write!(
                f,
                "edge {parent}->{child}: loss out of range [0,1) (got {loss})"
            ),
        }
    }
}

/// Outcome of structural validation. Violations are data, not failures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_ok() {
            return write!(f, "ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("invalid tree: {0}")]
pub struct TreeError(pub ValidationReport);

/// Checks an arbitrary edge list against the tree invariants.
pub fn validate_tree(node_count: usize, edges: &[Edge]) -> ValidationReport {
    let mut violations = Vec::new();
    if node_count == 0 {
        violations.push(Violation::EmptyTree);
        return ValidationReport { violations };
    }
    if edges.len() != node_count - 1 {
        violations.push(Violation::EdgeCount {
            expected: node_count - 1,
            found: edges.len(),
        });
    }

    let mut parent: Vec<Option<NodeId>> = vec![None; node_count];
    let mut children: Vec<Vec<NodeId>> = vec![Vec::new(); node_count];
    for e in edges {
        let mut in_range = true;
        for node in [e.parent, e.child] {
            if node >= node_count {
                violations.push(Violation::NodeOutOfRange { node, node_count });
                in_range = false;
            }
        }
        if !(e.delay_ms > 0.0 && e.delay_ms.is_finite()) {
            violations.push(Violation::BadDelay {
                parent: e.parent,
                child: e.child,
                delay_ms: e.delay_ms,
            });
        }
        if !(0.0..1.0).contains(&e.loss) {
            violations.push(Violation::BadLoss {
                parent: e.parent,
                child: e.child,
                loss: e.loss,
            });
        }
        if !in_range {
            continue;
        }
        if e.parent == e.child {
            violations.push(Violation::SelfLoop { node: e.child });
            continue;
        }
        if e.child == ROOT {
            violations.push(Violation::RootHasParent { parent: e.parent });
            continue;
        }
        match parent[e.child] {
            Some(first) => violations.push(Violation::TwoParents {
                node: e.child,
                first,
                second: e.parent,
            }),
            None => {
                parent[e.child] = Some(e.parent);
                children[e.parent].push(e.child);
            }
        }
    }

    let mut reached = vec![false; node_count];
    let mut stack = vec![ROOT];
    reached[ROOT] = true;
    while let Some(v) = stack.pop() {
        for &c in &children[v] {
            if !reached[c] {
                reached[c] = true;
                stack.push(c);
            }
        }
    }
    // An unreached node's parent is also unreached; following parent links
    // either ends at an orphan or loops.
    let mut on_cycle = vec![false; node_count];
    for start in 0..node_count {
        if reached[start] || on_cycle[start] {
            continue;
        }
        let mut walk: Vec<NodeId> = Vec::new();
        let mut v = start;
        loop {
            if let Some(pos) = walk.iter().position(|&x| x == v) {
                for &c in &walk[pos..] {
                    on_cycle[c] = true;
                }
                break;
            }
            walk.push(v);
            match parent[v] {
                Some(p) if !on_cycle[p] => v = p,
                _ => break,
            }
        }
    }
    let mut cycle_reported = false;
    for node in 0..node_count {
        if reached[node] {
            continue;
        }
        if on_cycle[node] && !cycle_reported {
            violations.push(Violation::Cycle { node });
            cycle_reported = true;
        }
        violations.push(Violation::Unreachable { node });
    }
    ValidationReport { violations }
}

/// A validated, immutable multicast tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    /// Incoming edge of each node, indexed by child id. `None` only for the root.
    incoming: Vec<Option<Edge>>,
    children: Vec<Vec<NodeId>>,
    /// Parents precede children.
    preorder: Vec<NodeId>,
    enter: Vec<usize>,
    exit: Vec<usize>,
    depth: Vec<usize>,
}

impl Tree {
    pub fn from_edges(node_count: usize, edges: Vec<Edge>) -> Result<Tree, TreeError> {
        let report = validate_tree(node_count, &edges);
        if !report.is_ok() {
            return Err(TreeError(report));
        }
        let mut incoming = vec![None; node_count];
        let mut children = vec![Vec::new(); node_count];
        for e in edges {
            incoming[e.child] = Some(e);
            children[e.parent].push(e.child);
        }
        for c in &mut children {
            c.sort_unstable();
        }

        let mut preorder = Vec::with_capacity(node_count);
        let mut enter = vec![0; node_count];
        let mut exit = vec![0; node_count];
        let mut depth = vec![0; node_count];
        // Iterative DFS; children visited in ascending id order.
        let mut stack: Vec<(NodeId, usize)> = vec![(ROOT, 0)];
        enter[ROOT] = 0;
        preorder.push(ROOT);
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&c) = children[v].get(*next) {
                *next += 1;
                enter[c] = preorder.len();
                depth[c] = depth[v] + 1;
                preorder.push(c);
                stack.push((c, 0));
            } else {
                exit[v] = preorder.len();
                stack.pop();
            }
        }

        Ok(Tree {
            incoming,
            children,
            preorder,
            enter,
            exit,
            depth,
        })
    }

    pub fn node_count(&self) -> usize {
        self.incoming.len()
    }

    pub fn root(&self) -> NodeId {
        ROOT
    }

    pub fn parent(&self, node: NodeId) -> Option<NodeId> {
        self.incoming[node].map(|e| e.parent)
    }

    /// The edge from `node`'s parent into `node`.
    pub fn incoming_edge(&self, node: NodeId) -> Option<&Edge> {
        self.incoming[node].as_ref()
    }

    pub fn children(&self, node: NodeId) -> &[NodeId] {
        &self.children[node]
    }

    pub fn out_degree(&self, node: NodeId) -> usize {
        self.children[node].len()
    }

    pub fn is_leaf(&self, node: NodeId) -> bool {
        self.children[node].is_empty()
    }

    pub fn depth(&self, node: NodeId) -> usize {
        self.depth[node]
    }

    /// Nodes in depth-first order; every parent appears before its children.
    pub fn preorder(&self) -> &[NodeId] {
        &self.preorder
    }

    /// Edges sorted by `(parent, child)`.
    pub fn edges(&self) -> Vec<Edge> {
        let mut edges: Vec<Edge> = self.incoming.iter().flatten().copied().collect();
        edges.sort_by_key(|e| (e.parent, e.child));
        edges
    }

    /// Receivers, ascending. The sender is never a receiver.
    pub fn leaves(&self) -> Vec<NodeId> {
        (1..self.node_count())
            .filter(|&v| self.is_leaf(v))
            .collect()
    }

    /// Internal nodes other than the sender: the nodes that may host a repair server.
    pub fn candidates(&self) -> Vec<NodeId> {
        (1..self.node_count())
            .filter(|&v| !self.is_leaf(v))
            .collect()
    }

    /// True when `ancestor` lies strictly above `node`.
    pub fn is_strict_ancestor(&self, ancestor: NodeId, node: NodeId) -> bool {
        ancestor != node
            && self.enter[ancestor] <= self.enter[node]
            && self.enter[node] < self.exit[ancestor]
    }

    /// Node ids from the root down to `node`, inclusive.
    pub fn path_nodes(&self, node: NodeId) -> Vec<NodeId> {
        let mut nodes = Vec::with_capacity(self.depth[node] + 1);
        let mut v = node;
        nodes.push(v);
        while let Some(p) = self.parent(v) {
            nodes.push(p);
            v = p;
        }
        nodes.reverse();
        nodes
    }

    pub fn path_to(&self, leaf: NodeId) -> Path {
        let nodes = self.path_nodes(leaf);
        let edges = nodes[1..]
            .iter()
            .map(|&v| self.incoming[v].expect("non-root node has an incoming edge"))
            .collect();
        Path { leaf, nodes, edges }
    }

    /// Downward edges from `ancestor` to `node`, top first. Empty when equal.
    pub fn edges_between(&self, ancestor: NodeId, node: NodeId) -> Vec<Edge> {
        let mut edges = Vec::new();
        let mut v = node;
        while v != ancestor {
            let e = self.incoming[v].expect("ancestor must lie above node");
            edges.push(e);
            v = e.parent;
        }
        edges.reverse();
        edges
    }
}

/// A root-to-leaf path.
#[derive(Debug, Clone, PartialEq)]
pub struct Path {
    pub leaf: NodeId,
    pub nodes: Vec<NodeId>,
    pub edges: Vec<Edge>,
}

impl Path {
    /// Sum of link delays, accumulated from the root downward.
    pub fn delay_sum(&self) -> f64 {
        self.edges.iter().fold(0.0, |acc, e| acc + e.delay_ms)
    }
}

/// One path per leaf, in ascending leaf order.
pub fn root_to_leaf_paths(tree: &Tree) -> Vec<Path> {
    tree.leaves().into_iter().map(|l| tree.path_to(l)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(p: NodeId, c: NodeId) -> Edge {
        Edge::new(p, c, 10.0, 0.0)
    }

    #[test]
    fn star_validates() {
        assert!(validate_tree(3, &[e(0, 1), e(0, 2)]).is_ok());
    }

    #[test]
    fn two_parents_reported() {
        let report = validate_tree(3, &[e(0, 1), e(2, 1)]);
        let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        assert!(
            msgs.contains(&"node 1 has two parents".to_string()),
            "{msgs:?}"
        );
    }

    #[test]
    fn unreachable_reported() {
        let report = validate_tree(4, &[e(0, 1), e(2, 3)]);
        let msgs: Vec<String> = report.violations.iter().map(|v| v.to_string()).collect();
        assert!(
            msgs.contains(&"node 2 unreachable from root".to_string()),
            "{msgs:?}"
        );
        assert!(msgs.contains(&"node 3 unreachable from root".to_string()));
    }

    #[test]
    fn cycle_reported() {
        let report = validate_tree(4, &[e(0, 1), e(2, 3), e(3, 2)]);
        assert!(report
            .violations
            .iter()
            .any(|v| matches!(v, Violation::Cycle { .. })));
    }

    #[test]
    fn bad_attributes_reported() {
        let report = validate_tree(2, &[Edge::new(0, 1, 0.0, 1.0)]);
        assert_eq!(report.violations.len(), 2);
    }

    #[test]
    fn chain_paths() {
        let t = Tree::from_edges(4, vec![e(0, 1), e(1, 2), e(2, 3)]).unwrap();
        let paths = root_to_leaf_paths(&t);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].nodes, vec![0, 1, 2, 3]);
        assert_eq!(paths[0].delay_sum(), 30.0);
    }

    #[test]
    fn star_paths() {
        let t = Tree::from_edges(3, vec![e(0, 1), e(0, 2)]).unwrap();
        let leaves: Vec<_> = root_to_leaf_paths(&t).iter().map(|p| p.leaf).collect();
        assert_eq!(leaves, vec![1, 2]);
    }

    #[test]
    fn path_order_is_by_leaf_id() {
        let t = Tree::from_edges(5, vec![e(0, 4), e(1, 3), e(0, 1), e(1, 2)]).unwrap();
        let leaves: Vec<_> = root_to_leaf_paths(&t).iter().map(|p| p.leaf).collect();
        assert_eq!(leaves, vec![2, 3, 4]);
    }

    #[test]
    fn ancestry() {
        let t = Tree::from_edges(5, vec![e(0, 1), e(1, 2), e(1, 3), e(0, 4)]).unwrap();
        assert!(t.is_strict_ancestor(0, 3));
        assert!(t.is_strict_ancestor(1, 2));
        assert!(!t.is_strict_ancestor(1, 1));
        assert!(!t.is_strict_ancestor(4, 2));
        assert!(!t.is_strict_ancestor(2, 1));
        assert_eq!(t.candidates(), vec![1]);
        assert_eq!(t.edges_between(0, 2).len(), 2);
    }
}
