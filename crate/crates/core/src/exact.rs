//! Integer-program semantics for makespan minimisation.
//!
//! Fixing the server set `y` forces the assignment `x`: each server and
//! leaf is governed by its nearest placed strict ancestor, and the section
//! count then follows. Minimising over every `(k - 1)`-subset of candidate
//! nodes is therefore an exact solution of the integer program. The checker
//! evaluates the seven constraints on arbitrary candidates so the claim can
//! be tested rather than assumed.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::delay_model::{
    makespan, segment_expected_delay, DelayEvaluator, DelayParams, Placement, Segment,
};
use crate::heuristics::place_long_path;
use crate::tree::{NodeId, Tree, ROOT};

/// Maps each non-root server and each leaf to the server that repairs it.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Assignment {
    pub pairs: BTreeMap<NodeId, NodeId>,
}

impl Assignment {
    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn governor(&self, node: NodeId) -> Option<NodeId> {
        self.pairs.get(&node).copied()
    }
}

pub fn derive_assignment(tree: &Tree, placement: &Placement) -> Assignment {
    let mut governor = vec![ROOT; tree.node_count()];
    let mut pairs = BTreeMap::new();
    for &v in &tree.preorder()[1..] {
        let p = tree.parent(v).expect("non-root");
        let gov = if placement.contains(p) {
            p
        } else {
            governor[p]
        };
        governor[v] = gov;
        if placement.contains(v) || tree.is_leaf(v) {
            pairs.insert(v, gov);
        }
    }
    Assignment { pairs }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintViolation {
    /// Constraint number, 1 through 7.
    pub constraint: u8,
    pub nodes: Vec<NodeId>,
    pub message: String,
}

impl fmt::Display for ConstraintViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "constraint ({}): {}", self.constraint, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConstraintReport {
    pub violations: Vec<ConstraintViolation>,
}

impl ConstraintReport {
    pub fn satisfied(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn violates(&self, constraint: u8) -> bool {
        self.violations.iter().any(|v| v.constraint == constraint)
    }
}

fn on_root_path(tree: &Tree, node: NodeId, leaf: NodeId) -> bool {
    node == leaf || tree.is_strict_ancestor(node, leaf)
}

/// Expected delay of each leaf as the constraint-(7) sum: every pair whose
/// endpoints both lie on the leaf's path, with the target above the source,
/// contributes the delay of the segment between them.
pub fn constraint7_delays(
    tree: &Tree,
    assignment: &Assignment,
    params: DelayParams,
) -> Vec<(NodeId, f64)> {
    let mut pair_delay: Vec<(NodeId, NodeId, f64)> = assignment
        .pairs
        .iter()
        .filter(|(&src, &dst)| src < tree.node_count() && tree.is_strict_ancestor(dst, src))
        .map(|(&src, &dst)| {
            let d = segment_expected_delay(&Segment::in_tree(tree, dst, src), params);
            (src, dst, d)
        })
        .collect();
    // Accumulate top-down, matching the order the model sums segments in.
    pair_delay.sort_by_key(|&(src, _, _)| (tree.depth(src), src));
    tree.leaves()
        .into_iter()
        .map(|leaf| {
            let total = pair_delay
                .iter()
                .filter(|(src, dst, _)| {
                    on_root_path(tree, *src, leaf) && on_root_path(tree, *dst, leaf)
                })
                .fold(0.0, |acc, (_, _, d)| acc + d);
            (leaf, total)
        })
        .collect()
}

/// Smallest makespan satisfying constraint (7) for this assignment.
pub fn mip_makespan(tree: &Tree, assignment: &Assignment, params: DelayParams) -> f64 {
    constraint7_delays(tree, assignment, params)
        .into_iter()
        .map(|(_, d)| d)
        .fold(0.0, f64::max)
}

pub fn check_mip_constraints(
    tree: &Tree,
    placement: &Placement,
    assignment: &Assignment,
    k: usize,
    makespan_bound_ms: f64,
    params: DelayParams,
) -> ConstraintReport {
    let mut violations = Vec::new();
    let mut push = |constraint: u8, nodes: Vec<NodeId>, message: String| {
        violations.push(ConstraintViolation {
            constraint,
            nodes,
            message,
        })
    };
    let n = tree.node_count();

    if placement.k() != k {
        push(
            1,
            placement.servers().iter().copied().collect(),
            format!("{} servers placed, expected {k}", placement.k()),
        );
    }
    for (&src, &dst) in &assignment.pairs {
        if src >= n || dst >= n {
            push(
                5,
                vec![src, dst],
                format!("pair {src}->{dst} names a node outside the tree"),
            );
            continue;
        }
        if !placement.contains(dst) {
            push(
                2,
                vec![src, dst],
                format!("{src} is repaired by {dst}, which is not a server"),
            );
        }
        if !(placement.contains(src) || tree.is_leaf(src)) {
            push(
                3,
                vec![src],
                format!("{src} is assigned but is neither a server nor a leaf"),
            );
        }
        if !tree.is_strict_ancestor(dst, src) {
            push(
                4,
                vec![src, dst],
                format!("{dst} is not an ancestor of {src}"),
            );
        } else {
            let between: Vec<NodeId> = tree
                .path_nodes(src)
                .into_iter()
                .filter(|&v| {
                    v != src && v != dst && tree.is_strict_ancestor(dst, v) && placement.contains(v)
                })
                .collect();
            if !between.is_empty() {
                let mut nodes = vec![src, dst];
                nodes.extend(&between);
                push(
                    4,
                    nodes,
                    format!(
                        "server {} lies strictly between {src} and {dst}",
                        between[0]
                    ),
                );
            }
        }
        if !(tree.is_strict_ancestor(dst, src) || tree.is_strict_ancestor(src, dst)) {
            push(
                5,
                vec![src, dst],
                format!("{src} and {dst} are not on a common root-to-leaf path"),
            );
        }
    }
    let m = tree.leaves().len();
    if assignment.len() + 1 != k + m {
        push(
            6,
            Vec::new(),
            format!(
                "{} assignment pairs, expected k + m - 1 = {}",
                assignment.len(),
                (k + m).saturating_sub(1)
            ),
        );
    }
    let mut over: Vec<(NodeId, f64)> = constraint7_delays(tree, assignment, params)
        .into_iter()
        .filter(|&(_, d)| d > makespan_bound_ms)
        .collect();
    over.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    for (leaf, d) in over {
        push(
            7,
            vec![leaf],
            format!("leaf {leaf} expected delay {d} exceeds makespan bound {makespan_bound_ms}"),
        );
    }
    ConstraintReport { violations }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExactError {
    #[error("refusing to enumerate {subsets} placements (budget {budget})")]
    BudgetExceeded { subsets: u128, budget: u64 },
    #[error("k = {k} is out of range 1..={max_k} for this tree")]
    BadK { k: usize, max_k: usize },
    #[error("makespan budget must be positive, got {0}")]
    BadBudget(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactOptions {
    /// Largest number of subsets one optimisation may evaluate.
    pub max_subsets: u64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        ExactOptions {
            max_subsets: 10_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalResult {
    pub placement: Placement,
    pub makespan_ms: f64,
    pub nodes_enumerated: u64,
}

/// `n choose r`, saturating at `u128::MAX`.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

pub fn exact_optimal(
    tree: &Tree,
    k: usize,
    params: DelayParams,
) -> Result<OptimalResult, ExactError> {
    exact_optimal_with(tree, k, params, ExactOptions::default())
}

pub fn exact_optimal_with(
    tree: &Tree,
    k: usize,
    params: DelayParams,
    options: ExactOptions,
) -> Result<OptimalResult, ExactError> {
    let candidates = tree.candidates();
    let max_k = candidates.len() + 1;
    if k == 0 || k > max_k {
        return Err(ExactError::BadK { k, max_k });
    }
    let r = k - 1;
    let subsets = binomial(candidates.len(), r);
    if subsets > options.max_subsets as u128 {
        return Err(ExactError::BudgetExceeded {
            subsets,
            budget: options.max_subsets,
        });
    }

    let best = if r == 0 {
        let m = DelayEvaluator::new(tree, params)
            .makespan(&Placement::root_only().mask(tree.node_count()));
        (m.makespan_ms, Vec::new())
    } else {
        // One task per leading candidate; lexicographic order inside a task
        // and across tasks makes the strict-improvement scan pick the
        // lexicographically smallest optimum.
        let c = candidates.len();
        (0..=c - r)
            .into_par_iter()
            .map(|first| best_with_prefix(tree, params, &candidates, first, r))
            .collect::<Vec<_>>()
            .into_iter()
            .fold((f64::INFINITY, Vec::new()), |acc, cand| {
                if cand.0 < acc.0 {
                    cand
                } else {
                    acc
                }
            })
    };
    let placement =
        Placement::new(tree, best.1.iter().copied()).expect("candidates are internal nodes");
    debug_assert_eq!(makespan(tree, &placement, params).makespan_ms, best.0);
    Ok(OptimalResult {
        placement,
        makespan_ms: best.0,
        nodes_enumerated: subsets as u64,
    })
}

/// Best `r`-combination of `candidates` whose smallest index is `first`.
fn best_with_prefix(
    tree: &Tree,
    params: DelayParams,
    candidates: &[NodeId],
    first: usize,
    r: usize,
) -> (f64, Vec<NodeId>) {
    let c = candidates.len();
    let rest = r - 1;
    let mut eval = DelayEvaluator::new(tree, params);
    let mut mask = vec![false; tree.node_count()];
    mask[ROOT] = true;
    mask[candidates[first]] = true;
    let mut tail: Vec<usize> = (first + 1..first + 1 + rest).collect();
    let mut best = (f64::INFINITY, Vec::new());
    loop {
        for &i in &tail {
            mask[candidates[i]] = true;
        }
        let m = eval.makespan(&mask).makespan_ms;
        if m < best.0 {
            let mut chosen = vec![candidates[first]];
            chosen.extend(tail.iter().map(|&i| candidates[i]));
            best = (m, chosen);
        }
        for &i in &tail {
            mask[candidates[i]] = false;
        }
        // Next combination in lexicographic order.
        let mut pos = rest;
        loop {
            if pos == 0 {
                return best;
            }
            pos -= 1;
            if tail[pos] < c - rest + pos {
                break;
            }
        }
        tail[pos] += 1;
        for j in pos + 1..rest {
            tail[j] = tail[j - 1] + 1;
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchMode {
    Exact,
    LongPath,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MinServers {
    Feasible {
        k: usize,
        placement: Placement,
        makespan_ms: f64,
    },
    /// Even a server on every internal node misses the budget.
    Infeasible { best_makespan_ms: f64 },
}

pub fn min_servers(
    tree: &Tree,
    makespan_budget_ms: f64,
    params: DelayParams,
    mode: SearchMode,
) -> Result<MinServers, ExactError> {
    min_servers_with(
        tree,
        makespan_budget_ms,
        params,
        mode,
        ExactOptions::default(),
    )
}

pub fn min_servers_with(
    tree: &Tree,
    makespan_budget_ms: f64,
    params: DelayParams,
    mode: SearchMode,
    options: ExactOptions,
) -> Result<MinServers, ExactError> {
    if makespan_budget_ms.is_nan() || makespan_budget_ms <= 0.0 {
        return Err(ExactError::BadBudget(makespan_budget_ms.to_string()));
    }
    let candidates = tree.candidates();
    let saturated = Placement::new(tree, candidates.iter().copied()).expect("internal nodes");
    let floor = makespan(tree, &saturated, params).makespan_ms;
    if floor > makespan_budget_ms {
        return Ok(MinServers::Infeasible {
            best_makespan_ms: floor,
        });
    }
    match mode {
        SearchMode::Exact => {
            for k in 1..=candidates.len() + 1 {
                let opt = exact_optimal_with(tree, k, params, options)?;
                if opt.makespan_ms <= makespan_budget_ms {
                    return Ok(MinServers::Feasible {
                        k,
                        placement: opt.placement,
                        makespan_ms: opt.makespan_ms,
                    });
                }
            }
        }
        SearchMode::LongPath => {
            // The greedy is incremental: the selection for k is a prefix of
            // the selection for any larger k.
            let full = place_long_path(tree, candidates.len() + 1, params);
            for take in 0..=full.selection_order.len() {
                let placement = Placement::new(tree, full.selection_order[..take].iter().copied())
                    .expect("internal nodes");
                let m = makespan(tree, &placement, params).makespan_ms;
                if m <= makespan_budget_ms {
                    return Ok(MinServers::Feasible {
                        k: take + 1,
                        placement,
                        makespan_ms: m,
                    });
                }
            }
        }
    }
    Ok(MinServers::Infeasible {
        best_makespan_ms: floor,
    })
}
