//! Line-oriented `hrmtree v1` text format.
//!
//! ```text
//! hrmtree v1
//! <node_count>
//! <parent> <child> <delay_ms> <loss>     (node_count - 1 lines)
//! ```
//!
//! Lines whose first non-blank character is `#` are comments. Blank lines
//! are ignored.

use std::fmt::Write as _;

use super::{validate_tree, Edge, NodeId, Tree, Violation, ROOT};

pub const MAGIC: &str = "hrmtree v1";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError {
            line,
            message: message.into(),
        }
    }
}

pub fn parse_tree(text: &str) -> Result<Tree, ParseError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (magic_line, magic) = lines
        .next()
        .ok_or_else(|| ParseError::new(1, "empty input, expected header"))?;
    if magic != MAGIC {
        return Err(ParseError::new(
            magic_line,
            format!("bad header {magic:?}, expected {MAGIC:?}"),
        ));
    }
    let (count_line, count) = lines
        .next()
        .ok_or_else(|| ParseError::new(magic_line, "missing node count"))?;
    let node_count: usize = count
        .parse()
        .map_err(|_| ParseError::new(count_line, format!("bad node count {count:?}")))?;
    if node_count == 0 {
        return Err(ParseError::new(count_line, "node count must be positive"));
    }

    let mut edges = Vec::with_capacity(node_count - 1);
    let mut edge_lines = Vec::with_capacity(node_count - 1);
    let mut parent_line: Vec<Option<usize>> = vec![None; node_count];
    let mut last_line = count_line;
    for (line, content) in lines {
        last_line = line;
        let fields: Vec<&str> = content.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(ParseError::new(
                line,
                format!("expected 4 fields, found {}", fields.len()),
            ));
        }
        let parse_id = |s: &str| -> Result<NodeId, ParseError> {
            let id: NodeId = s
                .parse()
                .map_err(|_| ParseError::new(line, format!("bad node id {s:?}")))?;
            if id >= node_count {
                return Err(ParseError::new(
                    line,
                    format!("node {id} out of range 0..{node_count}"),
                ));
            }
            Ok(id)
        };
        let parse_real = |s: &str, what: &str| -> Result<f64, ParseError> {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| ParseError::new(line, format!("bad {what} {s:?}")))
        };
        let parent = parse_id(fields[0])?;
        let child = parse_id(fields[1])?;
        let delay_ms = parse_real(fields[2], "delay")?;
        let loss = parse_real(fields[3], "loss")?;

        if parent == child {
            return Err(ParseError::new(line, format!("self-loop on node {child}")));
        }
        if child == ROOT {
            return Err(ParseError::new(line, "root 0 cannot be a child"));
        }
        if delay_ms <= 0.0 {
            return Err(ParseError::new(line, "delay must be > 0"));
        }
        if !(0.0..1.0).contains(&loss) {
            return Err(ParseError::new(line, "loss out of range [0,1)"));
        }
        if let Some(first) = parent_line[child] {
            return Err(ParseError::new(
                line,
                format!("duplicate child {child} (first seen on line {first})"),
            ));
        }
        parent_line[child] = Some(line);
        edges.push(Edge::new(parent, child, delay_ms, loss));
        edge_lines.push(line);
    }

    if edges.len() != node_count - 1 {
        return Err(ParseError::new(
            last_line,
            format!(
                "expected {} edge lines, found {}",
                node_count - 1,
                edges.len()
            ),
        ));
    }

    // Remaining structural problems are cycles or disconnected nodes.
    let report = validate_tree(node_count, &edges);
    if let Some(v) = report.violations.first() {
        let node = match v {
            Violation::Cycle { node } | Violation::Unreachable { node } => Some(*node),
            _ => None,
        };
        let line = node.and_then(|n| parent_line[n]).unwrap_or(count_line);
        let message = match v {
            Violation::Cycle { node } => format!("cycle through node {node}"),
            Violation::Unreachable { node } => format!("disconnected node {node}"),
            other => other.to_string(),
        };
        return Err(ParseError::new(line, message));
    }
    Ok(Tree::from_edges(node_count, edges).expect("validated above"))
}

/// Printed with at most six significant digits, trailing zeros dropped.
pub fn format_sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("valid float literal");
    format!("{rounded}")
}

fn format_loss(loss: f64) -> String {
    let short = format_sig6(loss);
    // Rounding must not push a valid loss up to 1.
    if short.parse::<f64>().is_ok_and(|v| v >= 1.0) {
        format!("{loss}")
    } else {
        short
    }
}

pub fn serialize_tree(tree: &Tree) -> String {
    let mut out = String::new();
    out.push_str(MAGIC);
    out.push('\n');
    let _ = writeln!(out, "{}", tree.node_count());
    for e in tree.edges() {
        let _ = writeln!(
            out,
            "{} {} {} {}",
            e.parent,
            e.child,
            format_sig6(e.delay_ms),
            format_loss(e.loss)
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_star() {
        let t = parse_tree("hrmtree v1\n3\n0 1 10.0 0.0\n0 2 30.0 0.0").unwrap();
        assert_eq!(t.node_count(), 3);
        assert_eq!(t.leaves(), vec![1, 2]);
    }

    #[test]
    fn loss_one_rejected() {
        let err = parse_tree("hrmtree v1\n3\n0 1 10.0 1.0\n0 2 30.0 0.0").unwrap_err();
        assert_eq!(err.line, 3);
        assert_eq!(err.message, "loss out of range [0,1)");
    }

    #[test]
    fn chain_has_single_leaf() {
        let t = parse_tree("hrmtree v1\n4\n0 1 10 0.1\n1 2 10 0.1\n2 3 10 0.2\n").unwrap();
        assert_eq!(t.leaves(), vec![3]);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = "# generated\nhrmtree v1\n\n2\n# edges\n0 1 5 0\n";
        assert_eq!(parse_tree(text).unwrap().node_count(), 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let cases = [
            ("hrmtree v2\n2\n0 1 1 0\n", 1, "bad header"),
            ("hrmtree v1\nx\n", 2, "bad node count"),
            ("hrmtree v1\n3\n0 1 1 0\n0 1 2 0\n", 4, "duplicate child 1"),
            ("hrmtree v1\n2\n0 1 0 0\n", 3, "delay must be > 0"),
            ("hrmtree v1\n2\n0 1 -3 0\n", 3, "delay must be > 0"),
            ("hrmtree v1\n2\n1 1 2 0\n", 3, "self-loop"),
            ("hrmtree v1\n2\n0 1 2\n", 3, "expected 4 fields"),
            ("hrmtree v1\n3\n0 1 2 0\n", 3, "expected 2 edge lines"),
            ("hrmtree v1\n2\n0 5 2 0\n", 3, "out of range"),
            ("hrmtree v1\n2\n0 1 2 -0.1\n", 3, "loss out of range"),
            ("hrmtree v1\n2\n1 0 2 0\n", 3, "root 0 cannot be a child"),
        ];
        for (text, line, needle) in cases {
            let err = parse_tree(text).unwrap_err();
            assert_eq!(err.line, line, "{text:?} -> {err}");
            assert!(err.message.contains(needle), "{text:?} -> {err}");
        }
    }

    #[test]
    fn cycle_detected() {
        let err = parse_tree("hrmtree v1\n4\n0 1 1 0\n2 3 1 0\n3 2 1 0\n").unwrap_err();
        assert!(err.message.contains("cycle"), "{err}");
        assert!(err.line == 4 || err.line == 5);
    }

    #[test]
    fn serialization_is_sorted_and_rounded() {
        let t = parse_tree("hrmtree v1\n3\n0 2 30.123456789 0.05\n0 1 10 0\n").unwrap();
        assert_eq!(
            serialize_tree(&t),
            "hrmtree v1\n3\n0 1 10 0\n0 2 30.1235 0.05\n"
        );
    }

    #[test]
    fn near_one_loss_stays_parseable() {
        let t = Tree::from_edges(2, vec![Edge::new(0, 1, 1.0, 0.9999999)]).unwrap();
        let back = parse_tree(&serialize_tree(&t)).unwrap();
        assert!(back.incoming_edge(1).unwrap().loss < 1.0);
    }

    #[test]
    fn sig6() {
        assert_eq!(format_sig6(39.071711629), "39.0717");
        assert_eq!(format_sig6(0.000123456789), "0.000123457");
        assert_eq!(format_sig6(16.0), "16");
        assert_eq!(format_sig6(0.0), "0");
    }
}
