//! Direct sampler of the per-segment retransmission process.
//!
//! One attempt crosses the segment with probability `s` and then takes `L`.
//! A failed attempt costs one inter-arrival `N = G * t + L`, where `G` is
//! the number of further failed packets before the next success
//! (geometric on `{0, 1, ...}`), after which the process starts over.

use rand_core::RngCore;
use rayon::prelude::*;

use super::stats::{SimError, SimStats};
use crate::delay_model::{DelayParams, Placement, Segment};
use crate::rng::{stream, unit_f64};
use crate::tree::{NodeId, Tree, ROOT};

const CHUNK: u64 = 1024;

/// Failures before the first success, by inversion.
fn geometric_failures(success: f64, rng: &mut impl RngCore) -> f64 {
    let u = 1.0 - unit_f64(rng);
    (u.ln() / (-success).ln_1p()).floor()
}

fn sample(success: f64, latency_ms: f64, t_ms: f64, rng: &mut impl RngCore) -> f64 {
    let mut elapsed = 0.0;
    loop {
        if unit_f64(rng) < success {
            return elapsed + latency_ms;
        }
        let waits = geometric_failures(success, rng);
        elapsed += waits * t_ms + latency_ms;
    }
}

/// One draw of the delivery delay over `seg`.
pub fn sample_segment_delay(seg: &Segment, params: DelayParams, rng: &mut impl RngCore) -> f64 {
    sample(seg.success(), seg.latency_ms(), params.t_ms(), rng)
}

/// Samples every leaf's delay as the sum of independent segment draws.
///
/// A segment ending at a server is drawn once per packet and shared by all
/// leaves below it, so per-packet makespans respect the tree structure.
/// Packet `i` uses its own stream keyed by `(seed, i)`.
pub fn simulate_recursion(
    tree: &Tree,
    placement: &Placement,
    params: DelayParams,
    packets: u64,
    seed: u64,
) -> Result<SimStats, SimError> {
    if packets == 0 {
        return Err(SimError::NoPackets);
    }
    let n = tree.node_count();
    // (endpoint, governing server, success, latency), parents first.
    let mut governor = vec![ROOT; n];
    let mut open_success = vec![1.0; n];
    let mut open_latency = vec![0.0; n];
    let mut segments: Vec<(NodeId, NodeId, f64, f64)> = Vec::new();
    for &v in &tree.preorder()[1..] {
        let e = tree.incoming_edge(v).expect("non-root");
        let p = e.parent;
        let gov = if placement.contains(p) {
            p
        } else {
            governor[p]
        };
        let (s0, l0) = if placement.contains(p) {
            (1.0, 0.0)
        } else {
            (open_success[p], open_latency[p])
        };
        governor[v] = gov;
        open_success[v] = s0 * (1.0 - e.loss);
        open_latency[v] = l0 + e.delay_ms;
        if placement.contains(v) || tree.is_leaf(v) {
            segments.push((v, gov, open_success[v], open_latency[v]));
        }
    }
    let leaves = tree.leaves();
    let t_ms = params.t_ms();

    let chunks: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..packets.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(packets);
            let mut arrival = vec![0.0; n];
            let mut sums = vec![0.0; leaves.len()];
            let mut maxima = vec![f64::NEG_INFINITY; leaves.len()];
            let mut spans = Vec::with_capacity((end - start) as usize);
            for packet in start..end {
                let mut rng = stream(seed, &[packet]);
                for &(v, gov, s, l) in &segments {
                    arrival[v] = arrival[gov] + sample(s, l, t_ms, &mut rng);
                }
                let mut span = 0.0f64;
                for (i, &leaf) in leaves.iter().enumerate() {
                    let d = arrival[leaf];
                    sums[i] += d;
                    maxima[i] = maxima[i].max(d);
                    span = span.max(d);
                }
                spans.push(span);
            }
            (sums, maxima, spans)
        })
        .collect();

    let mut sums = vec![0.0; leaves.len()];
    let mut maxima = vec![f64::NEG_INFINITY; leaves.len()];
    let mut spans = Vec::with_capacity(packets as usize);
    for (s, m, p) in chunks {
        for i in 0..leaves.len() {
            sums[i] += s[i];
            maxima[i] = maxima[i].max(m[i]);
        }
        spans.extend(p);
    }
    Ok(SimStats::from_sums(&leaves, &sums, &maxima, spans, seed))
}
