//! Packet-level discrete-event simulation of local recovery.
//!
//! The sender emits packet `p` at `p * interval`. A server that first holds
//! a packet multicasts it through its subgroup: non-server interior nodes
//! relay it and each link drops it independently at its loss rate. Servers
//! and leaves are the subgroup's receivers. A receiver notices that packet
//! `p` is missing when a transmission of a later packet arrives from its
//! server that was sent after the server last sent `p`; the NACK travels
//! out of band with no delay or loss, and the server retransmits `p` to its
//! whole subgroup. Receivers that already hold a packet ignore duplicates.
//! A NACK to a server that does not yet hold the packet is answered by the
//! server's own forwarding once the packet arrives.
//!
//! After the last real packet the sender keeps emitting unnumbered filler
//! packets at the same rate until every leaf holds every real packet, so
//! trailing losses remain detectable. Fillers are never recovered.
//!
//! Each loss draw is keyed by `(seed, packet, link, attempt)`, so results do
//! not depend on event processing order.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap, HashMap};

use super::stats::{SimError, SimStats};
use crate::delay_model::Placement;
use crate::rng::keyed_unit;
use crate::tree::{NodeId, Tree, ROOT};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventSimConfig {
    pub packets: u64,
    pub interval_ms: f64,
    pub seed: u64,
}

impl EventSimConfig {
    pub fn new(packets: u64, interval_ms: f64, seed: u64) -> Result<Self, SimError> {
        let cfg = EventSimConfig {
            packets,
            interval_ms,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<(), SimError> {
        if self.packets == 0 {
            return Err(SimError::NoPackets);
        }
        if !(self.interval_ms > 0.0 && self.interval_ms.is_finite()) {
            return Err(SimError::BadInterval(self.interval_ms));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Emit {
        packet: u64,
    },
    Arrive {
        node: NodeId,
        packet: u64,
        /// Send time of this transmission at its server.
        sent_at: f64,
        /// Time since the packet left the sender.
        age: f64,
    },
}

#[derive(Debug, Clone, Copy)]
struct Event {
    time: f64,
    seq: u64,
    kind: Kind,
}

impl PartialEq for Event {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Event {}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    // Reversed: BinaryHeap pops the earliest event, FIFO among equal times.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then(other.seq.cmp(&self.seq))
    }
}

struct Sim<'a> {
    tree: &'a Tree,
    cfg: EventSimConfig,
    is_server: Vec<bool>,
    is_receiver: Vec<bool>,
    governor: Vec<NodeId>,
    /// First-arrival age per receiver and real packet; NaN while missing.
    held_age: Vec<Vec<f64>>,
    /// Last send time per server and real packet; NaN before it holds it.
    last_sent: Vec<Vec<f64>>,
    highest_seen: Vec<Option<u64>>,
    missing: Vec<BTreeSet<u64>>,
    attempts: HashMap<(u64, NodeId), u64>,
    undelivered: u64,
    queue: BinaryHeap<Event>,
    seq: u64,
}

impl<'a> Sim<'a> {
    fn new(tree: &'a Tree, placement: &Placement, cfg: EventSimConfig) -> Self {
        let n = tree.node_count();
        let packets = cfg.packets as usize;
        let is_server = placement.mask(n);
        let mut is_receiver = vec![false; n];
        let mut governor = vec![ROOT; n];
        for &v in &tree.preorder()[1..] {
            let p = tree.parent(v).expect("non-root");
            governor[v] = if is_server[p] { p } else { governor[p] };
            is_receiver[v] = is_server[v] || tree.is_leaf(v);
        }
        let held_age = (0..n)
            .map(|v| {
                if is_receiver[v] {
                    vec![f64::NAN; packets]
                } else {
                    Vec::new()
                }
            })
            .collect();
        let last_sent = (0..n)
            .map(|v| {
                if is_server[v] {
                    vec![f64::NAN; packets]
                } else {
                    Vec::new()
                }
            })
            .collect();
        Sim {
            tree,
            cfg,
            is_server,
            is_receiver,
            governor,
            held_age,
            last_sent,
            highest_seen: vec![None; n],
            missing: vec![BTreeSet::new(); n],
            attempts: HashMap::new(),
            undelivered: tree.leaves().len() as u64 * cfg.packets,
            queue: BinaryHeap::new(),
            seq: 0,
        }
    }

    fn push(&mut self, time: f64, kind: Kind) {
        self.queue.push(Event {
            time,
            seq: self.seq,
            kind,
        });
        self.seq += 1;
    }

    fn is_real(&self, packet: u64) -> bool {
        packet < self.cfg.packets
    }

    /// Sends `packet` from `node` across each outgoing link.
    fn transmit(&mut self, now: f64, node: NodeId, packet: u64, sent_at: f64, age: f64) {
        let tree = self.tree;
        for &child in tree.children(node) {
            let edge = tree.incoming_edge(child).expect("child");
            let attempt = self.attempts.entry((packet, child)).or_insert(0);
            let draw = keyed_unit(self.cfg.seed, &[packet, child as u64, *attempt]);
            *attempt += 1;
            if draw >= edge.loss {
                self.push(
                    now + edge.delay_ms,
                    Kind::Arrive {
                        node: child,
                        packet,
                        sent_at,
                        age: age + edge.delay_ms,
                    },
                );
            }
        }
    }

    fn holds(&self, node: NodeId, packet: u64) -> bool {
        !self.held_age[node][packet as usize].is_nan()
    }

    fn emit(&mut self, now: f64, packet: u64) {
        if self.is_real(packet) {
            self.last_sent[ROOT][packet as usize] = now;
        }
        self.transmit(now, ROOT, packet, now, 0.0);
        let next = packet + 1;
        if next < self.cfg.packets || self.undelivered > 0 {
            self.push(
                next as f64 * self.cfg.interval_ms,
                Kind::Emit { packet: next },
            );
        }
    }

    fn arrive(&mut self, now: f64, node: NodeId, packet: u64, sent_at: f64, age: f64) {
        if !self.is_receiver[node] {
            self.transmit(now, node, packet, sent_at, age);
            return;
        }
        let real = self.is_real(packet);
        let first = !real || !self.holds(node, packet);
        if real && first {
            self.held_age[node][packet as usize] = age;
            if self.tree.is_leaf(node) {
                self.undelivered -= 1;
            }
        }
        if first && self.is_server[node] {
            if real {
                self.last_sent[node][packet as usize] = now;
            }
            self.transmit(now, node, packet, now, age);
        }
        self.detect_gaps(now, node, packet, sent_at);
    }

    fn detect_gaps(&mut self, now: f64, node: NodeId, packet: u64, sent_at: f64) {
        let real_end = self.cfg.packets;
        let from = self.highest_seen[node].map_or(0, |h| h + 1);
        if self.highest_seen[node].is_none_or(|h| packet > h) {
            for p in from..packet.min(real_end) {
                if !self.holds(node, p) {
                    self.missing[node].insert(p);
                }
            }
            self.highest_seen[node] = Some(packet);
        }
        self.missing[node].remove(&packet);

        let server = self.governor[node];
        let nacked: Vec<u64> = self.missing[node]
            .range(..packet)
            .copied()
            .filter(|&p| self.last_sent[server][p as usize] < sent_at)
            .collect();
        for p in nacked {
            self.last_sent[server][p as usize] = now;
            let age = now - p as f64 * self.cfg.interval_ms;
            self.transmit(now, server, p, now, age);
        }
    }

    fn run(mut self) -> SimStats {
        self.push(0.0, Kind::Emit { packet: 0 });
        while let Some(ev) = self.queue.pop() {
            match ev.kind {
                Kind::Emit { packet } => self.emit(ev.time, packet),
                Kind::Arrive {
                    node,
                    packet,
                    sent_at,
                    age,
                } => self.arrive(ev.time, node, packet, sent_at, age),
            }
        }
        let leaves = self.tree.leaves();
        let packets = self.cfg.packets as usize;
        let mut sums = vec![0.0; leaves.len()];
        let mut maxima = vec![f64::NEG_INFINITY; leaves.len()];
        let mut spans = vec![0.0f64; packets];
        for (i, &leaf) in leaves.iter().enumerate() {
            for (p, &age) in self.held_age[leaf].iter().enumerate() {
                sums[i] += age;
                maxima[i] = maxima[i].max(age);
                spans[p] = spans[p].max(age);
            }
        }
        SimStats::from_sums(&leaves, &sums, &maxima, spans, self.cfg.seed)
    }
}

pub fn simulate_event(
    tree: &Tree,
    placement: &Placement,
    config: EventSimConfig,
) -> Result<SimStats, SimError> {
    config.validate()?;
    Ok(Sim::new(tree, placement, config).run())
}
