use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::tree::{format_sig6, NodeId};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SimError {
    #[error("at least one packet is required")]
    NoPackets,
    #[error("sending interval must be positive and finite, got {0}")]
    BadInterval(f64),
}

/// Per-leaf and per-packet delivery delays from one simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimStats {
    pub per_leaf_mean_ms: BTreeMap<NodeId, f64>,
    pub per_leaf_max_ms: BTreeMap<NodeId, f64>,
    /// Time until every leaf holds the packet, one entry per packet.
    pub per_packet_makespan_ms: Vec<f64>,
    pub packets: u64,
    pub seed: u64,
}

impl SimStats {
    pub(crate) fn from_sums(
        leaves: &[NodeId],
        sums: &[f64],
        maxima: &[f64],
        per_packet_makespan_ms: Vec<f64>,
        seed: u64,
    ) -> Self {
        let packets = per_packet_makespan_ms.len() as u64;
        SimStats {
            per_leaf_mean_ms: leaves
                .iter()
                .zip(sums)
                .map(|(&l, &s)| (l, s / packets as f64))
                .collect(),
            per_leaf_max_ms: leaves.iter().copied().zip(maxima.iter().copied()).collect(),
            per_packet_makespan_ms,
            packets,
            seed,
        }
    }

    pub fn mean_makespan_ms(&self) -> f64 {
        self.per_packet_makespan_ms.iter().sum::<f64>() / self.packets as f64
    }

    /// `packet,makespan_ms` followed by one row per packet.
    pub fn write_packet_csv(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "packet,makespan_ms")?;
        for (i, m) in self.per_packet_makespan_ms.iter().enumerate() {
            writeln!(out, "{i},{}", format_sig6(*m))?;
        }
        Ok(())
    }

    /// `leaf,mean_ms,max_ms` followed by one row per leaf.
    pub fn write_leaf_csv(&self, out: &mut impl Write) -> io::Result<()> {
        writeln!(out, "leaf,mean_ms,max_ms")?;
        for (leaf, mean) in &self.per_leaf_mean_ms {
            writeln!(
                out,
                "{leaf},{},{}",
                format_sig6(*mean),
                format_sig6(self.per_leaf_max_ms[leaf])
            )?;
        }
        Ok(())
    }
}
