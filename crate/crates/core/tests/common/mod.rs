#![allow(dead_code)]

use hrm_core::{generate_tree, GenConfig, Tree};

/// Small xorshift generator so the oracles share no code with the crate's RNG.
pub struct XorShift(u64);

impl XorShift {
    pub fn new(seed: u64) -> Self {
        XorShift(seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) | 1)
    }

    pub fn next_u64(&mut self) -> u64 {
        let mut x = self.0;
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.0 = x;
        x
    }

    pub fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.unit()
    }
}

/// Expected delay of a segment by explicit summation over the number of
/// failed rounds `j` (each costing `G * t + L`, `G` geometric from zero).
pub fn series_delay(links: &[(f64, f64)], t: f64) -> f64 {
    let s: f64 = links.iter().map(|&(_, q)| 1.0 - q).product();
    let l: f64 = links.iter().map(|&(d, _)| d).sum();
    let mut mean_g = 0.0;
    let mut pg = s;
    for g in 0..20_000 {
        mean_g += g as f64 * pg;
        pg *= 1.0 - s;
        if pg < 1e-300 {
            break;
        }
    }
    let recovery = mean_g * t + l;
    let mut total = 0.0;
    let mut pj = s;
    for j in 0..20_000 {
        total += pj * (l + j as f64 * recovery);
        pj *= 1.0 - s;
        if pj < 1e-300 {
            break;
        }
    }
    total
}

/// One draw of the segment process: each round every link is tried in turn.
pub fn mc_segment_draw(links: &[(f64, f64)], t: f64, rng: &mut XorShift) -> f64 {
    let l: f64 = links.iter().map(|&(d, _)| d).sum();
    let mut elapsed = 0.0;
    loop {
        if links.iter().all(|&(_, q)| rng.unit() >= q) {
            return elapsed + l;
        }
        let mut g = 0u64;
        while !links.iter().all(|&(_, q)| rng.unit() >= q) {
            g += 1;
        }
        elapsed += g as f64 * t + l;
    }
}

pub fn gen(nodes: usize, seed: u64) -> Tree {
    generate_tree(&GenConfig::new(nodes, seed)).expect("valid config")
}
