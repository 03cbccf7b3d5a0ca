//! Running hindsight regret: after every round, the best fixed bid's
//! cumulative utility on the prefix so far.

use crate::auction::{AuctionError, Bid};

/// Max-plus segment tree supporting range add and a global maximum.
struct RangeAddMax {
    n: usize,
    max: Vec<f64>,
    lazy: Vec<f64>,
}

impl RangeAddMax {
    fn new(init: &[f64]) -> Self {
        let n = init.len();
        let mut tree = RangeAddMax {
            n,
            max: vec![0.0; 4 * n],
            lazy: vec![0.0; 4 * n],
        };
        tree.build(1, 0, n - 1, init);
        tree
    }

    fn build(&mut self, node: usize, lo: usize, hi: usize, init: &[f64]) {
        if lo == hi {
            self.max[node] = init[lo];
            return;
        }
        let mid = (lo + hi) / 2;
        self.build(2 * node, lo, mid, init);
        self.build(2 * node + 1, mid + 1, hi, init);
        self.max[node] = self.max[2 * node].max(self.max[2 * node + 1]);
    }

    fn add(&mut self, from: usize, to: usize, x: f64) {
        self.add_at(1, 0, self.n - 1, from, to, x);
    }

    fn add_at(&mut self, node: usize, lo: usize, hi: usize, from: usize, to: usize, x: f64) {
        if to < lo || hi < from {
            return;
        }
        if from <= lo && hi <= to {
            self.max[node] += x;
            self.lazy[node] += x;
            return;
        }
        let mid = (lo + hi) / 2;
        self.add_at(2 * node, lo, mid, from, to, x);
        self.add_at(2 * node + 1, mid + 1, hi, from, to, x);
        self.max[node] = self.lazy[node] + self.max[2 * node].max(self.max[2 * node + 1]);
    }

    fn global_max(&self) -> f64 {
        self.max[1]
    }
}

/// `out[t]` is `max_b Σ_{s ≤ t+1} (v_s - m_s) 1{b > m_s}` over `b ∈ [0, 1]`.
pub fn prefix_hindsight_best(values: &[f64], opponent_bids: &[Bid]) -> Result<Vec<f64>, AuctionError> {
    if values.len() != opponent_bids.len() {
        return Err(AuctionError::LengthMismatch {
            values: values.len(),
            bids: opponent_bids.len(),
        });
    }
    if values.is_empty() {
        return Err(AuctionError::Empty);
    }
    let mut levels: Vec<f64> = opponent_bids.iter().map(|m| m.value()).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    // Cell j ≥ 1 holds bids in (levels[j-1], levels[j]] (or (levels[k-1], 1]
    // for j = k) and wins every m at rank < j. Cell 0 never wins.
    let k = levels.len();
    let mut init = vec![0.0; k + 1];
    if levels[k - 1] >= 1.0 {
        init[k] = f64::NEG_INFINITY;
    }
    let mut tree = RangeAddMax::new(&init);
    let mut out = Vec::with_capacity(values.len());
    for (v, m) in values.iter().zip(opponent_bids) {
        let rank = levels.partition_point(|&x| x < m.value());
        if rank < k {
            tree.add(rank + 1, k, v - m.value());
        }
        out.push(tree.global_max());
    }
    Ok(out)
}
