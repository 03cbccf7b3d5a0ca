//! Single-run auction accounting.
//!
//! Everything here works with the reduced two-player view of a sealed-bid
//! second-price auction: our bid `b_t` against the highest competing bid
//! `m_t`. We win iff `b_t > m_t` (ties lose), pay `m_t` on a win, and only
//! then observe the good's value `v_t`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AuctionError {
    #[error("bid {0} outside [0, 1]")]
    BidOutOfRange(f64),
    #[error("value {0} outside [0, 1]")]
    ValueOutOfRange(f64),
    #[error("opponent bid must lie in (0, 1], got {0}")]
    ZeroOpponentBid(f64),
    #[error("sequence length mismatch: {values} values vs {bids} opponent bids")]
    LengthMismatch { values: usize, bids: usize },
    #[error("empty sequence")]
    Empty,
    #[error("round {got} appended after round {last}; rounds must be consecutive from 1")]
    OutOfSequence { last: u64, got: u64 },
    #[error("round {0}: observed value present on a lost auction or missing on a won one")]
    FeedbackMismatch(u64),
}

/// A bid (ours or the opponents' maximum) in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Bid(f64);

impl Bid {
    pub const ZERO: Bid = Bid(0.0);
    pub const ONE: Bid = Bid(1.0);

    pub fn new(value: f64) -> Result<Self, AuctionError> {
        if (0.0..=1.0).contains(&value) {
            Ok(Bid(value))
        } else {
            Err(AuctionError::BidOutOfRange(value))
        }
    }

    /// Clamps into `[0, 1]`. NaN maps to zero.
    pub fn saturating(value: f64) -> Self {
        if value.is_nan() {
            Bid(0.0)
        } else {
            Bid(value.clamp(0.0, 1.0))
        }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.0
    }

    /// True when this bid beats `other` (strictly).
    #[inline]
    pub fn beats(self, other: Bid) -> bool {
        self.0 > other.0
    }
}

impl TryFrom<f64> for Bid {
    type Error = AuctionError;

    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Bid::new(value)
    }
}

impl From<Bid> for f64 {
    fn from(b: Bid) -> f64 {
        b.0
    }
}

impl fmt::Display for Bid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Half-open interval `(lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    #[inline]
    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x <= self.hi
    }

    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo.max(other.lo) < self.hi.min(other.hi)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}]", self.lo, self.hi)
    }
}

/// What one auction round produced, from the bidder's side.
///
/// Constructed through [`RoundOutcome::resolve`], which decides the winner
/// and hides the value on a loss, so a strategy handed a `RoundOutcome`
/// cannot see `v_t` unless it won.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundOutcome {
    t: u64,
    bid: Bid,
    opponent_max: Bid,
    won: bool,
    observed_value: Option<f64>,
}

impl RoundOutcome {
    /// Settles round `t`: the value is revealed only if `bid > opponent_max`.
    pub fn resolve(t: u64, bid: Bid, opponent_max: Bid, value: f64) -> Self {
        let won = bid.beats(opponent_max);
        RoundOutcome {
            t,
            bid,
            opponent_max,
            won,
            observed_value: won.then_some(value),
        }
    }

    /// Rebuilds an outcome from stored fields, checking the feedback rule.
    pub fn from_parts(
        t: u64,
        bid: Bid,
        opponent_max: Bid,
        won: bool,
        observed_value: Option<f64>,
    ) -> Result<Self, AuctionError> {
        if won != bid.beats(opponent_max) || won != observed_value.is_some() {
            return Err(AuctionError::FeedbackMismatch(t));
        }
        Ok(RoundOutcome {
            t,
            bid,
            opponent_max,
            won,
            observed_value,
        })
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn bid(&self) -> Bid {
        self.bid
    }

    pub fn opponent_max(&self) -> Bid {
        self.opponent_max
    }

    pub fn won(&self) -> bool {
        self.won
    }

    pub fn observed_value(&self) -> Option<f64> {
        self.observed_value
    }

    /// `g(b_t, t)`: the value on a win, the price `m_t` on a loss.
    pub fn realized_shifted_gain(&self) -> f64 {
        match self.observed_value {
            Some(v) => v,
            None => self.opponent_max.value(),
        }
    }

    /// `(v_t - m_t)` on a win, zero otherwise.
    pub fn realized_utility(&self) -> f64 {
        match self.observed_value {
            Some(v) => v - self.opponent_max.value(),
            None => 0.0,
        }
    }
}

/// Shifted gain `g(b, t) = (v - m) 1{b > m} + m`, which is nonnegative.
pub fn shifted_gain(bid: Bid, v: f64, m: Bid) -> Result<f64, AuctionError> {
    if m.value() <= 0.0 {
        return Err(AuctionError::ZeroOpponentBid(m.value()));
    }
    if !(0.0..=1.0).contains(&v) {
        return Err(AuctionError::ValueOutOfRange(v));
    }
    Ok(raw_utility(bid, v, m) + m.value())
}

/// Net utility of the auction: `(v - m) 1{b > m}`. Can be negative.
#[inline]
pub fn raw_utility(bid: Bid, v: f64, m: Bid) -> f64 {
    if bid.beats(m) {
        v - m.value()
    } else {
        0.0
    }
}

/// Expected instantaneous regret against the truthful bid when the value
/// mean `v_mean` is known: `(v - m)(1{v > m} - 1{b > m})`. Never negative.
#[inline]
pub fn pseudo_regret_increment(v_mean: f64, m: Bid, bid: Bid) -> f64 {
    let m = m.value();
    let best = if v_mean > m { 1.0 } else { 0.0 };
    let ours = if bid.value() > m { 1.0 } else { 0.0 };
    (v_mean - m) * (best - ours)
}

/// One cell of the piecewise-constant map `b -> sum_t (v_t - m_t) 1{b > m_t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityCell {
    pub interval: Interval,
    pub utility: f64,
}

/// Cumulative utility of every fixed bid over a whole sequence.
///
/// Cells are ordered left to right and cover `(0, 1]`; the first cell
/// `(0, min m]` (never winning) has utility exactly 0 and also stands for
/// the bid `b = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityProfile {
    cells: Vec<UtilityCell>,
}

impl UtilityProfile {
    pub fn build(values: &[f64], opponent_bids: &[Bid]) -> Result<Self, AuctionError> {
        if values.len() != opponent_bids.len() {
            return Err(AuctionError::LengthMismatch {
                values: values.len(),
                bids: opponent_bids.len(),
            });
        }
        if values.is_empty() {
            return Err(AuctionError::Empty);
        }
        let mut pairs = Vec::with_capacity(values.len());
        for (&v, &m) in values.iter().zip(opponent_bids) {
            if m.value() <= 0.0 {
                return Err(AuctionError::ZeroOpponentBid(m.value()));
            }
            if !(0.0..=1.0).contains(&v) {
                return Err(AuctionError::ValueOutOfRange(v));
            }
            pairs.push((m.value(), v - m.value()));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut cells = Vec::new();
        let mut lo = 0.0;
        let mut running = 0.0;
        let mut i = 0;
        while i < pairs.len() {
            let m = pairs[i].0;
            cells.push(UtilityCell {
                interval: Interval::new(lo, m),
                utility: running,
            });
            while i < pairs.len() && pairs[i].0 == m {
                running += pairs[i].1;
                i += 1;
            }
            lo = m;
        }
        if lo < 1.0 {
            cells.push(UtilityCell {
                interval: Interval::new(lo, 1.0),
                utility: running,
            });
        }
        Ok(UtilityProfile { cells })
    }

    pub fn cells(&self) -> &[UtilityCell] {
        &self.cells
    }

    /// Cumulative utility of the fixed bid `b`.
    pub fn at(&self, b: f64) -> f64 {
        if b <= self.cells[0].interval.hi {
            return 0.0;
        }
        let idx = self.cells.partition_point(|c| c.interval.hi < b);
        self.cells[idx.min(self.cells.len() - 1)].utility
    }

    /// The leftmost cell with maximal utility.
    pub fn best(&self) -> HindsightBest {
        let mut best = self.cells[0];
        for c in &self.cells[1..] {
            if c.utility > best.utility {
                best = *c;
            }
        }
        HindsightBest {
            best_gain: best.utility,
            witness: best.interval,
        }
    }
}

/// Best fixed bid in hindsight: its total net utility and a cell of bids
/// attaining it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HindsightBest {
    pub best_gain: f64,
    pub witness: Interval,
}

/// Exact maximum over `b in [0, 1]` of `sum_t (v_t - m_t) 1{b > m_t}`.
pub fn hindsight_best_fixed_bid(
    values: &[f64],
    opponent_bids: &[Bid],
) -> Result<HindsightBest, AuctionError> {
    Ok(UtilityProfile::build(values, opponent_bids)?.best())
}

/// Append-only record of a run from the bidder's side.
#[derive(Debug, Clone, Default)]
pub struct GainLedger {
    rounds: Vec<RoundOutcome>,
    cumulative_realized_gain: f64,
    value_mean: Option<f64>,
    cumulative_instant_regret: f64,
}

impl GainLedger {
    /// `value_mean` enables pseudo-regret tracking.
    pub fn new(value_mean: Option<f64>) -> Self {
        GainLedger {
            value_mean,
            ..Default::default()
        }
    }

    pub fn push(&mut self, outcome: RoundOutcome) -> Result<(), AuctionError> {
        let last = self.rounds.len() as u64;
        if outcome.t() != last + 1 {
            return Err(AuctionError::OutOfSequence {
                last,
                got: outcome.t(),
            });
        }
        self.cumulative_realized_gain += outcome.realized_shifted_gain();
        if let Some(v) = self.value_mean {
            self.cumulative_instant_regret +=
                pseudo_regret_increment(v, outcome.opponent_max(), outcome.bid());
        }
        self.rounds.push(outcome);
        Ok(())
    }

    pub fn rounds(&self) -> &[RoundOutcome] {
        &self.rounds
    }

    pub fn cumulative_realized_gain(&self) -> f64 {
        self.cumulative_realized_gain
    }

    pub fn cumulative_instant_regret(&self) -> Option<f64> {
        self.value_mean.map(|_| self.cumulative_instant_regret)
    }
}
