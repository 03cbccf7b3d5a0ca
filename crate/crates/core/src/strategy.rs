//! The bidder interface shared by every strategy, plus two fixed-bid
//! baselines.

use rand::RngCore;
use thiserror::Error;

use crate::auction::{Bid, RoundOutcome};
use crate::partition::IntervalPartition;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StrategyError {
    #[error("round {got} observed after round {expected_prev}")]
    OutOfSequence { expected_prev: u64, got: u64 },
    #[error("round {0}: outcome reports a bid the strategy did not place")]
    UnplacedBid(u64),
    #[error("exploration mass is zero; win probability estimates would divide by zero")]
    ZeroExploration,
    #[error("interval ({lo}, {hi}] straddles opponent bid {m}; partition was not split first")]
    IncomparableInterval { lo: f64, hi: f64, m: f64 },
    #[error("gain vector has {got} entries for {expected} intervals")]
    GainLength { expected: usize, got: usize },
    #[error("win probability {0} outside the range the estimator can use")]
    DegenerateWinProbability(f64),
    #[error("opponent bid must lie in (0, 1], got {0}")]
    ZeroOpponentBid(f64),
    #[error("invalid strategy parameter: {0}")]
    InvalidParameter(String),
}

/// A repeated-auction bidder.
///
/// Each round the harness calls [`bid`](Strategy::bid) once, settles the
/// auction, and passes the resulting [`RoundOutcome`] to
/// [`observe`](Strategy::observe). The outcome only carries the value when
/// the bid won.
pub trait Strategy: Send {
    fn bid(&mut self, rng: &mut dyn RngCore) -> Bid;

    fn observe(&mut self, outcome: &RoundOutcome) -> Result<(), StrategyError>;

    /// The interval partition, for strategies that maintain one.
    fn partition(&self) -> Option<&IntervalPartition> {
        None
    }
}

/// Bids the same amount every round. With the true mean as the bid this is
/// the truthful benchmark of the stochastic setting.
#[derive(Debug, Clone, Copy)]
pub struct ConstantBid(pub Bid);

impl Strategy for ConstantBid {
    fn bid(&mut self, _rng: &mut dyn RngCore) -> Bid {
        self.0
    }

    fn observe(&mut self, _outcome: &RoundOutcome) -> Result<(), StrategyError> {
        Ok(())
    }
}
