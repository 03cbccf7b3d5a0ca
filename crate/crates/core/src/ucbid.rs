//! UCBid: bid an upper confidence bound on the value.
//!
//! Round 1 bids 1. Afterwards, with `ω` auctions won so far and `v̄` the mean
//! of the values seen on those wins, round `r` bids
//! `min(v̄ + sqrt(3 ln r / (2ω)), 1)`. Opponent bids are never used.

use rand::RngCore;

use crate::auction::{Bid, RoundOutcome};
use crate::strategy::{Strategy, StrategyError};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UcbidState {
    t: u64,
    omega: u64,
    v_bar: f64,
}

impl UcbidState {
    pub fn new() -> Self {
        Self::default()
    }

    /// State after `t` rounds with `omega` wins averaging `v_bar`.
    pub fn from_parts(t: u64, omega: u64, v_bar: f64) -> Result<Self, StrategyError> {
        if omega > t {
            return Err(StrategyError::InvalidParameter(format!(
                "{omega} wins in {t} rounds"
            )));
        }
        if omega > 0 && !(0.0..=1.0).contains(&v_bar) {
            return Err(StrategyError::InvalidParameter(format!("mean value {v_bar} outside [0, 1]")));
        }
        Ok(UcbidState { t, omega, v_bar })
    }

    pub fn rounds(&self) -> u64 {
        self.t
    }

    pub fn wins(&self) -> u64 {
        self.omega
    }

    /// Mean observed value; `None` before the first win.
    pub fn mean_value(&self) -> Option<f64> {
        (self.omega > 0).then_some(self.v_bar)
    }

    /// Confidence radius for the upcoming round, `None` before the first win.
    pub fn radius(&self) -> Option<f64> {
        if self.omega == 0 {
            return None;
        }
        let round = (self.t + 1) as f64;
        Some((3.0 * round.max(1.0).ln() / (2.0 * self.omega as f64)).sqrt())
    }

    pub fn next_bid(&self) -> Bid {
        match self.radius() {
            // Nothing learned yet: bid high to buy information.
            None => Bid::ONE,
            Some(r) => Bid::saturating((self.v_bar + r).min(1.0)),
        }
    }

    pub fn observe(&self, outcome: &RoundOutcome) -> Result<Self, StrategyError> {
        if outcome.t() != self.t + 1 {
            return Err(StrategyError::OutOfSequence {
                expected_prev: self.t,
                got: outcome.t(),
            });
        }
        let mut next = *self;
        next.t += 1;
        if let Some(v) = outcome.observed_value() {
            let w = self.omega as f64;
            next.v_bar = (w * self.v_bar + v) / (w + 1.0);
            next.omega += 1;
        }
        Ok(next)
    }
}

impl Strategy for UcbidState {
    fn bid(&mut self, _rng: &mut dyn RngCore) -> Bid {
        self.next_bid()
    }

    fn observe(&mut self, outcome: &RoundOutcome) -> Result<(), StrategyError> {
        *self = UcbidState::observe(self, outcome)?;
        Ok(())
    }
}
