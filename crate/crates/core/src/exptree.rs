//! Exponential weights over an adaptive partition of bids: ExpTree, its
//! high-probability variant ExpTree.P, and a doubling wrapper that needs
//! neither the horizon nor the gap in advance.

use rand::RngCore;

use crate::auction::{Bid, RoundOutcome};
use crate::partition::{estimate_gain, BidDistribution, GainEstimate, IntervalPartition};
use crate::strategy::{Strategy, StrategyError};

/// Learning rates below this are treated as degenerate and raised to it.
pub const MIN_LEARNING_RATE: f64 = 1e-6;

fn check_configure_inputs(horizon: u64, delta_circ: f64) -> Result<(), StrategyError> {
    if horizon == 0 {
        return Err(StrategyError::InvalidParameter("horizon must be positive".into()));
    }
    if !(delta_circ > 0.0 && delta_circ <= 1.0) {
        return Err(StrategyError::InvalidParameter(format!(
            "gap must lie in (0, 1], got {delta_circ}"
        )));
    }
    Ok(())
}

fn floor_rate(eta: f64) -> f64 {
    if eta < MIN_LEARNING_RATE {
        log::warn!("learning rate {eta} is degenerate; using {MIN_LEARNING_RATE}");
        MIN_LEARNING_RATE
    } else {
        eta
    }
}

/// `η = min(sqrt(ln(1/Δ°) / T) / 2, 1/2)`.
pub fn exptree_configure(horizon: u64, delta_circ: f64) -> Result<f64, StrategyError> {
    check_configure_inputs(horizon, delta_circ)?;
    let eta = (0.5 * ((1.0 / delta_circ).ln() / horizon as f64).sqrt()).min(0.5);
    Ok(floor_rate(eta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTreePParams {
    pub eta: f64,
    pub gamma: f64,
    pub beta: f64,
}

/// `η = min(sqrt(ln(1/Δ°) / (8T)), 1/8)`, `γ = 2η`, `β = sqrt(ln T / (2T))`.
pub fn exptreep_configure(horizon: u64, delta_circ: f64) -> Result<ExpTreePParams, StrategyError> {
    check_configure_inputs(horizon, delta_circ)?;
    let t = horizon as f64;
    let eta = floor_rate(((1.0 / delta_circ).ln() / (8.0 * t)).sqrt().min(0.125));
    Ok(ExpTreePParams {
        eta,
        gamma: 2.0 * eta,
        beta: (t.ln() / (2.0 * t)).sqrt(),
    })
}

/// Shared engine: draw from the partition mixture, then split at `m_t` and
/// add the importance-weighted estimates.
#[derive(Debug, Clone)]
struct ExpWeights {
    partition: IntervalPartition,
    atom_mass: f64,
    beta: f64,
    t: u64,
    pending: Option<(Bid, BidDistribution)>,
    max_estimate: f64,
}

impl ExpWeights {
    fn new(eta: f64, atom_mass: f64, beta: f64) -> Self {
        ExpWeights {
            partition: IntervalPartition::new(eta),
            atom_mass,
            beta,
            t: 0,
            pending: None,
            max_estimate: f64::NEG_INFINITY,
        }
    }

    fn bid(&mut self, rng: &mut dyn RngCore) -> Bid {
        let dist = self.partition.distribution(self.atom_mass);
        let b = dist.sample(rng);
        self.pending = Some((b, dist));
        b
    }

    fn observe(&mut self, outcome: &RoundOutcome) -> Result<GainEstimate, StrategyError> {
        if outcome.t() != self.t + 1 {
            return Err(StrategyError::OutOfSequence {
                expected_prev: self.t,
                got: outcome.t(),
            });
        }
        let dist = match self.pending.take() {
            Some((b, dist)) if b == outcome.bid() => dist,
            _ => return Err(StrategyError::UnplacedBid(outcome.t())),
        };
        // The estimate divides by the win probability of the law the bid
        // was drawn from, i.e. before splitting at m_t.
        let m = outcome.opponent_max();
        let p_win = dist.prob_win(m)?;
        self.partition.split_at(m)?;
        let g = estimate_gain(&self.partition, outcome, p_win, self.beta)?;
        self.partition.apply_gains(&g)?;
        self.max_estimate = self.max_estimate.max(g.max());
        self.t += 1;
        Ok(g)
    }
}

fn check_eta(eta: f64) -> Result<(), StrategyError> {
    if eta > 0.0 && eta <= 0.5 {
        Ok(())
    } else {
        Err(StrategyError::InvalidParameter(format!("eta must lie in (0, 1/2], got {eta}")))
    }
}

/// Exponential weights with unbiased estimates; the atoms at 0 and 1 each
/// get mass `η`.
#[derive(Debug, Clone)]
pub struct ExpTree {
    core: ExpWeights,
}

impl ExpTree {
    pub fn new(eta: f64) -> Result<Self, StrategyError> {
        check_eta(eta)?;
        Ok(ExpTree {
            core: ExpWeights::new(eta, eta, 0.0),
        })
    }

    pub fn eta(&self) -> f64 {
        self.core.partition.eta()
    }

    pub fn rounds(&self) -> u64 {
        self.core.t
    }

    pub fn partition(&self) -> &IntervalPartition {
        &self.core.partition
    }

    pub fn distribution(&self) -> BidDistribution {
        self.core.partition.distribution(self.core.atom_mass)
    }

    /// Largest single-round estimate emitted so far.
    pub fn max_estimate(&self) -> f64 {
        self.core.max_estimate
    }

    /// Bids, settles the auction against `m` and learns from the result.
    pub fn play_round(&mut self, m: Bid, value: f64, rng: &mut dyn RngCore) -> Result<RoundOutcome, StrategyError> {
        let b = self.core.bid(rng);
        let outcome = RoundOutcome::resolve(self.core.t + 1, b, m, value);
        self.core.observe(&outcome)?;
        Ok(outcome)
    }

    fn restart(&mut self, eta: f64) {
        self.core.partition.reset_gains();
        self.core.partition.set_eta(eta);
        self.core.atom_mass = eta;
    }
}

impl Strategy for ExpTree {
    fn bid(&mut self, rng: &mut dyn RngCore) -> Bid {
        self.core.bid(rng)
    }

    fn observe(&mut self, outcome: &RoundOutcome) -> Result<(), StrategyError> {
        self.core.observe(outcome).map(|_| ())
    }

    fn partition(&self) -> Option<&IntervalPartition> {
        Some(&self.core.partition)
    }
}

/// Exponential weights with biased estimates `(gain + β) / p` and
/// exploration mass `γ` on each atom.
#[derive(Debug, Clone)]
pub struct ExpTreeP {
    core: ExpWeights,
    params: ExpTreePParams,
}

impl ExpTreeP {
    pub fn new(params: ExpTreePParams) -> Result<Self, StrategyError> {
        check_eta(params.eta)?;
        if !(params.gamma > 0.0 && params.gamma <= 0.5) {
            return Err(StrategyError::InvalidParameter(format!(
                "gamma must lie in (0, 1/2], got {}",
                params.gamma
            )));
        }
        if !(params.beta >= 0.0 && params.beta.is_finite()) {
            return Err(StrategyError::InvalidParameter(format!(
                "beta must be non-negative, got {}",
                params.beta
            )));
        }
        Ok(ExpTreeP {
            core: ExpWeights::new(params.eta, params.gamma, params.beta),
            params,
        })
    }

    pub fn params(&self) -> ExpTreePParams {
        self.params
    }

    pub fn rounds(&self) -> u64 {
        self.core.t
    }

    pub fn partition(&self) -> &IntervalPartition {
        &self.core.partition
    }

    pub fn distribution(&self) -> BidDistribution {
        self.core.partition.distribution(self.core.atom_mass)
    }

    pub fn max_estimate(&self) -> f64 {
        self.core.max_estimate
    }

    pub fn play_round(&mut self, m: Bid, value: f64, rng: &mut dyn RngCore) -> Result<RoundOutcome, StrategyError> {
        let b = self.core.bid(rng);
        let outcome = RoundOutcome::resolve(self.core.t + 1, b, m, value);
        self.core.observe(&outcome)?;
        Ok(outcome)
    }
}

impl Strategy for ExpTreeP {
    fn bid(&mut self, rng: &mut dyn RngCore) -> Bid {
        self.core.bid(rng)
    }

    fn observe(&mut self, outcome: &RoundOutcome) -> Result<(), StrategyError> {
        self.core.observe(outcome).map(|_| ())
    }

    fn partition(&self) -> Option<&IntervalPartition> {
        Some(&self.core.partition)
    }
}

/// One stage of the doubling wrapper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingStage {
    /// First round of the stage (1-based).
    pub start: u64,
    pub horizon_guess: u64,
    pub log_gap_guess: u64,
    pub eta: f64,
}

/// ExpTree with doubling guesses `B_T` for the horizon and `B_Δ` for
/// `ln(1/Δ)`, where `Δ` is the narrowest current interval. Whenever a guess
/// is exceeded it is doubled (repeatedly, for `B_Δ`) and all gains are reset.
/// The breakpoints survive restarts.
#[derive(Debug, Clone)]
pub struct DoublingExpTree {
    inner: ExpTree,
    horizon_guess: u64,
    log_gap_guess: u64,
    stage_rounds: u64,
    stages: Vec<DoublingStage>,
}

fn doubling_eta(horizon_guess: u64, log_gap_guess: u64) -> f64 {
    (0.5 * (log_gap_guess as f64 / horizon_guess as f64).sqrt()).min(0.5)
}

impl Default for DoublingExpTree {
    fn default() -> Self {
        Self::new()
    }
}

impl DoublingExpTree {
    pub fn new() -> Self {
        let eta = doubling_eta(1, 1);
        DoublingExpTree {
            inner: ExpTree::new(eta).expect("initial rate is 1/2"),
            horizon_guess: 1,
            log_gap_guess: 1,
            stage_rounds: 0,
            stages: vec![DoublingStage {
                start: 1,
                horizon_guess: 1,
                log_gap_guess: 1,
                eta,
            }],
        }
    }

    pub fn horizon_guess(&self) -> u64 {
        self.horizon_guess
    }

    pub fn log_gap_guess(&self) -> u64 {
        self.log_gap_guess
    }

    pub fn eta(&self) -> f64 {
        self.inner.eta()
    }

    pub fn stages(&self) -> &[DoublingStage] {
        &self.stages
    }

    pub fn inner(&self) -> &ExpTree {
        &self.inner
    }

    fn after_round(&mut self) {
        self.stage_rounds += 1;
        let mut restart = false;
        if self.stage_rounds > self.horizon_guess {
            self.horizon_guess *= 2;
            restart = true;
        }
        let log_inv_gap = (1.0 / self.inner.partition().narrowest_width()).ln();
        while log_inv_gap > self.log_gap_guess as f64 {
            self.log_gap_guess *= 2;
            restart = true;
        }
        if restart {
            let eta = doubling_eta(self.horizon_guess, self.log_gap_guess);
            self.inner.restart(eta);
            self.stage_rounds = 0;
            self.stages.push(DoublingStage {
                start: self.inner.rounds() + 1,
                horizon_guess: self.horizon_guess,
                log_gap_guess: self.log_gap_guess,
                eta,
            });
        }
    }

    pub fn play_round(&mut self, m: Bid, value: f64, rng: &mut dyn RngCore) -> Result<RoundOutcome, StrategyError> {
        let outcome = self.inner.play_round(m, value, rng)?;
        self.after_round();
        Ok(outcome)
    }
}

impl Strategy for DoublingExpTree {
    fn bid(&mut self, rng: &mut dyn RngCore) -> Bid {
        self.inner.core.bid(rng)
    }

    fn observe(&mut self, outcome: &RoundOutcome) -> Result<(), StrategyError> {
        self.inner.core.observe(outcome)?;
        self.after_round();
        Ok(())
    }

    fn partition(&self) -> Option<&IntervalPartition> {
        Some(self.inner.partition())
    }
}
