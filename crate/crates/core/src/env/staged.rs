//! Staged adaptive adversary for the `√(T log(1/Δ°))` lower bound.
//!
//! The horizon is cut into `n` equal stages. During stage `i` every opponent
//! bid equals the midpoint `m_i = 1/4 + c_i 2^{-i-1}` (with `c_1 = 1`, so
//! `m_1 = 1/2`) and values are Bernoulli with mean `m_i + s ε`, where
//! `ε = 1/(8 √stage_length)` and `s` is the direction picked at the end of
//! the previous stage (`+1` for the first stage). At the end of a stage the
//! adversary moves up (`c ← 2c + 1`) if the bidder spent at least as many
//! rounds at or below the midpoint as above it, and down (`c ← 2c - 1`)
//! otherwise. After `n` stages the narrowest gap between midpoints is
//! `2^{-n-1}`.

use serde::{Deserialize, Serialize};

use super::EnvError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StageDirection {
    Up,
    Down,
}

impl StageDirection {
    fn sign(self) -> f64 {
        match self {
            StageDirection::Up => 1.0,
            StageDirection::Down => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StagedAdversaryState {
    n_stages: u32,
    stage_index: u32,
    stage_length: u64,
    code: i64,
    t_minus: u64,
    t_plus: u64,
    tilt: StageDirection,
    midpoints: Vec<f64>,
}

impl StagedAdversaryState {
    /// `n_stages ≥ 1`, `horizon ≥ n_stages`.
    pub fn new(n_stages: u32, horizon: u64) -> Result<Self, EnvError> {
        if n_stages == 0 || n_stages > 40 {
            return Err(EnvError::InvalidParameter(format!(
                "staged adversary needs 1..=40 stages, got {n_stages}"
            )));
        }
        if horizon < u64::from(n_stages) {
            return Err(EnvError::InvalidParameter(format!(
                "horizon {horizon} shorter than {n_stages} stages"
            )));
        }
        let mut state = StagedAdversaryState {
            n_stages,
            stage_index: 1,
            stage_length: horizon / u64::from(n_stages),
            code: 1,
            t_minus: 0,
            t_plus: 0,
            tilt: StageDirection::Up,
            midpoints: Vec::with_capacity(n_stages as usize),
        };
        state.midpoints.push(state.midpoint());
        Ok(state)
    }

    /// Number of stages `⌊log2(1/(2Δ°))⌋` for a target gap `Δ° ∈ (0, 1/4)`.
    pub fn stages_for_gap(delta_circ: f64) -> Result<u32, EnvError> {
        if !(delta_circ > 0.0 && delta_circ < 0.25) {
            return Err(EnvError::InvalidParameter(format!(
                "target gap must lie in (0, 1/4), got {delta_circ}"
            )));
        }
        Ok((1.0 / (2.0 * delta_circ)).log2().floor() as u32)
    }

    pub fn n_stages(&self) -> u32 {
        self.n_stages
    }

    pub fn stage_index(&self) -> u32 {
        self.stage_index
    }

    pub fn stage_length(&self) -> u64 {
        self.stage_length
    }

    pub fn code(&self) -> i64 {
        self.code
    }

    pub fn t_minus(&self) -> u64 {
        self.t_minus
    }

    pub fn t_plus(&self) -> u64 {
        self.t_plus
    }

    pub fn tilt(&self) -> StageDirection {
        self.tilt
    }

    /// Midpoints used so far, one per stage entered.
    pub fn midpoints(&self) -> &[f64] {
        &self.midpoints
    }

    pub fn midpoint(&self) -> f64 {
        0.25 + self.code as f64 * (-(f64::from(self.stage_index) + 1.0)).exp2()
    }

    pub fn stage_eps(&self) -> f64 {
        1.0 / (8.0 * (self.stage_length as f64).sqrt())
    }

    /// Bernoulli mean of the values drawn during the current stage.
    pub fn value_mean(&self) -> f64 {
        (self.midpoint() + self.tilt.sign() * self.stage_eps()).clamp(0.0, 1.0)
    }

    pub fn rounds_in_stage(&self) -> u64 {
        self.t_minus + self.t_plus
    }

    pub fn stage_complete(&self) -> bool {
        self.rounds_in_stage() >= self.stage_length
    }

    pub fn is_last_stage(&self) -> bool {
        self.stage_index >= self.n_stages
    }

    /// Counts the bidder's position relative to the midpoint; a tie counts
    /// as below.
    pub fn record_bid(&mut self, bid: f64) {
        if bid > self.midpoint() {
            self.t_plus += 1;
        } else {
            self.t_minus += 1;
        }
    }

    /// The direction the adversary would pick from the current counters.
    pub fn selection(&self) -> StageDirection {
        if self.t_minus >= self.t_plus {
            StageDirection::Up
        } else {
            StageDirection::Down
        }
    }

    /// Moves to the next stage. Requires the current stage to be complete.
    pub fn advance(&self) -> Result<Self, EnvError> {
        if self.is_last_stage() {
            return Err(EnvError::StagesExhausted(self.n_stages));
        }
        if !self.stage_complete() {
            return Err(EnvError::StageIncomplete {
                stage: self.stage_index,
                elapsed: self.rounds_in_stage(),
                length: self.stage_length,
            });
        }
        let direction = self.selection();
        let mut next = self.clone();
        next.code = match direction {
            StageDirection::Up => 2 * self.code + 1,
            StageDirection::Down => 2 * self.code - 1,
        };
        next.stage_index += 1;
        next.tilt = direction;
        next.t_minus = 0;
        next.t_plus = 0;
        next.midpoints.push(next.midpoint());
        Ok(next)
    }
}
