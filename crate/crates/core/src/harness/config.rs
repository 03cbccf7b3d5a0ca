//! Run configuration, read from strict JSON (unknown fields are errors).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::HarnessError;
use crate::env::{Distribution, Environment, OpponentProcess, ValueProcess};
use crate::env::{MarginMuAlpha, StagedAdversaryState};
use crate::exptree::{exptree_configure, exptreep_configure, DoublingExpTree, ExpTree, ExpTreeP, ExpTreePParams};
use crate::strategy::{ConstantBid, Strategy};
use crate::ucbid::UcbidState;
use crate::Bid;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub horizon: u64,
    #[serde(default = "default_replications")]
    pub replications: u64,
    #[serde(default)]
    pub master_seed: u64,
    pub values: ValueSpec,
    pub opponents: OpponentSpec,
    pub strategy: StrategySpec,
    #[serde(default)]
    pub regret: RegretMode,
}

fn default_replications() -> u64 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegretMode {
    /// Against the best fixed bid for the realized sequence.
    #[default]
    Hindsight,
    /// Against bidding the known value mean, in expectation over values.
    Pseudo,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ValueSpec {
    Iid {
        distribution: Distribution,
    },
    FixedSequence {
        values: Vec<f64>,
    },
    /// A sequence of `length` draws made once from `distribution` with its
    /// own seed, then replayed identically in every replication.
    Frozen {
        distribution: Distribution,
        length: usize,
        seed: u64,
    },
    /// Bernoulli values tilted by the staged adversary.
    StageTilted {},
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OpponentSpec {
    FixedSequence {
        bids: Vec<f64>,
    },
    Iid {
        distribution: Distribution,
    },
    Gap {
        value: f64,
        delta: f64,
        base: Distribution,
    },
    MuAlpha {
        alpha: f64,
        eps: f64,
    },
    PointMass {
        at: f64,
    },
    /// Either `stages` or `target_gap` (from which the stage count is
    /// derived) must be given.
    StagedAdversary {
        #[serde(default)]
        stages: Option<u32>,
        #[serde(default)]
        target_gap: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StrategySpec {
    Ucbid {},
    /// `eta` overrides the rate derived from `gap` and the horizon.
    Exptree {
        #[serde(default)]
        eta: Option<f64>,
        #[serde(default)]
        gap: Option<f64>,
    },
    ExptreeP {
        #[serde(default)]
        eta: Option<f64>,
        #[serde(default)]
        gamma: Option<f64>,
        #[serde(default)]
        beta: Option<f64>,
        #[serde(default)]
        gap: Option<f64>,
    },
    ExptreeDoubling {},
    Constant {
        bid: f64,
    },
    /// Bids the value mean every round; needs i.i.d. values.
    Truthful {},
}

/// Concrete strategy parameters after filling in defaults.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedStrategy {
    Ucbid,
    Exptree { eta: f64 },
    ExptreeP(ExpTreePParams),
    ExptreeDoubling,
    Constant(Bid),
}

impl ResolvedStrategy {
    pub fn build(&self) -> Result<Box<dyn Strategy>, HarnessError> {
        Ok(match *self {
            ResolvedStrategy::Ucbid => Box::new(UcbidState::new()),
            ResolvedStrategy::Exptree { eta } => Box::new(ExpTree::new(eta)?),
            ResolvedStrategy::ExptreeP(p) => Box::new(ExpTreeP::new(p)?),
            ResolvedStrategy::ExptreeDoubling => Box::new(DoublingExpTree::new()),
            ResolvedStrategy::Constant(b) => Box::new(ConstantBid(b)),
        })
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, HarnessError> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.horizon < 2 {
            return Err(HarnessError::Config(format!("horizon must be at least 2, got {}", self.horizon)));
        }
        if self.replications == 0 {
            return Err(HarnessError::Config("replications must be positive".into()));
        }
        if self.regret == RegretMode::Pseudo && self.value_mean()?.is_none() {
            return Err(HarnessError::Config("pseudo-regret needs i.i.d. values with a known mean".into()));
        }
        self.resolve_strategy()?;
        // Building the environment checks every parameter.
        self.build_environment()?;
        Ok(())
    }

    pub fn value_mean(&self) -> Result<Option<f64>, HarnessError> {
        Ok(match &self.values {
            ValueSpec::Iid { distribution } => Some(distribution.compile()?.mean()),
            _ => None,
        })
    }

    pub fn resolve_strategy(&self) -> Result<ResolvedStrategy, HarnessError> {
        let need_gap = |gap: Option<f64>| {
            gap.ok_or_else(|| HarnessError::Config("strategy needs either `eta` or `gap`".into()))
        };
        Ok(match &self.strategy {
            StrategySpec::Ucbid {} => ResolvedStrategy::Ucbid,
            StrategySpec::Exptree { eta, gap } => {
                let eta = match eta {
                    Some(e) => *e,
                    None => exptree_configure(self.horizon, need_gap(*gap)?)?,
                };
                ExpTree::new(eta)?;
                ResolvedStrategy::Exptree { eta }
            }
            StrategySpec::ExptreeP { eta, gamma, beta, gap } => {
                let base = match gap {
                    Some(g) => Some(exptreep_configure(self.horizon, *g)?),
                    None => None,
                };
                let eta = match (eta, base) {
                    (Some(e), _) => *e,
                    (None, Some(b)) => b.eta,
                    (None, None) => need_gap(None)?,
                };
                let t = self.horizon as f64;
                let params = ExpTreePParams {
                    eta,
                    gamma: gamma.unwrap_or(2.0 * eta),
                    beta: beta.unwrap_or_else(|| (t.ln() / (2.0 * t)).sqrt()),
                };
                ExpTreeP::new(params)?;
                ResolvedStrategy::ExptreeP(params)
            }
            StrategySpec::ExptreeDoubling {} => ResolvedStrategy::ExptreeDoubling,
            StrategySpec::Constant { bid } => ResolvedStrategy::Constant(Bid::new(*bid)?),
            StrategySpec::Truthful {} => {
                let mean = self
                    .value_mean()?
                    .ok_or_else(|| HarnessError::Config("truthful bidding needs i.i.d. values".into()))?;
                ResolvedStrategy::Constant(Bid::new(mean)?)
            }
        })
    }

    /// A fresh environment; deterministic apart from the random streams
    /// passed to it during the run.
    pub fn build_environment(&self) -> Result<Environment, HarnessError> {
        let values = match &self.values {
            ValueSpec::Iid { distribution } => ValueProcess::Iid(distribution.compile()?),
            ValueSpec::FixedSequence { values } => ValueProcess::FixedSequence(checked_sequence(values, "values")?),
            ValueSpec::Frozen {
                distribution,
                length,
                seed,
            } => {
                if *length == 0 {
                    return Err(HarnessError::Config("frozen sequence length must be positive".into()));
                }
                ValueProcess::FixedSequence(frozen_sequence(distribution, *length, *seed)?)
            }
            ValueSpec::StageTilted {} => ValueProcess::StageTilted,
        };
        let opponents = match &self.opponents {
            OpponentSpec::FixedSequence { bids } => {
                let bids = checked_sequence(bids, "opponent bids")?;
                if bids.iter().any(|m| *m <= 0.0) {
                    return Err(HarnessError::Config("opponent bids must be positive".into()));
                }
                OpponentProcess::FixedSequence(bids)
            }
            OpponentSpec::Iid { distribution } => OpponentProcess::Iid(distribution.compile()?),
            OpponentSpec::Gap { value, delta, base } => OpponentProcess::gap(*value, *delta, base.compile()?)?,
            OpponentSpec::MuAlpha { alpha, eps } => OpponentProcess::MarginMuAlpha(MarginMuAlpha::new(*alpha, *eps)?),
            OpponentSpec::PointMass { at } => {
                if !(*at > 0.0 && *at <= 1.0) {
                    return Err(HarnessError::Config(format!("point mass must lie in (0, 1], got {at}")));
                }
                OpponentProcess::PointMass(*at)
            }
            OpponentSpec::StagedAdversary { stages, target_gap } => {
                let n = match (stages, target_gap) {
                    (Some(n), None) => *n,
                    (None, Some(g)) => StagedAdversaryState::stages_for_gap(*g)?,
                    _ => {
                        return Err(HarnessError::Config(
                            "staged adversary needs exactly one of `stages` and `target_gap`".into(),
                        ))
                    }
                };
                OpponentProcess::StagedAdversary(StagedAdversaryState::new(n, self.horizon)?)
            }
        };
        Ok(Environment::new(values, opponents)?)
    }
}

fn checked_sequence(xs: &[f64], what: &str) -> Result<Vec<f64>, HarnessError> {
    if xs.is_empty() {
        return Err(HarnessError::Config(format!("{what} must not be empty")));
    }
    if let Some(x) = xs.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(HarnessError::Config(format!("{what} must lie in [0, 1], got {x}")));
    }
    Ok(xs.to_vec())
}

/// Draws `length` values once from `distribution` with a fixed seed.
pub fn frozen_sequence(distribution: &Distribution, length: usize, seed: u64) -> Result<Vec<f64>, HarnessError> {
    let sampler = distribution.compile()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..length).map(|_| sampler.sample(&mut rng).clamp(0.0, 1.0)).collect())
}
