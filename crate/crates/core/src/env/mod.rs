//! Value and opponent-bid generators.
//!
//! An [`Environment`] pairs a [`ValueProcess`] (the good's value `v_t`) with
//! an [`OpponentProcess`] (the highest competing bid `m_t`). Both are drawn
//! before the bidder's bid is revealed to the environment; adaptive kinds
//! learn about past bids through [`Environment::observe`].

mod margin;
mod staged;

pub use margin::MarginMuAlpha;
pub use staged::{StageDirection, StagedAdversaryState};

use rand::distributions::{Distribution as _, WeightedIndex};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::auction::{Bid, RoundOutcome};

/// Opponent bids of exactly zero are replaced by this.
pub const MIN_OPPONENT_BID: f64 = 1.0 / (1u64 << 30) as f64;

/// Adversarial bids are rounded to multiples of this.
pub const BID_GRID: f64 = 1.0 / (1u64 << 40) as f64;

/// Retry budget when conditioning a base law away from the gap.
pub const GAP_MAX_RETRIES: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvError {
    #[error("invalid environment parameter: {0}")]
    InvalidParameter(String),
    #[error("gap opponent: no admissible draw in {0} retries")]
    GapRejectionExhausted(usize),
    #[error("staged adversary has only {0} stages")]
    StagesExhausted(u32),
    #[error("stage {stage} incomplete: {elapsed} of {length} rounds")]
    StageIncomplete { stage: u32, elapsed: u64, length: u64 },
}

/// Declarative description of a law on `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    PointMass { at: f64 },
    Bernoulli { p: f64 },
    Uniform { lo: f64, hi: f64 },
    /// Finitely many atoms; equal weights when `weights` is omitted.
    Discrete {
        points: Vec<f64>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    MuAlpha { alpha: f64, eps: f64 },
}

/// A validated, ready-to-draw [`Distribution`].
#[derive(Debug, Clone)]
pub enum Sampler {
    PointMass(f64),
    Bernoulli(f64),
    Uniform { lo: f64, hi: f64 },
    Discrete { points: Vec<f64>, index: WeightedIndex<f64>, mean: f64 },
    MuAlpha(MarginMuAlpha),
}

fn in_unit(x: f64, what: &str) -> Result<f64, EnvError> {
    if (0.0..=1.0).contains(&x) {
        Ok(x)
    } else {
        Err(EnvError::InvalidParameter(format!("{what} {x} outside [0, 1]")))
    }
}

impl Distribution {
    pub fn compile(&self) -> Result<Sampler, EnvError> {
        Ok(match self {
            Distribution::PointMass { at } => Sampler::PointMass(in_unit(*at, "point mass")?),
            Distribution::Bernoulli { p } => Sampler::Bernoulli(in_unit(*p, "bernoulli p")?),
            Distribution::Uniform { lo, hi } => {
                in_unit(*lo, "uniform lo")?;
                in_unit(*hi, "uniform hi")?;
                if lo >= hi {
                    return Err(EnvError::InvalidParameter(format!(
                        "uniform needs lo < hi, got [{lo}, {hi}]"
                    )));
                }
                Sampler::Uniform { lo: *lo, hi: *hi }
            }
            Distribution::Discrete { points, weights } => {
                if points.is_empty() {
                    return Err(EnvError::InvalidParameter("discrete law without points".into()));
                }
                for &p in points {
                    in_unit(p, "discrete point")?;
                }
                let weights = weights.clone().unwrap_or_else(|| vec![1.0; points.len()]);
                if weights.len() != points.len() {
                    return Err(EnvError::InvalidParameter(
                        "discrete law: points and weights differ in length".into(),
                    ));
                }
                let index = WeightedIndex::new(&weights)
                    .map_err(|e| EnvError::InvalidParameter(format!("discrete weights: {e}")))?;
                let total: f64 = weights.iter().sum();
                let mean = points.iter().zip(&weights).map(|(p, w)| p * w).sum::<f64>() / total;
                Sampler::Discrete {
                    points: points.clone(),
                    index,
                    mean,
                }
            }
            Distribution::MuAlpha { alpha, eps } => Sampler::MuAlpha(MarginMuAlpha::new(*alpha, *eps)?),
        })
    }
}

impl Sampler {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::PointMass(x) => *x,
            Sampler::Bernoulli(p) => {
                if rng.gen::<f64>() < *p {
                    1.0
                } else {
                    0.0
                }
            }
            Sampler::Uniform { lo, hi } => rng.gen_range(*lo..=*hi),
            Sampler::Discrete { points, index, .. } => points[index.sample(rng)],
            Sampler::MuAlpha(d) => d.sample(rng),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Sampler::PointMass(x) => *x,
            Sampler::Bernoulli(p) => *p,
            Sampler::Uniform { lo, hi } => 0.5 * (lo + hi),
            Sampler::Discrete { mean, .. } => *mean,
            Sampler::MuAlpha(d) => d.mean(),
        }
    }
}

/// Callback for history-dependent values: `(history, t, rng) -> v_t`.
pub type AdaptiveValueFn = Box<dyn FnMut(&[RoundOutcome], u64, &mut dyn RngCore) -> f64 + Send>;

pub enum ValueProcess {
    Iid(Sampler),
    /// Cycled when the horizon is longer than the sequence.
    FixedSequence(Vec<f64>),
    Adaptive(AdaptiveValueFn),
    /// Bernoulli values tilted by a paired [`OpponentProcess::StagedAdversary`].
    StageTilted,
}

impl std::fmt::Debug for ValueProcess {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ValueProcess::Iid(s) => f.debug_tuple("Iid").field(s).finish(),
            ValueProcess::FixedSequence(v) => f.debug_tuple("FixedSequence").field(&v.len()).finish(),
            ValueProcess::Adaptive(_) => f.write_str("Adaptive(..)"),
            ValueProcess::StageTilted => f.write_str("StageTilted"),
        }
    }
}

impl ValueProcess {
    pub fn bernoulli(p: f64) -> Result<Self, EnvError> {
        Ok(ValueProcess::Iid(Distribution::Bernoulli { p }.compile()?))
    }

    /// The common mean for i.i.d. kinds.
    pub fn mean(&self) -> Option<f64> {
        match self {
            ValueProcess::Iid(s) => Some(s.mean()),
            _ => None,
        }
    }

    /// Draws `v_t` (1-based `t`). `stage` supplies the tilt for
    /// [`ValueProcess::StageTilted`].
    pub fn sample_value<R: Rng>(
        &mut self,
        history: &[RoundOutcome],
        t: u64,
        stage: Option<&StagedAdversaryState>,
        rng: &mut R,
    ) -> f64 {
        let v = match self {
            ValueProcess::Iid(s) => s.sample(rng),
            ValueProcess::FixedSequence(seq) => seq[((t - 1) % seq.len() as u64) as usize],
            ValueProcess::Adaptive(f) => f(history, t, rng),
            ValueProcess::StageTilted => {
                let p = stage.map_or(0.5, StagedAdversaryState::value_mean);
                if rng.gen::<f64>() < p {
                    1.0
                } else {
                    0.0
                }
            }
        };
        v.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone)]
pub enum OpponentProcess {
    /// Cycled when the horizon is longer than the sequence.
    FixedSequence(Vec<f64>),
    Iid(Sampler),
    /// Draws from `base` conditioned on avoiding the open interval
    /// `(value, value + delta)`.
    Gap { value: f64, delta: f64, base: Sampler },
    MarginMuAlpha(MarginMuAlpha),
    PointMass(f64),
    StagedAdversary(StagedAdversaryState),
}

fn quantize(x: f64) -> f64 {
    (x / BID_GRID).round() * BID_GRID
}

fn admissible(m: f64) -> Bid {
    Bid::saturating(if m <= 0.0 { MIN_OPPONENT_BID } else { m })
}

impl OpponentProcess {
    pub fn gap(value: f64, delta: f64, base: Sampler) -> Result<Self, EnvError> {
        in_unit(value, "gap value")?;
        if !(delta > 0.0) {
            return Err(EnvError::InvalidParameter(format!("gap width must be positive, got {delta}")));
        }
        Ok(OpponentProcess::Gap { value, delta, base })
    }

    pub fn staged_state(&self) -> Option<&StagedAdversaryState> {
        match self {
            OpponentProcess::StagedAdversary(s) => Some(s),
            _ => None,
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, OpponentProcess::StagedAdversary(_))
    }

    /// Draws `m_t ∈ (0, 1]` (1-based `t`).
    pub fn next_opponent_bid<R: Rng>(&mut self, t: u64, rng: &mut R) -> Result<Bid, EnvError> {
        let m = match self {
            OpponentProcess::FixedSequence(seq) => quantize(seq[((t - 1) % seq.len() as u64) as usize]),
            OpponentProcess::Iid(s) => s.sample(rng),
            OpponentProcess::Gap { value, delta, base } => {
                let mut hit = None;
                for _ in 0..GAP_MAX_RETRIES {
                    let m = base.sample(rng);
                    if !(m > *value && m < *value + *delta) {
                        hit = Some(m);
                        break;
                    }
                }
                hit.ok_or(EnvError::GapRejectionExhausted(GAP_MAX_RETRIES))?
            }
            OpponentProcess::MarginMuAlpha(d) => d.sample(rng),
            OpponentProcess::PointMass(x) => *x,
            OpponentProcess::StagedAdversary(s) => quantize(s.midpoint()),
        };
        Ok(admissible(m))
    }

    /// Feeds the bidder's bid back; advances the staged adversary at stage
    /// boundaries (it stays in its final stage once all are used).
    pub fn observe(&mut self, outcome: &RoundOutcome) {
        if let OpponentProcess::StagedAdversary(s) = self {
            s.record_bid(outcome.bid().value());
            if s.stage_complete() && !s.is_last_stage() {
                // Completion and remaining stages were just checked.
                *s = s.advance().expect("stage boundary");
            }
        }
    }
}

/// One run's source of `(m_t, v_t)`.
#[derive(Debug)]
pub struct Environment {
    values: ValueProcess,
    opponents: OpponentProcess,
    history: Vec<RoundOutcome>,
}

impl Environment {
    pub fn new(values: ValueProcess, opponents: OpponentProcess) -> Result<Self, EnvError> {
        if matches!(values, ValueProcess::StageTilted) && opponents.staged_state().is_none() {
            return Err(EnvError::InvalidParameter(
                "stage-tilted values need a staged-adversary opponent".into(),
            ));
        }
        Ok(Environment {
            values,
            opponents,
            history: Vec::new(),
        })
    }

    /// Known mean of i.i.d. values, if any.
    pub fn value_mean(&self) -> Option<f64> {
        self.values.mean()
    }

    pub fn opponents(&self) -> &OpponentProcess {
        &self.opponents
    }

    /// Draws round `t`'s opponent bid and value. The opponent stream and the
    /// value stream use separate generators, so two environments sharing an
    /// opponent process see identical bids under a shared seed.
    pub fn next_round<R1: Rng, R2: Rng>(
        &mut self,
        t: u64,
        value_rng: &mut R1,
        opponent_rng: &mut R2,
    ) -> Result<(Bid, f64), EnvError> {
        let m = self.opponents.next_opponent_bid(t, opponent_rng)?;
        let v = self
            .values
            .sample_value(&self.history, t, self.opponents.staged_state(), value_rng);
        Ok((m, v))
    }

    pub fn observe(&mut self, outcome: &RoundOutcome) {
        self.opponents.observe(outcome);
        if matches!(self.values, ValueProcess::Adaptive(_)) {
            self.history.push(*outcome);
        }
    }
}

/// The pair `ν = Bern(1/2) ⊗ μ_α`, `ν' = Bern(1/2 + 2ε) ⊗ μ_α` with
/// `ε = T^{-1/2} / 2`. Needs `T ≥ 5` so that `ε < 1/4`.
pub fn make_stochastic_lb_pair(alpha: f64, horizon: u64) -> Result<(Environment, Environment), EnvError> {
    if horizon < 2 {
        return Err(EnvError::InvalidParameter(format!("horizon {horizon} < 2")));
    }
    let eps = 0.5 / (horizon as f64).sqrt();
    let mu = MarginMuAlpha::new(alpha, eps)?;
    let nu = Environment::new(ValueProcess::bernoulli(0.5)?, OpponentProcess::MarginMuAlpha(mu))?;
    let nu_prime = Environment::new(
        ValueProcess::bernoulli(0.5 + 2.0 * eps)?,
        OpponentProcess::MarginMuAlpha(mu),
    )?;
    Ok((nu, nu_prime))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn bernoulli_mean() {
        let mut v = ValueProcess::bernoulli(0.5).unwrap();
        let mut r = rng(3);
        let n = 1_000_000;
        let mean = (1..=n).map(|t| v.sample_value(&[], t, None, &mut r)).sum::<f64>() / n as f64;
        assert!((mean - 0.5).abs() < 0.0015);
    }

    #[test]
    fn tilted_bernoulli_mean() {
        let mut v = ValueProcess::bernoulli(0.5 + 2.0 * 0.05).unwrap();
        let mut r = rng(4);
        let n = 1_000_000;
        let mean = (1..=n).map(|t| v.sample_value(&[], t, None, &mut r)).sum::<f64>() / n as f64;
        assert!((mean - 0.6).abs() < 0.0015);
    }

    #[test]
    fn fixed_sequence_indexing() {
        let mut v = ValueProcess::FixedSequence(vec![0.3, 0.7]);
        let mut r = rng(0);
        assert_eq!(v.sample_value(&[], 2, None, &mut r), 0.7);
        assert_eq!(v.sample_value(&[], 3, None, &mut r), 0.3);
    }

    #[test]
    fn gap_opponent_avoids_gap() {
        let base = Distribution::Discrete {
            points: vec![0.3, 0.8],
            weights: None,
        }
        .compile()
        .unwrap();
        let mut op = OpponentProcess::gap(0.5, 0.2, base).unwrap();
        let mut r = rng(5);
        for t in 1..=10_000 {
            let m = op.next_opponent_bid(t, &mut r).unwrap().value();
            assert!(!(m > 0.5 && m < 0.7));
        }
        let uniform = Distribution::Uniform { lo: 0.0, hi: 1.0 }.compile().unwrap();
        let mut op = OpponentProcess::gap(0.5, 0.2, uniform).unwrap();
        for t in 1..=10_000 {
            let m = op.next_opponent_bid(t, &mut r).unwrap().value();
            assert!(!(m > 0.5 && m < 0.7) && m > 0.0);
        }
    }

    #[test]
    fn gap_rejection_gives_up() {
        let base = Distribution::PointMass { at: 0.6 }.compile().unwrap();
        let mut op = OpponentProcess::gap(0.5, 0.2, base).unwrap();
        assert_eq!(
            op.next_opponent_bid(1, &mut rng(0)),
            Err(EnvError::GapRejectionExhausted(GAP_MAX_RETRIES))
        );
    }

    #[test]
    fn point_mass_and_zero_clamp() {
        let mut op = OpponentProcess::PointMass(0.6);
        assert_eq!(op.next_opponent_bid(1, &mut rng(0)).unwrap().value(), 0.6);
        let mut zero = OpponentProcess::PointMass(0.0);
        assert_eq!(zero.next_opponent_bid(1, &mut rng(0)).unwrap().value(), MIN_OPPONENT_BID);
    }

    #[test]
    fn staged_adversary_starts_at_half_and_moves() {
        let mut env = Environment::new(
            ValueProcess::StageTilted,
            OpponentProcess::StagedAdversary(StagedAdversaryState::new(4, 40).unwrap()),
        )
        .unwrap();
        let (mut rv, mut ro) = (rng(1), rng(2));
        for t in 1..=10 {
            let (m, v) = env.next_round(t, &mut rv, &mut ro).unwrap();
            assert_eq!(m.value(), 0.5);
            assert!(v == 0.0 || v == 1.0);
            env.observe(&RoundOutcome::resolve(t, Bid::ZERO, m, v));
        }
        let (m, _) = env.next_round(11, &mut rv, &mut ro).unwrap();
        assert_eq!(m.value(), 5.0 / 8.0);
    }

    #[test]
    fn stage_tilt_requires_staged_opponent() {
        assert!(Environment::new(ValueProcess::StageTilted, OpponentProcess::PointMass(0.5)).is_err());
    }

    #[test]
    fn lb_pair_parameters() {
        let (nu, nu_prime) = make_stochastic_lb_pair(0.5, 10_000).unwrap();
        assert_eq!(nu.value_mean(), Some(0.5));
        assert!((nu_prime.value_mean().unwrap() - 0.51).abs() < 1e-15);
        match nu.opponents() {
            OpponentProcess::MarginMuAlpha(d) => assert!((d.eps() - 0.005).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
        assert!(make_stochastic_lb_pair(0.5, 4).is_err());
    }

    #[test]
    fn lb_pair_streams() {
        let (mut nu, mut nu_prime) = make_stochastic_lb_pair(0.5, 10_000).unwrap();
        let (mut a_v, mut a_o) = (rng(10), rng(11));
        let (mut b_v, mut b_o) = (rng(10), rng(11));
        for t in 1..=100_000 {
            let (m1, _) = nu.next_round(t, &mut a_v, &mut a_o).unwrap();
            let (m2, _) = nu_prime.next_round(t, &mut b_v, &mut b_o).unwrap();
            assert_eq!(m1, m2);
            assert!(m1.value() > 0.5 && m1.value() <= 1.0);
        }
    }

    #[test]
    fn mu_alpha_support_and_margin_empirical() {
        for alpha in [0.25, 0.5, 0.75] {
            let eps = 0.1;
            let d = MarginMuAlpha::new(alpha, eps).unwrap();
            let mut r = rng(99);
            let n = 1_000_000;
            let draws: Vec<f64> = (0..n).map(|_| d.sample(&mut r)).collect();
            assert!(draws.iter().all(|&x| x > 0.5 && x <= 1.0));
            let c = d.c_alpha() / alpha;
            for k in 0..=6 {
                let u = eps * (-(k as f64)).exp2();
                let frac = draws.iter().filter(|&&x| x <= 0.5 + u).count() as f64 / n as f64;
                assert!(frac <= 1.1 * c * u.powf(alpha), "alpha {alpha} k {k}: {frac}");
            }
        }
    }

    #[test]
    fn every_opponent_kind_in_unit_interval() {
        let kinds = vec![
            OpponentProcess::FixedSequence(vec![0.25, 0.0, 1.0]),
            OpponentProcess::Iid(Distribution::Uniform { lo: 0.0, hi: 1.0 }.compile().unwrap()),
            OpponentProcess::gap(0.4, 0.3, Distribution::Uniform { lo: 0.0, hi: 1.0 }.compile().unwrap()).unwrap(),
            OpponentProcess::MarginMuAlpha(MarginMuAlpha::new(0.25, 0.1).unwrap()),
            OpponentProcess::PointMass(1.0),
            OpponentProcess::StagedAdversary(StagedAdversaryState::new(4, 1_000_000).unwrap()),
        ];
        for mut op in kinds {
            let mut r = rng(7);
            for t in 1..=1_000_000 {
                let m = op.next_opponent_bid(t, &mut r).unwrap().value();
                assert!(m > 0.0 && m <= 1.0, "{op:?} emitted {m}");
                op.observe(&RoundOutcome::resolve(t, Bid::ZERO, Bid::saturating(m), 0.0));
            }
        }
    }

    #[test]
    fn distribution_json_is_strict() {
        let ok: Distribution = serde_json::from_str(r#"{"kind":"bernoulli","p":0.5}"#).unwrap();
        assert_eq!(ok, Distribution::Bernoulli { p: 0.5 });
        assert!(serde_json::from_str::<Distribution>(r#"{"kind":"bernoulli","p":0.5,"q":1}"#).is_err());
        assert!(Distribution::Bernoulli { p: 1.5 }.compile().is_err());
    }
}
