//! Running replications of a configured experiment.

use rayon::prelude::*;
use serde::Serialize;

use super::config::{RegretMode, ResolvedStrategy, RunConfig};
use super::regret::prefix_hindsight_best;
use super::stats::{wilson_interval, Summary};
use super::HarnessError;
use crate::auction::{pseudo_regret_increment, HindsightBest, RoundOutcome, UtilityProfile};
use crate::partition::IntervalPartition;
use crate::seeding::ReplicationRngs;

/// Overrides the thread count passed on the command line or in options.
pub const THREADS_ENV: &str = "VICKREY_BANDIT_THREADS";

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Keep one [`RoundRecord`] per round. Off for large sweeps.
    pub record_rounds: bool,
    /// Worker threads; `None` uses all cores. [`THREADS_ENV`] wins over both.
    pub threads: Option<usize>,
}

/// One row of a round log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundRecord {
    pub rep: u64,
    pub t: u64,
    pub bid: f64,
    pub m: f64,
    pub won: bool,
    /// Only present when the bidder won and so observed its value.
    pub v: Option<f64>,
    /// Realized shifted gain `(v - m) 1{won} + m`.
    pub gain: f64,
    /// Regret after this round, in the run's regret mode.
    pub cum_regret: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationSummary {
    pub rep: u64,
    pub rounds: u64,
    pub wins: u64,
    pub realized_gain: f64,
    pub realized_utility: f64,
    /// Σ (v̄ - m)(1{v̄ > m} - 1{b > m}), with i.i.d. values only.
    pub pseudo_regret: Option<f64>,
    pub hindsight_best: Option<f64>,
    pub hindsight_regret: Option<f64>,
    /// Rounds bidding strictly below the value mean.
    pub underbids: Option<u64>,
    pub partition_size: Option<usize>,
    pub narrowest_interval: Option<f64>,
    /// Widest final interval intersecting the best fixed bid's cell.
    pub widest_optimal_interval: Option<f64>,
    /// `max_b [G(b) - G̃(b)]` between true and estimated cumulative shifted
    /// gains, for the biased-estimate strategy.
    pub estimate_gap: Option<f64>,
    /// The regret the run was configured to report.
    pub regret: f64,
}

#[derive(Debug, Clone)]
pub struct ReplicationLog {
    pub summary: ReplicationSummary,
    pub rounds: Vec<RoundRecord>,
    /// All values drawn, observed or not; kept with the round records.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct RunLog {
    pub mode: RegretMode,
    pub value_mean: Option<f64>,
    pub replications: Vec<ReplicationLog>,
}

impl RunLog {
    pub fn final_regrets(&self) -> Vec<f64> {
        self.replications.iter().map(|r| r.summary.regret).collect()
    }

    pub fn regret_summary(&self) -> Summary {
        Summary::of(&self.final_regrets())
    }

    /// Mean, standard error and median of the running regret at every
    /// round. Requires recorded rounds.
    pub fn regret_curve(&self) -> Vec<(u64, Summary)> {
        let Some(first) = self.replications.first() else {
            return Vec::new();
        };
        (0..first.rounds.len())
            .map(|i| {
                let xs: Vec<f64> = self.replications.iter().map(|r| r.rounds[i].cum_regret).collect();
                (first.rounds[i].t, Summary::of(&xs))
            })
            .collect()
    }
}

/// Thread count after applying [`THREADS_ENV`].
pub fn resolve_threads(requested: Option<usize>) -> usize {
    let from_env = std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok());
    from_env
        .or(requested)
        .filter(|n| *n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, usize::from))
}

/// Runs replications `0..cfg.replications` in parallel. Results are ordered
/// by replication and do not depend on the thread count.
pub fn run_all(cfg: &RunConfig, opts: &RunOptions) -> Result<RunLog, HarnessError> {
    cfg.validate()?;
    let resolved = cfg.resolve_strategy()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(resolve_threads(opts.threads))
        .build()
        .map_err(|e| HarnessError::ThreadPool(e.to_string()))?;
    let replications = pool.install(|| {
        (0..cfg.replications)
            .into_par_iter()
            .map(|rep| run_replication(cfg, &resolved, rep, opts.record_rounds))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(RunLog {
        mode: cfg.regret,
        value_mean: cfg.value_mean()?,
        replications,
    })
}

pub fn run_replication(
    cfg: &RunConfig,
    strategy: &ResolvedStrategy,
    rep: u64,
    record_rounds: bool,
) -> Result<ReplicationLog, HarnessError> {
    let horizon = cfg.horizon;
    let mut env = cfg.build_environment()?;
    let mut bidder = strategy.build()?;
    let mut rngs = ReplicationRngs::new(cfg.master_seed, rep);
    let mean = env.value_mean();

    let is_biased = matches!(strategy, ResolvedStrategy::ExptreeP(_));
    let need_profile = cfg.regret == RegretMode::Hindsight || record_rounds || is_biased;
    let cap = if need_profile { horizon as usize } else { 0 };
    let mut values = Vec::with_capacity(cap);
    let mut opponent_bids = Vec::with_capacity(cap);
    let mut rounds = Vec::with_capacity(if record_rounds { horizon as usize } else { 0 });

    let mut wins = 0u64;
    let mut gain = 0.0;
    let mut utility = 0.0;
    let mut sum_m = 0.0;
    let mut pseudo = 0.0;
    let mut underbids = 0u64;

    for t in 1..=horizon {
        let (m, v) = env.next_round(t, &mut rngs.values, &mut rngs.opponents)?;
        let b = bidder.bid(&mut rngs.strategy);
        let outcome = RoundOutcome::resolve(t, b, m, v);
        bidder.observe(&outcome)?;
        env.observe(&outcome);

        wins += u64::from(outcome.won());
        gain += outcome.realized_shifted_gain();
        utility += outcome.realized_utility();
        sum_m += m.value();
        if let Some(mu) = mean {
            pseudo += pseudo_regret_increment(mu, m, b);
            underbids += u64::from(b.value() < mu);
        }
        if need_profile {
            values.push(v);
            opponent_bids.push(m);
        }
        if record_rounds {
            rounds.push(RoundRecord {
                rep,
                t,
                bid: b.value(),
                m: m.value(),
                won: outcome.won(),
                v: outcome.observed_value(),
                gain: outcome.realized_shifted_gain(),
                cum_regret: pseudo,
            });
        }
    }

    let profile = if need_profile {
        Some(UtilityProfile::build(&values, &opponent_bids)?)
    } else {
        None
    };
    let best: Option<HindsightBest> = profile.as_ref().map(UtilityProfile::best);

    if record_rounds && cfg.regret == RegretMode::Hindsight {
        let prefix = prefix_hindsight_best(&values, &opponent_bids)?;
        let mut running = 0.0;
        for (rec, best_t) in rounds.iter_mut().zip(prefix) {
            running += rec.gain - rec.m;
            rec.cum_regret = best_t - running;
        }
    }

    let partition = bidder.partition();
    let widest_optimal_interval = match (partition, &best) {
        (Some(p), Some(b)) => p
            .intervals()
            .filter(|ivl| ivl.intersects(&b.witness))
            .map(|ivl| ivl.width())
            .reduce(f64::max),
        _ => None,
    };
    let estimate_gap = match (partition, &profile) {
        (Some(p), Some(prof)) if is_biased => Some(estimate_gap(p, prof, sum_m)),
        _ => None,
    };

    let hindsight_regret = best.as_ref().map(|b| b.best_gain - utility);
    let regret = match cfg.regret {
        RegretMode::Hindsight => hindsight_regret.expect("profile built in hindsight mode"),
        RegretMode::Pseudo => pseudo,
    };

    Ok(ReplicationLog {
        summary: ReplicationSummary {
            rep,
            rounds: horizon,
            wins,
            realized_gain: gain,
            realized_utility: utility,
            pseudo_regret: mean.map(|_| pseudo),
            hindsight_best: best.as_ref().map(|b| b.best_gain),
            hindsight_regret,
            underbids: mean.map(|_| underbids),
            partition_size: partition.map(IntervalPartition::len),
            narrowest_interval: partition.map(IntervalPartition::narrowest_width),
            widest_optimal_interval,
            estimate_gap,
            regret,
        },
        rounds,
        values: if record_rounds { values } else { Vec::new() },
    })
}

/// `max_b [G(b) - G̃(b)]` over one bid per final interval plus both atoms.
/// Every bid in an interval has the same history, so the midpoint stands
/// for the whole interval.
fn estimate_gap(p: &IntervalPartition, profile: &UtilityProfile, sum_m: f64) -> f64 {
    let true_gain = |b: f64| sum_m + profile.at(b);
    let (atom_zero, atom_one) = p.atom_gains();
    p.intervals()
        .zip(p.cumulative_gains())
        .map(|(ivl, s)| true_gain(0.5 * (ivl.lo + ivl.hi)) - s)
        .fold((true_gain(0.0) - atom_zero).max(true_gain(1.0) - atom_one), f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateGapReport {
    pub replications: u64,
    pub violations: u64,
    pub threshold: f64,
    pub rate: f64,
    pub wilson_low: f64,
    pub wilson_high: f64,
}

/// Fraction of replications where the biased estimates undershoot the true
/// cumulative gain of some bid by more than `ln(T/δ)/β`.
pub fn estimate_gap_check(cfg: &RunConfig, delta: f64, opts: &RunOptions) -> Result<EstimateGapReport, HarnessError> {
    let ResolvedStrategy::ExptreeP(params) = cfg.resolve_strategy()? else {
        return Err(HarnessError::Config("estimate gap check needs the exptree_p strategy".into()));
    };
    if !(delta > 0.0 && delta < 1.0) || !(params.beta > 0.0) {
        return Err(HarnessError::Config("estimate gap check needs δ ∈ (0, 1) and β > 0".into()));
    }
    let threshold = (cfg.horizon as f64 / delta).ln() / params.beta;
    let log = run_all(
        cfg,
        &RunOptions {
            record_rounds: false,
            ..*opts
        },
    )?;
    let violations = log
        .replications
        .iter()
        .filter(|r| r.summary.estimate_gap.is_some_and(|g| g > threshold))
        .count() as u64;
    let n = log.replications.len() as u64;
    let (wilson_low, wilson_high) = wilson_interval(violations, n, 1.96);
    Ok(EstimateGapReport {
        replications: n,
        violations,
        threshold,
        rate: violations as f64 / n as f64,
        wilson_low,
        wilson_high,
    })
}
