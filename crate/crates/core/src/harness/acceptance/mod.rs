//! The acceptance suite: regret envelopes at fixed horizons, slope checks,
//! and exact property checks. Each criterion returns a [`CriterionReport`]
//! instead of panicking so the CLI and the test target can both print one
//! line per criterion.

mod properties;

use std::fmt;

use serde::Serialize;

use super::config::{OpponentSpec, RegretMode, RunConfig, StrategySpec, ValueSpec};
use super::run::{estimate_gap_check, run_all, RunOptions};
use super::stats::{fit_regret_slope, wilson_interval};
use super::HarnessError;
use crate::env::{Distribution, StagedAdversaryState};

pub use properties::criterion_7;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriterionReport {
    pub id: u8,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "[{tag}] criterion {} ({}): {}", self.id, self.name, self.detail)
    }
}

fn report(id: u8, name: &'static str, passed: bool, detail: String) -> CriterionReport {
    CriterionReport {
        id,
        name,
        passed,
        detail,
    }
}

/// Criterion 6 floor: mean regret against the staged adversary must reach
/// `STAGED_PRESSURE_C · sqrt(T n)`. A pilot run (`configs/staged_pilot.json`,
/// master seed 9006, 100 replications) measured 55.4 ± 5.7, i.e. about
/// 0.139 sqrt(Tn); the constant sits about five standard errors below.
pub const STAGED_PRESSURE_C: f64 = 0.07;

fn opts(threads: Option<usize>) -> RunOptions {
    RunOptions {
        record_rounds: false,
        threads,
    }
}

fn bernoulli_half() -> ValueSpec {
    ValueSpec::Iid {
        distribution: Distribution::Bernoulli { p: 0.5 },
    }
}

fn two_point_opponent() -> OpponentSpec {
    OpponentSpec::Iid {
        distribution: Distribution::Discrete {
            points: vec![0.3, 0.8],
            weights: None,
        },
    }
}

/// `m_t` cycling through 1/4, 1/2, 3/4 and a frozen uniform value sequence.
fn oblivious_cycle(horizon: u64, strategy: StrategySpec, replications: u64, master_seed: u64) -> RunConfig {
    RunConfig {
        horizon,
        replications,
        master_seed,
        values: ValueSpec::Frozen {
            distribution: Distribution::Uniform { lo: 0.0, hi: 1.0 },
            length: horizon as usize,
            seed: 0x5EED_0003,
        },
        opponents: OpponentSpec::FixedSequence {
            bids: vec![0.25, 0.5, 0.75],
        },
        strategy,
        regret: RegretMode::Hindsight,
    }
}

/// Gap of the cycling opponent, known to the tuned strategies.
const CYCLE_GAP: f64 = 0.25;

pub fn criterion_1(threads: Option<usize>) -> Result<CriterionReport, HarnessError> {
    let mut details = Vec::new();
    let mut passed = true;
    for (i, horizon) in [1_000u64, 10_000, 100_000].into_iter().enumerate() {
        let cfg = RunConfig {
            horizon,
            replications: 200,
            master_seed: 9_001 + i as u64,
            values: bernoulli_half(),
            opponents: two_point_opponent(),
            strategy: StrategySpec::Ucbid {},
            regret: RegretMode::Pseudo,
        };
        let mean = run_all(&cfg, &opts(threads))?.regret_summary().mean;
        let t = horizon as f64;
        let sqrt_bound = 2.0 * (6.0 * t * t.ln()).sqrt();
        passed &= mean <= sqrt_bound;
        if horizon == 100_000 {
            let gap_bound = 3.0 + 12.0 * t.ln() / 0.3;
            passed &= mean <= gap_bound;
            details.push(format!("T={horizon}: mean {mean:.2} <= {gap_bound:.1} and <= {sqrt_bound:.1}"));
        } else {
            details.push(format!("T={horizon}: mean {mean:.2} <= {sqrt_bound:.1}"));
        }
    }
    Ok(report(1, "UCBid gap bound", passed, details.join("; ")))
}

fn margin_config(alpha: f64, horizon: u64, seed: u64) -> RunConfig {
    RunConfig {
        horizon,
        replications: 100,
        master_seed: seed,
        values: bernoulli_half(),
        opponents: OpponentSpec::MuAlpha { alpha, eps: 0.1 },
        strategy: StrategySpec::Ucbid {},
        regret: RegretMode::Pseudo,
    }
}

/// Mean pseudo-regret of UCBid against `μ_α(ε = 0.1)` for `T = 2^12..=2^18`.
pub fn margin_regret_series(alpha: f64, threads: Option<usize>) -> Result<Vec<(u64, f64)>, HarnessError> {
    (12..=18u32)
        .map(|k| {
            let horizon = 1u64 << k;
            let seed = 9_002_000 + (alpha * 100.0) as u64 * 100 + u64::from(k);
            let mean = run_all(&margin_config(alpha, horizon, seed), &opts(threads))?
                .regret_summary()
                .mean;
            Ok((horizon, mean))
        })
        .collect()
}

pub fn criterion_2(threads: Option<usize>) -> Result<CriterionReport, HarnessError> {
    let mut details = Vec::new();
    let mut passed = true;
    for alpha in [0.25, 0.5, 0.75] {
        let series = margin_regret_series(alpha, threads)?;
        let fit = fit_regret_slope(&series)?;
        let target = (1.0 - alpha) / 2.0;
        let (lo, hi) = (target - 0.05, target + 0.20);
        let ok = fit.slope >= lo && fit.slope <= hi;
        passed &= ok;
        details.push(format!(
            "alpha={alpha}: slope {:.3} (se {:.3}) in [{lo:.3}, {hi:.3}] {}",
            fit.slope,
            fit.slope_stderr,
            if ok { "ok" } else { "MISS" }
        ));
    }
    let per_log = |horizon: u64| -> Result<f64, HarnessError> {
        let mean = run_all(&margin_config(2.0, horizon, 9_002_999 + horizon), &opts(threads))?
            .regret_summary()
            .mean;
        Ok(mean / (horizon as f64).ln())
    };
    let (small, large) = (per_log(1 << 14)?, per_log(1 << 18)?);
    let ratio = large / small;
    let ok = (0.5..=2.0).contains(&ratio);
    passed &= ok;
    details.push(format!(
        "alpha=2: regret/lnT {small:.3} at 2^14, {large:.3} at 2^18, ratio {ratio:.3} {}",
        if ok { "ok" } else { "MISS" }
    ));
    Ok(report(2, "UCBid margin rates", passed, details.join("; ")))
}

pub fn criterion_3(threads: Option<usize>) -> Result<CriterionReport, HarnessError> {
    let horizon = 10_000;
    let cfg = oblivious_cycle(
        horizon,
        StrategySpec::Exptree {
            eta: None,
            gap: Some(CYCLE_GAP),
        },
        200,
        9_003,
    );
    let log = run_all(&cfg, &opts(threads))?;
    let mean = log.regret_summary().mean;
    let delta = log
        .replications
        .iter()
        .map(|r| r.summary.widest_optimal_interval.expect("partition strategy"))
        .fold(0.0, f64::max);
    let bound = 4.0 * (horizon as f64 * (1.0 / delta).ln()).sqrt();
    Ok(report(
        3,
        "ExpTree oblivious bound",
        mean <= bound,
        format!("mean hindsight regret {mean:.2} <= {bound:.1} (gap {delta})"),
    ))
}

pub fn criterion_4(threads: Option<usize>) -> Result<CriterionReport, HarnessError> {
    let horizon = 10_000;
    let delta: f64 = 0.1;
    let cfg = oblivious_cycle(
        horizon,
        StrategySpec::ExptreeP {
            eta: None,
            gamma: None,
            beta: None,
            gap: Some(CYCLE_GAP),
        },
        500,
        9_004,
    );
    let log = run_all(&cfg, &opts(threads))?;
    let t = horizon as f64;
    let exceed = log
        .replications
        .iter()
        .filter(|r| {
            let gap = r.summary.widest_optimal_interval.expect("partition strategy");
            let bound = 2.0 * (8.0 * t * (1.0 / gap).ln()).sqrt() + 3.0 * (2.0 * t * t.ln()).sqrt() * (1.0 / delta).ln();
            r.summary.regret > bound
        })
        .count() as u64;
    let n = log.replications.len() as u64;
    let (lo, hi) = wilson_interval(exceed, n, 1.96);
    let rate = exceed as f64 / n as f64;
    let regret_ok = rate <= delta + 0.5 * (hi - lo);

    let gap = estimate_gap_check(&cfg, delta, &opts(threads))?;
    let gap_ok = gap.rate <= delta + 0.5 * (gap.wilson_high - gap.wilson_low);
    Ok(report(
        4,
        "ExpTree.P high-probability bound",
        regret_ok && gap_ok,
        format!(
            "bound exceeded in {exceed}/{n} runs (Wilson [{lo:.4}, {hi:.4}]); estimate gap above {:.1} in {}/{} runs",
            gap.threshold, gap.violations, gap.replications
        ),
    ))
}

pub fn criterion_5(threads: Option<usize>) -> Result<CriterionReport, HarnessError> {
    let horizon = 10_000;
    let cfg = oblivious_cycle(horizon, StrategySpec::ExptreeDoubling {}, 100, 9_005);
    let log = run_all(&cfg, &opts(threads))?;
    let mean = log.regret_summary().mean;
    let narrowest = log
        .replications
        .iter()
        .map(|r| r.summary.narrowest_interval.expect("partition strategy"))
        .fold(0.0, f64::max);
    let bound = 48.0 * (2.0 * horizon as f64 * (1.0 / narrowest).ln()).sqrt();
    Ok(report(
        5,
        "doubling wrapper",
        mean <= bound,
        format!("mean hindsight regret {mean:.2} <= {bound:.1} (narrowest interval {narrowest})"),
    ))
}

/// The staged lower-bound run: ExpTree tuned for gap `2^{-n-1}`.
pub fn staged_config(replications: u64, master_seed: u64) -> Result<RunConfig, HarnessError> {
    let n = 4u32;
    let horizon = 40_000;
    let gap = (-(f64::from(n) + 1.0)).exp2();
    debug_assert_eq!(StagedAdversaryState::stages_for_gap(gap)?, n);
    Ok(RunConfig {
        horizon,
        replications,
        master_seed,
        values: ValueSpec::StageTilted {},
        opponents: OpponentSpec::StagedAdversary {
            stages: Some(n),
            target_gap: None,
        },
        strategy: StrategySpec::Exptree {
            eta: None,
            gap: Some(gap),
        },
        regret: RegretMode::Hindsight,
    })
}

pub fn criterion_6(threads: Option<usize>) -> Result<CriterionReport, HarnessError> {
    let cfg = staged_config(100, 9_106)?;
    let mean = run_all(&cfg, &opts(threads))?.regret_summary().mean;
    let scale = (cfg.horizon as f64 * 4.0).sqrt();
    let floor = STAGED_PRESSURE_C * scale;
    Ok(report(
        6,
        "lower-bound adversary pressure",
        mean >= floor && STAGED_PRESSURE_C >= 0.005,
        format!(
            "mean hindsight regret {mean:.2} >= {floor:.1} (c = {STAGED_PRESSURE_C}, measured {:.3} sqrt(Tn))",
            mean / scale
        ),
    ))
}

pub fn criterion_8(threads: Option<usize>) -> Result<CriterionReport, HarnessError> {
    let horizon = 1_000u64;
    let replications = 10_000u64;
    let cfg = RunConfig {
        horizon,
        replications,
        master_seed: 9_008,
        values: bernoulli_half(),
        opponents: two_point_opponent(),
        strategy: StrategySpec::Ucbid {},
        regret: RegretMode::Pseudo,
    };
    let log = run_all(&cfg, &opts(threads))?;
    let underbids: u64 = log
        .replications
        .iter()
        .map(|r| r.summary.underbids.expect("i.i.d. values"))
        .sum();
    let tail: f64 = (2..=horizon).map(|t| (t as f64).powi(-2)).sum();
    let bound = tail * replications as f64 * 1.5;
    Ok(report(
        8,
        "UCBid optimism",
        (underbids as f64) <= bound,
        format!("{underbids} underbid rounds <= {bound:.1}"),
    ))
}

pub type CriterionFn = fn(Option<usize>) -> Result<CriterionReport, HarnessError>;

pub const CRITERIA: [(u8, CriterionFn); 8] = [
    (1, criterion_1),
    (2, criterion_2),
    (3, criterion_3),
    (4, criterion_4),
    (5, criterion_5),
    (6, criterion_6),
    (7, criterion_7),
    (8, criterion_8),
];

pub fn run_criteria(ids: &[u8], threads: Option<usize>) -> Result<Vec<CriterionReport>, HarnessError> {
    CRITERIA
        .iter()
        .filter(|(id, _)| ids.is_empty() || ids.contains(id))
        .map(|(_, f)| f(threads))
        .collect()
}
