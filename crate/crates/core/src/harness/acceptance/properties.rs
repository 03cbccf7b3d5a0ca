//! Exact property checks. Every check compares the library against a
//! separate brute-force computation written here from the definitions.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{report, CriterionReport};
use crate::auction::{hindsight_best_fixed_bid, Bid, RoundOutcome};
use crate::harness::config::{OpponentSpec, RegretMode, RunConfig, StrategySpec, ValueSpec};
use crate::harness::csv_io::write_log;
use crate::harness::run::{run_all, RunOptions};
use crate::harness::HarnessError;
use crate::partition::{estimate_gain_unbiased, GainEstimate, IntervalPartition};

/// A random partition with random gains. Breakpoints mix a dyadic grid
/// (so later opponent bids often hit them exactly) with arbitrary reals.
fn fuzzed_partition(rng: &mut ChaCha8Rng) -> IntervalPartition {
    let mut p = IntervalPartition::new(rng.gen_range(0.001..0.5));
    for _ in 0..rng.gen_range(0..12) {
        let m = if rng.gen_bool(0.5) {
            f64::from(rng.gen_range(1..64u32)) / 64.0
        } else {
            rng.gen_range(0.0..1.0f64).max(1e-9)
        };
        p.split_at(Bid::saturating(m)).expect("positive split");
    }
    let gains = GainEstimate {
        intervals: (0..p.len()).map(|_| rng.gen_range(-20.0..20.0)).collect(),
        atom_zero: 0.0,
        atom_one: 0.0,
    };
    p.apply_gains(&gains).expect("matching length");
    p
}

fn random_opponent_bid(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..4) {
        0 => f64::from(rng.gen_range(1..=64u32)) / 64.0,
        1 => 1.0,
        _ => rng.gen_range(1e-6..1.0),
    }
}

/// Interval weights straight from the definition `|ℓ| e^{η S_ℓ} / Σ`.
fn oracle_weights(p: &IntervalPartition) -> Vec<f64> {
    let raw: Vec<f64> = p
        .intervals()
        .zip(p.cumulative_gains())
        .map(|(ivl, s)| ivl.width() * (p.eta() * s).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// `P(b ∈ (lo, hi])` for the mixture with atom mass `a`.
fn oracle_mass(p: &IntervalPartition, a: f64, lo: f64, hi: f64) -> f64 {
    let weights = oracle_weights(p);
    let mut mass = 0.0;
    for (ivl, w) in p.intervals().zip(&weights) {
        let overlap = (ivl.hi.min(hi) - ivl.lo.max(lo)).max(0.0);
        mass += (1.0 - 2.0 * a) * w * overlap / ivl.width();
    }
    if lo < 0.0 && hi >= 0.0 {
        mass += a;
    }
    if lo < 1.0 && hi >= 1.0 {
        mass += a;
    }
    mass
}

/// The estimate averaged over the bid law (won and lost branches weighted
/// by the oracle win probability) equals the true shifted gain of every bid.
fn unbiasedness(cases: usize, rng: &mut ChaCha8Rng) -> Result<f64, String> {
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let mut p = fuzzed_partition(rng);
        let a = rng.gen_range(0.01..0.25);
        let m = random_opponent_bid(rng);
        let v = if rng.gen_bool(0.2) { f64::from(rng.gen_range(0..2u8)) } else { rng.gen() };
        let mb = Bid::saturating(m);

        let p_win = p.distribution(a).prob_win(mb).map_err(|e| e.to_string())?;
        let oracle_p_win = oracle_mass(&p, a, m, 1.0);
        if (p_win - oracle_p_win).abs() > 1e-12 {
            return Err(format!("case {case}: win probability {p_win} vs {oracle_p_win}"));
        }
        p.split_at(mb).map_err(|e| e.to_string())?;
        let lost = estimate_gain_unbiased(&p, &RoundOutcome::resolve(1, Bid::ZERO, mb, v), p_win)
            .map_err(|e| e.to_string())?;
        let won = if m < 1.0 {
            Some(
                estimate_gain_unbiased(&p, &RoundOutcome::resolve(1, Bid::ONE, mb, v), p_win)
                    .map_err(|e| e.to_string())?,
            )
        } else {
            None
        };
        let expect = |j: Option<usize>, b: f64| {
            let pick = |g: &GainEstimate| match j {
                Some(j) => g.intervals[j],
                None if b == 0.0 => g.atom_zero,
                None => g.atom_one,
            };
            let mean = (1.0 - p_win) * pick(&lost) + won.as_ref().map_or(0.0, |g| p_win * pick(g));
            let truth = if b > m { v } else { m };
            (mean - truth).abs()
        };
        for (j, ivl) in p.intervals().enumerate() {
            worst = worst.max(expect(Some(j), 0.5 * (ivl.lo + ivl.hi)));
        }
        worst = worst.max(expect(None, 0.0)).max(expect(None, 1.0));
        if worst > 1e-12 {
            return Err(format!("case {case}: estimator bias {worst:e}"));
        }
    }
    Ok(worst)
}

/// Splitting leaves the mass of every cell of a 10^4-point grid unchanged.
fn split_transparency(cases: usize, rng: &mut ChaCha8Rng) -> Result<f64, String> {
    let grid = 10_000;
    let mut worst: f64 = 0.0;
    for case in 0..cases {
        let mut p = fuzzed_partition(rng);
        let a = rng.gen_range(0.0..0.25);
        let before: Vec<f64> = (0..grid)
            .map(|k| oracle_mass(&p, a, k as f64 / grid as f64, (k + 1) as f64 / grid as f64))
            .collect();
        let lib_before = p.distribution(a);
        p.split_at(Bid::saturating(random_opponent_bid(rng))).map_err(|e| e.to_string())?;
        let lib_after = p.distribution(a);
        for (k, mass) in before.iter().enumerate() {
            let (lo, hi) = (k as f64 / grid as f64, (k + 1) as f64 / grid as f64);
            let after = oracle_mass(&p, a, lo, hi);
            let lib = lib_after.cdf(hi) - lib_after.cdf(lo);
            let lib0 = lib_before.cdf(hi) - lib_before.cdf(lo);
            let diff = (after - mass).abs().max((lib - mass).abs()).max((lib0 - mass).abs());
            worst = worst.max(diff);
        }
        if worst > 1e-9 {
            return Err(format!("case {case}: cell mass moved by {worst:e}"));
        }
    }
    Ok(worst)
}

/// Utility of a fixed bid by direct summation.
fn brute_utility(values: &[f64], ms: &[f64], b: f64) -> f64 {
    values.iter().zip(ms).filter(|(_, m)| b > **m).map(|(v, m)| v - m).sum()
}

/// The sweep oracle matches a scan over every candidate bid: 0, 1, each
/// `m_t` (which loses its own round) and the next float above each `m_t`.
fn hindsight_oracle(cases: usize, rng: &mut ChaCha8Rng) -> Result<(), String> {
    for case in 0..cases {
        let len = rng.gen_range(1..=200);
        let ms: Vec<f64> = (0..len).map(|_| random_opponent_bid(rng)).collect();
        let values: Vec<f64> = (0..len).map(|_| rng.gen()).collect();
        let bids: Vec<Bid> = ms.iter().map(|&m| Bid::saturating(m)).collect();
        let fast = hindsight_best_fixed_bid(&values, &bids).map_err(|e| e.to_string())?;
        let mut best = brute_utility(&values, &ms, 0.0).max(brute_utility(&values, &ms, 1.0));
        for &m in &ms {
            best = best
                .max(brute_utility(&values, &ms, m))
                .max(brute_utility(&values, &ms, m.next_up().min(1.0)));
        }
        if (fast.best_gain - best).abs() > 1e-9 {
            return Err(format!("case {case}: sweep {} vs scan {best}", fast.best_gain));
        }
        let witness_b = fast.witness.hi;
        if (brute_utility(&values, &ms, witness_b) - best).abs() > 1e-9 {
            return Err(format!("case {case}: witness {} does not attain the best", fast.witness));
        }
    }
    Ok(())
}

fn partition_invariants(splits: usize, rng: &mut ChaCha8Rng) -> Result<usize, String> {
    let mut p = IntervalPartition::new(0.1);
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..splits {
        let m = random_opponent_bid(rng);
        p.split_at(Bid::saturating(m)).map_err(|e| e.to_string())?;
        seen.insert(m.to_bits());
    }
    let b = p.breakpoints();
    let mut errors = Vec::new();
    if b[0] != 0.0 || *b.last().unwrap_or(&0.0) != 1.0 {
        errors.push("endpoints");
    }
    if !b.windows(2).all(|w| w[0] < w[1]) {
        errors.push("strict order");
    }
    let interior = seen.iter().filter(|bits| f64::from_bits(**bits) < 1.0).count();
    if p.len() != interior + 1 || p.cumulative_gains().len() != p.len() {
        errors.push("interval count");
    }
    if seen.iter().any(|bits| b.binary_search_by(|x| x.total_cmp(&f64::from_bits(*bits))).is_err()) {
        errors.push("missing breakpoint");
    }
    let total: f64 = p.intervals().map(|i| i.width()).sum();
    if (total - 1.0).abs() > 1e-9 {
        errors.push("widths");
    }
    if errors.is_empty() {
        Ok(p.len())
    } else {
        Err(errors.join(", "))
    }
}

fn overflow_stress() -> Result<(), String> {
    let mut p = IntervalPartition::new(0.5);
    for m in [0.2, 0.4, 0.6, 0.8] {
        p.split_at(Bid::saturating(m)).map_err(|e| e.to_string())?;
    }
    p.apply_gains(&GainEstimate {
        intervals: vec![1e6, 0.0, 1e6, -1e6, 1e6 - 10.0],
        atom_zero: 1e6,
        atom_one: 1e6,
    })
    .map_err(|e| e.to_string())?;
    let d = p.distribution(0.05);
    let probs = d.interval_probs();
    let total: f64 = probs.iter().sum();
    if probs.iter().all(|q| q.is_finite()) && (total - 1.0).abs() < 1e-12 && (probs[0] - probs[2]).abs() < 1e-15 {
        Ok(())
    } else {
        Err(format!("probabilities {probs:?}"))
    }
}

fn replay_config(master_seed: u64) -> RunConfig {
    RunConfig {
        horizon: 2_000,
        replications: 6,
        master_seed,
        values: ValueSpec::StageTilted {},
        opponents: OpponentSpec::StagedAdversary {
            stages: Some(3),
            target_gap: None,
        },
        strategy: StrategySpec::ExptreeP {
            eta: None,
            gamma: None,
            beta: None,
            gap: Some(1.0 / 16.0),
        },
        regret: RegretMode::Hindsight,
    }
}

fn csv_bytes(cfg: &RunConfig, threads: usize) -> Result<Vec<u8>, HarnessError> {
    let log = run_all(
        cfg,
        &RunOptions {
            record_rounds: true,
            threads: Some(threads),
        },
    )?;
    let mut buf = Vec::new();
    write_log(&log, &mut buf)?;
    Ok(buf)
}

fn replay_determinism() -> Result<(), String> {
    let cfg = replay_config(77);
    let err = |e: HarnessError| e.to_string();
    let serial = csv_bytes(&cfg, 1).map_err(err)?;
    let again = csv_bytes(&cfg, 1).map_err(err)?;
    let parallel = csv_bytes(&cfg, 4).map_err(err)?;
    if serial != again {
        return Err("serial replay differs".into());
    }
    if serial != parallel {
        return Err("parallel run differs from serial".into());
    }
    Ok(())
}

pub fn criterion_7(_threads: Option<usize>) -> Result<CriterionReport, HarnessError> {
    let mut rng = ChaCha8Rng::seed_from_u64(9_007);
    let mut parts = Vec::new();
    let mut passed = true;
    let mut note = |name: &str, r: Result<String, String>| match r {
        Ok(s) => parts.push(format!("{name} ok{s}")),
        Err(e) => {
            passed = false;
            parts.push(format!("{name} FAILED: {e}"));
        }
    };
    note(
        "unbiasedness x10^4",
        unbiasedness(10_000, &mut rng).map(|w| format!(" (max err {w:.1e})")),
    );
    note(
        "split transparency",
        split_transparency(200, &mut rng).map(|w| format!(" (max err {w:.1e})")),
    );
    note("hindsight oracle x10^3", hindsight_oracle(1_000, &mut rng).map(|_| String::new()));
    note(
        "10^5 splits",
        partition_invariants(100_000, &mut rng).map(|k| format!(" ({k} intervals)")),
    );
    note("overflow", overflow_stress().map(|_| String::new()));
    note("replay", replay_determinism().map(|_| String::new()));
    Ok(report(7, "exact property suites", passed, parts.join("; ")))
}
