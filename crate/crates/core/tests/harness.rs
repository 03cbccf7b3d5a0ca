use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use vickrey_bandit::auction::{hindsight_best_fixed_bid, pseudo_regret_increment, shifted_gain, raw_utility};
use vickrey_bandit::env::make_stochastic_lb_pair;
use vickrey_bandit::harness::config::{OpponentSpec, StrategySpec, ValueSpec};
use vickrey_bandit::harness::csv_io::{read_records, write_log};
use vickrey_bandit::harness::{run_all, RegretMode, RunConfig, RunOptions};
use vickrey_bandit::env::Distribution;
use vickrey_bandit::Bid;

fn config(strategy: StrategySpec, regret: RegretMode) -> RunConfig {
    RunConfig {
        horizon: 500,
        replications: 5,
        master_seed: 42,
        values: ValueSpec::Iid {
            distribution: Distribution::Bernoulli { p: 0.6 },
        },
        opponents: OpponentSpec::Iid {
            distribution: Distribution::Uniform { lo: 0.0, hi: 1.0 },
        },
        strategy,
        regret,
    }
}

fn all_strategies() -> Vec<StrategySpec> {
    vec![
        StrategySpec::Ucbid {},
        StrategySpec::Exptree {
            eta: None,
            gap: Some(0.01),
        },
        StrategySpec::ExptreeP {
            eta: None,
            gamma: None,
            beta: None,
            gap: Some(0.01),
        },
        StrategySpec::ExptreeDoubling {},
        StrategySpec::Truthful {},
        StrategySpec::Constant { bid: 0.2 },
    ]
}

fn recorded(threads: usize) -> RunOptions {
    RunOptions {
        record_rounds: true,
        threads: Some(threads),
    }
}

#[test]
fn records_reproduce_summaries() {
    for strategy in all_strategies() {
        for mode in [RegretMode::Hindsight, RegretMode::Pseudo] {
            let cfg = config(strategy.clone(), mode);
            let log = run_all(&cfg, &recorded(2)).unwrap();
            for rep in &log.replications {
                let last = rep.rounds.last().unwrap();
                assert!((last.cum_regret - rep.summary.regret).abs() < 1e-9);
                // Recompute both regrets from the records and the logged values.
                let bids: Vec<Bid> = rep.rounds.iter().map(|r| Bid::new(r.m).unwrap()).collect();
                let utility: f64 = rep.rounds.iter().map(|r| r.gain - r.m).sum();
                let best = hindsight_best_fixed_bid(&rep.values, &bids).unwrap().best_gain;
                assert!((best - utility - rep.summary.hindsight_regret.unwrap()).abs() < 1e-9);
                let pseudo: f64 = rep
                    .rounds
                    .iter()
                    .map(|r| pseudo_regret_increment(0.6, Bid::new(r.m).unwrap(), Bid::new(r.bid).unwrap()))
                    .sum();
                assert!((pseudo - rep.summary.pseudo_regret.unwrap()).abs() < 1e-9);
                for r in &rep.rounds {
                    assert_eq!(r.won, r.bid > r.m);
                    assert_eq!(r.v.is_some(), r.won);
                }
            }
        }
    }
}

#[test]
fn thread_count_does_not_change_results() {
    for strategy in all_strategies() {
        let cfg = config(strategy, RegretMode::Hindsight);
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_log(&run_all(&cfg, &recorded(1)).unwrap(), &mut a).unwrap();
        write_log(&run_all(&cfg, &recorded(3)).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn csv_log_round_trips_through_a_file() {
    let cfg = config(StrategySpec::Ucbid {}, RegretMode::Pseudo);
    let log = run_all(&cfg, &recorded(1)).unwrap();
    let file = tempfile::NamedTempFile::new().unwrap();
    write_log(&log, std::fs::File::create(file.path()).unwrap()).unwrap();
    let back = read_records(std::fs::File::open(file.path()).unwrap()).unwrap();
    let original: Vec<_> = log.replications.iter().flat_map(|r| r.rounds.iter().copied()).collect();
    assert_eq!(back, original);
}

#[test]
fn truthful_bidding_has_no_pseudo_regret() {
    let cfg = config(StrategySpec::Truthful {}, RegretMode::Pseudo);
    let log = run_all(&cfg, &RunOptions::default()).unwrap();
    assert!(log.final_regrets().iter().all(|r| *r == 0.0));
}

#[test]
fn lower_bound_pair_shares_opponent_bids() {
    let (mut nu, mut nu_prime) = make_stochastic_lb_pair(0.5, 10_000).unwrap();
    let mut v1 = ChaCha8Rng::seed_from_u64(1);
    let mut v2 = ChaCha8Rng::seed_from_u64(2);
    let mut o1 = ChaCha8Rng::seed_from_u64(3);
    let mut o2 = ChaCha8Rng::seed_from_u64(3);
    for t in 1..=1000 {
        let (m1, _) = nu.next_round(t, &mut v1, &mut o1).unwrap();
        let (m2, _) = nu_prime.next_round(t, &mut v2, &mut o2).unwrap();
        assert_eq!(m1, m2);
        assert!(m1.value() > 0.5);
    }
    assert_eq!(nu.value_mean(), Some(0.5));
    assert!((nu_prime.value_mean().unwrap() - 0.51).abs() < 1e-15);
}

proptest! {
    #[test]
    fn regret_accounting_identities(b in 0.0f64..=1.0, v in 0.0f64..=1.0, m in 1e-9f64..=1.0, mean in 0.0f64..=1.0) {
        let (b, m) = (Bid::new(b).unwrap(), Bid::new(m).unwrap());
        prop_assert!(pseudo_regret_increment(mean, m, b) >= 0.0);
        let g = shifted_gain(b, v, m).unwrap();
        prop_assert!((g - raw_utility(b, v, m) - m.value()).abs() < 1e-15);
        prop_assert!((0.0..=1.0).contains(&g));
    }

    #[test]
    fn hindsight_regret_of_best_constant_is_zero(
        rounds in prop::collection::vec((0.0f64..=1.0, 0.01f64..=1.0), 1..100)
    ) {
        let (vs, ms): (Vec<f64>, Vec<f64>) = rounds.into_iter().unzip();
        let bids: Vec<Bid> = ms.iter().map(|&m| Bid::new(m).unwrap()).collect();
        let best = hindsight_best_fixed_bid(&vs, &bids).unwrap();
        prop_assert!(best.best_gain >= 0.0);
        let b = best.witness.hi;
        let u: f64 = vs.iter().zip(&ms).filter(|(_, m)| b > **m).map(|(v, m)| v - m).sum();
        prop_assert!((u - best.best_gain).abs() < 1e-9);
    }
}
