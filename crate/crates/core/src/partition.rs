//! Adaptive interval partition of `(0, 1]` with exponential weights.
//!
//! The partition keeps breakpoints `0 = x_0 < … < x_k = 1` and a cumulative
//! estimated gain `S_ℓ` per interval `ℓ = (x_{j}, x_{j+1}]`. Bids are drawn
//! from a mixture: atoms at 0 and 1 each carry mass `a`, and the remaining
//! `1 - 2a` is spread over intervals with probability proportional to
//! `|ℓ| exp(η S_ℓ)`, uniformly inside the chosen interval.
//!
//! Splitting at every opponent bid keeps each interval entirely above or
//! entirely below each past `m_t`, so all bids in an interval share one
//! reward history.

use rand::{Rng, RngCore};

use crate::auction::{Bid, Interval, RoundOutcome};
use crate::strategy::StrategyError;

#[derive(Debug, Clone, PartialEq)]
pub struct IntervalPartition {
    breakpoints: Vec<f64>,
    gains: Vec<f64>,
    atom_zero_gain: f64,
    atom_one_gain: f64,
    eta: f64,
}

impl IntervalPartition {
    /// The single interval `(0, 1]` with zero gain.
    pub fn new(eta: f64) -> Self {
        IntervalPartition {
            breakpoints: vec![0.0, 1.0],
            gains: vec![0.0],
            atom_zero_gain: 0.0,
            atom_one_gain: 0.0,
            eta,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn set_eta(&mut self, eta: f64) {
        self.eta = eta;
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn cumulative_gains(&self) -> &[f64] {
        &self.gains
    }

    /// Accumulated estimates for the atoms `{0}` and `{1}`.
    pub fn atom_gains(&self) -> (f64, f64) {
        (self.atom_zero_gain, self.atom_one_gain)
    }

    pub fn interval(&self, j: usize) -> Interval {
        Interval::new(self.breakpoints[j], self.breakpoints[j + 1])
    }

    pub fn intervals(&self) -> impl ExactSizeIterator<Item = Interval> + '_ {
        self.breakpoints.windows(2).map(|w| Interval::new(w[0], w[1]))
    }

    pub fn narrowest_width(&self) -> f64 {
        self.breakpoints
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Index of the interval containing `x ∈ (0, 1]`.
    pub fn locate(&self, x: f64) -> usize {
        let j = self.breakpoints[1..].partition_point(|&y| y < x);
        j.min(self.len() - 1)
    }

    /// Inserts `m` as a breakpoint. Both halves inherit the parent's gain.
    /// Returns whether a new breakpoint was added.
    pub fn split_at(&mut self, m: Bid) -> Result<bool, StrategyError> {
        let m = m.value();
        if m <= 0.0 {
            return Err(StrategyError::ZeroOpponentBid(m));
        }
        let j = self.locate(m);
        if self.breakpoints[j + 1] == m {
            return Ok(false);
        }
        self.breakpoints.insert(j + 1, m);
        self.gains.insert(j + 1, self.gains[j]);
        Ok(true)
    }

    /// Zeroes every cumulative gain, atoms included. Breakpoints are kept.
    pub fn reset_gains(&mut self) {
        self.gains.iter_mut().for_each(|s| *s = 0.0);
        self.atom_zero_gain = 0.0;
        self.atom_one_gain = 0.0;
    }

    pub fn apply_gains(&mut self, estimate: &GainEstimate) -> Result<(), StrategyError> {
        if estimate.intervals.len() != self.len() {
            return Err(StrategyError::GainLength {
                expected: self.len(),
                got: estimate.intervals.len(),
            });
        }
        for (s, g) in self.gains.iter_mut().zip(&estimate.intervals) {
            *s += g;
        }
        self.atom_zero_gain += estimate.atom_zero;
        self.atom_one_gain += estimate.atom_one;
        Ok(())
    }

    /// Sampling distribution with mass `atom_mass` on each of `{0}` and
    /// `{1}`. Interval weights are normalized in log space so large gains do
    /// not overflow.
    pub fn distribution(&self, atom_mass: f64) -> BidDistribution {
        let eta = self.eta;
        let logits: Vec<f64> = self
            .breakpoints
            .windows(2)
            .zip(&self.gains)
            .map(|(w, s)| (w[1] - w[0]).ln() + eta * s)
            .collect();
        let top = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = logits.iter().map(|z| (z - top).exp()).collect();
        let total: f64 = probs.iter().sum();
        probs.iter_mut().for_each(|p| *p /= total);
        BidDistribution {
            atom_mass,
            interval_probs: probs,
            breakpoints: self.breakpoints.clone(),
        }
    }
}

/// A snapshot of the bid law for one round.
#[derive(Debug, Clone, PartialEq)]
pub struct BidDistribution {
    atom_mass: f64,
    interval_probs: Vec<f64>,
    breakpoints: Vec<f64>,
}

impl BidDistribution {
    pub fn atom_mass(&self) -> f64 {
        self.atom_mass
    }

    /// `p_ℓ`, the normalized interval weights (before scaling by `1 - 2a`).
    pub fn interval_probs(&self) -> &[f64] {
        &self.interval_probs
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    /// `P(b ≤ x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x >= 1.0 {
            return 1.0;
        }
        let mut cont = 0.0;
        for (w, p) in self.breakpoints.windows(2).zip(&self.interval_probs) {
            if w[1] <= x {
                cont += p;
            } else {
                if w[0] < x {
                    cont += p * (x - w[0]) / (w[1] - w[0]);
                }
                break;
            }
        }
        self.atom_mass + (1.0 - 2.0 * self.atom_mass) * cont
    }

    /// `P(b > m)`: the probability of winning against `m`.
    pub fn prob_win(&self, m: Bid) -> Result<f64, StrategyError> {
        if !(self.atom_mass > 0.0) {
            return Err(StrategyError::ZeroExploration);
        }
        let m = m.value();
        let mut above = 0.0;
        for (w, p) in self.breakpoints.windows(2).zip(&self.interval_probs) {
            let (x, y) = (w[0], w[1]);
            if x >= m {
                above += p;
            } else if y > m {
                above += p * (y - m) / (y - x);
            }
        }
        let top_atom = if m < 1.0 { self.atom_mass } else { 0.0 };
        Ok(top_atom + (1.0 - 2.0 * self.atom_mass) * above)
    }

    pub fn sample(&self, rng: &mut dyn RngCore) -> Bid {
        let u: f64 = rng.gen();
        if u < self.atom_mass {
            return Bid::ZERO;
        }
        if u < 2.0 * self.atom_mass {
            return Bid::ONE;
        }
        let mut pick: f64 = rng.gen();
        let last = self.interval_probs.len() - 1;
        let mut j = last;
        for (i, p) in self.interval_probs.iter().enumerate() {
            if pick < *p {
                j = i;
                break;
            }
            pick -= p;
        }
        // Uniform on the half-open (x, y]: 1 - U with U ∈ [0, 1) lies in (0, 1].
        let (x, y) = (self.breakpoints[j], self.breakpoints[j + 1]);
        let s = 1.0 - rng.gen::<f64>();
        Bid::saturating((x + s * (y - x)).clamp(x.next_up(), y))
    }
}

/// Per-round gain estimates: one per interval plus the two atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct GainEstimate {
    pub intervals: Vec<f64>,
    pub atom_zero: f64,
    pub atom_one: f64,
}

impl GainEstimate {
    pub fn max(&self) -> f64 {
        self.intervals
            .iter()
            .copied()
            .fold(self.atom_zero.max(self.atom_one), f64::max)
    }
}

/// Importance-weighted shifted-gain estimates for the outcome of a round.
///
/// Intervals above `m` get `(v 1{won} + β) / p_win`, intervals at or below
/// get `(m 1{lost} + β) / (1 - p_win)`. `p_win` must be the win probability
/// of the distribution the bid was drawn from, and `partition` must already
/// be split at `m`. With `β = 0` the estimate is unbiased.
pub fn estimate_gain(
    partition: &IntervalPartition,
    outcome: &RoundOutcome,
    p_win: f64,
    beta: f64,
) -> Result<GainEstimate, StrategyError> {
    let m = outcome.opponent_max().value();
    let won_term = outcome.observed_value().unwrap_or(0.0) + beta;
    let lost_term = if outcome.won() { 0.0 } else { m } + beta;
    let above = || {
        if p_win > 0.0 && p_win <= 1.0 {
            Ok(won_term / p_win)
        } else {
            Err(StrategyError::DegenerateWinProbability(p_win))
        }
    };
    let below = || {
        if (0.0..1.0).contains(&p_win) {
            Ok(lost_term / (1.0 - p_win))
        } else {
            Err(StrategyError::DegenerateWinProbability(p_win))
        }
    };
    let mut intervals = Vec::with_capacity(partition.len());
    for w in partition.breakpoints().windows(2) {
        let (x, y) = (w[0], w[1]);
        let g = if x >= m {
            above()?
        } else if y <= m {
            below()?
        } else {
            return Err(StrategyError::IncomparableInterval { lo: x, hi: y, m });
        };
        intervals.push(g);
    }
    let atom_one = if m < 1.0 { above()? } else { below()? };
    Ok(GainEstimate {
        intervals,
        atom_zero: below()?,
        atom_one,
    })
}

pub fn estimate_gain_unbiased(
    partition: &IntervalPartition,
    outcome: &RoundOutcome,
    p_win: f64,
) -> Result<GainEstimate, StrategyError> {
    estimate_gain(partition, outcome, p_win, 0.0)
}

pub fn estimate_gain_biased(
    partition: &IntervalPartition,
    outcome: &RoundOutcome,
    p_win: f64,
    beta: f64,
) -> Result<GainEstimate, StrategyError> {
    estimate_gain(partition, outcome, p_win, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn bid(x: f64) -> Bid {
        Bid::new(x).unwrap()
    }

    fn split(points: &[f64]) -> IntervalPartition {
        let mut p = IntervalPartition::new(0.1);
        for &x in points {
            p.split_at(bid(x)).unwrap();
        }
        p
    }

    #[test]
    fn split_examples() {
        let mut p = IntervalPartition::new(0.1);
        assert!(p.split_at(bid(0.4)).unwrap());
        assert_eq!(p.breakpoints(), &[0.0, 0.4, 1.0]);
        assert_eq!(p.cumulative_gains(), &[0.0, 0.0]);
        assert!(!p.split_at(bid(0.4)).unwrap());
        assert!(!p.split_at(Bid::ONE).unwrap());
        assert_eq!(p.len(), 2);
        assert!(p.split_at(Bid::ZERO).is_err());
    }

    #[test]
    fn split_copies_gain() {
        let mut p = split(&[0.5]);
        p.apply_gains(&GainEstimate {
            intervals: vec![1.0, 3.0],
            atom_zero: 1.0,
            atom_one: 3.0,
        })
        .unwrap();
        p.split_at(bid(0.75)).unwrap();
        assert_eq!(p.cumulative_gains(), &[1.0, 3.0, 3.0]);
        assert_eq!(p.atom_gains(), (1.0, 3.0));
    }

    #[test]
    fn prob_win_uniform_case() {
        let d = IntervalPartition::new(0.1).distribution(0.1);
        let p = d.prob_win(bid(0.25)).unwrap();
        assert!((p - (0.1 + 0.8 * 0.75)).abs() < 1e-15);
        assert!((p - 0.7).abs() < 1e-15);
        assert!((d.prob_win(Bid::ONE).unwrap()).abs() < 1e-15);
        assert_eq!(
            IntervalPartition::new(0.1).distribution(0.0).prob_win(bid(0.5)),
            Err(StrategyError::ZeroExploration)
        );
    }

    #[test]
    fn prob_win_matches_monte_carlo() {
        let mut p = split(&[0.3, 0.6]);
        p.apply_gains(&GainEstimate {
            intervals: vec![2.0, 0.0, 5.0],
            atom_zero: 0.0,
            atom_one: 0.0,
        })
        .unwrap();
        let d = p.distribution(0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 400_000;
        for m in [0.1, 0.3, 0.45, 0.6, 0.9] {
            let wins = (0..n).filter(|_| d.sample(&mut rng).value() > m).count();
            let mc = wins as f64 / n as f64;
            let exact = d.prob_win(bid(m)).unwrap();
            assert!((mc - exact).abs() < 4.0 * (exact * (1.0 - exact) / n as f64).sqrt() + 1e-4, "m {m}");
            assert!((exact - (1.0 - d.cdf(m))).abs() < 1e-12);
        }
    }

    #[test]
    fn probabilities_sum_to_one() {
        let mut p = split(&[0.1, 0.2, 0.7]);
        p.apply_gains(&GainEstimate {
            intervals: vec![1.0, 20.0, -3.0, 7.0],
            atom_zero: 0.0,
            atom_one: 0.0,
        })
        .unwrap();
        let d = p.distribution(0.02);
        let total: f64 = d.interval_probs().iter().sum::<f64>() * (1.0 - 0.04) + 0.04;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn huge_gains_do_not_overflow() {
        let mut p = split(&[0.25, 0.5, 0.75]);
        p.set_eta(1.0);
        p.apply_gains(&GainEstimate {
            intervals: vec![1e6, 1e6 - 1.0, 0.0, 1e6],
            atom_zero: 0.0,
            atom_one: 0.0,
        })
        .unwrap();
        let d = p.distribution(0.01);
        assert!(d.interval_probs().iter().all(|q| q.is_finite()));
        let total: f64 = d.interval_probs().iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
        let e = std::f64::consts::E;
        let expected_first = 1.0 / (2.0 + 1.0 / e);
        assert!((d.interval_probs()[0] - expected_first).abs() < 1e-12);
    }

    #[test]
    fn samples_uniform_inside_single_interval() {
        // With no atoms and one interval, bids are Unif(0, 1]; KS against the
        // uniform CDF.
        let d = IntervalPartition::new(0.1).distribution(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let n = 100_000;
        let mut xs: Vec<f64> = (0..n).map(|_| d.sample(&mut rng).value()).collect();
        xs.sort_by(f64::total_cmp);
        let ks = xs
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let lo = i as f64 / n as f64;
                let hi = (i + 1) as f64 / n as f64;
                (x - lo).abs().max((hi - x).abs())
            })
            .fold(0.0, f64::max);
        // 1% critical value is 1.63 / sqrt(n).
        assert!(ks < 1.63 / (n as f64).sqrt(), "ks {ks}");
        assert!(xs[0] > 0.0);
    }

    #[test]
    fn estimator_examples() {
        let p = split(&[0.5]);
        let won = RoundOutcome::resolve(1, bid(0.7), bid(0.5), 0.8);
        let g = estimate_gain_unbiased(&p, &won, 0.5).unwrap();
        assert!((g.intervals[1] - 1.6).abs() < 1e-15);
        assert_eq!(g.intervals[0], 0.0);
        assert!((g.atom_one - 1.6).abs() < 1e-15);
        assert_eq!(g.atom_zero, 0.0);

        let lost = RoundOutcome::resolve(1, bid(0.3), bid(0.5), 0.8);
        let g = estimate_gain_biased(&p, &lost, 0.5, 0.1).unwrap();
        assert!((g.intervals[0] - 1.2).abs() < 1e-15);
        assert!((g.intervals[1] - 0.2).abs() < 1e-15);

        let unsplit = IntervalPartition::new(0.1);
        assert!(matches!(
            estimate_gain_unbiased(&unsplit, &won, 0.5),
            Err(StrategyError::IncomparableInterval { .. })
        ));
    }

    #[test]
    fn atom_one_is_below_when_m_is_one() {
        let p = IntervalPartition::new(0.1);
        let lost = RoundOutcome::resolve(1, Bid::ONE, Bid::ONE, 0.9);
        let g = estimate_gain_unbiased(&p, &lost, 0.0).unwrap();
        assert_eq!(g.atom_one, 1.0);
        assert_eq!(g.intervals, vec![1.0]);
    }

    /// Averages the estimator over the exact bid law (win and loss branches
    /// weighted by their probabilities) and compares with the true shifted
    /// gain of a representative bid in each interval.
    fn check_unbiased(breaks: &[f64], gains: &[f64], a: f64, m: f64, v: f64) {
        let mut p = split(breaks);
        p.apply_gains(&GainEstimate {
            intervals: gains.to_vec(),
            atom_zero: 0.0,
            atom_one: 0.0,
        })
        .unwrap();
        p.split_at(bid(m)).unwrap();
        let d = p.distribution(a);
        let pw = d.prob_win(bid(m)).unwrap();
        let win_b = if m < 1.0 { Bid::ONE } else { unreachable!() };
        let g_win = estimate_gain_unbiased(&p, &RoundOutcome::resolve(1, win_b, bid(m), v), pw).unwrap();
        let g_lose = estimate_gain_unbiased(&p, &RoundOutcome::resolve(1, Bid::ZERO, bid(m), v), pw).unwrap();
        for (j, ivl) in p.intervals().enumerate() {
            let b = 0.5 * (ivl.lo + ivl.hi);
            let truth = if b > m { v } else { m };
            let mean = pw * g_win.intervals[j] + (1.0 - pw) * g_lose.intervals[j];
            assert!((mean - truth).abs() < 1e-10, "interval {ivl}: {mean} vs {truth}");
        }
        let mean_one = pw * g_win.atom_one + (1.0 - pw) * g_lose.atom_one;
        assert!((mean_one - v).abs() < 1e-10);
        let mean_zero = pw * g_win.atom_zero + (1.0 - pw) * g_lose.atom_zero;
        assert!((mean_zero - m).abs() < 1e-10);
    }

    #[test]
    fn unbiased_estimator_identity() {
        check_unbiased(&[0.3, 0.6], &[0.0, 1.0, 2.0], 0.05, 0.45, 0.8);
        check_unbiased(&[], &[0.0], 0.1, 0.5, 0.0);
        check_unbiased(&[0.2], &[4.0, -1.0], 0.2, 0.9, 1.0);
    }

    proptest! {
        #[test]
        fn split_preserves_bid_law(
            breaks in prop::collection::vec(0.001f64..1.0, 0..8),
            gains in prop::collection::vec(-5.0f64..5.0, 9),
            eta in 0.01f64..1.0,
            a in 0.0f64..0.25,
            m in 0.001f64..1.0,
        ) {
            let mut p = split(&breaks);
            p.set_eta(eta);
            let k = p.len();
            p.apply_gains(&GainEstimate { intervals: gains[..k].to_vec(), atom_zero: 0.0, atom_one: 0.0 }).unwrap();
            let before = p.distribution(a);
            p.split_at(bid(m)).unwrap();
            let after = p.distribution(a);
            // Compare the law on a fine grid.
            for i in 0..=10_000 {
                let x = i as f64 / 10_000.0;
                prop_assert!((before.cdf(x) - after.cdf(x)).abs() < 1e-9);
            }
        }

        #[test]
        fn breakpoints_stay_sorted(ms in prop::collection::vec(1e-9f64..=1.0, 1..200)) {
            let p = split(&ms);
            let b = p.breakpoints();
            prop_assert_eq!(b[0], 0.0);
            prop_assert_eq!(*b.last().unwrap(), 1.0);
            prop_assert!(b.windows(2).all(|w| w[0] < w[1]));
            prop_assert_eq!(p.len(), b.len() - 1);
            for m in ms {
                prop_assert!(b.contains(&m));
            }
        }

        #[test]
        fn unbiased_random(
            breaks in prop::collection::vec(0.01f64..0.99, 0..5),
            gains in prop::collection::vec(-3.0f64..3.0, 6),
            a in 0.001f64..0.25,
            m in 0.01f64..0.99,
            v in 0.0f64..=1.0,
        ) {
            let k = split(&breaks).len();
            check_unbiased(&breaks, &gains[..k], a, m, v);
        }
    }
}
