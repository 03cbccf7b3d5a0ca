//! The two-branch opponent-bid law `μ_α` used for the stochastic lower bound.
//!
//! For `α < 1` the density on `(1/2, 1]` is
//! `c_α [ (x - 1/2)^{α-1} on (1/2, 1/2 + 2ε] ; (x - 1/2 - 2ε)^{α-1} on (1/2 + 2ε, 1] ]`
//! with `c_α = α / ((2ε)^α + (1/2 - 2ε)^α)`. For `α ≥ 1` the law is the point
//! mass at `1/2 + ε`.

use rand::Rng;

use super::EnvError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarginMuAlpha {
    alpha: f64,
    eps: f64,
    c_alpha: f64,
}

impl MarginMuAlpha {
    pub fn new(alpha: f64, eps: f64) -> Result<Self, EnvError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(EnvError::InvalidParameter(format!(
                "margin alpha must be positive, got {alpha}"
            )));
        }
        if !(eps > 0.0 && eps < 0.25) {
            return Err(EnvError::InvalidParameter(format!(
                "margin eps must lie in (0, 1/4), got {eps}"
            )));
        }
        let c_alpha = if alpha < 1.0 {
            alpha / ((2.0 * eps).powf(alpha) + (0.5 - 2.0 * eps).powf(alpha))
        } else {
            f64::NAN
        };
        Ok(MarginMuAlpha {
            alpha,
            eps,
            c_alpha,
        })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn is_point_mass(&self) -> bool {
        self.alpha >= 1.0
    }

    /// Density normalizer; NaN in the point-mass regime.
    pub fn c_alpha(&self) -> f64 {
        self.c_alpha
    }

    /// A constant `C` with `μ((1/2, 1/2 + u]) ≤ C u^α` for all `u > 0`.
    ///
    /// On `u ≤ 2ε` the bound `c_α/α · u^α` is attained with equality; past the
    /// second singularity concavity of `x^α` costs an extra `2^{1-α}`.
    pub fn margin_constant(&self) -> f64 {
        if self.is_point_mass() {
            self.eps.powf(-self.alpha)
        } else {
            2f64.powf(1.0 - self.alpha) * self.c_alpha / self.alpha
        }
    }

    /// Lebesgue density; zero outside `(1/2, 1]`. Only meaningful for `α < 1`.
    pub fn density(&self, x: f64) -> f64 {
        let two_eps = 2.0 * self.eps;
        if x <= 0.5 || x > 1.0 {
            0.0
        } else if x <= 0.5 + two_eps {
            self.c_alpha * (x - 0.5).powf(self.alpha - 1.0)
        } else {
            self.c_alpha * (x - 0.5 - two_eps).powf(self.alpha - 1.0)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if self.is_point_mass() {
            return if x >= 0.5 + self.eps { 1.0 } else { 0.0 };
        }
        let two_eps = 2.0 * self.eps;
        let scale = self.c_alpha / self.alpha;
        if x <= 0.5 {
            0.0
        } else if x <= 0.5 + two_eps {
            scale * (x - 0.5).powf(self.alpha)
        } else if x < 1.0 {
            scale * (two_eps.powf(self.alpha) + (x - 0.5 - two_eps).powf(self.alpha))
        } else {
            1.0
        }
    }

    /// Closed-form branch inversion of [`cdf`](Self::cdf) for `u ∈ (0, 1]`.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        if self.is_point_mass() {
            return 0.5 + self.eps;
        }
        let two_eps = 2.0 * self.eps;
        let first_mass = two_eps.powf(self.alpha);
        let y = u * self.alpha / self.c_alpha;
        let inv = 1.0 / self.alpha;
        let x = if y <= first_mass {
            0.5 + y.powf(inv)
        } else {
            0.5 + two_eps + (y - first_mass).powf(inv)
        };
        // Keep the open left end of the support after rounding.
        x.clamp(0.5f64.next_up(), 1.0)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.is_point_mass() {
            return 0.5 + self.eps;
        }
        let u = 1.0 - rng.gen::<f64>();
        self.inverse_cdf(u)
    }

    pub fn mean(&self) -> f64 {
        if self.is_point_mass() {
            return 0.5 + self.eps;
        }
        let a = self.alpha;
        let two_eps = 2.0 * self.eps;
        let rest = 0.5 - two_eps;
        let first = self.c_alpha * two_eps.powf(a + 1.0) / (a + 1.0);
        let second = self.c_alpha * (two_eps * rest.powf(a) / a + rest.powf(a + 1.0) / (a + 1.0));
        0.5 + first + second
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Offset below which the endpoint singularity is integrated in closed
    /// form; f64 cannot resolve `x = a + u` much closer to `a`.
    const TAIL: f64 = 1.0 / (1u64 << 27) as f64;

    /// Composite Gauss–Legendre of `density` over each branch in the log
    /// offset `y = ln(x - a)`, for offsets above [`TAIL`], plus the power-law
    /// piece `c TAIL^α / α` below it.
    fn integrate_density(d: &MarginMuAlpha) -> f64 {
        let nodes = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
        let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
        let branch = |a: f64, width: f64| {
            let (y0, y1) = (TAIL.ln(), width.ln());
            let n = 4000;
            let h = (y1 - y0) / n as f64;
            let mut acc = 0.0;
            for k in 0..n {
                let mid = y0 + (k as f64 + 0.5) * h;
                for (z, w) in nodes.iter().zip(weights) {
                    let u = (mid + 0.5 * h * z).exp();
                    acc += w * 0.5 * h * d.density(a + u) * u;
                }
            }
            acc + d.c_alpha() * TAIL.powf(d.alpha) / d.alpha
        };
        let two_eps = 2.0 * d.eps;
        branch(0.5, two_eps) + branch(0.5 + two_eps, 0.5 - two_eps)
    }

    #[test]
    fn density_is_a_power_law_near_each_branch_start() {
        let d = MarginMuAlpha::new(0.3, 0.1).unwrap();
        for a in [0.5, 0.7] {
            for k in 10..=27 {
                let u = (-(k as f64)).exp2();
                let ratio = d.density(a + u) * u.powf(1.0 - d.alpha) / d.c_alpha();
                assert!((ratio - 1.0).abs() < 1e-6, "a {a} u {u}");
            }
        }
    }

    #[test]
    fn normalizer_matches_closed_form() {
        let d = MarginMuAlpha::new(0.5, 0.1).unwrap();
        let expected = 0.5 / (0.2f64.sqrt() + 0.3f64.sqrt());
        assert!((d.c_alpha() - expected).abs() < 1e-15);
        assert!((d.c_alpha() - 0.50257).abs() < 5e-5);
        for alpha in [0.1, 0.25, 0.5, 0.75, 0.95] {
            let d = MarginMuAlpha::new(alpha, 0.1).unwrap();
            let got = integrate_density(&d);
            assert!((got - 1.0).abs() < 1e-9, "alpha {alpha}: {got}");
        }
    }

    #[test]
    fn point_mass_regime() {
        let d = MarginMuAlpha::new(2.0, 0.1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(d.sample(&mut rng), 0.6);
        }
        assert_eq!(d.mean(), 0.6);
    }

    #[test]
    fn inverse_cdf_round_trip() {
        let d = MarginMuAlpha::new(0.5, 0.1).unwrap();
        let u = d.cdf(0.6);
        assert!((d.inverse_cdf(u) - 0.6).abs() < 1e-12);
        for x in [0.51, 0.55, 0.69, 0.7, 0.71, 0.9, 1.0] {
            assert!((d.inverse_cdf(d.cdf(x)) - x).abs() < 1e-12, "x {x}");
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(MarginMuAlpha::new(0.0, 0.1).is_err());
        assert!(MarginMuAlpha::new(-1.0, 0.1).is_err());
        assert!(MarginMuAlpha::new(0.5, 0.25).is_err());
        assert!(MarginMuAlpha::new(0.5, 0.0).is_err());
    }

    #[test]
    fn margin_condition_on_grid() {
        for alpha in [0.25, 0.5, 0.75] {
            let d = MarginMuAlpha::new(alpha, 0.1).unwrap();
            let c = d.margin_constant();
            for k in 0..200 {
                let u = 0.5 * (k as f64 + 1.0) / 200.0;
                assert!(d.cdf(0.5 + u) <= c * u.powf(alpha) + 1e-12, "alpha {alpha} u {u}");
                if u <= 0.2 {
                    let exact = d.c_alpha() / alpha * u.powf(alpha);
                    assert!((d.cdf(0.5 + u) - exact).abs() < 1e-12);
                }
            }
        }
        let pm = MarginMuAlpha::new(1.5, 0.1).unwrap();
        for k in 0..200 {
            let u = 0.5 * (k as f64 + 1.0) / 200.0;
            assert!(pm.cdf(0.5 + u) <= pm.margin_constant() * u.powf(1.5) + 1e-12);
        }
    }

    #[test]
    fn mean_matches_quadrature() {
        let d = MarginMuAlpha::new(0.5, 0.1).unwrap();
        // E[X] = 1 - ∫_0^1 F, and F vanishes on [0, 1/2].
        let n = 200_000;
        let h = 0.5 / n as f64;
        let integral: f64 = (0..n).map(|k| d.cdf(0.5 + (k as f64 + 0.5) * h) * h).sum();
        assert!((d.mean() - (1.0 - integral)).abs() < 1e-6);
    }
}
