//! Small statistics helpers for regret summaries.

use serde::Serialize;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub mean: f64,
    /// Standard error of the mean.
    pub stderr: f64,
    pub median: f64,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Summary {
        let n = xs.len();
        if n == 0 {
            return Summary {
                n,
                mean: f64::NAN,
                stderr: f64::NAN,
                median: f64::NAN,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = xs.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 {
            sorted[n / 2]
        } else {
            0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
        };
        Summary { n, mean, stderr, median }
    }
}

/// Wilson score interval for `successes` out of `n` at normal quantile `z`.
pub fn wilson_interval(successes: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

/// Least-squares fit of `ln R = a + s ln T`. Needs at least four horizons,
/// with the largest at least ten times the smallest, and positive regrets.
pub fn fit_regret_slope(series: &[(u64, f64)]) -> Result<SlopeFit, HarnessError> {
    if series.len() < 4 {
        return Err(HarnessError::Fit(format!("need at least 4 horizons, got {}", series.len())));
    }
    let t_min = series.iter().map(|p| p.0).min().unwrap_or(0);
    let t_max = series.iter().map(|p| p.0).max().unwrap_or(0);
    if t_min == 0 || (t_max as f64) < 10.0 * t_min as f64 {
        return Err(HarnessError::Fit(format!("horizons {t_min}..{t_max} span less than a decade")));
    }
    if let Some((t, r)) = series.iter().find(|p| !(p.1 > 0.0)) {
        return Err(HarnessError::Fit(format!("regret {r} at horizon {t} is not positive")));
    }
    let n = series.len() as f64;
    let xs: Vec<f64> = series.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = series.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let slope_stderr = (sse / (n - 2.0) / sxx).sqrt();
    Ok(SlopeFit {
        slope,
        intercept,
        slope_stderr,
    })
}
