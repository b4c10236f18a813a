//! Estimators used to check simulated ensembles against the equilibrium
//! predictions: variances with error bars, autocorrelations, decay-rate fits.

use crate::error::{invalid, Error, Result};
use crate::langevin::ModeHistory;

/// Default fit window: lags whose autocorrelation exceeds this value.
pub const DEFAULT_FIT_THRESHOLD: f64 = 0.1;

/// Sample moments of i.i.d. Gaussian data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleStats {
    pub mean: f64,
    /// Unbiased (n − 1) variance.
    pub variance: f64,
    /// variance·√(2/(n − 1)), exact for Gaussian samples.
    pub stderr_variance: f64,
    pub n: usize,
}

impl EnsembleStats {
    pub fn stderr_mean(&self) -> f64 {
        (self.variance / self.n as f64).sqrt()
    }

    /// |variance − expected| in units of the standard error.
    pub fn variance_z(&self, expected: f64) -> f64 {
        z_score(self.variance, expected, self.stderr_variance)
    }

    pub fn mean_z(&self, expected: f64) -> f64 {
        z_score(self.mean, expected, self.stderr_mean())
    }
}

fn z_score(value: f64, expected: f64, stderr: f64) -> f64 {
    let diff = (value - expected).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / stderr
    }
}

pub fn sample_variance(values: &[f64]) -> Result<EnsembleStats> {
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    let variance = ss / (n - 1) as f64;
    Ok(EnsembleStats {
        mean,
        variance,
        stderr_variance: variance * (2.0 / (n - 1) as f64).sqrt(),
        n,
    })
}

/// Variance of a correlated stationary series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesVariance {
    pub variance: f64,
    /// Batch-means standard error of `variance`.
    pub stderr: f64,
    pub n: usize,
    pub n_batches: usize,
}

impl SeriesVariance {
    pub fn z(&self, expected: f64) -> f64 {
        z_score(self.variance, expected, self.stderr)
    }
}

/// Default number of batches for [`series_variance`].
/// Smallest number of lags (including lag 0) a rate fit uses.
pub const MIN_FIT_LAGS: usize = 3;

pub const DEFAULT_BATCHES: usize = 50;

/// Sample variance of a time series about its mean, with the standard error
/// taken from non-overlapping batch means of the squared deviations so that
/// serial correlation is accounted for. Batches should span many correlation
/// times. Samples past the last full batch only enter the point estimate.
pub fn series_variance(values: &[f64], n_batches: usize) -> Result<SeriesVariance> {
    let n = values.len();
    if n_batches < 2 {
        return Err(invalid("n_batches", "need at least two batches"));
    }
    if n < 2 * n_batches {
        return Err(Error::TooFewSamples {
            needed: 2 * n_batches,
            got: n,
        });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let sq: Vec<f64> = values.iter().map(|v| (v - mean).powi(2)).collect();
    let variance = sq.iter().sum::<f64>() / (n - 1) as f64;
    let len = n / n_batches;
    let batch: Vec<f64> = sq
        .chunks_exact(len)
        .take(n_batches)
        .map(|c| c.iter().sum::<f64>() / len as f64)
        .collect();
    let stats = sample_variance(&batch)?;
    Ok(SeriesVariance {
        variance,
        stderr: stats.stderr_mean(),
        n,
        n_batches,
    })
}

/// Difference of two series' variances, var(a) − var(b), with a batch-means
/// standard error on the paired difference. Pathwise-coupled series (same
/// noise draws) give a much smaller error than either variance alone.
pub fn paired_variance_difference(a: &[f64], b: &[f64], n_batches: usize) -> Result<SeriesVariance> {
    if a.len() != b.len() {
        return Err(invalid("b", "paired series must have equal length"));
    }
    let n = a.len();
    if n_batches < 2 {
        return Err(invalid("n_batches", "need at least two batches"));
    }
    if n < 2 * n_batches {
        return Err(Error::TooFewSamples {
            needed: 2 * n_batches,
            got: n,
        });
    }
    let mean_a = a.iter().sum::<f64>() / n as f64;
    let mean_b = b.iter().sum::<f64>() / n as f64;
    let diff: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - mean_a).powi(2) - (y - mean_b).powi(2))
        .collect();
    let variance = diff.iter().sum::<f64>() / (n - 1) as f64;
    let len = n / n_batches;
    let batch: Vec<f64> = diff
        .chunks_exact(len)
        .take(n_batches)
        .map(|c| c.iter().sum::<f64>() / len as f64)
        .collect();
    let stats = sample_variance(&batch)?;
    Ok(SeriesVariance {
        variance,
        stderr: stats.stderr_mean(),
        n,
        n_batches,
    })
}

/// Normalized autocorrelation at lags 0..=max_lag.
#[derive(Debug, Clone, PartialEq)]
pub struct AcfEstimate {
    pub lags: Vec<f64>,
    pub values: Vec<f64>,
}

/// Biased (divide-by-N) autocorrelation about zero, the stationary mean:
/// c(ℓ) = Σ_{n<N−ℓ} x_n x_{n+ℓ} / Σ_n x_n², so c(0) = 1.
pub fn autocorrelation(history: &ModeHistory, max_lag: usize) -> Result<AcfEstimate> {
    autocorrelation_pooled(std::slice::from_ref(history), max_lag)
}

/// Autocorrelation pooled over several histories of the same mode: lagged
/// products and the normalization are summed across histories before the
/// ratio is taken.
pub fn autocorrelation_pooled(histories: &[ModeHistory], max_lag: usize) -> Result<AcfEstimate> {
    let first = histories
        .first()
        .ok_or(Error::TooFewSamples { needed: 1, got: 0 })?;
    let dt = first.dt();
    let shortest = histories.iter().map(|h| h.len()).min().unwrap_or(0);
    if max_lag >= shortest {
        return Err(Error::LagRange {
            max_lag,
            len: shortest,
        });
    }
    if histories.iter().any(|h| h.dt() != dt) {
        return Err(Error::GridMismatch("histories have different dt".into()));
    }
    let mut sums = vec![0.0; max_lag + 1];
    for h in histories {
        let x = h.values();
        for (lag, s) in sums.iter_mut().enumerate() {
            *s += x[..x.len() - lag]
                .iter()
                .zip(&x[lag..])
                .map(|(a, b)| a * b)
                .sum::<f64>();
        }
    }
    let norm = sums[0];
    let values = if norm == 0.0 {
        // An all-zero history carries no correlation information.
        let mut v = vec![0.0; max_lag + 1];
        v[0] = 1.0;
        v
    } else {
        sums.iter().map(|s| s / norm).collect()
    };
    Ok(AcfEstimate {
        lags: (0..=max_lag).map(|l| l as f64 * dt).collect(),
        values,
    })
}

/// Decay rate from the slope of −ln c(τ) against τ, least squares over the
/// leading run of lags where c > [`DEFAULT_FIT_THRESHOLD`].
///
/// The window always spans at least [`MIN_FIT_LAGS`] lags as long as c stays
/// positive, so coarse sampling (γ·dt large) still yields a fit.
pub fn fit_exponential_rate(acf: &AcfEstimate) -> Result<f64> {
    fit_exponential_rate_with(acf, DEFAULT_FIT_THRESHOLD)
}

pub fn fit_exponential_rate_with(acf: &AcfEstimate, threshold: f64) -> Result<f64> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return Err(invalid("threshold", format!("must lie in (0, 1), got {threshold}")));
    }
    let window: Vec<(f64, f64)> = acf
        .lags
        .iter()
        .zip(&acf.values)
        .enumerate()
        .take_while(|&(l, (_, &c))| c > threshold || (l < MIN_FIT_LAGS && c > 0.0))
        .map(|(_, (&t, &c))| (t, -c.ln()))
        .collect();
    let m = window.len();
    if m < MIN_FIT_LAGS {
        return Err(Error::InsufficientWindow { usable: m });
    }
    let mt = window.iter().map(|p| p.0).sum::<f64>() / m as f64;
    let my = window.iter().map(|p| p.1).sum::<f64>() / m as f64;
    let sxy = window.iter().map(|(t, y)| (t - mt) * (y - my)).sum::<f64>();
    let sxx = window.iter().map(|(t, _)| (t - mt).powi(2)).sum::<f64>();
    Ok(sxy / sxx)
}

/// Relative standard error of a decay rate estimated from `n_samples` points
/// of a stationary OU series sampled every `dt`: the asymptotic error of the
/// lag-one estimator, √((1−ρ²)/n) / (ρ·γ·dt) with ρ = e^(−γ·dt).
///
/// Tends to √(2/(γ·n·dt)) for γ·dt ≪ 1.
pub fn rate_relative_stderr(rate: f64, dt: f64, n_samples: usize) -> f64 {
    let x = rate * dt;
    let rho = (-x).exp();
    (-(-2.0 * x).exp_m1() / n_samples as f64).sqrt() / (rho * x)
}
