//! Small statistics toolbox: means, jackknife, regression, autocorrelation,
//! goodness-of-fit.

use rand::Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{bail, Result};

pub fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return f64::NAN;
    }
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64
}

/// Delete-one-block jackknife of a statistic of a time series.
///
/// The series is cut into `blocks` contiguous blocks (the tail that does not
/// fill a block is dropped from the error estimate but not from the value).
/// Returns `(value on the full series, standard error)`.
pub fn jackknife<T, F>(samples: &[T], blocks: usize, stat: F) -> (f64, f64)
where
    T: Clone,
    F: Fn(&[T]) -> f64,
{
    let full = stat(samples);
    let blocks = blocks.min(samples.len());
    if blocks < 2 {
        return (full, f64::NAN);
    }
    let len = samples.len() / blocks;
    let used = &samples[..len * blocks];
    let mut reduced = Vec::with_capacity(used.len() - len);
    let mut thetas = Vec::with_capacity(blocks);
    for b in 0..blocks {
        reduced.clear();
        reduced.extend_from_slice(&used[..b * len]);
        reduced.extend_from_slice(&used[(b + 1) * len..]);
        thetas.push(stat(&reduced));
    }
    let tm = mean(&thetas);
    let var = thetas.iter().map(|t| (t - tm) * (t - tm)).sum::<f64>() * (blocks - 1) as f64 / blocks as f64;
    (full, var.sqrt())
}

/// Blocked jackknife of the mean.
pub fn jackknife_mean(xs: &[f64], blocks: usize) -> (f64, f64) {
    jackknife(xs, blocks, mean)
}

/// Ordinary or weighted least-squares line `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
    pub r_squared: f64,
    pub n: usize,
}

impl LinearFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Ordinary least squares; standard errors from residual variance.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() {
        bail!(InvalidParameter, "x and y lengths differ ({} vs {})", x.len(), y.len());
    }
    let n = x.len();
    if n < 2 {
        bail!(InsufficientData, "a line fit needs at least 2 points, got {n}");
    }
    let mx = mean(x);
    let my = mean(y);
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if sxx <= 0.0 {
        bail!(InsufficientData, "all x values coincide");
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let (slope_stderr, intercept_stderr) = if n > 2 {
        let s2 = sse / (n - 2) as f64;
        ((s2 / sxx).sqrt(), (s2 * (1.0 / n as f64 + mx * mx / sxx)).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr,
        intercept_stderr,
        r_squared,
        n,
    })
}

/// Weighted least squares with known per-point standard deviations.
/// Standard errors are the propagated ones (not rescaled by the residuals).
pub fn weighted_linear_fit(x: &[f64], y: &[f64], sigma: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() != sigma.len() {
        bail!(InvalidParameter, "x, y and sigma lengths differ");
    }
    let n = x.len();
    if n < 2 {
        bail!(InsufficientData, "a line fit needs at least 2 points, got {n}");
    }
    if sigma.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        bail!(InvalidParameter, "weights need positive finite standard deviations");
    }
    let w: Vec<f64> = sigma.iter().map(|s| 1.0 / (s * s)).collect();
    let sw: f64 = w.iter().sum();
    let mx = x.iter().zip(&w).map(|(a, w)| a * w).sum::<f64>() / sw;
    let my = y.iter().zip(&w).map(|(b, w)| b * w).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(&w).map(|(a, w)| w * (a - mx) * (a - mx)).sum();
    if sxx <= 0.0 {
        bail!(InsufficientData, "all x values coincide");
    }
    let sxy: f64 = (0..n).map(|i| w[i] * (x[i] - mx) * (y[i] - my)).sum();
    let syy: f64 = (0..n).map(|i| w[i] * (y[i] - my) * (y[i] - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = (0..n).map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    Ok(LinearFit {
        slope,
        intercept,
        slope_stderr: (1.0 / sxx).sqrt(),
        intercept_stderr: (1.0 / sw + mx * mx / sxx).sqrt(),
        r_squared,
        n,
    })
}

/// Wilson score interval for a binomial proportion.
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    ((centre - half).max(0.0), (centre + half).min(1.0))
}

/// Integrated autocorrelation time with Sokal's self-consistent window (c = 6).
pub fn integrated_autocorr_time(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 4 {
        return 1.0;
    }
    let m = mean(xs);
    let c0: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n as f64;
    if c0 <= 0.0 {
        return 1.0;
    }
    let mut tau = 1.0;
    for t in 1..n / 2 {
        let ct: f64 = (0..n - t).map(|i| (xs[i] - m) * (xs[i + t] - m)).sum::<f64>() / n as f64;
        tau += 2.0 * ct / c0;
        if (t as f64) >= 6.0 * tau {
            break;
        }
    }
    tau.max(1.0)
}

pub fn effective_sample_size(xs: &[f64]) -> f64 {
    xs.len() as f64 / integrated_autocorr_time(xs)
}

/// Upper tail probability of a chi-square statistic.
pub fn chi_square_sf(stat: f64, dof: f64) -> f64 {
    match ChiSquared::new(dof) {
        Ok(d) => 1.0 - d.cdf(stat),
        Err(_) => f64::NAN,
    }
}

/// Pearson goodness-of-fit: returns `(statistic, p-value)` with `cells - 1` degrees of freedom.
pub fn chi_square_gof(observed: &[u64], expected_prob: &[f64]) -> Result<(f64, f64)> {
    if observed.len() != expected_prob.len() || observed.len() < 2 {
        bail!(
            InvalidParameter,
            "need matching observed/expected vectors with at least 2 cells"
        );
    }
    let total: u64 = observed.iter().sum();
    let mut stat = 0.0;
    for (&o, &p) in observed.iter().zip(expected_prob) {
        let e = p * total as f64;
        if e <= 0.0 {
            if o > 0 {
                return Ok((f64::INFINITY, 0.0));
            }
            continue;
        }
        stat += (o as f64 - e).powi(2) / e;
    }
    let dof = (observed.len() - 1) as f64;
    Ok((stat, chi_square_sf(stat, dof)))
}

/// Total-variation distance between two probability vectors.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Linear-interpolation quantile of unsorted data.
pub fn quantile(xs: &[f64], q: f64) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// Percentile bootstrap interval of a statistic; resamples whole elements.
pub fn bootstrap_interval<T, F, R>(data: &[T], resamples: usize, level: f64, rng: &mut R, stat: F) -> (f64, f64)
where
    T: Clone,
    F: Fn(&[T]) -> f64,
    R: Rng,
{
    if data.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut buf = Vec::with_capacity(data.len());
    let mut vals = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        buf.clear();
        for _ in 0..data.len() {
            buf.push(data[rng.gen_range(0..data.len())].clone());
        }
        let v = stat(&buf);
        if v.is_finite() {
            vals.push(v);
        }
    }
    let a = (1.0 - level) / 2.0;
    (quantile(&vals, a), quantile(&vals, 1.0 - a))
}

/// Pearson correlation coefficient.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let mx = mean(x);
    let my = mean(y);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    sxy / (sxx * syy).sqrt()
}

/// Potential scale reduction factor across chains (split-free form).
pub fn gelman_rubin(chains: &[Vec<f64>]) -> Result<f64> {
    let m = chains.len();
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    if m < 2 || n < 2 {
        bail!(InsufficientData, "need at least 2 chains of length 2");
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(&c[..n])).collect();
    let grand = mean(&means);
    let b = n as f64 / (m - 1) as f64 * means.iter().map(|x| (x - grand).powi(2)).sum::<f64>();
    let w = mean(&chains.iter().map(|c| variance(&c[..n])).collect::<Vec<_>>());
    if w <= 0.0 {
        return Ok(if b <= 0.0 { 1.0 } else { f64::INFINITY });
    }
    let var = (n - 1) as f64 / n as f64 * w + b / n as f64;
    Ok((var / w).sqrt())
}
