//! Small statistics toolkit for the diagnostics: distances between
//! distributions, regression, and batch-means error bars.

use statrs::distribution::{ContinuousCDF, Normal};

/// Ordinary least squares `y = a x + b`; returns `(slope, intercept)`.
pub fn ols(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return (0.0, my);
    }
    let a = sxy / sxx;
    (a, my - a * mx)
}

/// Weighted regression of `y` on `x` with known standard errors; returns
/// `(slope, slope_se, one-sided p-value for slope > 0)`.
pub fn weighted_trend(x: &[f64], y: &[f64], se: &[f64]) -> (f64, f64, f64) {
    let w: Vec<f64> = se.iter().map(|s| 1.0 / (s * s).max(1e-300)).collect();
    let sw: f64 = w.iter().sum();
    let mx = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() / sw;
    let my = w.iter().zip(y).map(|(w, y)| w * y).sum::<f64>() / sw;
    let sxx: f64 = w.iter().zip(x).map(|(w, x)| w * (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return (0.0, f64::INFINITY, 1.0);
    }
    let sxy: f64 = w.iter().zip(x.iter().zip(y)).map(|(w, (x, y))| w * (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let slope_se = (1.0 / sxx).sqrt();
    let p = 1.0 - normal_cdf(slope / slope_se);
    (slope, slope_se, p)
}

pub fn normal_cdf(z: f64) -> f64 {
    Normal::new(0.0, 1.0).expect("standard normal").cdf(z)
}

/// Total variation distance `1/2 Σ |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Kolmogorov–Smirnov distance between two distributions on the same ordered support.
pub fn ks_distance(p: &[f64], q: &[f64]) -> f64 {
    let mut cp = 0.0;
    let mut cq = 0.0;
    let mut worst: f64 = 0.0;
    for (a, b) in p.iter().zip(q) {
        cp += a;
        cq += b;
        worst = worst.max((cp - cq).abs());
    }
    worst
}

/// Normalized histogram of grid indices.
pub fn histogram(indices: impl IntoIterator<Item = usize>, bins: usize) -> Vec<f64> {
    let mut h = vec![0.0; bins];
    let mut n = 0usize;
    for i in indices {
        h[i] += 1.0;
        n += 1;
    }
    if n > 0 {
        h.iter_mut().for_each(|v| *v /= n as f64);
    }
    h
}

/// Mean and batch-means standard error of a correlated series.
pub fn batch_mean_se(series: &[f64], batches: usize) -> (f64, f64) {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n as f64;
    let b = batches.min(n).max(2);
    let len = n / b;
    if len == 0 {
        return (mean, f64::INFINITY);
    }
    let means: Vec<f64> = (0..b).map(|k| series[k * len..(k + 1) * len].iter().sum::<f64>() / len as f64).collect();
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (b - 1) as f64;
    (mean, (var / b as f64).sqrt())
}
