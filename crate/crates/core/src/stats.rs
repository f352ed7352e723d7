//! Small statistics helpers shared by the experiments.

use rand::Rng;

use crate::error::{contract, Result};

/// Sample mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_se: f64,
    pub intercept_se: f64,
}

pub fn ols(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(contract("OLS needs at least two (x, y) points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    if !(sxx > 0.0) {
        return Err(contract("OLS needs at least two distinct x values"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (slope_se, intercept_se) = if x.len() > 2 {
        let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
        let s2 = rss / (n - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / n + mx * mx / sxx)).sqrt())
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(LinearFit {
        slope,
        intercept,
        slope_se,
        intercept_se,
    })
}

/// Bootstrap over replicas: `statistic` receives a resampled list of replica
/// indices (with repetition) and returns one value per parameter. Returns
/// the per-parameter standard deviation across resamples; resamples where
/// the statistic fails are skipped.
pub fn bootstrap_se<R, F>(replicas: usize, resamples: usize, rng: &mut R, statistic: F) -> Vec<f64>
where
    R: Rng + ?Sized,
    F: Fn(&[usize]) -> Option<Vec<f64>>,
{
    let mut draws: Vec<Vec<f64>> = Vec::with_capacity(resamples);
    let mut idx = vec![0; replicas];
    for _ in 0..resamples {
        for i in idx.iter_mut() {
            *i = rng.random_range(0..replicas);
        }
        if let Some(v) = statistic(&idx) {
            draws.push(v);
        }
    }
    let Some(first) = draws.first() else {
        return Vec::new();
    };
    (0..first.len())
        .map(|k| {
            let column: Vec<f64> = draws.iter().map(|d| d[k]).collect();
            let (_, se) = mean_se(&column);
            se * (column.len() as f64).sqrt()
        })
        .collect()
}
