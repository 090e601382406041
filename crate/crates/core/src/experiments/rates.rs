use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiments::require_multiword;
use crate::identifiability::enumerate_equivalents_k2;
use crate::mixing::MixingDistribution;
use crate::mle::{fit_mle, FitOptions};
use crate::model::distance::wasserstein_to_set;
use crate::model::{sample_corpus, TopicMatrix};
use crate::rng;

pub const MIN_REPLICATES: usize = 5;
pub const MIN_GRID_POINTS: usize = 3;

/// Estimation error against sample size, with a least-squares fit of
/// `log(median error)` on `log n`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    pub theta_label: String,
    pub n_grid: Vec<usize>,
    /// `errors[i][r]`: replicate `r` at `n_grid[i]`.
    pub errors: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    pub median: Vec<f64>,
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
}

/// Ordinary least squares `y = intercept + slope x`; returns
/// `(slope, intercept, slope standard error)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64)> {
    let n = x.len();
    if n < MIN_GRID_POINTS || y.len() != n {
        return Err(Error::SlopeUndefined(n));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::SlopeUndefined(n));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    if !(slope.is_finite() && intercept.is_finite()) {
        return Err(Error::NonFinite("log-log fit; a median error is zero".into()));
    }
    Ok((slope, intercept, stderr))
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn validate_grid(n_grid: &[usize], replicates: usize) -> Result<()> {
    if n_grid.len() < MIN_GRID_POINTS {
        return Err(Error::SlopeUndefined(n_grid.len()));
    }
    if n_grid[0] == 0 || n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter(format!("n grid must be positive and strictly increasing: {n_grid:?}")));
    }
    if replicates < MIN_REPLICATES {
        return Err(Error::InvalidParameter(format!("need at least {MIN_REPLICATES} replicates, got {replicates}")));
    }
    Ok(())
}

/// For every `n` and replicate: draw a corpus from `theta`, fit the MLE with
/// `K = theta.k()` and floor `theta.c0()`, and record the Wasserstein error
/// to the closest relabeling of `theta` (and, when K = 2 and m = 2, to the
/// closest parameter with the same two-word distribution). Replicate `r` at
/// grid index `i` uses stream `(seed, i, r)` for both sampling and the fit.
#[allow(clippy::too_many_arguments)]
pub fn rate_experiment(
    theta: &TopicMatrix<f64>,
    theta_label: &str,
    nu: &MixingDistribution<f64>,
    m: usize,
    n_grid: &[usize],
    replicates: usize,
    fit_options: &FitOptions,
    seed: u64,
) -> Result<RateCurve> {
    require_multiword(m)?;
    validate_grid(n_grid, replicates)?;
    fit_options.validate()?;
    let reference = if theta.k() == 2 && m == 2 { enumerate_equivalents_k2(theta, nu)? } else { vec![theta.clone()] };
    let jobs: Vec<(usize, usize)> = (0..n_grid.len()).flat_map(|i| (0..replicates).map(move |r| (i, r))).collect();
    let flat: Vec<f64> = jobs
        .into_par_iter()
        .map(|(i, r)| {
            let mut stream = rng::stream(seed, &[i as u64, r as u64]);
            let options = FitOptions { seed: stream.random(), ..fit_options.clone() };
            let corpus = sample_corpus(theta, nu, m, n_grid[i], &mut stream)?;
            let fit = fit_mle(&corpus, theta.k(), theta.c0(), nu, &options)?;
            wasserstein_to_set(&fit.theta_hat, &reference)
        })
        .collect::<Result<_>>()?;
    let errors: Vec<Vec<f64>> = flat.chunks(replicates).map(<[f64]>::to_vec).collect();
    let mean: Vec<f64> = errors.iter().map(|e| e.iter().sum::<f64>() / e.len() as f64).collect();
    let medians: Vec<f64> = errors.iter().map(|e| median(e)).collect();
    let x: Vec<f64> = n_grid.iter().map(|&n| (n as f64).ln()).collect();
    let y: Vec<f64> = medians.iter().map(|e| e.ln()).collect();
    let (slope, intercept, slope_stderr) = fit_line(&x, &y)?;
    Ok(RateCurve {
        theta_label: theta_label.to_string(),
        n_grid: n_grid.to_vec(),
        errors,
        mean,
        median: medians,
        slope,
        intercept,
        slope_stderr,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn line_fit_recovers_exact_slope() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|a| 0.5 - 0.25 * a).collect();
        let (s, i, se) = fit_line(&x, &y).unwrap();
        assert!((s + 0.25).abs() < 1e-14 && (i - 0.5).abs() < 1e-14 && se < 1e-12);
        assert!(matches!(fit_line(&x[..2], &y[..2]), Err(Error::SlopeUndefined(2))));
    }

    #[test]
    fn medians() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn single_point_grid_is_rejected() {
        let theta = TopicMatrix::uniform(2, 3, 0.01).unwrap();
        let nu = MixingDistribution::uniform_vertex(2).unwrap();
        let res = rate_experiment(&theta, "u", &nu, 2, &[100], 5, &FitOptions::default(), 1);
        assert!(matches!(res, Err(Error::SlopeUndefined(1))));
        let res = rate_experiment(&theta, "u", &nu, 2, &[10, 20, 40], 4, &FitOptions::default(), 1);
        assert!(matches!(res, Err(Error::InvalidParameter(_))));
        let res = rate_experiment(&theta, "u", &nu, 2, &[10, 10, 40], 5, &FitOptions::default(), 1);
        assert!(matches!(res, Err(Error::InvalidParameter(_))));
    }
}
