use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiments::{log_table, require_multiword};
use crate::identifiability::{build_matrix, null_direction, report_from_matrix, DEFAULT_TOLERANCE_FACTOR};
use crate::mixing::MixingDistribution;
use crate::model::likelihood::EnumeratedSampler;
use crate::model::{wasserstein, PerturbationDirection, TopicMatrix};
use crate::rng;

/// Distance between the two hypotheses along a unit-l1 direction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Separation {
    /// The same step for every `n`.
    Fixed(f64),
    /// `r * n^(-1 / (2 p))`.
    Shrinking { r: f64, p_order: usize },
}

impl Separation {
    pub fn step(&self, n: usize) -> Result<f64> {
        match *self {
            Separation::Fixed(d) if d >= 0.0 && d.is_finite() => Ok(d),
            Separation::Shrinking { r, p_order } if r >= 0.0 && r.is_finite() && p_order >= 1 => {
                Ok(r * (n as f64).powf(-1.0 / (2.0 * p_order as f64)))
            }
            _ => Err(Error::InvalidParameter(format!("invalid separation {self:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoPointResult {
    pub n: usize,
    /// Step along the direction; the l1 distance between the hypotheses.
    pub step: f64,
    /// Wasserstein distance between the hypotheses.
    pub distance: f64,
    pub replicates: usize,
    /// Frequency of deciding the alternative when the data come from `theta`.
    pub type1: f64,
    /// Frequency of deciding `theta` when the data come from the alternative.
    pub type2: f64,
    /// `max(type1, type2)`.
    pub error_rate: f64,
}

/// Direction of the smallest singular value of the identifiability matrix,
/// with the order classification it implies. It spans the kernel when the
/// matrix is deficient and is the least distinguishable first-order
/// direction otherwise.
pub fn least_identifiable_direction(
    theta: &TopicMatrix<f64>,
    nu: &MixingDistribution<f64>,
    m: usize,
) -> Result<(PerturbationDirection<f64>, usize)> {
    require_multiword(m)?;
    let a = build_matrix(theta, nu, m)?;
    let report = report_from_matrix(&a, DEFAULT_TOLERANCE_FACTOR);
    Ok((null_direction(&a)?, report.p_order))
}

/// Likelihood-ratio test between `theta` and `theta + step * direction`.
/// Each replicate picks the true hypothesis by a fair coin, draws `n`
/// documents from it, and decides by the sign of the exact log-likelihood
/// ratio (a fair coin on ties). Replicate `r` uses stream `(seed, r)`.
#[allow(clippy::too_many_arguments)]
pub fn two_point_test(
    theta: &TopicMatrix<f64>,
    nu: &MixingDistribution<f64>,
    m: usize,
    direction: &PerturbationDirection<f64>,
    separation: Separation,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<TwoPointResult> {
    require_multiword(m)?;
    if n == 0 || replicates == 0 {
        return Err(Error::InvalidParameter("n and replicates must be positive".into()));
    }
    if !direction.is_normalized() {
        return Err(Error::InvalidDirection("two-point direction must have unit l1 mass".into()));
    }
    let step = separation.step(n)?;
    let alternative = direction.apply(theta, step)?;
    let log_null = log_table(theta, nu, m)?;
    let log_alt = log_table(&alternative, nu, m)?;
    let llr: Vec<f64> = log_null.iter().zip(&log_alt).map(|(a, b)| a - b).collect();
    let samplers = [
        EnumeratedSampler::from_probabilities(theta.v(), m, log_null.iter().map(|l| l.exp())),
        EnumeratedSampler::from_probabilities(theta.v(), m, log_alt.iter().map(|l| l.exp())),
    ];
    let outcomes: Vec<(bool, bool)> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut stream = rng::stream(seed, &[r as u64]);
            let truth_alt: bool = stream.random();
            let sampler = &samplers[truth_alt as usize];
            let mut stat = 0.0;
            for _ in 0..n {
                stat += llr[sampler.sample_index(&mut stream)];
            }
            let decide_alt = if stat == 0.0 { stream.random() } else { stat < 0.0 };
            (truth_alt, decide_alt)
        })
        .collect();
    let (mut null_n, mut null_err, mut alt_n, mut alt_err) = (0usize, 0usize, 0usize, 0usize);
    for (truth_alt, decide_alt) in outcomes {
        if truth_alt {
            alt_n += 1;
            alt_err += usize::from(!decide_alt);
        } else {
            null_n += 1;
            null_err += usize::from(decide_alt);
        }
    }
    let rate = |e: usize, t: usize| if t == 0 { 0.0 } else { e as f64 / t as f64 };
    let (type1, type2) = (rate(null_err, null_n), rate(alt_err, alt_n));
    Ok(TwoPointResult {
        n,
        step,
        distance: wasserstein(theta, &alternative)?,
        replicates,
        type1,
        type2,
        error_rate: type1.max(type2),
    })
}
