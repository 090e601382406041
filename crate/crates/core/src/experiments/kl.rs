use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::experiments::{log_table, require_multiword};
use crate::mixing::MixingDistribution;
use crate::model::likelihood::EnumeratedSampler;
use crate::model::{likelihood, Corpus, TopicMatrix};
use crate::rng;

/// `(1/n) sum_i log(p_theta(X_i) / p_theta2(X_i))`, both likelihoods floored
/// at `c0^m`.
pub fn empirical_kl(
    theta: &TopicMatrix<f64>,
    theta2: &TopicMatrix<f64>,
    nu: &MixingDistribution<f64>,
    corpus: &Corpus,
) -> Result<f64> {
    if corpus.n() == 0 {
        return Err(Error::InvalidParameter("empty corpus".into()));
    }
    let floor = |t: &TopicMatrix<f64>| t.c0().powi(corpus.m() as i32);
    let mut total = 0.0;
    for (doc, count) in corpus.histogram() {
        let p = likelihood(theta, nu, &doc)?.max(floor(theta));
        let q = likelihood(theta2, nu, &doc)?.max(floor(theta2));
        total += count as f64 * (p.ln() - q.ln());
    }
    Ok(total / corpus.n() as f64)
}

/// Empirical KL of `replicates` corpora of size `n` drawn from `theta`;
/// replicate `r` uses stream `(seed, r)`.
#[allow(clippy::too_many_arguments)]
pub fn empirical_kl_replicates(
    theta: &TopicMatrix<f64>,
    theta2: &TopicMatrix<f64>,
    nu: &MixingDistribution<f64>,
    m: usize,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    require_multiword(m)?;
    theta.same_shape(theta2)?;
    if n == 0 {
        return Err(Error::InvalidParameter("n must be positive".into()));
    }
    let log_p = log_table(theta, nu, m)?;
    let log_q = log_table(theta2, nu, m)?;
    let ratio: Vec<f64> = log_p.iter().zip(&log_q).map(|(a, b)| a - b).collect();
    let sampler = EnumeratedSampler::from_probabilities(theta.v(), m, log_p.iter().map(|l| l.exp()));
    Ok((0..replicates)
        .into_par_iter()
        .map(|r| {
            let mut stream = rng::stream(seed, &[r as u64]);
            (0..n).map(|_| ratio[sampler.sample_index(&mut stream)]).sum::<f64>() / n as f64
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct KlConcentration {
    pub n: usize,
    pub kl: f64,
    /// Mean `|empirical - kl|` at `n`.
    pub deviation_n: f64,
    /// Mean `|empirical - kl|` at `4 n`.
    pub deviation_4n: f64,
    /// `deviation_n / deviation_4n`; near 2 under root-n concentration.
    pub ratio: f64,
}

pub fn kl_concentration(
    theta: &TopicMatrix<f64>,
    theta2: &TopicMatrix<f64>,
    nu: &MixingDistribution<f64>,
    m: usize,
    n: usize,
    replicates: usize,
    seed: u64,
) -> Result<KlConcentration> {
    if replicates == 0 {
        return Err(Error::InvalidParameter("replicates must be positive".into()));
    }
    let kl = crate::model::kl_divergence(theta, theta2, nu, m)?;
    let deviation = |size: usize, sub: u64| -> Result<f64> {
        let values = empirical_kl_replicates(theta, theta2, nu, m, size, replicates, rng::child_seed(seed, &[sub]))?;
        Ok(values.iter().map(|x| (x - kl).abs()).sum::<f64>() / replicates as f64)
    };
    let deviation_n = deviation(n, 0)?;
    let deviation_4n = deviation(4 * n, 1)?;
    Ok(KlConcentration { n, kl, deviation_n, deviation_4n, ratio: deviation_n / deviation_4n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_corpus;

    #[test]
    fn identical_parameters_give_zero() {
        let theta = TopicMatrix::new(2, 3, 0.05, vec![0.5, 0.3, 0.2, 0.1, 0.2, 0.7]).unwrap();
        let nu = MixingDistribution::symmetric_dirichlet(2, 1.0).unwrap();
        let corpus = sample_corpus(&theta, &nu, 2, 50, &mut rng::stream(1, &[])).unwrap();
        assert_eq!(empirical_kl(&theta, &theta, &nu, &corpus).unwrap(), 0.0);
        let reps = empirical_kl_replicates(&theta, &theta, &nu, 2, 30, 4, 2).unwrap();
        assert!(reps.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn table_and_direct_evaluation_agree() {
        let theta = TopicMatrix::new(2, 3, 0.05, vec![0.5, 0.3, 0.2, 0.1, 0.2, 0.7]).unwrap();
        let theta2 = TopicMatrix::new(2, 3, 0.05, vec![0.4, 0.4, 0.2, 0.2, 0.2, 0.6]).unwrap();
        let nu = MixingDistribution::uniform_vertex(2).unwrap();
        let log_p = log_table(&theta, &nu, 3).unwrap();
        let log_q = log_table(&theta2, &nu, 3).unwrap();
        let corpus = sample_corpus(&theta, &nu, 3, 40, &mut rng::stream(5, &[])).unwrap();
        let direct = empirical_kl(&theta, &theta2, &nu, &corpus).unwrap();
        let via_table: f64 =
            corpus.documents().iter().map(|d| log_p[d.index(3)] - log_q[d.index(3)]).sum::<f64>() / 40.0;
        assert!((direct - via_table).abs() < 1e-13);
    }
}
