//! Constrained maximum likelihood over the floored simplex product by
//! multi-start projected gradient ascent.

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixing::{MixingDistribution, MixingKind};
use crate::model::likelihood::{expansion_terms, likelihood, likelihood_gradient};
use crate::model::{check_floor, Corpus, Document, PerturbationDirection, TopicMatrix};
use crate::rng;
use crate::scalar::Scalar;

/// Smallest trial step before a line search gives up.
const MIN_STEP: f64 = 1e-16;

#[derive(Debug, Clone, PartialEq)]
pub struct FitOptions {
    pub starts: usize,
    pub max_iterations: usize,
    /// Bound on `||P(theta + grad) - theta||_2` at convergence, where `grad`
    /// is the gradient of the per-document mean log-likelihood.
    pub gradient_tolerance: f64,
    pub initial_step: f64,
    pub shrink: f64,
    pub sufficient_increase: f64,
    /// EM iterations used to warm start the first start under the
    /// uniform-vertex prior.
    pub em_warm_iterations: usize,
    pub seed: u64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            starts: 8,
            max_iterations: 2000,
            gradient_tolerance: 1e-8,
            initial_step: 1.0,
            shrink: 0.5,
            sufficient_increase: 1e-4,
            em_warm_iterations: 100,
            seed: 0,
        }
    }
}

impl FitOptions {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidParameter(format!("fit options: {what}")));
        if self.starts == 0 {
            return bad("starts must be at least 1");
        }
        if self.max_iterations == 0 {
            return bad("max_iterations must be positive");
        }
        if !(self.gradient_tolerance > 0.0) {
            return bad("gradient_tolerance must be positive");
        }
        if !(self.initial_step > 0.0) {
            return bad("initial_step must be positive");
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return bad("shrink must lie in (0, 1)");
        }
        if !(self.sufficient_increase > 0.0 && self.sufficient_increase < 1.0) {
            return bad("sufficient_increase must lie in (0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub theta_hat: TopicMatrix<f64>,
    /// Total log-likelihood of the corpus at `theta_hat`.
    pub log_likelihood: f64,
    pub iterations: usize,
    pub best_start: usize,
    pub converged: bool,
    pub projected_gradient_norm: f64,
    /// Total log-likelihood at the initial point, then advanced by the exact
    /// gain of every accepted step.
    pub trace: Vec<f64>,
}

/// Euclidean projection onto `{x : x >= c0, sum x = 1}`: shift by `c0`, then
/// project onto the simplex of mass `1 - V c0` by the sort-and-threshold
/// rule. Feasible input is returned unchanged.
pub fn project_row<T: Scalar>(raw: &[T], c0: T) -> Result<Vec<T>> {
    let v = raw.len();
    let mass = T::one() - c0 * T::lit(v as f64);
    if !(c0 >= T::zero()) || !(mass > T::zero()) {
        return Err(Error::InfeasibleFloor { c0: c0.as_f64(), v });
    }
    if raw.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("row to project".into()));
    }
    let total: T = raw.iter().copied().sum();
    if raw.iter().all(|&x| x >= c0) && (total - T::one()).abs() <= T::unit_tolerance() {
        return Ok(raw.to_vec());
    }
    let mut u: Vec<T> = raw.iter().map(|&x| x - c0).collect();
    u.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    let mut cumulative = T::zero();
    let mut tau = T::zero();
    for (j, &uj) in u.iter().enumerate() {
        cumulative += uj;
        let t = (cumulative - mass) / T::lit((j + 1) as f64);
        if uj - t > T::zero() {
            tau = t;
        }
    }
    Ok(raw.iter().map(|&x| (x - c0 - tau).max(T::zero()) + c0).collect())
}

/// Mean log-likelihood over distinct documents, with multiplicities.
struct Objective<'a> {
    docs: Vec<(Document, f64)>,
    n: f64,
    nu: &'a MixingDistribution<f64>,
    k: usize,
    v: usize,
    c0: f64,
}

impl<'a> Objective<'a> {
    fn new(corpus: &Corpus, nu: &'a MixingDistribution<f64>, k: usize, c0: f64) -> Self {
        let docs = corpus.histogram().into_iter().map(|(d, c)| (d, c as f64)).collect();
        Objective { docs, n: corpus.n() as f64, nu, k, v: corpus.v(), c0 }
    }

    fn matrix(&self, data: &[f64]) -> Result<TopicMatrix<f64>> {
        TopicMatrix::new(self.k, self.v, self.c0, data.to_vec())
    }

    fn value_and_gradient(&self, data: &[f64]) -> Result<(f64, Vec<f64>)> {
        let theta = self.matrix(data)?;
        let mut total = 0.0;
        let mut grad = vec![0.0; data.len()];
        for (doc, c) in &self.docs {
            let p = likelihood(&theta, self.nu, doc)?;
            total += c * p.ln();
            let scale = c / (p * self.n);
            for (g, d) in grad.iter_mut().zip(likelihood_gradient(&theta, self.nu, doc)?) {
                *g += scale * d;
            }
        }
        // rows are constrained to sum to one, so a per-row constant in the
        // gradient is invisible to the projection; removing it keeps
        // `theta + s * grad` from losing digits near the optimum
        for row in grad.chunks_mut(self.v) {
            let mean = row.iter().sum::<f64>() / self.v as f64;
            row.iter_mut().for_each(|g| *g -= mean);
        }
        Ok((finite(total / self.n)?, grad))
    }

    /// `f(candidate) - f(base)` from the exact expansion
    /// `p_{base + d}(x) - p_base(x) = sum_{q >= 1} r_q(x)`, which keeps full
    /// relative precision when the step is tiny, unlike a difference of two
    /// rounded objective values.
    fn increment(&self, base: &[f64], candidate: &[f64]) -> Result<f64> {
        let theta = self.matrix(base)?;
        let step: Vec<f64> = candidate.iter().zip(base).map(|(c, b)| c - b).collect();
        let delta = PerturbationDirection::new(self.k, self.v, step)?;
        let mut total = 0.0;
        for (doc, c) in &self.docs {
            let terms = expansion_terms(&theta, self.nu, &delta, doc)?;
            let change: f64 = terms[1..].iter().sum();
            total += c * (change / terms[0]).ln_1p();
        }
        finite(total / self.n)
    }

    fn project(&self, data: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(data.len());
        for row in data.chunks(self.v) {
            out.extend(project_row(row, self.c0)?);
        }
        Ok(out)
    }

    /// `P(theta + grad) - theta`.
    fn projected_gradient(&self, data: &[f64], grad: &[f64]) -> Result<Vec<f64>> {
        let moved: Vec<f64> = data.iter().zip(grad).map(|(t, g)| t + g).collect();
        Ok(self.project(&moved)?.iter().zip(data).map(|(p, t)| p - t).collect())
    }
}

fn finite(x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::NonFinite("log-likelihood; check the floor c0".into()))
    }
}

fn norm2(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn ascend(objective: &Objective<'_>, init: Vec<f64>, options: &FitOptions, start: usize) -> Result<FitResult> {
    let mut theta = objective.project(&init)?;
    let (mut f, mut grad) = objective.value_and_gradient(&theta)?;
    let mut trace = vec![f * objective.n];
    let mut step = options.initial_step;
    let mut converged = false;
    let mut iterations = 0;
    let mut pg_norm = norm2(&objective.projected_gradient(&theta, &grad)?);
    while iterations < options.max_iterations {
        if pg_norm <= options.gradient_tolerance {
            converged = true;
            break;
        }
        let mut s = step;
        let accepted = loop {
            let moved: Vec<f64> = theta.iter().zip(&grad).map(|(t, g)| t + s * g).collect();
            let candidate = objective.project(&moved)?;
            let ascent: f64 = candidate.iter().zip(&theta).zip(&grad).map(|((c, t), g)| g * (c - t)).sum();
            let gain = objective.increment(&theta, &candidate)?;
            if gain >= options.sufficient_increase * ascent && gain >= 0.0 {
                break Some((candidate, gain));
            }
            s *= options.shrink;
            if s < MIN_STEP {
                break None;
            }
        };
        let Some((candidate, gain)) = accepted else { break };
        theta = candidate;
        (f, grad) = objective.value_and_gradient(&theta)?;
        let last = trace[trace.len() - 1];
        trace.push(last + gain * objective.n);
        iterations += 1;
        step = (s / options.shrink).min(options.initial_step);
        pg_norm = norm2(&objective.projected_gradient(&theta, &grad)?);
    }
    if !converged && pg_norm <= options.gradient_tolerance {
        converged = true;
    }
    Ok(FitResult {
        theta_hat: objective.matrix(&theta)?,
        log_likelihood: f * objective.n,
        iterations,
        best_start: start,
        converged,
        projected_gradient_norm: pg_norm,
        trace,
    })
}

/// Rows drawn from Dirichlet(1, ..., 1) and mapped affinely onto the
/// floored simplex.
fn random_start<R: Rng + ?Sized>(k: usize, v: usize, c0: f64, rng: &mut R) -> Vec<f64> {
    let mass = 1.0 - v as f64 * c0;
    let mut out = Vec::with_capacity(k * v);
    for _ in 0..k {
        let g: Vec<f64> = (0..v).map(|_| Exp1.sample(rng)).collect();
        let total: f64 = g.iter().sum();
        out.extend(g.iter().map(|x| c0 + mass * x / total));
    }
    out
}

/// EM for a uniform mixture of product multinomials (the model under the
/// uniform-vertex prior); mixture weights stay fixed at 1/K.
fn em_warm(objective: &Objective<'_>, mut theta: Vec<f64>, iterations: usize) -> Vec<f64> {
    let (k, v) = (objective.k, objective.v);
    for _ in 0..iterations {
        let mut counts = vec![0.0; k * v];
        for (doc, c) in &objective.docs {
            let lik: Vec<f64> = (0..k).map(|j| doc.words().iter().map(|&w| theta[j * v + w]).product()).collect();
            let total: f64 = lik.iter().sum();
            if !(total > 0.0) {
                continue;
            }
            for j in 0..k {
                let r = c * lik[j] / total;
                for &w in doc.words() {
                    counts[j * v + w] += r;
                }
            }
        }
        for j in 0..k {
            let row = &mut counts[j * v..(j + 1) * v];
            let total: f64 = row.iter().sum();
            if total > 0.0 {
                for (t, n) in theta[j * v..(j + 1) * v].iter_mut().zip(row.iter()) {
                    *t = n / total;
                }
            }
        }
    }
    theta
}

fn check_inputs(corpus: &Corpus, k: usize, c0: f64, nu: &MixingDistribution<f64>, options: &FitOptions) -> Result<()> {
    options.validate()?;
    check_floor(c0, corpus.v())?;
    if nu.k() != k {
        return Err(Error::DimensionMismatch(format!("K={k} but the mixing distribution has K={}", nu.k())));
    }
    nu.require_regular()
}

/// Multi-start projected gradient ascent; the start with the highest final
/// log-likelihood wins, ties going to the lowest start index. Start `s`
/// draws from stream `(seed, s)`. Under the uniform-vertex prior, start 0
/// is first refined by EM.
pub fn fit_mle(
    corpus: &Corpus,
    k: usize,
    c0: f64,
    nu: &MixingDistribution<f64>,
    options: &FitOptions,
) -> Result<FitResult> {
    check_inputs(corpus, k, c0, nu, options)?;
    let objective = Objective::new(corpus, nu, k, c0);
    let v = corpus.v();
    let results: Vec<FitResult> = (0..options.starts)
        .into_par_iter()
        .map(|s| {
            let mut rng = rng::stream(options.seed, &[s as u64]);
            let mut init = random_start(k, v, c0, &mut rng);
            if s == 0 && nu.kind() == MixingKind::UniformVertex && options.em_warm_iterations > 0 {
                init = em_warm(&objective, init, options.em_warm_iterations);
            }
            ascend(&objective, init, options, s)
        })
        .collect::<Result<_>>()?;
    let mut best = 0;
    for (i, r) in results.iter().enumerate() {
        if r.log_likelihood > results[best].log_likelihood {
            best = i;
        }
    }
    Ok(results.into_iter().nth(best).expect("at least one start"))
}

/// A single ascent from a caller-chosen feasible initializer.
pub fn ascend_from(
    corpus: &Corpus,
    nu: &MixingDistribution<f64>,
    init: &TopicMatrix<f64>,
    options: &FitOptions,
) -> Result<FitResult> {
    check_inputs(corpus, init.k(), init.c0(), nu, options)?;
    if init.v() != corpus.v() {
        return Err(Error::DimensionMismatch(format!(
            "initializer has V={} but corpus has V={}",
            init.v(),
            corpus.v()
        )));
    }
    let objective = Objective::new(corpus, nu, init.k(), init.c0());
    ascend(&objective, init.as_slice().to_vec(), options, 0)
}

/// `||P(theta + grad) - theta||_2` for the per-document mean log-likelihood.
pub fn projected_gradient_norm(corpus: &Corpus, nu: &MixingDistribution<f64>, theta: &TopicMatrix<f64>) -> Result<f64> {
    let objective = Objective::new(corpus, nu, theta.k(), theta.c0());
    let (_, grad) = objective.value_and_gradient(theta.as_slice())?;
    Ok(norm2(&objective.projected_gradient(theta.as_slice(), &grad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::sample_corpus;

    #[test]
    fn projection_example() {
        let p = project_row(&[0.9f64, 0.2, -0.1], 0.0).unwrap();
        for (a, b) in p.iter().zip([0.85, 0.15, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn projection_is_idempotent_and_feasible() {
        let feasible = [0.2, 0.3, 0.5];
        assert_eq!(project_row(&feasible, 0.1).unwrap(), feasible.to_vec());
        let p = project_row(&[3.0, -2.0, 0.4, 0.0], 0.05).unwrap();
        assert!(p.iter().all(|&x| x >= 0.05));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(project_row(&p, 0.05).unwrap(), p);
        assert!(matches!(project_row(&[0.5, 0.5], 0.5), Err(Error::InfeasibleFloor { .. })));
    }

    #[test]
    fn single_topic_recovers_frequencies() {
        let theta = TopicMatrix::new(1, 4, 0.01, vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let nu = MixingDistribution::symmetric_dirichlet(1, 1.0).unwrap();
        let corpus = sample_corpus(&theta, &nu, 3, 400, &mut rng::stream(1, &[])).unwrap();
        let mut freq = vec![0.0; 4];
        for d in corpus.documents() {
            for &w in d.words() {
                freq[w] += 1.0 / 1200.0;
            }
        }
        let expected = project_row(&freq, 0.01).unwrap();
        let fit = fit_mle(&corpus, 1, 0.01, &nu, &FitOptions { starts: 2, ..FitOptions::default() }).unwrap();
        assert!(fit.converged);
        for (a, b) in fit.theta_hat.as_slice().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-7, "{a} vs {b}");
        }
        assert!(projected_gradient_norm(&corpus, &nu, &fit.theta_hat).unwrap() <= 1e-8);
    }

    #[test]
    fn trace_is_monotone_and_iterates_feasible() {
        let theta = TopicMatrix::new(2, 4, 0.02, vec![0.1, 0.2, 0.3, 0.4, 0.4, 0.3, 0.2, 0.1]).unwrap();
        let nu = MixingDistribution::symmetric_dirichlet(2, 1.0).unwrap();
        let corpus = sample_corpus(&theta, &nu, 3, 300, &mut rng::stream(2, &[])).unwrap();
        let fit = fit_mle(&corpus, 2, 0.02, &nu, &FitOptions { starts: 3, seed: 9, ..FitOptions::default() }).unwrap();
        for w in fit.trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-10);
        }
        assert!(fit.theta_hat.as_slice().iter().all(|&x| x >= 0.02 - 1e-15));
    }

    #[test]
    fn invalid_options_are_rejected() {
        let o = FitOptions { shrink: 1.0, ..FitOptions::default() };
        assert!(o.validate().is_err());
        assert!(FitOptions { starts: 0, ..FitOptions::default() }.validate().is_err());
    }
}
