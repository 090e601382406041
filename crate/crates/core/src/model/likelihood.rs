//! Exact document probabilities by moment expansion, their gradients,
//! Taylor terms along a perturbation, and corpus sampling.

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixing::MixingDistribution;
use crate::model::{Corpus, Document, PerturbationDirection, TopicMatrix};
use crate::scalar::Scalar;

/// Largest number of index tuples `K^m` a single likelihood may expand.
pub const TERM_LIMIT: f64 = 1e7;
/// Largest outcome space `V^m` that may be enumerated.
pub const ENUMERATION_LIMIT: f64 = 2e6;

fn check_pair<T: Scalar>(theta: &TopicMatrix<T>, nu: &MixingDistribution<T>) -> Result<()> {
    if theta.k() != nu.k() {
        return Err(Error::DimensionMismatch(format!(
            "topic matrix has K={} but the mixing distribution has K={}",
            theta.k(),
            nu.k()
        )));
    }
    Ok(())
}

fn check_terms(k: usize, m: usize) -> Result<()> {
    let size = (k as f64).powi(m as i32);
    if size > TERM_LIMIT {
        return Err(Error::TooLarge { what: "likelihood expansion", size, limit: TERM_LIMIT });
    }
    Ok(())
}

/// `V^m`, or a guard error when it exceeds [`ENUMERATION_LIMIT`].
pub fn enumeration_size(v: usize, m: usize) -> Result<usize> {
    let size = (v as f64).powi(m as i32);
    if size > ENUMERATION_LIMIT {
        return Err(Error::TooLarge { what: "enumeration of [V]^m", size, limit: ENUMERATION_LIMIT });
    }
    Ok(v.pow(m as u32))
}

fn check_doc<T: Scalar>(theta: &TopicMatrix<T>, nu: &MixingDistribution<T>, doc: &Document) -> Result<()> {
    check_pair(theta, nu)?;
    check_terms(theta.k(), doc.len())?;
    doc.validate(theta.v())
}

fn word_forms<'a, T: Scalar>(theta: &'a TopicMatrix<T>, doc: &Document) -> Vec<&'a [T]> {
    doc.words().iter().map(|&w| theta.word_column(w)).collect()
}

/// `p(x) = E_h prod_i sum_k h_k theta_k(x_i)`.
pub fn likelihood<T: Scalar>(theta: &TopicMatrix<T>, nu: &MixingDistribution<T>, doc: &Document) -> Result<T> {
    check_doc(theta, nu, doc)?;
    nu.expect_product(&word_forms(theta, doc))
}

/// Probabilities of all of `[V]^m` in lexicographic order.
pub fn enumerate_distribution<T: Scalar>(
    theta: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    m: usize,
) -> Result<Vec<T>> {
    check_pair(theta, nu)?;
    check_terms(theta.k(), m)?;
    let size = enumeration_size(theta.v(), m)?;
    if m > nu.max_order() {
        return Err(Error::OrderExceedsCache { order: m, max: nu.max_order() });
    }
    let v = theta.v();
    Ok((0..size)
        .into_par_iter()
        .map(|idx| nu.expect_product_unchecked(&word_forms(theta, &Document::from_index(idx, v, m))))
        .collect())
}

/// `[xi(i, j; x) for j in 0..K]` with `xi(i, j; x) = E[h_j prod_{i' != i} p_h(x_i')]`,
/// the derivative of `p(x)` with respect to the word factor at position `i`.
pub fn xi_row<T: Scalar>(
    theta: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    doc: &Document,
    position: usize,
) -> Result<Vec<T>> {
    check_doc(theta, nu, doc)?;
    if position >= doc.len() {
        return Err(Error::InvalidParameter(format!("position {} outside 1..={}", position + 1, doc.len())));
    }
    let forms: Vec<&[T]> =
        doc.words().iter().enumerate().filter(|&(i, _)| i != position).map(|(_, &w)| theta.word_column(w)).collect();
    nu.expect_weighted_product(&forms)
}

/// `d p(x) / d theta_j(w)` for all (j, w), row-major K x V.
pub fn likelihood_gradient<T: Scalar>(
    theta: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    doc: &Document,
) -> Result<Vec<T>> {
    let (k, v) = (theta.k(), theta.v());
    let mut grad = vec![T::zero(); k * v];
    for (i, &w) in doc.words().iter().enumerate() {
        let xi = xi_row(theta, nu, doc, i)?;
        for j in 0..k {
            grad[j * v + w] += xi[j];
        }
    }
    Ok(grad)
}

/// `sum_i log p(X_i)`, evaluated once per distinct document.
pub fn log_likelihood<T: Scalar>(theta: &TopicMatrix<T>, nu: &MixingDistribution<T>, corpus: &Corpus) -> Result<T> {
    let mut total = T::zero();
    for (doc, count) in corpus.histogram() {
        total += T::lit(count as f64) * likelihood(theta, nu, &doc)?.ln();
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("log-likelihood; check the floor c0".into()));
    }
    Ok(total)
}

/// Unconstrained partials of [`log_likelihood`], row-major K x V.
pub fn log_likelihood_gradient<T: Scalar>(
    theta: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    corpus: &Corpus,
) -> Result<Vec<T>> {
    log_likelihood_with_gradient(theta, nu, corpus).map(|(_, g)| g)
}

pub fn log_likelihood_with_gradient<T: Scalar>(
    theta: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    corpus: &Corpus,
) -> Result<(T, Vec<T>)> {
    let mut total = T::zero();
    let mut grad = vec![T::zero(); theta.k() * theta.v()];
    for (doc, count) in corpus.histogram() {
        let c = T::lit(count as f64);
        let p = likelihood(theta, nu, &doc)?;
        total += c * p.ln();
        let scale = c / p;
        for (g, d) in grad.iter_mut().zip(likelihood_gradient(theta, nu, &doc)?) {
            *g += scale * d;
        }
    }
    if !total.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("log-likelihood gradient; check the floor c0".into()));
    }
    Ok((total, grad))
}

/// `[r_0(x), r_1(x), ..., r_m(x)]` where `p_{theta + delta}(x) = sum_p r_p(x)`;
/// `r_p` collects the terms with exactly `p` factors of `delta`, and
/// `r_0(x) = p_theta(x)`.
pub fn expansion_terms<T: Scalar>(
    theta: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    delta: &PerturbationDirection<T>,
    doc: &Document,
) -> Result<Vec<T>> {
    check_doc(theta, nu, doc)?;
    if delta.k() != theta.k() || delta.v() != theta.v() {
        return Err(Error::DimensionMismatch("direction and topic matrix differ in shape".into()));
    }
    let base = word_forms(theta, doc);
    let pert_cols: Vec<Vec<T>> = doc.words().iter().map(|&w| delta.word_column(w)).collect();
    let pert: Vec<&[T]> = pert_cols.iter().map(Vec::as_slice).collect();
    nu.expect_graded_product(&base, &pert)
}

/// The order-`p_order` Taylor term `r_p(x)`, `1 <= p_order <= m`.
pub fn expansion_term<T: Scalar>(
    theta: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    delta: &PerturbationDirection<T>,
    p_order: usize,
    doc: &Document,
) -> Result<T> {
    if p_order == 0 || p_order > doc.len() {
        return Err(Error::OrderOutOfRange { order: p_order, m: doc.len() });
    }
    Ok(expansion_terms(theta, nu, delta, doc)?[p_order])
}

/// Draws `h ~ nu` once, then `m` i.i.d. words from `sum_k h_k theta_k`.
pub fn sample_document<T: Scalar, R: Rng + ?Sized>(
    theta: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    m: usize,
    rng: &mut R,
) -> Result<Document> {
    check_pair(theta, nu)?;
    let h = nu.sample_h_f64(rng)?;
    let v = theta.v();
    let probs: Vec<f64> =
        (0..v).map(|w| theta.word_column(w).iter().zip(&h).map(|(t, hk)| t.as_f64() * hk).sum()).collect();
    let words = (0..m).map(|_| draw_categorical(&probs, rng)).collect();
    Ok(Document::new(words))
}

pub fn sample_corpus<T: Scalar, R: Rng + ?Sized>(
    theta: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    m: usize,
    n: usize,
    rng: &mut R,
) -> Result<Corpus> {
    let docs = (0..n).map(|_| sample_document(theta, nu, m, rng)).collect::<Result<Vec<_>>>()?;
    Corpus::new(theta.v(), m, docs)
}

fn draw_categorical<R: Rng + ?Sized>(probs: &[f64], rng: &mut R) -> usize {
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (w, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return w;
        }
    }
    probs.len() - 1
}

/// Samples whole documents from a precomputed distribution over `[V]^m`;
/// equivalent in law to [`sample_document`] and much cheaper when many
/// corpora are drawn from the same parameter.
#[derive(Debug, Clone)]
pub struct EnumeratedSampler {
    v: usize,
    m: usize,
    cdf: Vec<f64>,
}

impl EnumeratedSampler {
    pub fn new<T: Scalar>(theta: &TopicMatrix<T>, nu: &MixingDistribution<T>, m: usize) -> Result<Self> {
        let probs = enumerate_distribution(theta, nu, m)?;
        Ok(Self::from_probabilities(theta.v(), m, probs.iter().map(|p| p.as_f64())))
    }

    pub fn from_probabilities(v: usize, m: usize, probs: impl Iterator<Item = f64>) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        EnumeratedSampler { v, m, cdf }
    }

    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = rng.random::<f64>() * self.cdf[self.cdf.len() - 1];
        self.cdf.partition_point(|&c| c <= u).min(self.cdf.len() - 1)
    }

    pub fn sample_corpus<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Corpus> {
        let docs = (0..n).map(|_| Document::from_index(self.sample_index(rng), self.v, self.m)).collect();
        Corpus::new(self.v, self.m, docs)
    }
}
