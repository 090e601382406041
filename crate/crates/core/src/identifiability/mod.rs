//! First-order identifiability: the linear system whose trivial kernel
//! characterizes `p(m; theta) = 1`, its spectrum and conditioning, and the
//! degeneracy objective along explicit directions.

mod directions;
mod equivalents;
pub mod linalg;
pub mod table1;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

pub use directions::{cyclic_difference_direction, duplicate_topic_direction};
pub use equivalents::{enumerate_equivalents_k2, MAX_EQUIVALENT_V};
pub use linalg::{condition_estimate_hager, smallest_singular_value, LinalgScalar};
pub use table1::{
    generate_theta, table1_suite, Table1Entry, Table1Row, ThetaStructure, TABLE1_ALPHA, TABLE1_C0, TABLE1_ROWS,
};

use crate::error::{Error, Result};
use crate::mixing::MixingDistribution;
use crate::model::likelihood::{enumeration_size, expansion_terms, xi_row};
use crate::model::{Document, PerturbationDirection, TopicMatrix};
use crate::scalar::Scalar;

/// Default multiplier on `max(rows, cols) * eps` in the numerical-rank test.
pub const DEFAULT_TOLERANCE_FACTOR: f64 = 1e3;

/// `xi(i, j; x) = E[h_j prod_{i' != i} p_h(x_i')]`, 0-based `i` and `j`.
pub fn xi_coefficient<T: Scalar>(
    theta: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    m: usize,
    position: usize,
    topic: usize,
    doc: &Document,
) -> Result<T> {
    if doc.len() != m {
        return Err(Error::InvalidDocument(format!("document has {} words, expected {m}", doc.len())));
    }
    if position >= m {
        return Err(Error::IndexOutOfRange { index: position, k: m });
    }
    if topic >= theta.k() {
        return Err(Error::IndexOutOfRange { index: topic, k: theta.k() });
    }
    Ok(xi_row(theta, nu, doc, position)?[topic])
}

/// The `(V^m + K) x VK` matrix `A(theta)`. Column `j * V + w` belongs to
/// topic `j`, word `w`. Document rows come first in lexicographic order,
/// followed by one row-sum constraint per topic.
#[derive(Debug, Clone)]
pub struct IdentifiabilityMatrix<T: Scalar> {
    pub v: usize,
    pub k: usize,
    pub m: usize,
    pub matrix: DMatrix<T>,
}

impl<T: Scalar> IdentifiabilityMatrix<T> {
    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.ncols()
    }

    /// `A vec(delta)`, with `delta` flattened topic-major.
    pub fn apply(&self, delta: &PerturbationDirection<T>) -> Result<Vec<T>> {
        if delta.k() != self.k || delta.v() != self.v {
            return Err(Error::DimensionMismatch("direction and matrix differ in shape".into()));
        }
        let x = DVector::from_column_slice(delta.as_slice());
        Ok((&self.matrix * x).iter().copied().collect())
    }
}

pub fn build_matrix<T: Scalar>(
    theta: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    m: usize,
) -> Result<IdentifiabilityMatrix<T>> {
    nu.require_regular()?;
    let (v, k) = (theta.v(), theta.k());
    let n_docs = enumeration_size(v, m)?;
    let cols = v * k;
    let doc_rows: Vec<Vec<T>> = (0..n_docs)
        .into_par_iter()
        .map(|idx| {
            let doc = Document::from_index(idx, v, m);
            let mut row = vec![T::zero(); cols];
            for (i, &w) in doc.words().iter().enumerate() {
                let xi = xi_row(theta, nu, &doc, i)?;
                for j in 0..k {
                    row[j * v + w] += xi[j];
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut matrix = DMatrix::zeros(n_docs + k, cols);
    for (r, row) in doc_rows.iter().enumerate() {
        for (c, &x) in row.iter().enumerate() {
            matrix[(r, c)] = x;
        }
    }
    for j in 0..k {
        for w in 0..v {
            matrix[(n_docs + j, j * v + w)] = T::one();
        }
    }
    Ok(IdentifiabilityMatrix { v, k, m, matrix })
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentifiabilityReport<T> {
    pub m: usize,
    pub v: usize,
    pub k: usize,
    pub sigma_min: T,
    pub sigma_max: T,
    pub kappa2: T,
    /// `sqrt` of Hager's estimate on `A^T A`.
    pub kappa1_estimate: T,
    pub rank_tolerance: T,
    pub full_column_rank: bool,
    pub p_order: usize,
}

/// Classifies `p(m; theta)` as 1 (full column rank) or 2 (deficient).
pub fn classify_order<T: LinalgScalar>(
    theta: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    m: usize,
) -> Result<IdentifiabilityReport<T>> {
    classify_order_with(theta, nu, m, DEFAULT_TOLERANCE_FACTOR)
}

pub fn classify_order_with<T: LinalgScalar>(
    theta: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    m: usize,
    tolerance_factor: f64,
) -> Result<IdentifiabilityReport<T>> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "m={m}: topics are not finitely identifiable from single-word documents, need m >= 2"
        )));
    }
    let a = build_matrix(theta, nu, m)?;
    Ok(report_from_matrix(&a, tolerance_factor))
}

pub fn report_from_matrix<T: LinalgScalar>(
    a: &IdentifiabilityMatrix<T>,
    tolerance_factor: f64,
) -> IdentifiabilityReport<T> {
    let r = linalg::qr_factor(&a.matrix);
    let (sigma_min, sigma_max) = smallest_singular_value(&r);
    let gram = r.transpose() * &r;
    let kappa1_estimate = num_traits::Float::sqrt(condition_estimate_hager(&gram));
    let size = T::lit(a.rows().max(a.cols()) as f64);
    let rank_tolerance = size * <T as num_traits::Float>::epsilon() * T::lit(tolerance_factor);
    let full_column_rank = sigma_min > rank_tolerance * sigma_max;
    IdentifiabilityReport {
        m: a.m,
        v: a.v,
        k: a.k,
        sigma_min,
        sigma_max,
        kappa2: sigma_max / sigma_min,
        kappa1_estimate,
        rank_tolerance,
        full_column_rank,
        p_order: if full_column_rank { 1 } else { 2 },
    }
}

/// Unit-l1 direction spanning the (numerical) kernel of `A(theta)`.
pub fn null_direction<T: LinalgScalar>(a: &IdentifiabilityMatrix<T>) -> Result<PerturbationDirection<T>> {
    let nv = linalg::null_vector(&a.matrix);
    let mut data: Vec<T> = nv.iter().copied().collect();
    // exact zero row sums; the constraint rows only enforce them approximately
    for row in data.chunks_mut(a.v) {
        let mean = row.iter().copied().sum::<T>() / T::lit(a.v as f64);
        row.iter_mut().for_each(|x| *x -= mean);
    }
    PerturbationDirection::new(a.k, a.v, data)?.normalized()
}

/// `D = sum_x |r_p(x)|` at the supplied `delta` (not normalized here).
pub fn degeneracy_objective<T: Scalar>(
    theta: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    m: usize,
    p_order: usize,
    delta: &PerturbationDirection<T>,
) -> Result<T> {
    if p_order == 0 || p_order > m {
        return Err(Error::OrderOutOfRange { order: p_order, m });
    }
    if delta.k() != theta.k() || delta.v() != theta.v() {
        return Err(Error::DimensionMismatch("direction and topic matrix differ in shape".into()));
    }
    let v = theta.v();
    let size = enumeration_size(v, m)?;
    let terms: Vec<T> = (0..size)
        .into_par_iter()
        .map(|idx| expansion_terms(theta, nu, delta, &Document::from_index(idx, v, m)).map(|t| t[p_order].abs()))
        .collect::<Result<_>>()?;
    Ok(terms.into_iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn vertex_instance() -> (TopicMatrix<f64>, MixingDistribution<f64>) {
        (TopicMatrix::new(2, 2, 0.1, vec![0.6, 0.4, 0.3, 0.7]).unwrap(), MixingDistribution::uniform_vertex(2).unwrap())
    }

    #[test]
    fn xi_vertex_example() {
        let (theta, nu) = vertex_instance();
        let doc = Document::new(vec![0, 1]);
        assert!((xi_coefficient(&theta, &nu, 2, 0, 0, &doc).unwrap() - 0.2).abs() < 1e-15);
        assert!((xi_coefficient(&theta, &nu, 2, 0, 1, &doc).unwrap() - 0.35).abs() < 1e-15);
        assert!(matches!(xi_coefficient(&theta, &nu, 2, 2, 0, &doc), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(xi_coefficient(&theta, &nu, 2, 0, 2, &doc), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn xi_single_word_is_mean_weight() {
        let theta = TopicMatrix::uniform(3, 4, 0.01f64).unwrap();
        let nu = MixingDistribution::symmetric_dirichlet(3, 0.7).unwrap();
        for j in 0..3 {
            let xi = xi_coefficient(&theta, &nu, 1, 0, j, &Document::new(vec![2])).unwrap();
            assert!((xi - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn xi_is_topic_equivariant() {
        let mut r = rng::stream(3, &[]);
        let theta = generate_theta(ThetaStructure::Independent, 4, 3, 1e-3, &mut r).unwrap();
        let perm = [2, 0, 1];
        let permuted = theta.permute_rows(&perm).unwrap();
        let nu = MixingDistribution::symmetric_dirichlet(3, 1.0).unwrap();
        let doc = Document::new(vec![0, 3, 1]);
        for i in 0..3 {
            for (j, &pj) in perm.iter().enumerate() {
                let a = xi_coefficient(&permuted, &nu, 3, i, j, &doc).unwrap();
                let b = xi_coefficient(&theta, &nu, 3, i, pj, &doc).unwrap();
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn matrix_shape_and_constraint_rows() {
        let mut r = rng::stream(4, &[]);
        let theta = generate_theta(ThetaStructure::Independent, 10, 3, 1e-3, &mut r).unwrap();
        let nu = MixingDistribution::symmetric_dirichlet(3, 1.0).unwrap();
        let a = build_matrix(&theta, &nu, 3).unwrap();
        assert_eq!((a.rows(), a.cols()), (1003, 30));
        for j in 0..3 {
            let row = a.matrix.row(1000 + j);
            for c in 0..30 {
                assert_eq!(row[c], if c / 10 == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn irregular_prior_is_rejected() {
        let nu = MixingDistribution::<f64>::custom_moments(2, 4, |e: &[u32]| 0.5f64.powi(e.iter().sum::<u32>() as i32))
            .unwrap();
        let theta = TopicMatrix::uniform(2, 3, 0.01).unwrap();
        assert!(matches!(build_matrix(&theta, &nu, 2), Err(Error::Irregular(_))));
    }

    #[test]
    fn single_word_documents_are_rejected() {
        let (theta, nu) = vertex_instance();
        assert!(matches!(classify_order(&theta, &nu, 1), Err(Error::InvalidParameter(_))));
    }
}
