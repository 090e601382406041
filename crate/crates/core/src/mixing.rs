//! The known mixing distribution over topic weights `h` on the (K-1)-simplex.
//!
//! Everything downstream (likelihoods, Taylor terms, the identifiability
//! matrix) only ever needs expectations of the form `E[prod_i <c_i, h>]` for a
//! handful of linear forms `c_i`. Expanding the product gives a polynomial in
//! `h` whose monomials are mixed moments `E[prod_j h_j^{a_j}]`; those are
//! precomputed once per exponent vector up to `max_order`, and the expansion
//! is carried out level by level over the lattice of exponent vectors.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const DEFAULT_MAX_ORDER: usize = 6;

/// Sampler attached to a custom-moment distribution.
pub type CustomSampler = Arc<dyn Fn(&mut dyn RngCore) -> Vec<f64> + Send + Sync>;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MixingKind {
    SymmetricDirichlet { alpha: f64 },
    UniformVertex,
    CustomMoments,
}

impl MixingKind {
    pub fn name(&self) -> &'static str {
        match self {
            MixingKind::SymmetricDirichlet { .. } => "dirichlet",
            MixingKind::UniformVertex => "vertex",
            MixingKind::CustomMoments => "custom",
        }
    }
}

/// All exponent vectors in `N^K` with total order `<= max_order`, grouped by
/// total order, plus the "add one to coordinate j" successor map.
#[derive(Debug, Clone)]
struct Lattice {
    levels: Vec<Vec<Vec<u32>>>,
    index: Vec<HashMap<Vec<u32>, usize>>,
    /// `succ[d][idx * k + j]` is the index in level `d + 1` of `levels[d][idx] + e_j`.
    succ: Vec<Vec<usize>>,
}

impl Lattice {
    fn new(k: usize, max_order: usize) -> Self {
        let zero = vec![0u32; k];
        let mut levels = vec![vec![zero.clone()]];
        let mut index = vec![HashMap::from([(zero, 0usize)])];
        let mut succ = Vec::with_capacity(max_order);
        for d in 0..max_order {
            let mut next: Vec<Vec<u32>> = Vec::new();
            let mut next_index: HashMap<Vec<u32>, usize> = HashMap::new();
            let mut s = Vec::with_capacity(levels[d].len() * k);
            for a in &levels[d] {
                for j in 0..k {
                    let mut b = a.clone();
                    b[j] += 1;
                    let idx = match next_index.get(&b) {
                        Some(&i) => i,
                        None => {
                            next_index.insert(b.clone(), next.len());
                            next.push(b);
                            next.len() - 1
                        }
                    };
                    s.push(idx);
                }
            }
            levels.push(next);
            index.push(next_index);
            succ.push(s);
        }
        Lattice { levels, index, succ }
    }

    fn total_size(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }
}

/// Sorted (descending) nonzero exponents: the key under which an exchangeable
/// distribution's moments are determined.
fn partition_key(exponents: &[u32]) -> Vec<u32> {
    let mut key: Vec<u32> = exponents.iter().copied().filter(|&a| a > 0).collect();
    key.sort_unstable_by(|a, b| b.cmp(a));
    key
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularity<T> {
    /// `E[h1^2] - E[h1 h2]`.
    pub second_margin: T,
    /// `E[h1^3] + 2 E[h1 h2 h3] - 3 E[h1^2 h2]`, only for K >= 3.
    pub third_margin: Option<T>,
    pub passes: bool,
}

/// Exchangeable prior `nu_0` on the topic-weight simplex.
#[derive(Clone)]
pub struct MixingDistribution<T: Scalar> {
    kind: MixingKind,
    k: usize,
    max_order: usize,
    lattice: Lattice,
    /// Moments of every lattice vector, by level.
    moments: Vec<Vec<T>>,
    by_partition: HashMap<Vec<u32>, T>,
    sampler: Option<CustomSampler>,
}

impl<T: Scalar> fmt::Debug for MixingDistribution<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MixingDistribution")
            .field("kind", &self.kind)
            .field("k", &self.k)
            .field("max_order", &self.max_order)
            .field("has_sampler", &self.sampler.is_some())
            .finish()
    }
}

impl<T: Scalar> MixingDistribution<T> {
    pub fn symmetric_dirichlet(k: usize, alpha: f64) -> Result<Self> {
        Self::symmetric_dirichlet_with_order(k, alpha, DEFAULT_MAX_ORDER)
    }

    pub fn symmetric_dirichlet_with_order(k: usize, alpha: f64, max_order: usize) -> Result<Self> {
        if !(alpha > 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidParameter(format!("dirichlet alpha must be positive, got {alpha}")));
        }
        let a = T::lit(alpha);
        let ka = T::lit(k as f64 * alpha);
        // prod_j (alpha)_{a_j} / (K alpha)_{n}, rising factorials summed in log space
        Self::build(MixingKind::SymmetricDirichlet { alpha }, k, max_order, |e| {
            let mut log_num = T::zero();
            let mut total = 0u32;
            for &aj in e {
                for i in 0..aj {
                    log_num += (a + T::lit(i as f64)).ln();
                }
                total += aj;
            }
            let mut log_den = T::zero();
            for i in 0..total {
                log_den += (ka + T::lit(i as f64)).ln();
            }
            Ok((log_num - log_den).exp())
        })
    }

    /// `h` uniform over the K standard basis vectors: the model becomes a
    /// finite mixture of product multinomials.
    pub fn uniform_vertex(k: usize) -> Result<Self> {
        Self::uniform_vertex_with_order(k, DEFAULT_MAX_ORDER)
    }

    pub fn uniform_vertex_with_order(k: usize, max_order: usize) -> Result<Self> {
        let inv_k = T::one() / T::lit(k as f64);
        Self::build(MixingKind::UniformVertex, k, max_order, |e| {
            Ok(match e.iter().filter(|&&a| a > 0).count() {
                0 => T::one(),
                1 => inv_k,
                _ => T::zero(),
            })
        })
    }

    /// Moments supplied by the caller as a function of the exponent vector
    /// (length K). The values are checked for exchangeability, for
    /// `E[1] = 1`, for range `[0, 1]`, and for the total-mass identity
    /// `sum_j E[h_j h^a] = E[h^a]`.
    pub fn custom_moments<F>(k: usize, max_order: usize, oracle: F) -> Result<Self>
    where
        F: Fn(&[u32]) -> T,
    {
        let tol = T::unit_tolerance();
        let nu = Self::build(MixingKind::CustomMoments, k, max_order, |e| {
            let value = oracle(e);
            let mut canonical = e.to_vec();
            canonical.sort_unstable_by(|a, b| b.cmp(a));
            let reference = oracle(&canonical);
            if !value.is_finite() {
                return Err(Error::NonFinite(format!("custom moment at {e:?}")));
            }
            if (value - reference).abs() > tol * T::one().max(reference.abs()) {
                return Err(Error::NotExchangeable(format!(
                    "moment at {e:?} is {value} but its permutation {canonical:?} gives {reference}"
                )));
            }
            Ok(value)
        })?;

        let loose = tol * T::lit(1000.0);
        if (nu.moments[0][0] - T::one()).abs() > loose {
            return Err(Error::InvalidParameter(format!("custom moments: E[1] must be 1, got {}", nu.moments[0][0])));
        }
        for (d, level) in nu.moments.iter().enumerate() {
            for (idx, &mu) in level.iter().enumerate() {
                if mu < -loose || mu > T::one() + loose {
                    return Err(Error::InvalidParameter(format!(
                        "custom moment at {:?} is {mu}, outside [0, 1]",
                        nu.lattice.levels[d][idx]
                    )));
                }
                if d < nu.max_order {
                    let total: T = (0..k).map(|j| nu.moments[d + 1][nu.lattice.succ[d][idx * k + j]]).sum();
                    if (total - mu).abs() > loose {
                        return Err(Error::InvalidParameter(format!(
                            "custom moments violate sum_j E[h_j h^a] = E[h^a] at a={:?}: {total} vs {mu}",
                            nu.lattice.levels[d][idx]
                        )));
                    }
                }
            }
        }
        Ok(nu)
    }

    /// Attaches a sampler to a custom-moment distribution.
    pub fn with_sampler(mut self, sampler: CustomSampler) -> Self {
        self.sampler = Some(sampler);
        self
    }

    fn build<F>(kind: MixingKind, k: usize, max_order: usize, moment: F) -> Result<Self>
    where
        F: Fn(&[u32]) -> Result<T>,
    {
        if k == 0 {
            return Err(Error::InvalidParameter("K must be positive".into()));
        }
        let lattice = Lattice::new(k, max_order);
        if lattice.total_size() > 5_000_000 {
            return Err(Error::TooLarge { what: "moment cache", size: lattice.total_size() as f64, limit: 5e6 });
        }
        let mut moments = Vec::with_capacity(lattice.levels.len());
        let mut by_partition = HashMap::new();
        for level in &lattice.levels {
            let mut values = Vec::with_capacity(level.len());
            for e in level {
                let key = partition_key(e);
                let mu = match by_partition.get(&key) {
                    Some(&mu) if kind != MixingKind::CustomMoments => mu,
                    _ => {
                        let mu = moment(e)?;
                        by_partition.entry(key).or_insert(mu);
                        mu
                    }
                };
                values.push(mu);
            }
            moments.push(values);
        }
        Ok(MixingDistribution { kind, k, max_order, lattice, moments, by_partition, sampler: None })
    }

    pub fn kind(&self) -> MixingKind {
        self.kind
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// Moment `E[prod h_j^{a_j}]` for a full exponent vector of length K.
    pub fn moment_of_counts(&self, exponents: &[u32]) -> Result<T> {
        if exponents.len() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "exponent vector has length {} but K={}",
                exponents.len(),
                self.k
            )));
        }
        let order: usize = exponents.iter().map(|&a| a as usize).sum();
        if order > self.max_order {
            return Err(Error::OrderExceedsCache { order, max: self.max_order });
        }
        Ok(self.moments[order][self.lattice.index[order][exponents]])
    }

    /// Moment of a multiset given as `(topic index, multiplicity)` pairs;
    /// repeated indices accumulate.
    pub fn mixed_moment(&self, multiset: &[(usize, u32)]) -> Result<T> {
        let mut counts = vec![0u32; self.k];
        for &(j, a) in multiset {
            if j >= self.k {
                return Err(Error::IndexOutOfRange { index: j, k: self.k });
            }
            counts[j] += a;
        }
        self.moment_of_counts(&counts)
    }

    /// Cached moment by partition (sorted exponent multiset), if cached.
    pub fn moment_by_partition(&self, partition: &[u32]) -> Option<T> {
        self.by_partition.get(&partition_key(partition)).copied()
    }

    pub fn check_regularity(&self) -> Result<Regularity<T>> {
        if self.k < 2 {
            return Err(Error::InvalidParameter(format!("regularity margins need K >= 2, got K={}", self.k)));
        }
        let second = self.mixed_moment(&[(0, 2)])? - self.mixed_moment(&[(0, 1), (1, 1)])?;
        let third = if self.k >= 3 {
            Some(
                self.mixed_moment(&[(0, 3)])? + T::lit(2.0) * self.mixed_moment(&[(0, 1), (1, 1), (2, 1)])?
                    - T::lit(3.0) * self.mixed_moment(&[(0, 2), (1, 1)])?,
            )
        } else {
            None
        };
        let passes = second > T::zero() && third.is_none_or(|t| t > T::zero());
        Ok(Regularity { second_margin: second, third_margin: third, passes })
    }

    /// `c(nu_0) = E[h1^2] - E[h1 h2]`, the constant in the second-order
    /// lower bound.
    pub fn c_nu(&self) -> Result<T> {
        let reg = self.check_regularity()?;
        if !reg.passes {
            return Err(Error::Irregular(format!(
                "second margin {}, third margin {:?}",
                reg.second_margin, reg.third_margin
            )));
        }
        Ok(reg.second_margin)
    }

    /// Regularity for K >= 2; trivially satisfied for a single topic.
    pub(crate) fn require_regular(&self) -> Result<()> {
        if self.k < 2 {
            return Ok(());
        }
        self.c_nu().map(|_| ())
    }

    pub fn sample_h<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<T>> {
        let h = self.sample_h_f64(rng)?;
        Ok(h.into_iter().map(T::lit).collect())
    }

    pub(crate) fn sample_h_f64<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Vec<f64>> {
        match self.kind {
            MixingKind::UniformVertex => {
                let mut h = vec![0.0; self.k];
                h[rng.random_range(0..self.k)] = 1.0;
                Ok(h)
            }
            MixingKind::SymmetricDirichlet { alpha } => {
                let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::InvalidParameter(e.to_string()))?;
                let mut h: Vec<f64> = (0..self.k).map(|_| gamma.sample(rng)).collect();
                let total: f64 = h.iter().sum();
                if total > 0.0 && total.is_finite() {
                    h.iter_mut().for_each(|x| *x /= total);
                } else {
                    // every draw underflowed (tiny alpha): the limit is a random vertex
                    h.iter_mut().for_each(|x| *x = 0.0);
                    h[rng.random_range(0..self.k)] = 1.0;
                }
                Ok(h)
            }
            MixingKind::CustomMoments => {
                let sampler = self.sampler.as_ref().ok_or(Error::Unsampleable("custom"))?;
                let mut adapter = RngAdapter(rng);
                let h = sampler(&mut adapter);
                if h.len() != self.k {
                    return Err(Error::DimensionMismatch(format!(
                        "custom sampler returned {} weights for K={}",
                        h.len(),
                        self.k
                    )));
                }
                Ok(h)
            }
        }
    }

    pub fn is_sampleable(&self) -> bool {
        !matches!(self.kind, MixingKind::CustomMoments) || self.sampler.is_some()
    }

    fn check_forms(&self, forms: &[&[T]], extra: usize) -> Result<()> {
        let order = forms.len() + extra;
        if order > self.max_order {
            return Err(Error::OrderExceedsCache { order, max: self.max_order });
        }
        if let Some(bad) = forms.iter().find(|f| f.len() != self.k) {
            return Err(Error::DimensionMismatch(format!("linear form of length {} for K={}", bad.len(), self.k)));
        }
        Ok(())
    }

    /// Coefficients, over level `forms.len()` of the lattice, of the
    /// polynomial `prod_i <c_i, h>`.
    fn expand(&self, forms: &[&[T]]) -> Vec<T> {
        let k = self.k;
        let mut cur = vec![T::one()];
        for (d, form) in forms.iter().enumerate() {
            let succ = &self.lattice.succ[d];
            let mut next = vec![T::zero(); self.lattice.levels[d + 1].len()];
            for (idx, &c) in cur.iter().enumerate() {
                if c == T::zero() {
                    continue;
                }
                let row = &succ[idx * k..(idx + 1) * k];
                for j in 0..k {
                    next[row[j]] += c * form[j];
                }
            }
            cur = next;
        }
        cur
    }

    /// `E[prod_i <c_i, h>]`.
    pub fn expect_product(&self, forms: &[&[T]]) -> Result<T> {
        self.check_forms(forms, 0)?;
        Ok(self.expect_product_unchecked(forms))
    }

    /// [`Self::expect_product`] for callers that already validated order and
    /// form lengths.
    pub(crate) fn expect_product_unchecked(&self, forms: &[&[T]]) -> T {
        if self.kind == MixingKind::UniformVertex {
            return self.vertex_product(forms);
        }
        self.expect_product_lattice(forms)
    }

    pub(crate) fn expect_product_lattice(&self, forms: &[&[T]]) -> T {
        let coeffs = self.expand(forms);
        let mu = &self.moments[forms.len()];
        coeffs.iter().zip(mu).map(|(&c, &m)| c * m).sum()
    }

    fn vertex_product(&self, forms: &[&[T]]) -> T {
        let inv_k = T::one() / T::lit(self.k as f64);
        (0..self.k).map(|j| forms.iter().map(|f| f[j]).fold(T::one(), |acc, x| acc * x)).sum::<T>() * inv_k
    }

    /// `[E[h_j prod_i <c_i, h>] for j in 0..K]`.
    pub fn expect_weighted_product(&self, forms: &[&[T]]) -> Result<Vec<T>> {
        self.check_forms(forms, 1)?;
        if self.kind == MixingKind::UniformVertex {
            let inv_k = T::one() / T::lit(self.k as f64);
            return Ok((0..self.k).map(|j| forms.iter().map(|f| f[j]).fold(inv_k, |acc, x| acc * x)).collect());
        }
        Ok(self.expect_weighted_product_lattice(forms))
    }

    pub(crate) fn expect_weighted_product_lattice(&self, forms: &[&[T]]) -> Vec<T> {
        let k = self.k;
        let d = forms.len();
        let coeffs = self.expand(forms);
        let succ = &self.lattice.succ[d];
        let mu = &self.moments[d + 1];
        let mut out = vec![T::zero(); k];
        for (idx, &c) in coeffs.iter().enumerate() {
            if c == T::zero() {
                continue;
            }
            for (j, o) in out.iter_mut().enumerate() {
                *o += c * mu[succ[idx * k + j]];
            }
        }
        out
    }

    /// Coefficients of `t^p`, `p = 0..=len`, in
    /// `E[prod_i (<a_i, h> + t <b_i, h>)]`.
    pub fn expect_graded_product(&self, base: &[&[T]], pert: &[&[T]]) -> Result<Vec<T>> {
        if base.len() != pert.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} base forms but {} perturbation forms",
                base.len(),
                pert.len()
            )));
        }
        self.check_forms(base, 0)?;
        self.check_forms(pert, 0)?;
        if self.kind == MixingKind::UniformVertex {
            return Ok(self.vertex_graded(base, pert));
        }
        Ok(self.expect_graded_product_lattice(base, pert))
    }

    fn vertex_graded(&self, base: &[&[T]], pert: &[&[T]]) -> Vec<T> {
        let m = base.len();
        let inv_k = T::one() / T::lit(self.k as f64);
        let mut out = vec![T::zero(); m + 1];
        let mut poly = vec![T::zero(); m + 1];
        for j in 0..self.k {
            poly.iter_mut().for_each(|x| *x = T::zero());
            poly[0] = T::one();
            for (i, (a, b)) in base.iter().zip(pert).enumerate() {
                for p in (0..=i + 1).rev() {
                    let shifted = if p > 0 { poly[p - 1] * b[j] } else { T::zero() };
                    poly[p] = poly[p] * a[j] + shifted;
                }
            }
            for (o, &c) in out.iter_mut().zip(&poly) {
                *o += c * inv_k;
            }
        }
        out
    }

    pub(crate) fn expect_graded_product_lattice(&self, base: &[&[T]], pert: &[&[T]]) -> Vec<T> {
        let k = self.k;
        let m = base.len();
        // cur[p][idx]: coefficient of t^p on lattice vector idx of the current level
        let mut cur = vec![vec![T::one()]];
        for d in 0..m {
            let succ = &self.lattice.succ[d];
            let width = self.lattice.levels[d + 1].len();
            let mut next = vec![vec![T::zero(); width]; d + 2];
            for (p, row) in cur.iter().enumerate() {
                for (idx, &c) in row.iter().enumerate() {
                    if c == T::zero() {
                        continue;
                    }
                    let s = &succ[idx * k..(idx + 1) * k];
                    for j in 0..k {
                        next[p][s[j]] += c * base[d][j];
                        next[p + 1][s[j]] += c * pert[d][j];
                    }
                }
            }
            cur = next;
        }
        let mu = &self.moments[m];
        cur.iter().map(|row| row.iter().zip(mu).map(|(&c, &w)| c * w).sum()).collect()
    }
}

struct RngAdapter<'a, R: Rng + ?Sized>(&'a mut R);

impl<R: Rng + ?Sized> RngCore for RngAdapter<'_, R> {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }
    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }
    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.0.fill_bytes(dst)
    }
}
