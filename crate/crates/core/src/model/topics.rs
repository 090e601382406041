use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// K topic rows, each a distribution over V words bounded below by `c0`.
///
/// Stored row-major; a transposed copy gives, for each word `w`, the vector
/// `(theta_1(w), ..., theta_K(w))` that enters likelihoods as a linear form
/// in the topic weights.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicMatrix<T> {
    k: usize,
    v: usize,
    c0: T,
    data: Vec<T>,
    cols: Vec<T>,
}

impl<T: Scalar> TopicMatrix<T> {
    /// Validates row sums (within the scalar's unit tolerance) and the floor.
    pub fn new(k: usize, v: usize, c0: T, data: Vec<T>) -> Result<Self> {
        if k == 0 || v == 0 {
            return Err(Error::InvalidTopics(format!("need K >= 1 and V >= 1, got K={k} V={v}")));
        }
        if data.len() != k * v {
            return Err(Error::DimensionMismatch(format!("{} entries for K={k} V={v}", data.len())));
        }
        check_floor(c0, v)?;
        let tol = T::unit_tolerance();
        for (j, row) in data.chunks(v).enumerate() {
            if let Some(x) = row.iter().find(|x| !x.is_finite()) {
                return Err(Error::InvalidTopics(format!("row {j} has non-finite entry {x}")));
            }
            let total: T = row.iter().copied().sum();
            if (total - T::one()).abs() > tol {
                return Err(Error::InvalidTopics(format!("row {j} sums to {total}")));
            }
            if let Some((w, x)) = row.iter().enumerate().find(|(_, &x)| x < c0 - tol) {
                return Err(Error::InvalidTopics(format!("entry ({j}, {w}) = {x} is below c0 = {c0}")));
            }
        }
        let mut cols = vec![T::zero(); k * v];
        for j in 0..k {
            for w in 0..v {
                cols[w * k + j] = data[j * v + w];
            }
        }
        Ok(TopicMatrix { k, v, c0, data, cols })
    }

    pub fn from_rows(rows: &[Vec<T>], c0: T) -> Result<Self> {
        let v = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != v) {
            return Err(Error::DimensionMismatch("ragged topic rows".into()));
        }
        Self::new(rows.len(), v, c0, rows.concat())
    }

    /// Every row uniform over the vocabulary.
    pub fn uniform(k: usize, v: usize, c0: T) -> Result<Self> {
        let u = T::one() / T::lit(v as f64);
        Self::new(k, v, c0, vec![u; k * v])
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn c0(&self) -> T {
        self.c0
    }

    pub fn get(&self, topic: usize, word: usize) -> T {
        self.data[topic * self.v + word]
    }

    pub fn row(&self, topic: usize) -> &[T] {
        &self.data[topic * self.v..(topic + 1) * self.v]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[T]> {
        self.data.chunks(self.v)
    }

    /// `(theta_1(w), ..., theta_K(w))`.
    pub fn word_column(&self, word: usize) -> &[T] {
        &self.cols[word * self.k..(word + 1) * self.k]
    }

    /// Row-major entries, topic-major.
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        self.rows().map(<[T]>::to_vec).collect()
    }

    /// Row `j` of the result is row `perm[j]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.k];
        if perm.len() != self.k || perm.iter().any(|&p| p >= self.k || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidParameter(format!("{perm:?} is not a permutation of 0..{}", self.k)));
        }
        let data = perm.iter().flat_map(|&p| self.row(p).iter().copied()).collect();
        Self::new(self.k, self.v, self.c0, data)
    }

    /// Same entries with a different floor; fails if an entry sits below it.
    pub fn with_c0(&self, c0: T) -> Result<Self> {
        Self::new(self.k, self.v, c0, self.data.clone())
    }

    pub fn cast<U: Scalar>(&self) -> Result<TopicMatrix<U>> {
        let data: Vec<U> = self.data.iter().map(|&x| U::lit(x.as_f64())).collect();
        TopicMatrix::new(self.k, self.v, U::lit(self.c0.as_f64()), renormalize(data, self.v))
    }

    /// Frobenius distance between entry arrays (no relabeling).
    pub fn frobenius_distance(&self, other: &Self) -> Result<T> {
        self.same_shape(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(&a, &b)| (a - b) * (a - b)).sum::<T>().sqrt())
    }

    pub(crate) fn same_shape(&self, other: &Self) -> Result<()> {
        if self.k != other.k || self.v != other.v {
            return Err(Error::DimensionMismatch(format!(
                "topic matrices are {}x{} and {}x{}",
                self.k, self.v, other.k, other.v
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_floor<T: Scalar>(c0: T, v: usize) -> Result<()> {
    if !(c0 > T::zero()) || !(c0 * T::lit(v as f64) < T::one()) {
        return Err(Error::InfeasibleFloor { c0: c0.as_f64(), v });
    }
    Ok(())
}

/// Rescales each row to sum to one; absorbs rounding after a precision cast.
fn renormalize<U: Scalar>(mut data: Vec<U>, v: usize) -> Vec<U> {
    for row in data.chunks_mut(v) {
        let total: U = row.iter().copied().sum();
        row.iter_mut().for_each(|x| *x /= total);
    }
    data
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(TopicMatrix::new(2, 2, 0.1, vec![0.6, 0.4, 0.3, 0.7]).is_ok());
        assert!(matches!(TopicMatrix::new(2, 2, 0.1, vec![0.6, 0.5, 0.3, 0.7]), Err(Error::InvalidTopics(_))));
        assert!(matches!(TopicMatrix::new(2, 2, 0.35, vec![0.6, 0.4, 0.3, 0.7]), Err(Error::InvalidTopics(_))));
        assert!(matches!(TopicMatrix::new(1, 2, 0.5, vec![0.5, 0.5]), Err(Error::InfeasibleFloor { .. })));
        assert!(matches!(TopicMatrix::new(1, 2, 0.0, vec![0.5, 0.5]), Err(Error::InfeasibleFloor { .. })));
    }

    #[test]
    fn columns_and_permutation() {
        let t = TopicMatrix::new(2, 3, 0.01, vec![0.2, 0.3, 0.5, 0.6, 0.3, 0.1]).unwrap();
        assert_eq!(t.word_column(2), &[0.5, 0.1]);
        let p = t.permute_rows(&[1, 0]).unwrap();
        assert_eq!(p.row(0), t.row(1));
        assert_eq!(p.word_column(0), &[0.6, 0.2]);
        assert!(t.permute_rows(&[0, 0]).is_err());
    }

    #[test]
    fn cast_to_single_precision() {
        let t = TopicMatrix::new(1, 3, 0.01, vec![0.1, 0.2, 0.7]).unwrap();
        let s: TopicMatrix<f32> = t.cast().unwrap();
        assert!((s.get(0, 2) - 0.7).abs() < 1e-6);
    }
}
