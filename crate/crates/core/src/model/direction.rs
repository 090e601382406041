use rand::Rng;

use crate::error::{Error, Result};
use crate::model::TopicMatrix;
use crate::scalar::Scalar;

/// A K x V perturbation with zero row sums, so that `theta + delta` keeps
/// every row on the simplex's affine hull.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationDirection<T> {
    k: usize,
    v: usize,
    data: Vec<T>,
}

impl<T: Scalar> PerturbationDirection<T> {
    pub fn new(k: usize, v: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != k * v {
            return Err(Error::DimensionMismatch(format!("{} entries for K={k} V={v}", data.len())));
        }
        let tol = T::unit_tolerance();
        for (j, row) in data.chunks(v).enumerate() {
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidDirection(format!("row {j} has a non-finite entry")));
            }
            let total: T = row.iter().copied().sum();
            let mass: T = row.iter().map(|x| x.abs()).sum();
            if total.abs() > tol * T::one().max(mass) {
                return Err(Error::InvalidDirection(format!("row {j} sums to {total}, expected 0")));
            }
        }
        Ok(PerturbationDirection { k, v, data })
    }

    pub fn zero(k: usize, v: usize) -> Self {
        PerturbationDirection { k, v, data: vec![T::zero(); k * v] }
    }

    /// `theta2 - theta`.
    pub fn between(theta: &TopicMatrix<T>, theta2: &TopicMatrix<T>) -> Result<Self> {
        theta.same_shape(theta2)?;
        let data = theta2.as_slice().iter().zip(theta.as_slice()).map(|(&b, &a)| b - a).collect();
        Self::new(theta.k(), theta.v(), data)
    }

    /// Gaussian entries with each row centered, scaled to unit l1 mass.
    pub fn random<R: Rng + ?Sized>(k: usize, v: usize, rng: &mut R) -> Result<Self> {
        let mut data: Vec<T> = Vec::with_capacity(k * v);
        for _ in 0..k * v {
            data.push(T::lit(rng.sample::<f64, _>(rand_distr::StandardNormal)));
        }
        for row in data.chunks_mut(v) {
            let mean = row.iter().copied().sum::<T>() / T::lit(v as f64);
            row.iter_mut().for_each(|x| *x -= mean);
        }
        Self::new(k, v, data)?.normalized()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn v(&self) -> usize {
        self.v
    }

    pub fn get(&self, topic: usize, word: usize) -> T {
        self.data[topic * self.v + word]
    }

    pub fn row(&self, topic: usize) -> &[T] {
        &self.data[topic * self.v..(topic + 1) * self.v]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// `(delta_1(w), ..., delta_K(w))`.
    pub fn word_column(&self, word: usize) -> Vec<T> {
        (0..self.k).map(|j| self.data[j * self.v + word]).collect()
    }

    pub fn l1_norm(&self) -> T {
        self.data.iter().map(|x| x.abs()).sum()
    }

    pub fn l2_norm(&self) -> T {
        self.data.iter().map(|&x| x * x).sum::<T>().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.l1_norm() - T::one()).abs() <= T::unit_tolerance()
    }

    /// Scaled to `sum |delta| = 1`.
    pub fn normalized(&self) -> Result<Self> {
        let mass = self.l1_norm();
        if mass == T::zero() {
            return Err(Error::VanishingDirection("cannot normalize the zero direction".into()));
        }
        Ok(self.scaled(T::one() / mass))
    }

    pub fn scaled(&self, s: T) -> Self {
        PerturbationDirection { k: self.k, v: self.v, data: self.data.iter().map(|&x| x * s).collect() }
    }

    /// `theta + t * delta` as a topic matrix, failing if it leaves the
    /// floored simplex.
    pub fn apply(&self, theta: &TopicMatrix<T>, t: T) -> Result<TopicMatrix<T>> {
        if theta.k() != self.k || theta.v() != self.v {
            return Err(Error::DimensionMismatch("direction and topic matrix differ in shape".into()));
        }
        let data: Vec<T> = theta.as_slice().iter().zip(&self.data).map(|(&a, &d)| a + t * d).collect();
        TopicMatrix::new(self.k, self.v, theta.c0(), data)
            .map_err(|e| Error::InfeasiblePerturbation(format!("theta + {t} * delta: {e}")))
    }

    /// Rows of `theta + delta` without feasibility checks.
    pub fn add_to_raw(&self, theta: &TopicMatrix<T>) -> Vec<T> {
        theta.as_slice().iter().zip(&self.data).map(|(&a, &d)| a + d).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn rejects_nonzero_row_sums() {
        assert!(PerturbationDirection::new(1, 2, vec![0.5, -0.4]).is_err());
        assert!(PerturbationDirection::new(1, 2, vec![0.5, -0.5]).is_ok());
    }

    #[test]
    fn random_is_unit_and_centered() {
        let mut r = rng::stream(1, &[]);
        let d = PerturbationDirection::<f64>::random(3, 4, &mut r).unwrap();
        assert!(d.is_normalized());
        for j in 0..3 {
            assert!(d.row(j).iter().sum::<f64>().abs() < 1e-15);
        }
    }

    #[test]
    fn apply_checks_feasibility() {
        let theta = TopicMatrix::new(1, 2, 0.1, vec![0.5, 0.5]).unwrap();
        let d = PerturbationDirection::new(1, 2, vec![0.5, -0.5]).unwrap();
        assert!(d.apply(&theta, 0.5).is_ok());
        assert!(matches!(d.apply(&theta, 0.9), Err(Error::InfeasiblePerturbation(_))));
        assert!(matches!(PerturbationDirection::<f64>::zero(1, 2).normalized(), Err(Error::VanishingDirection(_))));
    }
}
