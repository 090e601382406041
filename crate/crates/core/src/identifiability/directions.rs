use crate::error::{Error, Result};
use crate::model::{PerturbationDirection, TopicMatrix};
use crate::scalar::Scalar;

/// Opposite moves of two topics along `e_1 - e_2`:
/// `delta_j = (e_1 - e_2) / 4`, `delta_l = -delta_j`, other rows zero.
/// Cancels to first order whenever `theta_j = theta_l`. Indices are 0-based.
pub fn duplicate_topic_direction<T: Scalar>(
    k: usize,
    v: usize,
    j: usize,
    l: usize,
) -> Result<PerturbationDirection<T>> {
    if k < 2 || v < 2 {
        return Err(Error::InvalidParameter(format!("need K >= 2 and V >= 2, got K={k} V={v}")));
    }
    if j >= k || l >= k {
        return Err(Error::IndexOutOfRange { index: j.max(l), k });
    }
    if j == l {
        return Err(Error::InvalidParameter("the two topics must differ".into()));
    }
    let q = T::lit(0.25);
    let mut data = vec![T::zero(); k * v];
    data[j * v] = q;
    data[j * v + 1] = -q;
    data[l * v] = -q;
    data[l * v + 1] = q;
    PerturbationDirection::new(k, v, data)
}

/// Cyclic differences of the first three topics,
/// `delta_1 ~ theta_2 - theta_3`, `delta_2 ~ theta_3 - theta_1`,
/// `delta_3 ~ theta_1 - theta_2`, rescaled to unit l1 mass. Cancels to first
/// order at `m = 2`.
pub fn cyclic_difference_direction<T: Scalar>(theta: &TopicMatrix<T>) -> Result<PerturbationDirection<T>> {
    let (k, v) = (theta.k(), theta.v());
    if k < 3 {
        return Err(Error::InvalidParameter(format!("needs K >= 3, got K={k}")));
    }
    let sixth = T::one() / T::lit(6.0);
    let mut data = vec![T::zero(); k * v];
    for (t, (a, b)) in [(1usize, 2usize), (2, 0), (0, 1)].into_iter().enumerate() {
        let mut mass = T::zero();
        for w in 0..v {
            let d = (theta.get(a, w) - theta.get(b, w)) * sixth;
            data[t * v + w] = d;
            mass += d.abs();
        }
        if mass <= T::unit_tolerance() {
            return Err(Error::VanishingDirection(format!(
                "topics {} and {} coincide, so row {} of the direction is zero",
                a + 1,
                b + 1,
                t + 1
            )));
        }
    }
    PerturbationDirection::new(k, v, data)?.normalized()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_topic_small_case() {
        let d = duplicate_topic_direction::<f64>(2, 3, 0, 1).unwrap();
        assert_eq!(d.as_slice(), &[0.25, -0.25, 0.0, -0.25, 0.25, 0.0]);
        assert_eq!(d.l1_norm(), 1.0);
        assert!(duplicate_topic_direction::<f64>(2, 3, 0, 0).is_err());
        assert!(duplicate_topic_direction::<f64>(2, 3, 0, 2).is_err());
    }

    #[test]
    fn cyclic_rows_sum_to_zero() {
        let theta = TopicMatrix::new(3, 3, 0.01, vec![0.2, 0.3, 0.5, 0.6, 0.2, 0.2, 0.1, 0.1, 0.8]).unwrap();
        let d = cyclic_difference_direction(&theta).unwrap();
        assert!(d.is_normalized());
        for j in 0..3 {
            assert!(d.row(j).iter().sum::<f64>().abs() < 1e-15);
        }
    }

    #[test]
    fn cyclic_vanishes_on_equal_topics() {
        let theta = TopicMatrix::new(3, 2, 0.01, vec![0.2, 0.8, 0.5, 0.5, 0.5, 0.5]).unwrap();
        assert!(matches!(cyclic_difference_direction(&theta), Err(Error::VanishingDirection(_))));
    }
}
