use itertools::Itertools;

use crate::error::{Error, Result};
use crate::mixing::MixingDistribution;
use crate::model::likelihood::enumerate_distribution;
use crate::model::TopicMatrix;
use crate::scalar::Scalar;

/// Largest K for which the label matching is solved by enumerating
/// permutations.
pub const BRUTE_FORCE_MAX_K: usize = 8;

/// `(1/2) sum_x |p(x) - q(x)|`.
pub fn tv_from_distributions<T: Scalar>(p: &[T], q: &[T]) -> T {
    p.iter().zip(q).map(|(&a, &b)| (a - b).abs()).sum::<T>() * T::lit(0.5)
}

/// `sum_x p log(p / q)`, accumulated as the nonnegative terms
/// `p log(p/q) - p + q` to avoid cancellation when `q` is close to `p`.
pub fn kl_from_distributions<T: Scalar>(p: &[T], q: &[T]) -> T {
    p.iter()
        .zip(q)
        .map(|(&a, &b)| {
            let d = b - a;
            d - a * (d / a).ln_1p()
        })
        .sum()
}

/// Total variation between the m-word document distributions.
pub fn tv_distance<T: Scalar>(
    theta: &TopicMatrix<T>,
    theta2: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    m: usize,
) -> Result<T> {
    theta.same_shape(theta2)?;
    let p = enumerate_distribution(theta, nu, m)?;
    let q = enumerate_distribution(theta2, nu, m)?;
    Ok(tv_from_distributions(&p, &q))
}

/// `KL(p_theta || p_theta2)` between the m-word document distributions.
pub fn kl_divergence<T: Scalar>(
    theta: &TopicMatrix<T>,
    theta2: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
    m: usize,
) -> Result<T> {
    theta.same_shape(theta2)?;
    let p = enumerate_distribution(theta, nu, m)?;
    let q = enumerate_distribution(theta2, nu, m)?;
    Ok(kl_from_distributions(&p, &q))
}

/// `min_pi sum_k ||theta_k - theta2_pi(k)||_1` over label permutations.
pub fn wasserstein<T: Scalar>(theta: &TopicMatrix<T>, theta2: &TopicMatrix<T>) -> Result<T> {
    theta.same_shape(theta2)?;
    let k = theta.k();
    let cost: Vec<T> = (0..k)
        .flat_map(|a| {
            (0..k).map(move |b| theta.row(a).iter().zip(theta2.row(b)).map(|(&x, &y)| (x - y).abs()).sum::<T>())
        })
        .collect();
    Ok(min_assignment(&cost, k))
}

/// Minimum-cost perfect matching on a `k x k` cost matrix (row-major).
pub fn min_assignment<T: Scalar>(cost: &[T], k: usize) -> T {
    if k <= BRUTE_FORCE_MAX_K {
        (0..k)
            .permutations(k)
            .map(|perm| perm.iter().enumerate().map(|(a, &b)| cost[a * k + b]).sum::<T>())
            .fold(T::infinity(), T::min)
    } else {
        let assignment = hungarian(cost, k);
        assignment.iter().enumerate().map(|(a, &b)| cost[a * k + b]).sum()
    }
}

/// Shortest-augmenting-path Hungarian method with potentials, O(k^3).
/// Returns the column assigned to each row.
pub fn hungarian<T: Scalar>(cost: &[T], k: usize) -> Vec<usize> {
    // 1-based arrays with a sentinel column 0, as in the classic formulation
    let inf = T::infinity();
    let mut u = vec![T::zero(); k + 1];
    let mut v = vec![T::zero(); k + 1];
    let mut owner = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for row in 1..=k {
        owner[0] = row;
        let mut col0 = 0;
        let mut minv = vec![inf; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[col0] = true;
            let r0 = owner[col0];
            let mut delta = inf;
            let mut col1 = 0;
            for col in 1..=k {
                if used[col] {
                    continue;
                }
                let cur = cost[(r0 - 1) * k + (col - 1)] - u[r0] - v[col];
                if cur < minv[col] {
                    minv[col] = cur;
                    way[col] = col0;
                }
                if minv[col] < delta {
                    delta = minv[col];
                    col1 = col;
                }
            }
            for col in 0..=k {
                if used[col] {
                    u[owner[col]] += delta;
                    v[col] -= delta;
                } else {
                    minv[col] -= delta;
                }
            }
            col0 = col1;
            if owner[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            owner[col0] = owner[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; k];
    for col in 1..=k {
        if owner[col] > 0 {
            assignment[owner[col] - 1] = col - 1;
        }
    }
    assignment
}

/// Smallest Wasserstein distance from `estimate` to any member of `set`.
pub fn wasserstein_to_set<T: Scalar>(estimate: &TopicMatrix<T>, set: &[TopicMatrix<T>]) -> Result<T> {
    if set.is_empty() {
        return Err(Error::InvalidParameter("empty reference set".into()));
    }
    let mut best = T::infinity();
    for t in set {
        best = best.min(wasserstein(estimate, t)?);
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn wasserstein_example() {
        let a = TopicMatrix::new(2, 2, 0.1f64, vec![0.6, 0.4, 0.3, 0.7]).unwrap();
        let b = TopicMatrix::new(2, 2, 0.1f64, vec![0.5, 0.5, 0.3, 0.7]).unwrap();
        assert!((wasserstein(&a, &b).unwrap() - 0.2).abs() < 1e-15);
        assert_eq!(wasserstein(&a, &a.permute_rows(&[1, 0]).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn hungarian_matches_brute_force() {
        let mut r = rng::stream(21, &[]);
        for k in 1..=7 {
            for _ in 0..20 {
                let cost: Vec<f64> = (0..k * k).map(|_| r.random::<f64>()).collect();
                let brute = min_assignment(&cost, k);
                let a = hungarian(&cost, k);
                let h: f64 = a.iter().enumerate().map(|(i, &j)| cost[i * k + j]).sum();
                assert!((brute - h).abs() < 1e-12, "k={k}: {brute} vs {h}");
            }
        }
    }

    #[test]
    fn kl_and_tv_of_identical_are_zero() {
        let p = [0.2f64, 0.3, 0.5];
        assert_eq!(tv_from_distributions(&p, &p), 0.0);
        assert_eq!(kl_from_distributions(&p, &p), 0.0);
        let q = [0.25, 0.25, 0.5];
        let naive: f64 = p.iter().zip(&q).map(|(a, b)| a * (a / b).ln()).sum();
        assert!((kl_from_distributions(&p, &q) - naive).abs() < 1e-15);
    }
}
