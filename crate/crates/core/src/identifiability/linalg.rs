//! Dense spectral summaries and Hager's 1-norm condition estimator.

use nalgebra::{DMatrix, DVector, RealField};
use num_traits::Float;

use crate::scalar::Scalar;

/// Scalars usable with nalgebra's factorizations.
pub trait LinalgScalar: Scalar + RealField {}

impl<T: Scalar + RealField> LinalgScalar for T {}

/// Iteration cap of the Hager estimator.
pub const HAGER_MAX_ITERATIONS: usize = 5;

/// Triangular factor of a thin QR; has the singular values of `a` and
/// satisfies `R^T R = A^T A` without forming the Gram product of `a`.
pub fn qr_factor<T: LinalgScalar>(a: &DMatrix<T>) -> DMatrix<T> {
    if a.nrows() >= a.ncols() {
        a.clone().qr().r()
    } else {
        a.clone()
    }
}

/// Singular values in descending order.
pub fn singular_values<T: LinalgScalar>(a: &DMatrix<T>) -> Vec<T> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let r = qr_factor(a);
    let mut s: Vec<T> = r.svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// `(sigma_min, sigma_max)` where `sigma_min` is the `cols`-th singular value
/// of a tall matrix (zero if the matrix has fewer rows than columns).
pub fn smallest_singular_value<T: LinalgScalar>(a: &DMatrix<T>) -> (T, T) {
    let s = singular_values(a);
    let max = s.first().copied().unwrap_or_else(T::zero);
    let min = if a.nrows() < a.ncols() { T::zero() } else { s.last().copied().unwrap_or_else(T::zero) };
    (min, max)
}

/// Right singular vector of the smallest singular value.
pub fn null_vector<T: LinalgScalar>(a: &DMatrix<T>) -> DVector<T> {
    let svd = qr_factor(a).svd(false, true);
    let vt = svd.v_t.expect("right singular vectors requested");
    let idx = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|x, y| x.1.partial_cmp(y.1).unwrap_or(std::cmp::Ordering::Equal))
        .map(|(i, _)| i)
        .unwrap_or(0);
    vt.row(idx).transpose()
}

/// `max_j sum_i |b_ij|`.
pub fn one_norm<T: LinalgScalar>(b: &DMatrix<T>) -> T {
    b.column_iter().map(|c| c.iter().fold(T::zero(), |acc, &x| acc + Float::abs(x))).fold(T::zero(), Float::max)
}

/// Hager's estimate of `||B||_1 ||B^{-1}||_1` (the LAPACK `xLACON`
/// iteration plus Higham's alternating-sign test vector). Every candidate is
/// `||B^{-1} x||_1 / ||x||_1` for an explicit `x`, so the result never
/// exceeds the true condition number. Singular `B` gives `+inf`.
pub fn condition_estimate_hager<T: LinalgScalar>(b: &DMatrix<T>) -> T {
    assert!(b.is_square(), "condition estimate needs a square matrix");
    let n = b.nrows();
    if n == 0 {
        return T::one();
    }
    let lu = b.clone().lu();
    let lu_t = b.transpose().lu();
    if !lu.is_invertible() {
        return T::infinity();
    }
    let solve = |x: &DVector<T>| lu.solve(x);
    let solve_t = |x: &DVector<T>| lu_t.solve(x);
    let l1 = |x: &DVector<T>| x.iter().fold(T::zero(), |acc, &v| acc + Float::abs(v));
    let sign = |x: &DVector<T>| x.map(|v| if v >= T::zero() { T::one() } else { -T::one() });

    let inv_norm = (|| {
        let nt = T::lit(n as f64);
        let x = DVector::from_element(n, T::one() / nt);
        let y = solve(&x)?;
        let mut est = l1(&y);
        if n == 1 {
            return Some(est);
        }
        let mut xi = sign(&y);
        let mut z = solve_t(&xi)?;
        let mut j = z.iamax();
        for _ in 1..HAGER_MAX_ITERATIONS {
            let mut e = DVector::zeros(n);
            e[j] = T::one();
            let y = solve(&e)?;
            let est_new = l1(&y);
            let xi_new = sign(&y);
            if xi_new == xi || est_new <= est {
                est = Float::max(est, est_new);
                break;
            }
            est = est_new;
            xi = xi_new;
            z = solve_t(&xi)?;
            let j_new = z.iamax();
            if Float::abs(z[j_new]) <= Float::abs(z[j]) || j_new == j {
                break;
            }
            j = j_new;
        }
        let alt = DVector::from_fn(n, |i, _| {
            let mag = T::one() + T::lit(i as f64) / T::lit((n - 1) as f64);
            if i % 2 == 0 {
                mag
            } else {
                -mag
            }
        });
        let y = solve(&alt)?;
        let alt_est = l1(&y) / l1(&alt);
        Some(Float::max(est, alt_est))
    })();

    match inv_norm {
        Some(v) if Float::is_finite(v) => one_norm(b) * v,
        _ => T::infinity(),
    }
}

/// `||B||_1 ||B^{-1}||_1` from the explicit inverse.
pub fn condition_exact<T: LinalgScalar>(b: &DMatrix<T>) -> T {
    match b.clone().try_inverse() {
        Some(inv) => one_norm(b) * one_norm(&inv),
        None => T::infinity(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng;

    #[test]
    fn identity_and_diagonal() {
        let id = DMatrix::<f64>::identity(5, 5);
        assert_eq!(condition_estimate_hager(&id), 1.0);
        assert_eq!(smallest_singular_value(&id), (1.0, 1.0));
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 10.0]));
        assert!((condition_estimate_hager(&d) - 10.0).abs() < 1e-12);
    }

    #[test]
    fn duplicated_column_is_singular() {
        let mut r = rng::stream(1, &[]);
        let mut a = DMatrix::<f64>::from_fn(12, 4, |_, _| r.random::<f64>());
        let c = a.column(0).clone_owned();
        a.set_column(3, &c);
        let (min, max) = smallest_singular_value(&a);
        assert!(min <= 1e-12 * max);
        let nv = null_vector(&a);
        assert!((&a * nv).norm() < 1e-12);
    }

    #[test]
    fn singular_square_gives_infinity() {
        let b = DMatrix::<f64>::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(condition_estimate_hager(&b).is_infinite());
    }

    #[test]
    fn hager_is_a_tight_lower_bound() {
        let mut r = rng::stream(2, &[]);
        for _ in 0..20 {
            let b = DMatrix::<f64>::from_fn(20, 20, |i, j| r.random::<f64>() + if i == j { 5.0 } else { 0.0 });
            let est = condition_estimate_hager(&b);
            let exact = condition_exact(&b);
            assert!(est <= exact * (1.0 + 1e-10));
            assert!(est * 3.0 >= exact);
        }
    }

    #[test]
    fn single_precision_spectrum() {
        let a = DMatrix::<f32>::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, 0.0, 0.0]);
        let (min, max) = smallest_singular_value(&a);
        assert!((min - 1.0).abs() < 1e-6 && (max - 2.0).abs() < 1e-6);
    }
}
