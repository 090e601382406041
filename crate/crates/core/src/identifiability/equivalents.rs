use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mixing::MixingDistribution;
use crate::model::distance::tv_from_distributions;
use crate::model::{enumerate_distribution, TopicMatrix};
use crate::scalar::Scalar;

/// Largest vocabulary for which the `2^V` swap patterns are enumerated.
pub const MAX_EQUIVALENT_V: usize = 16;

/// Two-word total variation below which a candidate counts as equivalent.
pub const EQUIVALENCE_TV: f64 = 1e-10;

/// Parameters with K = 2 inducing the same two-word distribution as `theta`.
///
/// With two topics, the two-word distribution fixes the unordered pair
/// `{theta_1(x), theta_2(x)}` at every word `x`, so every candidate comes
/// from choosing, per word, which topic receives which value. Candidates are
/// kept when their rows are distributions above the floor and they match
/// `theta` in total variation; duplicates are dropped. `theta` itself comes
/// first.
pub fn enumerate_equivalents_k2<T: Scalar>(
    theta: &TopicMatrix<T>,
    nu: &MixingDistribution<T>,
) -> Result<Vec<TopicMatrix<T>>> {
    let (k, v) = (theta.k(), theta.v());
    if k != 2 {
        return Err(Error::InvalidParameter(format!("equivalent-set enumeration needs K=2, got K={k}")));
    }
    if v > MAX_EQUIVALENT_V {
        return Err(Error::TooLarge { what: "swap patterns 2^V", size: 2f64.powi(v as i32), limit: 2f64.powi(16) });
    }
    let reference = enumerate_distribution(theta, nu, 2)?;
    let tol = T::unit_tolerance() * T::lit(v as f64);
    let candidates: Vec<Option<TopicMatrix<T>>> = (0..1usize << v)
        .into_par_iter()
        .map(|mask| {
            let mut data = theta.as_slice().to_vec();
            for w in (0..v).filter(|w| mask >> w & 1 == 1) {
                data.swap(w, v + w);
            }
            let sums_ok = data.chunks(v).all(|row| (row.iter().copied().sum::<T>() - T::one()).abs() <= tol);
            if !sums_ok {
                return Ok(None);
            }
            let candidate = match TopicMatrix::new(k, v, theta.c0(), data) {
                Ok(c) => c,
                Err(_) => return Ok(None),
            };
            let dist = enumerate_distribution(&candidate, nu, 2)?;
            Ok((tv_from_distributions(&reference, &dist) <= T::lit(EQUIVALENCE_TV)).then_some(candidate))
        })
        .collect::<Result<_>>()?;
    let mut out: Vec<TopicMatrix<T>> = Vec::new();
    for c in candidates.into_iter().flatten() {
        if !out.iter().any(|o| o.as_slice() == c.as_slice()) {
            out.push(c);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::identifiability::{generate_theta, ThetaStructure};
    use crate::rng;

    #[test]
    fn generic_theta_gives_its_label_orbit() {
        let mut r = rng::stream(5, &[]);
        let theta = generate_theta(ThetaStructure::Independent, 6, 2, 1e-3, &mut r).unwrap();
        let nu = MixingDistribution::uniform_vertex(2).unwrap();
        let eq = enumerate_equivalents_k2(&theta, &nu).unwrap();
        assert_eq!(eq[0], theta);
        assert!(eq.contains(&theta.permute_rows(&[1, 0]).unwrap()));
        assert!(eq.len() <= 1 << 6);
    }

    #[test]
    fn equal_topics_collapse() {
        let theta = TopicMatrix::new(2, 3, 0.01, vec![0.2, 0.3, 0.5, 0.2, 0.3, 0.5]).unwrap();
        let nu = MixingDistribution::symmetric_dirichlet(2, 1.0).unwrap();
        assert_eq!(enumerate_equivalents_k2(&theta, &nu).unwrap().len(), 1);
    }

    #[test]
    fn guards() {
        let nu = MixingDistribution::uniform_vertex(2).unwrap();
        let big = TopicMatrix::uniform(2, 17, 0.001).unwrap();
        assert!(enumerate_equivalents_k2(&big, &nu).unwrap_err().is_guard());
        let nu3 = MixingDistribution::uniform_vertex(3).unwrap();
        assert!(enumerate_equivalents_k2(&TopicMatrix::uniform(3, 3, 0.01).unwrap(), &nu3).is_err());
    }
}
