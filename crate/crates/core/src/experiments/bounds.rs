use rand::Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::experiments::require_multiword;
use crate::identifiability::classify_order;
use crate::mixing::MixingDistribution;
use crate::mle::project_row;
use crate::model::distance::{kl_from_distributions, tv_from_distributions};
use crate::model::{enumerate_distribution, wasserstein, PerturbationDirection, TopicMatrix};
use crate::rng;

/// Relative slack for rounding when comparing a quantity against its bound.
const ROUNDING_SLACK: f64 = 1e-9;

/// Exact distances for one pair `(theta, theta2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairEvaluation {
    pub tv: f64,
    pub kl: f64,
    /// Wasserstein distance `eps`.
    pub eps: f64,
    /// Frobenius distance.
    pub l2: f64,
    /// `(lhs, bound)` per check, in [`BoundReport::checks`] order; `None`
    /// when the check does not apply (`eps >= 1/2`).
    pub sides: [Option<(f64, f64)>; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundCheck {
    pub name: &'static str,
    pub checked: usize,
    pub violations: usize,
    /// Smallest `bound - lhs` over the checked pairs.
    pub worst_margin: f64,
    /// Largest `lhs / bound` (0 when both vanish).
    pub worst_ratio: f64,
}

impl BoundCheck {
    pub fn passes(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub v: usize,
    pub k: usize,
    pub m: usize,
    pub p_order: usize,
    pub trials: usize,
    pub upper_scale: f64,
    /// `tv_upper`, `tv_continuity`, `pinsker_lower`, `reverse_pinsker_upper`.
    pub checks: Vec<BoundCheck>,
    /// Range of `TV / eps^p` over pairs with `eps > 0`.
    pub tv_over_eps_p_min: f64,
    pub tv_over_eps_p_max: f64,
    /// Per-trial evaluations in trial order.
    pub pairs: Vec<PairEvaluation>,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(BoundCheck::passes)
    }

    pub fn check(&self, name: &str) -> Option<&BoundCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

pub const CHECK_NAMES: [&str; 4] = ["tv_upper", "tv_continuity", "pinsker_lower", "reverse_pinsker_upper"];

/// Evaluates the four inequalities on one pair with the upper-bound
/// constants multiplied by `upper_scale` (1 for the true constants):
/// `TV <= V^m eps^p / (1 - eps)` for `eps < 1/2`,
/// `TV <= (2V)^m ||theta2 - theta||_2`,
/// `2 TV^2 <= KL <= (1 / (2 c0^(2m)) + 1 / c0^m) TV^2`.
pub fn evaluate_pair(
    theta: &TopicMatrix<f64>,
    theta2: &TopicMatrix<f64>,
    nu: &MixingDistribution<f64>,
    m: usize,
    p_order: usize,
    upper_scale: f64,
) -> Result<PairEvaluation> {
    let p = enumerate_distribution(theta, nu, m)?;
    evaluate_against(theta, &p, theta2, nu, m, p_order, upper_scale)
}

fn evaluate_against(
    theta: &TopicMatrix<f64>,
    p: &[f64],
    theta2: &TopicMatrix<f64>,
    nu: &MixingDistribution<f64>,
    m: usize,
    p_order: usize,
    upper_scale: f64,
) -> Result<PairEvaluation> {
    let q = enumerate_distribution(theta2, nu, m)?;
    let tv = tv_from_distributions(p, &q);
    let kl = kl_from_distributions(p, &q);
    let eps = wasserstein(theta, theta2)?;
    let l2 = theta.frobenius_distance(theta2)?;
    let (v, c0, mi) = (theta.v() as f64, theta.c0(), m as i32);
    let tv_upper = (eps < 0.5).then(|| (tv, upper_scale * v.powi(mi) * eps.powi(p_order as i32) / (1.0 - eps)));
    let continuity = (tv, upper_scale * (2.0 * v).powi(mi) * l2);
    let pinsker = (2.0 * tv * tv, kl);
    let reverse = (kl, upper_scale * (0.5 / c0.powi(2 * mi) + 1.0 / c0.powi(mi)) * tv * tv);
    Ok(PairEvaluation { tv, kl, eps, l2, sides: [tv_upper, Some(continuity), Some(pinsker), Some(reverse)] })
}

fn violates(lhs: f64, bound: f64) -> bool {
    lhs > bound + ROUNDING_SLACK * bound.abs().max(lhs.abs())
}

fn ratio(lhs: f64, bound: f64) -> f64 {
    if lhs == 0.0 {
        0.0
    } else {
        lhs / bound
    }
}

/// Random feasible neighbours of `theta`: a random unit-l1 direction scaled
/// log-uniformly in `[1e-4, 1e-1]`, with each row projected back onto
/// `{x >= c0, sum x = 1}`. Trial `t` uses stream `(seed, t)`.
pub fn random_neighbour(theta: &TopicMatrix<f64>, seed: u64, trial: usize) -> Result<TopicMatrix<f64>> {
    let mut stream = rng::stream(seed, &[trial as u64]);
    let scale = 10f64.powf(stream.random_range(-4.0..-1.0));
    let delta = PerturbationDirection::<f64>::random(theta.k(), theta.v(), &mut stream)?.scaled(scale);
    let raw = delta.add_to_raw(theta);
    let mut data = Vec::with_capacity(raw.len());
    for row in raw.chunks(theta.v()) {
        data.extend(project_row(row, theta.c0())?);
    }
    TopicMatrix::new(theta.k(), theta.v(), theta.c0(), data)
}

pub fn bound_suite(
    theta: &TopicMatrix<f64>,
    nu: &MixingDistribution<f64>,
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<BoundReport> {
    bound_suite_with_scale(theta, nu, m, trials, seed, 1.0)
}

/// [`bound_suite`] with the three upper-bound constants multiplied by
/// `upper_scale`; a scale below the worst observed ratio must produce
/// violations.
pub fn bound_suite_with_scale(
    theta: &TopicMatrix<f64>,
    nu: &MixingDistribution<f64>,
    m: usize,
    trials: usize,
    seed: u64,
    upper_scale: f64,
) -> Result<BoundReport> {
    require_multiword(m)?;
    let p_order = classify_order(theta, nu, m)?.p_order;
    let p = enumerate_distribution(theta, nu, m)?;
    let pairs: Vec<PairEvaluation> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let theta2 = random_neighbour(theta, seed, t)?;
            evaluate_against(theta, &p, &theta2, nu, m, p_order, upper_scale)
        })
        .collect::<Result<_>>()?;
    let checks = CHECK_NAMES
        .iter()
        .enumerate()
        .map(|(i, &name)| {
            let mut check =
                BoundCheck { name, checked: 0, violations: 0, worst_margin: f64::INFINITY, worst_ratio: 0.0 };
            for (lhs, bound) in pairs.iter().filter_map(|e| e.sides[i]) {
                check.checked += 1;
                check.violations += usize::from(violates(lhs, bound));
                check.worst_margin = check.worst_margin.min(bound - lhs);
                check.worst_ratio = check.worst_ratio.max(ratio(lhs, bound));
            }
            check
        })
        .collect();
    let scaled: Vec<f64> = pairs.iter().filter(|e| e.eps > 0.0).map(|e| e.tv / e.eps.powi(p_order as i32)).collect();
    Ok(BoundReport {
        v: theta.v(),
        k: theta.k(),
        m,
        p_order,
        trials,
        upper_scale,
        checks,
        tv_over_eps_p_min: scaled.iter().copied().fold(f64::INFINITY, f64::min),
        tv_over_eps_p_max: scaled.iter().copied().fold(0.0, f64::max),
        pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_pair_is_tight_at_zero() {
        let theta = TopicMatrix::new(2, 3, 0.05, vec![0.5, 0.3, 0.2, 0.1, 0.2, 0.7]).unwrap();
        let nu = MixingDistribution::uniform_vertex(2).unwrap();
        let e = evaluate_pair(&theta, &theta, &nu, 2, 1, 1.0).unwrap();
        assert_eq!((e.tv, e.kl, e.eps, e.l2), (0.0, 0.0, 0.0, 0.0));
        for (lhs, bound) in e.sides.iter().flatten() {
            assert_eq!((*lhs, *bound), (0.0, 0.0));
            assert!(!violates(*lhs, *bound));
        }
    }

    #[test]
    fn neighbours_are_feasible_and_close() {
        let theta = TopicMatrix::new(2, 4, 0.05, vec![0.4, 0.3, 0.2, 0.1, 0.06, 0.14, 0.3, 0.5]).unwrap();
        for t in 0..50 {
            let other = random_neighbour(&theta, 9, t).unwrap();
            assert!(other.as_slice().iter().all(|&x| x >= 0.05 - 1e-15));
            assert!(wasserstein(&theta, &other).unwrap() <= 0.1 + 1e-12);
        }
    }
}
