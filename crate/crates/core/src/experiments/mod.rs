//! Monte Carlo experiments: estimation-rate curves, two-point tests,
//! empirical KL concentration and checks of the distance inequalities.
//! Every replicate draws from its own RNG stream, so results do not depend
//! on the number of worker threads.

mod bounds;
mod kl;
mod rates;
mod two_point;

pub use bounds::{
    bound_suite, bound_suite_with_scale, evaluate_pair, random_neighbour, BoundCheck, BoundReport, PairEvaluation,
    CHECK_NAMES,
};
pub use kl::{empirical_kl, empirical_kl_replicates, kl_concentration, KlConcentration};
pub use rates::{fit_line, median, rate_experiment, RateCurve, MIN_GRID_POINTS, MIN_REPLICATES};
pub use two_point::{least_identifiable_direction, two_point_test, Separation, TwoPointResult};

use crate::error::{Error, Result};
use crate::mixing::MixingDistribution;
use crate::model::{enumerate_distribution, TopicMatrix};

pub(crate) fn require_multiword(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidParameter(format!(
            "m={m}: topics are not finitely identifiable from single-word documents, need m >= 2"
        )));
    }
    Ok(())
}

/// `log p(x)` over `[V]^m` in lexicographic order, floored at `c0^m`.
pub(crate) fn log_table(theta: &TopicMatrix<f64>, nu: &MixingDistribution<f64>, m: usize) -> Result<Vec<f64>> {
    let floor = theta.c0().powi(m as i32);
    Ok(enumerate_distribution(theta, nu, m)?.into_iter().map(|p| p.max(floor).ln()).collect())
}
