//! Seven reference configurations spanning independent, duplicated and
//! linearly dependent topics, each classified with a freshly drawn theta.

use rand::Rng;

use crate::error::{Error, Result};
use crate::identifiability::{classify_order, IdentifiabilityReport};
use crate::mixing::MixingDistribution;
use crate::model::TopicMatrix;
use crate::rng;

/// Dirichlet concentration used for the reference table.
pub const TABLE1_ALPHA: f64 = 1.0;
/// Floor used when drawing reference parameters.
pub const TABLE1_C0: f64 = 1e-3;

const MAX_DRAWS: usize = 100_000;

/// How the topic rows of a generated parameter relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaStructure {
    /// Every row drawn independently.
    Independent,
    /// `theta_2 = theta_1`, remaining rows independent.
    Duplicate,
    /// `theta_3 = (theta_1 + theta_2) / 2`.
    Midpoint,
    /// `theta_3 = 0.8 theta_1 + 0.2 theta_2`.
    Convex82,
}

impl ThetaStructure {
    pub const ALL: [ThetaStructure; 4] =
        [ThetaStructure::Independent, ThetaStructure::Duplicate, ThetaStructure::Midpoint, ThetaStructure::Convex82];

    pub fn label(&self) -> &'static str {
        match self {
            ThetaStructure::Independent => "independent",
            ThetaStructure::Duplicate => "duplicate",
            ThetaStructure::Midpoint => "midpoint",
            ThetaStructure::Convex82 => "convex82",
        }
    }

    pub fn parse(label: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|s| s.label() == label)
    }

    pub fn min_k(&self) -> usize {
        match self {
            ThetaStructure::Independent => 1,
            ThetaStructure::Duplicate => 2,
            ThetaStructure::Midpoint | ThetaStructure::Convex82 => 3,
        }
    }
}

/// Rows with i.i.d. U[0,1] entries, l1-normalized, then `structure`
/// imposed; redrawn until every entry is at least `c0`.
pub fn generate_theta<R: Rng + ?Sized>(
    structure: ThetaStructure,
    v: usize,
    k: usize,
    c0: f64,
    rng: &mut R,
) -> Result<TopicMatrix<f64>> {
    if k < structure.min_k() {
        return Err(Error::InvalidParameter(format!(
            "structure `{}` needs K >= {}, got K={k}",
            structure.label(),
            structure.min_k()
        )));
    }
    crate::model::check_floor(c0, v)?;
    for _ in 0..MAX_DRAWS {
        let mut rows: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let row: Vec<f64> = (0..v).map(|_| rng.random::<f64>()).collect();
                let total: f64 = row.iter().sum();
                row.into_iter().map(|x| x / total).collect()
            })
            .collect();
        match structure {
            ThetaStructure::Independent => {}
            ThetaStructure::Duplicate => rows[1] = rows[0].clone(),
            ThetaStructure::Midpoint => rows[2] = combine(&rows[0], &rows[1], 0.5),
            ThetaStructure::Convex82 => rows[2] = combine(&rows[0], &rows[1], 0.8),
        }
        if rows.iter().flatten().all(|&x| x >= c0) {
            return TopicMatrix::from_rows(&rows, c0);
        }
    }
    Err(Error::InvalidParameter(format!("no draw with every entry above c0={c0} after {MAX_DRAWS} attempts")))
}

fn combine(a: &[f64], b: &[f64], wa: f64) -> Vec<f64> {
    let wb = 1.0 - wa;
    let mut row: Vec<f64> = a.iter().zip(b).map(|(x, y)| wa * x + wb * y).collect();
    let total: f64 = row.iter().sum();
    row.iter_mut().for_each(|x| *x /= total);
    row
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub label: &'static str,
    pub structure: ThetaStructure,
    pub v: usize,
    pub k: usize,
    pub m: usize,
    pub expected_p_order: usize,
}

pub const TABLE1_ROWS: [Table1Row; 7] = [
    Table1Row { label: "independent", structure: ThetaStructure::Independent, v: 10, k: 3, m: 3, expected_p_order: 1 },
    Table1Row { label: "independent", structure: ThetaStructure::Independent, v: 10, k: 3, m: 2, expected_p_order: 2 },
    Table1Row { label: "independent", structure: ThetaStructure::Independent, v: 10, k: 2, m: 2, expected_p_order: 1 },
    Table1Row { label: "theta1=theta2", structure: ThetaStructure::Duplicate, v: 10, k: 2, m: 3, expected_p_order: 2 },
    Table1Row {
        label: "theta1=theta2!=theta3",
        structure: ThetaStructure::Duplicate,
        v: 10,
        k: 3,
        m: 4,
        expected_p_order: 2,
    },
    Table1Row {
        label: "theta3=0.5theta1+0.5theta2",
        structure: ThetaStructure::Midpoint,
        v: 10,
        k: 3,
        m: 3,
        expected_p_order: 1,
    },
    Table1Row {
        label: "theta3=0.8theta1+0.2theta2",
        structure: ThetaStructure::Convex82,
        v: 10,
        k: 3,
        m: 3,
        expected_p_order: 1,
    },
];

#[derive(Debug, Clone)]
pub struct Table1Entry {
    pub row: Table1Row,
    pub theta: TopicMatrix<f64>,
    pub report: IdentifiabilityReport<f64>,
}

/// Regenerates and classifies every row; row `r` draws from stream
/// `(seed, r)`.
pub fn table1_suite(seed: u64) -> Result<Vec<Table1Entry>> {
    TABLE1_ROWS
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let mut rng = rng::stream(seed, &[r as u64]);
            let theta = generate_theta(row.structure, row.v, row.k, TABLE1_C0, &mut rng)?;
            let nu = MixingDistribution::symmetric_dirichlet(row.k, TABLE1_ALPHA)?;
            let report = classify_order(&theta, &nu, row.m)?;
            Ok(Table1Entry { row: *row, theta, report })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn structures_hold() {
        let mut r = rng::stream(1, &[]);
        let t = generate_theta(ThetaStructure::Duplicate, 5, 3, 1e-3, &mut r).unwrap();
        assert_eq!(t.row(0), t.row(1));
        let t = generate_theta(ThetaStructure::Midpoint, 5, 3, 1e-3, &mut r).unwrap();
        for w in 0..5 {
            assert!((t.get(2, w) - 0.5 * (t.get(0, w) + t.get(1, w))).abs() < 1e-15);
        }
        assert!(generate_theta(ThetaStructure::Convex82, 5, 2, 1e-3, &mut r).is_err());
    }

    #[test]
    fn labels_parse() {
        for s in ThetaStructure::ALL {
            assert_eq!(ThetaStructure::parse(s.label()), Some(s));
        }
        assert_eq!(ThetaStructure::parse("nope"), None);
    }
}
