//! Bit-stable JSON and CSV emission. Floats are written with 17 significant
//! digits in scientific notation; non-finite floats become the strings
//! `"inf"`, `"-inf"` and `"nan"`. Object keys keep insertion order.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Number, Value};

use crate::error::{Error, Result};
use crate::experiments::{BoundReport, RateCurve, TwoPointResult};
use crate::identifiability::{IdentifiabilityReport, Table1Entry};
use crate::mle::FitResult;
use crate::model::io::{fmt_f64, write_text};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

pub trait Report {
    fn to_json(&self) -> Value;
    fn to_csv(&self) -> String;
}

pub fn emit_report(result: &dyn Report, format: Format, path: &Path) -> Result<()> {
    let text = match format {
        Format::Csv => result.to_csv(),
        Format::Json => json_to_string(&result.to_json()),
    };
    write_text(path, &text)
}

/// A JSON float, or its string spelling when not finite.
pub fn float(x: f64) -> Value {
    Number::from_f64(x).map_or_else(|| Value::String(fmt_f64(x)), Value::Number)
}

fn float_of(value: &Value) -> Option<f64> {
    match value {
        Value::Number(n) => n.as_f64(),
        Value::String(s) => match s.as_str() {
            "inf" => Some(f64::INFINITY),
            "-inf" => Some(f64::NEG_INFINITY),
            "nan" => Some(f64::NAN),
            _ => None,
        },
        _ => None,
    }
}

/// Pretty-prints with two-space indentation and a trailing newline. Arrays
/// of scalars stay on one line.
pub fn json_to_string(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, 0, &mut out);
    out.push('\n');
    out
}

fn write_scalar(value: &Value, out: &mut String) {
    match value {
        Value::Number(n) if n.is_u64() || n.is_i64() => out.push_str(&n.to_string()),
        Value::Number(n) => out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN))),
        other => out.push_str(&other.to_string()),
    }
}

fn write_value(value: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent + 1);
    match value {
        Value::Array(items) if items.iter().all(|v| !v.is_array() && !v.is_object()) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(", ");
                }
                write_scalar(item, out);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (i, item) in items.iter().enumerate() {
                out.push_str(&pad);
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (i, (key, item)) in map.iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&Value::String(key.clone()).to_string());
                out.push_str(": ");
                write_value(item, indent + 1, out);
                out.push_str(if i + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
        scalar => write_scalar(scalar, out),
    }
}

pub fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("JSON: {e}")))
}

impl Report for IdentifiabilityReport<f64> {
    fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("m".into(), self.m.into());
        map.insert("V".into(), self.v.into());
        map.insert("K".into(), self.k.into());
        map.insert("sigma_min".into(), float(self.sigma_min));
        map.insert("sigma_max".into(), float(self.sigma_max));
        map.insert("kappa2".into(), float(self.kappa2));
        map.insert("kappa1_estimate".into(), float(self.kappa1_estimate));
        map.insert("rank_tolerance".into(), float(self.rank_tolerance));
        map.insert("full_column_rank".into(), self.full_column_rank.into());
        map.insert("p_order".into(), self.p_order.into());
        Value::Object(map)
    }

    fn to_csv(&self) -> String {
        format!(
            "m,V,K,sigma_min,sigma_max,kappa2,kappa1_estimate,rank_tolerance,full_column_rank,p_order\n{},{},{},{},{},{},{},{},{},{}\n",
            self.m,
            self.v,
            self.k,
            fmt_f64(self.sigma_min),
            fmt_f64(self.sigma_max),
            fmt_f64(self.kappa2),
            fmt_f64(self.kappa1_estimate),
            fmt_f64(self.rank_tolerance),
            self.full_column_rank,
            self.p_order
        )
    }
}

/// Inverse of the JSON form of [`IdentifiabilityReport`].
pub fn identifiability_report_from_json(value: &Value) -> Result<IdentifiabilityReport<f64>> {
    let field = |key: &str| value.get(key).ok_or_else(|| Error::Parse(format!("missing field `{key}`")));
    let uint = |key: &str| -> Result<usize> {
        field(key)?.as_u64().map(|x| x as usize).ok_or_else(|| Error::Parse(format!("`{key}` is not an integer")))
    };
    let real = |key: &str| -> Result<f64> {
        float_of(field(key)?).ok_or_else(|| Error::Parse(format!("`{key}` is not a number")))
    };
    Ok(IdentifiabilityReport {
        m: uint("m")?,
        v: uint("V")?,
        k: uint("K")?,
        sigma_min: real("sigma_min")?,
        sigma_max: real("sigma_max")?,
        kappa2: real("kappa2")?,
        kappa1_estimate: real("kappa1_estimate")?,
        rank_tolerance: real("rank_tolerance")?,
        full_column_rank: field("full_column_rank")?
            .as_bool()
            .ok_or_else(|| Error::Parse("`full_column_rank` is not a boolean".into()))?,
        p_order: uint("p_order")?,
    })
}

impl Report for RateCurve {
    fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("theta".into(), self.theta_label.clone().into());
        map.insert("n_grid".into(), self.n_grid.clone().into());
        map.insert("mean".into(), self.mean.iter().map(|&x| float(x)).collect());
        map.insert("median".into(), self.median.iter().map(|&x| float(x)).collect());
        map.insert("slope".into(), float(self.slope));
        map.insert("intercept".into(), float(self.intercept));
        map.insert("slope_stderr".into(), float(self.slope_stderr));
        Value::Object(map)
    }

    /// `n,replicate,error`, replicates numbered from 0.
    fn to_csv(&self) -> String {
        let mut out = String::from("n,replicate,error\n");
        for (n, errors) in self.n_grid.iter().zip(&self.errors) {
            for (r, &e) in errors.iter().enumerate() {
                let _ = writeln!(out, "{n},{r},{}", fmt_f64(e));
            }
        }
        out
    }
}

/// Per-n mean and median, for plotting.
pub fn rate_summary_csv(curve: &RateCurve) -> String {
    let mut out = String::from("n,mean,median\n");
    for ((n, mean), median) in curve.n_grid.iter().zip(&curve.mean).zip(&curve.median) {
        let _ = writeln!(out, "{n},{},{}", fmt_f64(*mean), fmt_f64(*median));
    }
    out
}

impl Report for Vec<TwoPointResult> {
    fn to_json(&self) -> Value {
        self.iter()
            .map(|r| {
                let mut map = Map::new();
                map.insert("n".into(), r.n.into());
                map.insert("step".into(), float(r.step));
                map.insert("distance".into(), float(r.distance));
                map.insert("replicates".into(), r.replicates.into());
                map.insert("type1".into(), float(r.type1));
                map.insert("type2".into(), float(r.type2));
                map.insert("error_rate".into(), float(r.error_rate));
                Value::Object(map)
            })
            .collect()
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("n,step,distance,replicates,type1,type2,error_rate\n");
        for r in self {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.n,
                fmt_f64(r.step),
                fmt_f64(r.distance),
                r.replicates,
                fmt_f64(r.type1),
                fmt_f64(r.type2),
                fmt_f64(r.error_rate)
            );
        }
        out
    }
}

impl Report for BoundReport {
    fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("V".into(), self.v.into());
        map.insert("K".into(), self.k.into());
        map.insert("m".into(), self.m.into());
        map.insert("p_order".into(), self.p_order.into());
        map.insert("trials".into(), self.trials.into());
        map.insert("all_pass".into(), self.all_pass().into());
        let checks = self
            .checks
            .iter()
            .map(|c| {
                let mut check = Map::new();
                check.insert("name".into(), c.name.into());
                check.insert("checked".into(), c.checked.into());
                check.insert("violations".into(), c.violations.into());
                check.insert("pass".into(), c.passes().into());
                check.insert("worst_margin".into(), float(c.worst_margin));
                check.insert("worst_ratio".into(), float(c.worst_ratio));
                Value::Object(check)
            })
            .collect();
        map.insert("checks".into(), checks);
        map.insert("tv_over_eps_p_min".into(), float(self.tv_over_eps_p_min));
        map.insert("tv_over_eps_p_max".into(), float(self.tv_over_eps_p_max));
        Value::Object(map)
    }

    /// One line per trial with the exact distances.
    fn to_csv(&self) -> String {
        let mut out = String::from("trial,eps,l2,tv,kl\n");
        for (t, e) in self.pairs.iter().enumerate() {
            let _ = writeln!(out, "{t},{},{},{},{}", fmt_f64(e.eps), fmt_f64(e.l2), fmt_f64(e.tv), fmt_f64(e.kl));
        }
        out
    }
}

impl Report for Vec<Table1Entry> {
    fn to_json(&self) -> Value {
        self.iter()
            .map(|e| {
                let mut map = Map::new();
                map.insert("label".into(), e.row.label.into());
                map.insert("structure".into(), e.row.structure.label().into());
                map.insert("expected_p_order".into(), e.row.expected_p_order.into());
                map.insert("sigma_ratio".into(), float(e.report.sigma_min / e.report.sigma_max));
                map.insert("report".into(), e.report.to_json());
                Value::Object(map)
            })
            .collect()
    }

    fn to_csv(&self) -> String {
        let mut out = String::from("label,V,K,m,kappa1_est,kappa2,sigma_min,sigma_max,p_order\n");
        for e in self {
            let r = &e.report;
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                e.row.label,
                r.v,
                r.k,
                r.m,
                fmt_f64(r.kappa1_estimate),
                fmt_f64(r.kappa2),
                fmt_f64(r.sigma_min),
                fmt_f64(r.sigma_max),
                r.p_order
            );
        }
        out
    }
}

impl Report for FitResult {
    fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("K".into(), self.theta_hat.k().into());
        map.insert("V".into(), self.theta_hat.v().into());
        map.insert("log_likelihood".into(), float(self.log_likelihood));
        map.insert("iterations".into(), self.iterations.into());
        map.insert("best_start".into(), self.best_start.into());
        map.insert("converged".into(), self.converged.into());
        map.insert("projected_gradient_norm".into(), float(self.projected_gradient_norm));
        Value::Object(map)
    }

    /// The log-likelihood trace of the winning start.
    fn to_csv(&self) -> String {
        let mut out = String::from("iteration,log_likelihood\n");
        for (i, &l) in self.trace.iter().enumerate() {
            let _ = writeln!(out, "{i},{}", fmt_f64(l));
        }
        out
    }
}
