use std::path::Path;

use serde_json::{Map, Value};

use super::config::ExperimentConfig;
use super::report::{emit_report, float, rate_summary_csv, Format, Report};
use super::write_json;
use crate::error::{Error, Result};
use crate::experiments::{
    bound_suite, least_identifiable_direction, rate_experiment, require_multiword, two_point_test, Separation,
};
use crate::identifiability::{classify_order, generate_theta, table1_suite, ThetaStructure, TABLE1_ALPHA, TABLE1_C0};
use crate::mixing::{MixingDistribution, DEFAULT_MAX_ORDER};
use crate::mle::{fit_mle, FitOptions};
use crate::model::io::{corpus_to_csv, read_corpus, read_topics, topics_to_csv, write_text};
use crate::model::{sample_corpus, TopicMatrix};
use crate::rng;

const DEFAULT_V: usize = 5;
const DEFAULT_K: usize = 2;
const DEFAULT_C0: f64 = 0.02;
const DEFAULT_ALPHA: f64 = 1.0;
const DEFAULT_THETA: &str = "independent";
/// Radius constant for the shrinking two-point alternative; calibrated so
/// the test error stays well above 0.2 on `n` from 1e2 to 1e4.
pub const DEFAULT_TWO_POINT_R: f64 = 1.0;

/// Sub-seeds: the generated topic matrix and the experiment draw from
/// separate streams.
const THETA_STREAM: u64 = 0;
const EXPERIMENT_STREAM: u64 = 1;

const MODEL_SETTINGS: [&str; 7] = ["seed", "V", "K", "m", "c0", "mixing", "alpha"];

fn allowed(extra: &[&'static str]) -> Vec<&'static str> {
    MODEL_SETTINGS.iter().chain(extra).copied().collect()
}

pub(super) fn dispatch(mut cfg: ExperimentConfig, out: &Path) -> Result<ExperimentConfig> {
    match cfg.command.clone().as_deref() {
        Some("identify") => identify(&mut cfg, out)?,
        Some("table1") => table1(&mut cfg, out)?,
        Some("rates") => rates(&mut cfg, out)?,
        Some("two-point") => two_point(&mut cfg, out)?,
        Some("bounds") => bounds(&mut cfg, out)?,
        Some("mle") => mle(&mut cfg, out)?,
        Some("simulate") => simulate(&mut cfg, out)?,
        other => return Err(Error::InvalidParameter(format!("unknown command {other:?}"))),
    }
    Ok(cfg)
}

fn experiment_seed(seed: u64) -> u64 {
    rng::child_seed(seed, &[EXPERIMENT_STREAM])
}

fn resolve_m(cfg: &mut ExperimentConfig, default: usize) -> Result<usize> {
    let m = *cfg.m.get_or_insert(default);
    require_multiword(m)?;
    Ok(m)
}

/// Reads the topic matrix from a CSV file or draws it from a generator
/// label, filling V, K and c0 into the config.
fn resolve_theta(cfg: &mut ExperimentConfig, default_c0: f64) -> Result<TopicMatrix<f64>> {
    let source = cfg.theta.get_or_insert_with(|| DEFAULT_THETA.to_string()).clone();
    if let Some(structure) = ThetaStructure::parse(&source) {
        let seed = cfg.require_seed()?;
        let v = *cfg.v.get_or_insert(DEFAULT_V);
        let k = *cfg.k.get_or_insert(DEFAULT_K.max(structure.min_k()));
        let c0 = *cfg.c0.get_or_insert(default_c0);
        return generate_theta(structure, v, k, c0, &mut rng::stream(seed, &[THETA_STREAM]));
    }
    let theta = read_topics(Path::new(&source))?;
    let mismatch = |name: &str, given: String, found: String| {
        Err(Error::InvalidParameter(format!("{name}={given} disagrees with {name}={found} in {source}")))
    };
    match (cfg.v, cfg.k, cfg.c0) {
        (Some(v), _, _) if v != theta.v() => return mismatch("V", v.to_string(), theta.v().to_string()),
        (_, Some(k), _) if k != theta.k() => return mismatch("K", k.to_string(), theta.k().to_string()),
        (_, _, Some(c0)) if c0 != theta.c0() => return mismatch("c0", c0.to_string(), theta.c0().to_string()),
        _ => {}
    }
    cfg.v = Some(theta.v());
    cfg.k = Some(theta.k());
    cfg.c0 = Some(theta.c0());
    Ok(theta)
}

fn resolve_mixing(cfg: &mut ExperimentConfig, k: usize, m: usize) -> Result<MixingDistribution<f64>> {
    let order = m.max(DEFAULT_MAX_ORDER);
    match cfg.mixing.get_or_insert_with(|| "dirichlet".into()).as_str() {
        "dirichlet" => {
            let alpha = *cfg.alpha.get_or_insert(DEFAULT_ALPHA);
            MixingDistribution::symmetric_dirichlet_with_order(k, alpha, order)
        }
        "vertex" => {
            if cfg.alpha.is_some() {
                return Err(Error::InvalidParameter("alpha applies only to --mixing dirichlet".into()));
            }
            MixingDistribution::uniform_vertex_with_order(k, order)
        }
        other => Err(Error::InvalidParameter(format!("unknown mixing `{other}`; use dirichlet or vertex"))),
    }
}

fn fit_options(cfg: &mut ExperimentConfig) -> Result<FitOptions> {
    let options =
        FitOptions { starts: *cfg.starts.get_or_insert(FitOptions::default().starts), ..FitOptions::default() };
    options.validate()?;
    Ok(options)
}

fn identify(cfg: &mut ExperimentConfig, out: &Path) -> Result<()> {
    cfg.restrict(&allowed(&["theta"]))?;
    let m = resolve_m(cfg, 3)?;
    let theta = resolve_theta(cfg, DEFAULT_C0)?;
    let nu = resolve_mixing(cfg, theta.k(), m)?;
    let report = classify_order(&theta, &nu, m)?;
    write_text(&out.join("theta.csv"), &topics_to_csv(&theta))?;
    emit_report(&report, Format::Json, &out.join("identify.json"))?;
    println!(
        "p_order={} sigma_min/sigma_max={:.3e} kappa1_est={:.3e}",
        report.p_order,
        report.sigma_min / report.sigma_max,
        report.kappa1_estimate
    );
    Ok(())
}

fn table1(cfg: &mut ExperimentConfig, out: &Path) -> Result<()> {
    cfg.restrict(&["seed"])?;
    let seed = cfg.require_seed()?;
    let entries = table1_suite(seed)?;
    emit_report(&entries, Format::Csv, &out.join("table1.csv"))?;
    let mut map = Map::new();
    map.insert("seed".into(), seed.into());
    map.insert("alpha".into(), float(TABLE1_ALPHA));
    map.insert("c0".into(), float(TABLE1_C0));
    map.insert("rows".into(), entries.to_json());
    write_json(&out.join("table1.json"), &Value::Object(map))?;
    for e in &entries {
        println!("{:<28} V={} K={} m={} p_order={}", e.row.label, e.row.v, e.row.k, e.row.m, e.report.p_order);
    }
    Ok(())
}

fn rates(cfg: &mut ExperimentConfig, out: &Path) -> Result<()> {
    cfg.restrict(&allowed(&["theta", "n_grid", "replicates", "starts", "plot_data"]))?;
    let m = resolve_m(cfg, 3)?;
    let seed = cfg.require_seed()?;
    let theta = resolve_theta(cfg, DEFAULT_C0)?;
    let nu = resolve_mixing(cfg, theta.k(), m)?;
    let n_grid = cfg.n_grid.get_or_insert_with(|| vec![500, 2000, 8000, 32000]).clone();
    let replicates = *cfg.replicates.get_or_insert(20);
    let options = fit_options(cfg)?;
    let label = cfg.theta.clone().unwrap_or_default();
    let curve = rate_experiment(&theta, &label, &nu, m, &n_grid, replicates, &options, experiment_seed(seed))?;
    write_text(&out.join("theta.csv"), &topics_to_csv(&theta))?;
    emit_report(&curve, Format::Csv, &out.join("rates.csv"))?;
    let mut summary = curve.to_json();
    if let Value::Object(map) = &mut summary {
        map.insert("config".into(), cfg.to_json());
    }
    write_json(&out.join("rates.json"), &summary)?;
    if cfg.plot_data == Some(true) {
        write_text(&out.join("rates_summary.csv"), &rate_summary_csv(&curve))?;
    }
    println!("slope={:.4} stderr={:.4}", curve.slope, curve.slope_stderr);
    Ok(())
}

fn two_point(cfg: &mut ExperimentConfig, out: &Path) -> Result<()> {
    cfg.restrict(&allowed(&["theta", "n_grid", "replicates", "distance", "r"]))?;
    let m = resolve_m(cfg, 3)?;
    let seed = cfg.require_seed()?;
    let theta = resolve_theta(cfg, DEFAULT_C0)?;
    let nu = resolve_mixing(cfg, theta.k(), m)?;
    let n_grid = cfg.n_grid.get_or_insert_with(|| vec![100, 1000, 10000]).clone();
    let replicates = *cfg.replicates.get_or_insert(1000);
    let (direction, p_order) = least_identifiable_direction(&theta, &nu, m)?;
    let separation = match (cfg.distance, cfg.r) {
        (Some(_), Some(_)) => return Err(Error::InvalidParameter("give either --distance or --r, not both".into())),
        (Some(d), None) => Separation::Fixed(d),
        (None, _) => Separation::Shrinking { r: *cfg.r.get_or_insert(DEFAULT_TWO_POINT_R), p_order },
    };
    let results = n_grid
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            two_point_test(
                &theta,
                &nu,
                m,
                &direction,
                separation,
                n,
                replicates,
                rng::child_seed(experiment_seed(seed), &[i as u64]),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    write_text(&out.join("theta.csv"), &topics_to_csv(&theta))?;
    emit_report(&results, Format::Csv, &out.join("two_point.csv"))?;
    let mut map = Map::new();
    map.insert("p_order".into(), p_order.into());
    let (kind, value) = match separation {
        Separation::Fixed(d) => ("fixed", d),
        Separation::Shrinking { r, .. } => ("shrinking", r),
    };
    map.insert("separation".into(), kind.into());
    map.insert(if kind == "fixed" { "distance" } else { "r" }.into(), float(value));
    map.insert("results".into(), results.to_json());
    write_json(&out.join("two_point.json"), &Value::Object(map))?;
    for r in &results {
        println!("n={} step={:.4e} error_rate={:.4}", r.n, r.step, r.error_rate);
    }
    Ok(())
}

fn bounds(cfg: &mut ExperimentConfig, out: &Path) -> Result<()> {
    cfg.restrict(&allowed(&["theta", "trials", "plot_data"]))?;
    let m = resolve_m(cfg, 2)?;
    let seed = cfg.require_seed()?;
    let theta = resolve_theta(cfg, 0.05)?;
    let nu = resolve_mixing(cfg, theta.k(), m)?;
    let trials = *cfg.trials.get_or_insert(500);
    let report = bound_suite(&theta, &nu, m, trials, experiment_seed(seed))?;
    write_text(&out.join("theta.csv"), &topics_to_csv(&theta))?;
    emit_report(&report, Format::Json, &out.join("bounds.json"))?;
    if cfg.plot_data == Some(true) {
        emit_report(&report, Format::Csv, &out.join("bounds_pairs.csv"))?;
    }
    for c in &report.checks {
        println!(
            "{:<22} {} violations={} worst_ratio={:.3e}",
            c.name,
            if c.passes() { "PASS" } else { "FAIL" },
            c.violations,
            c.worst_ratio
        );
    }
    Ok(())
}

fn mle(cfg: &mut ExperimentConfig, out: &Path) -> Result<()> {
    cfg.restrict(&["seed", "V", "K", "c0", "mixing", "alpha", "corpus", "starts", "plot_data"])?;
    let seed = cfg.require_seed()?;
    let path = cfg.corpus.clone().ok_or_else(|| Error::InvalidParameter("mle needs --corpus <csv>".into()))?;
    let v = cfg.v.ok_or_else(|| Error::InvalidParameter("mle needs --V, the vocabulary size".into()))?;
    let corpus = read_corpus(Path::new(&path), v)?;
    require_multiword(corpus.m())?;
    let k = *cfg.k.get_or_insert(DEFAULT_K);
    let c0 = *cfg.c0.get_or_insert(DEFAULT_C0);
    let nu = resolve_mixing(cfg, k, corpus.m())?;
    let options = FitOptions { seed: experiment_seed(seed), ..fit_options(cfg)? };
    let fit = fit_mle(&corpus, k, c0, &nu, &options)?;
    write_text(&out.join("theta_hat.csv"), &topics_to_csv(&fit.theta_hat))?;
    emit_report(&fit, Format::Json, &out.join("mle.json"))?;
    if cfg.plot_data == Some(true) {
        emit_report(&fit, Format::Csv, &out.join("trace.csv"))?;
    }
    println!("log_likelihood={:.6} iterations={} converged={}", fit.log_likelihood, fit.iterations, fit.converged);
    Ok(())
}

fn simulate(cfg: &mut ExperimentConfig, out: &Path) -> Result<()> {
    cfg.restrict(&allowed(&["theta", "n"]))?;
    let m = resolve_m(cfg, 3)?;
    let seed = cfg.require_seed()?;
    let theta = resolve_theta(cfg, DEFAULT_C0)?;
    let nu = resolve_mixing(cfg, theta.k(), m)?;
    let n = *cfg.n.get_or_insert(1000);
    let corpus = sample_corpus(&theta, &nu, m, n, &mut rng::stream(experiment_seed(seed), &[]))?;
    write_text(&out.join("theta.csv"), &topics_to_csv(&theta))?;
    write_text(&out.join("corpus.csv"), &corpus_to_csv(&corpus))?;
    println!("wrote {n} documents of {m} words");
    Ok(())
}
