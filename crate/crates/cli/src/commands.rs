//! The four subcommands. Each returns whether its checks passed; errors map
//! to the exit-code contract in [`CliError::exit_code`].

use std::fs;
use std::io;
use std::path::Path;

use rayon::prelude::*;
use serde_json::{json, Map, Value};
use thiserror::Error;

use hydrodeco::field::{
    energy_change, expected_energy_variance, parseval_check, sample_equilibrium_field,
};
use hydrodeco::influence::{decoherence_scan, scan_is_monotone};
use hydrodeco::langevin::{simulate_ensemble, ModeHistory, SimConfig};
use hydrodeco::medium::{equilibrium_mode_variance, free_energy_change, relaxation_rate};
use hydrodeco::noise::NoiseStream;
use hydrodeco::stats::{
    autocorrelation_pooled, fit_exponential_rate_with, rate_relative_stderr, sample_variance,
    series_variance,
};
use hydrodeco::MediumParams;

use crate::config::{ConfigError, RunConfig};
use crate::output::{num, summary, write_json, write_table, Cell};

/// Parseval and round-trip residual bound.
pub const TRANSFORM_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("internal consistency violation: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<hydrodeco::Error> for CliError {
    fn from(e: hydrodeco::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    StatisticalFailure,
}

impl Outcome {
    fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::StatisticalFailure
        }
    }
}

fn prepare_out(cfg: &RunConfig) -> Result<&Path, CliError> {
    fs::create_dir_all(&cfg.out)?;
    Ok(&cfg.out)
}

/// Lags needed to see the autocorrelation fall below `threshold`, with margin.
fn acf_lags(rate: f64, dt: f64, threshold: f64, len: usize) -> usize {
    let wanted = if rate > 0.0 {
        (2.0 * (1.0 / threshold).ln() / (rate * dt)).ceil() as usize + 3
    } else {
        10
    };
    wanted.min(len.saturating_sub(1))
}

struct ModeAnalysis {
    n_samples: usize,
    variance: Result<(f64, f64), String>,
    fitted_rate: Result<f64, String>,
}

fn analyse_mode(
    params: &MediumParams,
    sim: &SimConfig,
    cfg: &RunConfig,
    k: f64,
    histories: &[ModeHistory],
) -> ModeAnalysis {
    let burn = sim.burn_in_for(params, k);
    let post: Vec<ModeHistory> = histories.iter().map(|h| h.after(burn)).collect();
    let pooled: Vec<f64> = post.iter().flat_map(|h| h.values().iter().copied()).collect();
    let variance = series_variance(&pooled, cfg.n_batches)
        .map(|v| (v.variance, v.stderr))
        .map_err(|e| e.to_string());
    let rate = relaxation_rate(params, k);
    let shortest = post.iter().map(|h| h.len()).min().unwrap_or(0);
    let max_lag = acf_lags(rate, sim.dt(), cfg.fit_threshold, shortest);
    let fitted_rate = autocorrelation_pooled(&post, max_lag)
        .and_then(|acf| fit_exponential_rate_with(&acf, cfg.fit_threshold))
        .map_err(|e| e.to_string());
    ModeAnalysis {
        n_samples: pooled.len(),
        variance,
        fitted_rate,
    }
}

fn result_value<T>(r: &Result<T, String>, f: impl Fn(&T) -> Value) -> Value {
    match r {
        Ok(v) => f(v),
        Err(e) => json!({ "error": e }),
    }
}

pub fn simulate(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let params = cfg.medium()?;
    let modes = cfg.mode_specs()?;
    let sim = cfg.sim_config()?;
    let ensemble = simulate_ensemble(&params, &modes, cfg.n_traj, &sim)?;
    let out = prepare_out(cfg)?;

    for (j, histories) in ensemble.histories.iter().enumerate() {
        for (i, h) in histories.iter().enumerate() {
            let rows: Vec<Vec<Cell>> = h
                .values()
                .iter()
                .enumerate()
                .map(|(n, &v)| vec![Cell::Num(h.time(n)), Cell::Num(v)])
                .collect();
            write_table(
                out,
                &format!("trajectory_mode{j}_traj{i}"),
                cfg,
                &["t", "delta_T"],
                &rows,
            )?;
        }
    }

    let analyses: Vec<ModeAnalysis> = modes
        .par_iter()
        .zip(&ensemble.histories)
        .map(|(m, hs)| analyse_mode(&params, &sim, cfg, m.k(), hs))
        .collect();
    let deterministic = sim.is_deterministic();
    let expected_variance = equilibrium_mode_variance(&params);
    let mode_reports: Vec<Value> = modes
        .iter()
        .zip(&analyses)
        .enumerate()
        .map(|(j, (m, a))| {
            let variance = result_value(&a.variance, |&(v, se)| {
                let mut obj = json!({ "value": num(v), "stderr": num(se) });
                if !deterministic {
                    let z = if v == expected_variance { 0.0 } else { (v - expected_variance).abs() / se };
                    obj["z"] = num(z);
                    obj["within_bound"] = json!(z <= cfg.z_threshold);
                }
                obj
            });
            json!({
                "mode": j,
                "k": num(m.k()),
                "weight": num(m.weight()),
                "conserved": m.is_conserved(),
                "burn_in": num(sim.burn_in_for(&params, m.k())),
                "n_samples": a.n_samples,
                "expected_rate": num(relaxation_rate(&params, m.k())),
                "fitted_rate": result_value(&a.fitted_rate, |&r| num(r)),
                "expected_variance": num(expected_variance),
                "sample_variance": variance,
            })
        })
        .collect();
    let mut body = Map::new();
    body.insert("command".into(), json!("simulate"));
    body.insert("deterministic".into(), json!(deterministic));
    body.insert("n_traj".into(), json!(cfg.n_traj));
    body.insert("modes".into(), Value::Array(mode_reports));
    write_json(&out.join("simulate_summary.json"), &summary(cfg, body))?;
    Ok(Outcome::Pass)
}

pub fn fdr_verify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let params = cfg.medium()?;
    let modes = cfg.mode_specs()?;
    let sim = cfg.sim_config()?;
    // Conserved modes are simulated too so every mode keeps the noise stream
    // it would get from `simulate`.
    let ensemble = simulate_ensemble(&params, &modes, cfg.n_traj, &sim)?;
    let analyses: Vec<Option<ModeAnalysis>> = modes
        .par_iter()
        .zip(&ensemble.histories)
        .map(|(m, hs)| (!m.is_conserved()).then(|| analyse_mode(&params, &sim, cfg, m.k(), hs)))
        .collect();

    let expected_variance = equilibrium_mode_variance(&params);
    let mut all_pass = true;
    let mut reports = Vec::with_capacity(modes.len());
    for (m, a) in modes.iter().zip(&analyses) {
        let Some(a) = a else {
            reports.push(json!({
                "k": num(m.k()),
                "status": "skipped",
                "notice": "conserved mode: zero relaxation rate and zero noise, nothing to verify",
            }));
            continue;
        };
        let variance_test = match a.variance {
            Ok((v, se)) => {
                let z = if v == expected_variance { 0.0 } else { (v - expected_variance).abs() / se };
                let pass = z <= cfg.z_threshold;
                all_pass &= pass;
                json!({
                    "name": "stationary_variance",
                    "value": num(v),
                    "stderr": num(se),
                    "expected": num(expected_variance),
                    "z": num(z),
                    "z_threshold": num(cfg.z_threshold),
                    "pass": pass,
                })
            }
            Err(ref e) => {
                all_pass = false;
                json!({ "name": "stationary_variance", "error": e, "pass": false })
            }
        };
        let expected_rate = relaxation_rate(&params, m.k());
        let rate_test = match a.fitted_rate {
            Ok(r) => {
                let rel = ((r - expected_rate) / expected_rate).abs();
                let stderr = rate_relative_stderr(expected_rate, sim.dt(), a.n_samples);
                let z = rel / stderr;
                let pass = z <= cfg.z_threshold;
                all_pass &= pass;
                json!({
                    "name": "rate_recovery",
                    "value": num(r),
                    "expected": num(expected_rate),
                    "relative_error": num(rel),
                    "relative_stderr": num(stderr),
                    "z": num(z),
                    "z_threshold": num(cfg.z_threshold),
                    "fit_threshold": num(cfg.fit_threshold),
                    "pass": pass,
                })
            }
            Err(ref e) => {
                all_pass = false;
                json!({ "name": "rate_recovery", "error": e, "pass": false })
            }
        };
        reports.push(json!({
            "k": num(m.k()),
            "status": "tested",
            "n_samples": a.n_samples,
            "tests": [variance_test, rate_test],
        }));
    }

    let out = prepare_out(cfg)?;
    let mut body = Map::new();
    body.insert("command".into(), json!("fdr-verify"));
    body.insert("all_pass".into(), json!(all_pass));
    body.insert("modes".into(), Value::Array(reports));
    write_json(&out.join("fdr_report.json"), &summary(cfg, body))?;
    Ok(Outcome::from_pass(all_pass))
}

pub fn deco_scan(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let params = cfg.medium()?;
    let ks = cfg.modes.wavenumbers();
    let rows = decoherence_scan(&params, &ks, cfg.amplitude, cfg.duration, cfg.scan_steps)?;
    if !scan_is_monotone(&rows) {
        return Err(CliError::Internal(
            "decoherence exponents are not strictly decreasing in k".into(),
        ));
    }
    let out = prepare_out(cfg)?;
    let cells: Vec<Vec<Cell>> = rows
        .iter()
        .map(|r| {
            vec![
                Cell::Num(r.k),
                Cell::Num(r.exponent),
                Cell::Num(r.magnitude),
                Cell::Bool(r.conserved),
            ]
        })
        .collect();
    write_table(
        out,
        "deco_scan",
        cfg,
        &["k", "exponent", "magnitude", "conserved_flag"],
        &cells,
    )?;
    Ok(Outcome::Pass)
}

pub fn field_sample(cfg: &RunConfig) -> Result<Outcome, CliError> {
    cfg.validate()?;
    let params = cfg.medium()?;
    let geometry = cfg.geometry()?;
    if geometry.dim() != params.dim() {
        return Err(CliError::Config(format!(
            "lattice has {} axes but d = {}",
            geometry.dim(),
            params.dim()
        )));
    }
    if cfg.n_samples < 2 {
        return Err(CliError::Config("`n_samples` must be >= 2".into()));
    }

    let draw = |i: usize| {
        let mut stream = NoiseStream::new(cfg.seed, i as u64, 0.0);
        sample_equilibrium_field(&params, &geometry, &mut stream)
    };
    let per_sample = (0..cfg.n_samples)
        .into_par_iter()
        .map(|i| {
            let field = draw(i)?;
            Ok((
                energy_change(&params, &field),
                free_energy_change(&params, &field)?,
                parseval_check(&field),
            ))
        })
        .collect::<hydrodeco::Result<Vec<_>>>()?;

    let energies: Vec<f64> = per_sample.iter().map(|s| s.0).collect();
    let free: Vec<f64> = per_sample.iter().map(|s| s.1).collect();
    let parseval_max = per_sample.iter().fold(0.0f64, |a, s| a.max(s.2));

    let du = sample_variance(&energies)?;
    let expected_du = expected_energy_variance(&params, &geometry);
    let du_z = du.variance_z(expected_du);
    let du_pass = du_z <= cfg.z_threshold;

    let df = sample_variance(&free)?;
    let expected_df = geometry.n_sites() as f64 * params.t0() / 2.0;
    let df_z = df.mean_z(expected_df);
    let df_pass = df_z <= cfg.z_threshold;

    let parseval_pass = parseval_max <= TRANSFORM_TOLERANCE;
    let all_pass = du_pass && df_pass && parseval_pass;

    let out = prepare_out(cfg)?;
    let example = draw(0)?;
    let rows: Vec<Vec<Cell>> = example
        .values()
        .iter()
        .enumerate()
        .map(|(flat, &v)| {
            let mut row: Vec<Cell> = geometry
                .site_index(flat)
                .iter()
                .zip(geometry.spacing())
                .map(|(&i, &a)| Cell::Num(i as f64 * a))
                .collect();
            row.push(Cell::Num(v));
            row
        })
        .collect();
    let mut columns: Vec<String> = (0..geometry.dim()).map(|ax| format!("x_{ax}")).collect();
    columns.push("delta_T".into());
    let columns: Vec<&str> = columns.iter().map(String::as_str).collect();
    write_table(out, "field_sample_0", cfg, &columns, &rows)?;

    let mut body = Map::new();
    body.insert("command".into(), json!("field-sample"));
    body.insert("all_pass".into(), json!(all_pass));
    body.insert("n_samples".into(), json!(cfg.n_samples));
    body.insert("n_sites".into(), json!(geometry.n_sites()));
    body.insert("volume".into(), num(geometry.volume()));
    body.insert(
        "energy_fluctuation".into(),
        json!({
            "variance": num(du.variance),
            "stderr": num(du.stderr_variance),
            "expected": num(expected_du),
            "z": num(du_z),
            "pass": du_pass,
        }),
    );
    body.insert(
        "equipartition".into(),
        json!({
            "mean_free_energy": num(df.mean),
            "stderr": num(df.stderr_mean()),
            "expected": num(expected_df),
            "z": num(df_z),
            "pass": df_pass,
        }),
    );
    body.insert(
        "parseval".into(),
        json!({
            "max_residual": num(parseval_max),
            "tolerance": num(TRANSFORM_TOLERANCE),
            "pass": parseval_pass,
        }),
    );
    write_json(&out.join("field_summary.json"), &summary(cfg, body))?;
    Ok(Outcome::from_pass(all_pass))
}
