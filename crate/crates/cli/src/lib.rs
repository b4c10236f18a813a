//! Command-line driver: `simulate`, `fdr-verify`, `deco-scan` and
//! `field-sample`.
//!
//! Exit codes: 0 success, 1 statistical check failed, 2 configuration
//! error, 3 I/O failure, 4 internal consistency violation.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::fs;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use commands::{CliError, Outcome};
use config::RunConfig;

#[derive(Debug, Parser)]
#[command(name = "hydrodeco", version, about = "Fluctuating heat diffusion: simulation, FDR checks and decoherence scans")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate mode trajectories and summarize their statistics.
    Simulate(CommonArgs),
    /// Check stationary variances and relaxation rates against the FDR.
    FdrVerify(CommonArgs),
    /// Tabulate decoherence exponents against k.
    DecoScan(CommonArgs),
    /// Sample equilibrium lattice fields and check energy fluctuations.
    FieldSample(CommonArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// Plain-text `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Table format: csv or json.
    #[arg(long)]
    pub format: Option<String>,
    /// Comma-separated wavenumbers.
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long)]
    pub dt: Option<String>,
    #[arg(long = "t-end")]
    pub t_end: Option<String>,
    #[arg(long = "n-traj")]
    pub n_traj: Option<String>,
    #[arg(long)]
    pub amplitude: Option<String>,
    #[arg(long)]
    pub duration: Option<String>,
    /// exact-ou or euler-maruyama.
    #[arg(long)]
    pub method: Option<String>,
    /// Worker threads (0 = all cores). Does not affect outputs.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Any other config key, as KEY=VALUE. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Scale Γ_k by this factor (testing only: breaks the FDR when != 1).
    #[arg(long = "noise-factor", hide = true)]
    pub noise_factor: Option<String>,
}

impl CommonArgs {
    /// Defaults, then the config file, then command-line flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| {
                CliError::Config(format!("cannot read config {}: {e}", path.display()))
            })?;
            cfg.apply_text(&text)?;
        }
        let flags: [(&str, Option<String>); 12] = [
            ("seed", self.seed.map(|s| s.to_string())),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
            ("format", self.format.clone()),
            ("k", self.k.clone()),
            ("dt", self.dt.clone()),
            ("t_end", self.t_end.clone()),
            ("n_traj", self.n_traj.clone()),
            ("amplitude", self.amplitude.clone()),
            ("duration", self.duration.clone()),
            ("method", self.method.clone()),
            ("threads", self.threads.map(|t| t.to_string())),
            ("noise_factor", self.noise_factor.clone()),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                cfg.set(key, &v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            let line = format!("{} = {}", k.trim(), v.trim());
            cfg.apply_text(&line)?;
        }
        Ok(cfg)
    }
}

/// Runs one command under a rayon pool sized by `cfg.threads`.
pub fn execute(command: &str, cfg: &RunConfig) -> Result<Outcome, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    pool.install(|| match command {
        "simulate" => commands::simulate(cfg),
        "fdr-verify" => commands::fdr_verify(cfg),
        "deco-scan" => commands::deco_scan(cfg),
        "field-sample" => commands::field_sample(cfg),
        other => Err(CliError::Config(format!("unknown command `{other}`"))),
    })
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let (name, common) = match &cli.command {
        Command::Simulate(a) => ("simulate", a),
        Command::FdrVerify(a) => ("fdr-verify", a),
        Command::DecoScan(a) => ("deco-scan", a),
        Command::FieldSample(a) => ("field-sample", a),
    };
    let result = common.resolve().and_then(|cfg| execute(name, &cfg));
    match result {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::StatisticalFailure) => {
            eprintln!("hydrodeco {name}: statistical check failed (see report)");
            1
        }
        Err(e) => {
            eprintln!("hydrodeco {name}: {e}");
            e.exit_code()
        }
    }
}
