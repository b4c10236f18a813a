//! Run configuration: `key = value` files plus command-line overrides.

use std::fmt;
use std::path::PathBuf;

use hydrodeco::langevin::{Initial, Method, SimConfig};
use hydrodeco::lattice::LatticeGeometry;
use hydrodeco::{MediumParams, ModeSpec};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl From<hydrodeco::Error> for ConfigError {
    fn from(e: hydrodeco::Error) -> Self {
        ConfigError(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn as_str(&self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ModeSet {
    List(Vec<f64>),
    Grid { k_min: f64, dk: f64, count: usize },
}

impl ModeSet {
    pub fn wavenumbers(&self) -> Vec<f64> {
        match self {
            ModeSet::List(ks) => ks.clone(),
            ModeSet::Grid { k_min, dk, count } => {
                (0..*count).map(|i| k_min + i as f64 * dk).collect()
            }
        }
    }
}

/// Fully resolved configuration shared by every subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub t0: f64,
    pub c0: f64,
    pub d0: f64,
    pub dim: usize,
    pub modes: ModeSet,
    pub weights: Option<Vec<f64>>,
    pub dt: f64,
    pub t_end: f64,
    pub method: Method,
    /// `None` means 10 relaxation times per mode.
    pub burn_in: Option<f64>,
    pub n_traj: usize,
    pub initial: Initial,
    pub seed: u64,
    pub out: PathBuf,
    pub format: Format,
    pub amplitude: f64,
    pub duration: f64,
    pub scan_steps: usize,
    pub extents: Vec<usize>,
    pub spacing: f64,
    pub n_samples: usize,
    pub fit_threshold: f64,
    pub z_threshold: f64,
    pub n_batches: usize,
    /// Test hook: multiplies Γ_k. Anything but 1 violates the FDR.
    pub noise_factor: f64,
    /// Worker threads (0 = rayon default). Not echoed: outputs must not
    /// depend on it.
    pub threads: usize,
}

pub const DEFAULT_SEED: u64 = 42;

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t0: 1.0,
            c0: 1.0,
            d0: 1.0,
            dim: 1,
            modes: ModeSet::List(vec![1.0]),
            weights: None,
            dt: 0.01,
            t_end: 1010.0,
            method: Method::ExactOu,
            burn_in: None,
            n_traj: 1,
            initial: Initial::Equilibrium,
            seed: DEFAULT_SEED,
            out: PathBuf::from("out"),
            format: Format::Csv,
            amplitude: 0.1,
            duration: 10.0,
            scan_steps: hydrodeco::influence::DEFAULT_SCAN_STEPS,
            extents: vec![64],
            spacing: 1.0,
            n_samples: 100_000,
            fit_threshold: 0.9,
            z_threshold: 3.0,
            n_batches: hydrodeco::stats::DEFAULT_BATCHES,
            noise_factor: 1.0,
            threads: 0,
        }
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    v.trim()
        .parse::<f64>()
        .map_err(|_| ConfigError(format!("`{key}`: expected a number, got `{v}`")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize, ConfigError> {
    v.trim()
        .parse::<usize>()
        .map_err(|_| ConfigError(format!("`{key}`: expected a non-negative integer, got `{v}`")))
}

fn parse_list<T>(
    key: &str,
    v: &str,
    item: impl Fn(&str, &str) -> Result<T, ConfigError>,
) -> Result<Vec<T>, ConfigError> {
    let items = v
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| item(key, s))
        .collect::<Result<Vec<_>, _>>()?;
    if items.is_empty() {
        return Err(ConfigError(format!("`{key}`: empty list")));
    }
    Ok(items)
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|x| x.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl RunConfig {
    /// Parses `key = value` lines (`#` starts a comment) on top of the defaults.
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        cfg.apply_text(text)?;
        Ok(cfg)
    }

    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        let mut grid = (None, None, None);
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                ConfigError(format!("line {}: expected `key = value`, got `{raw}`", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "k_min" => grid.0 = Some(parse_f64(key, value)?),
                "dk" => grid.1 = Some(parse_f64(key, value)?),
                "k_count" => grid.2 = Some(parse_usize(key, value)?),
                _ => self
                    .set(key, value)
                    .map_err(|e| ConfigError(format!("line {}: {}", lineno + 1, e)))?,
            }
        }
        match grid {
            (None, None, None) => {}
            (Some(k_min), Some(dk), Some(count)) => {
                self.modes = ModeSet::Grid { k_min, dk, count };
            }
            _ => {
                return Err(ConfigError(
                    "mode grid needs all of k_min, dk and k_count".into(),
                ))
            }
        }
        Ok(())
    }

    /// Sets one key. Keys are the same in files and in the echoed config.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        match key {
            "T0" => self.t0 = parse_f64(key, value)?,
            "c0" => self.c0 = parse_f64(key, value)?,
            "D0" => self.d0 = parse_f64(key, value)?,
            "d" => self.dim = parse_usize(key, value)?,
            "k" => self.modes = ModeSet::List(parse_list(key, value, parse_f64)?),
            "weights" => self.weights = Some(parse_list(key, value, parse_f64)?),
            "dt" => self.dt = parse_f64(key, value)?,
            "t_end" => self.t_end = parse_f64(key, value)?,
            "method" => {
                self.method = value
                    .parse()
                    .map_err(|e: hydrodeco::Error| ConfigError(e.to_string()))?
            }
            "burn_in" => {
                self.burn_in = match value {
                    "auto" => None,
                    v => Some(parse_f64(key, v)?),
                }
            }
            "n_traj" => self.n_traj = parse_usize(key, value)?,
            "initial" => {
                self.initial = match value {
                    "equilibrium" => Initial::Equilibrium,
                    v => Initial::Value(parse_f64(key, v)?),
                }
            }
            "seed" => {
                self.seed = value
                    .parse()
                    .map_err(|_| ConfigError(format!("`seed`: expected a u64, got `{value}`")))?
            }
            "out" => self.out = PathBuf::from(value),
            "format" => {
                self.format = match value {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    v => return Err(ConfigError(format!("`format`: expected csv or json, got `{v}`"))),
                }
            }
            "amplitude" => self.amplitude = parse_f64(key, value)?,
            "duration" => self.duration = parse_f64(key, value)?,
            "scan_steps" => self.scan_steps = parse_usize(key, value)?,
            "extents" => self.extents = parse_list(key, value, parse_usize)?,
            "spacing" => self.spacing = parse_f64(key, value)?,
            "n_samples" => self.n_samples = parse_usize(key, value)?,
            "fit_threshold" => self.fit_threshold = parse_f64(key, value)?,
            "z_threshold" => self.z_threshold = parse_f64(key, value)?,
            "n_batches" => self.n_batches = parse_usize(key, value)?,
            "noise_factor" => self.noise_factor = parse_f64(key, value)?,
            "threads" => self.threads = parse_usize(key, value)?,
            other => return Err(ConfigError(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    pub fn medium(&self) -> Result<MediumParams, ConfigError> {
        Ok(MediumParams::new(self.t0, self.c0, self.d0, self.dim)?)
    }

    pub fn mode_specs(&self) -> Result<Vec<ModeSpec>, ConfigError> {
        let ks = self.modes.wavenumbers();
        if ks.is_empty() {
            return Err(ConfigError("mode set is empty".into()));
        }
        let weights = match &self.weights {
            Some(w) if w.len() != ks.len() => {
                return Err(ConfigError(format!(
                    "{} weights for {} modes",
                    w.len(),
                    ks.len()
                )))
            }
            Some(w) => w.clone(),
            None => vec![1.0; ks.len()],
        };
        ks.iter()
            .zip(weights)
            .map(|(&k, w)| ModeSpec::new(k, w).map_err(ConfigError::from))
            .collect()
    }

    pub fn sim_config(&self) -> Result<SimConfig, ConfigError> {
        let mut sim = SimConfig::new(self.dt, self.t_end, self.method, self.seed, self.initial)?
            .with_noise_factor(self.noise_factor)?;
        if let Some(b) = self.burn_in {
            sim = sim.with_burn_in(b)?;
        }
        Ok(sim)
    }

    pub fn geometry(&self) -> Result<LatticeGeometry, ConfigError> {
        Ok(LatticeGeometry::uniform(self.extents.clone(), self.spacing)?)
    }

    /// Checks everything every subcommand relies on.
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.medium()?;
        self.mode_specs()?;
        self.sim_config()?;
        if self.n_traj == 0 {
            return Err(ConfigError("`n_traj` must be >= 1".into()));
        }
        if !(self.fit_threshold > 0.0 && self.fit_threshold < 1.0) {
            return Err(ConfigError("`fit_threshold` must lie in (0, 1)".into()));
        }
        if self.z_threshold.is_nan() || self.z_threshold <= 0.0 {
            return Err(ConfigError("`z_threshold` must be positive".into()));
        }
        if self.n_batches < 2 {
            return Err(ConfigError("`n_batches` must be >= 2".into()));
        }
        Ok(())
    }

    /// Resolved settings in a fixed order, as echoed into every output.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut e = vec![
            ("T0", self.t0.to_string()),
            ("c0", self.c0.to_string()),
            ("D0", self.d0.to_string()),
            ("d", self.dim.to_string()),
        ];
        match &self.modes {
            ModeSet::List(ks) => e.push(("k", join(ks))),
            ModeSet::Grid { k_min, dk, count } => {
                e.push(("k_min", k_min.to_string()));
                e.push(("dk", dk.to_string()));
                e.push(("k_count", count.to_string()));
            }
        }
        if let Some(w) = &self.weights {
            e.push(("weights", join(w)));
        }
        e.extend([
            ("dt", self.dt.to_string()),
            ("t_end", self.t_end.to_string()),
            ("method", self.method.to_string()),
            (
                "burn_in",
                self.burn_in.map(|b| b.to_string()).unwrap_or_else(|| "auto".into()),
            ),
            ("n_traj", self.n_traj.to_string()),
            (
                "initial",
                match self.initial {
                    Initial::Equilibrium => "equilibrium".into(),
                    Initial::Value(v) => v.to_string(),
                },
            ),
            ("seed", self.seed.to_string()),
            ("format", self.format.as_str().into()),
            ("amplitude", self.amplitude.to_string()),
            ("duration", self.duration.to_string()),
            ("scan_steps", self.scan_steps.to_string()),
            ("extents", join(&self.extents)),
            ("spacing", self.spacing.to_string()),
            ("n_samples", self.n_samples.to_string()),
            ("fit_threshold", self.fit_threshold.to_string()),
            ("z_threshold", self.z_threshold.to_string()),
            ("n_batches", self.n_batches.to_string()),
            ("noise_factor", self.noise_factor.to_string()),
        ]);
        e
    }
}
