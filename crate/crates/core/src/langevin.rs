//! Per-mode Langevin dynamics ∂t δT_k + γ_k δT_k = ξ_k with
//! fluctuation-dissipation-consistent white noise.
//!
//! Two steppers are provided: the exact Ornstein–Uhlenbeck transition law,
//! unbiased at any step, and Euler–Maruyama, whose stationary variance
//! carries an O(dt) bias. Both consume exactly one Gaussian per step, so two
//! runs on the same stream are pathwise coupled.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::medium::{
    check_wavenumber, equilibrium_mode_variance, noise_strength, relaxation_rate, MediumParams,
    ModeSpec,
};
use crate::noise::NoiseStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    ExactOu,
    EulerMaruyama,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::ExactOu => "exact-ou",
            Method::EulerMaruyama => "euler-maruyama",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "exact-ou" | "exact" => Ok(Method::ExactOu),
            "euler-maruyama" | "em" => Ok(Method::EulerMaruyama),
            other => Err(invalid(
                "method",
                format!("expected exact-ou or euler-maruyama, got `{other}`"),
            )),
        }
    }
}

/// Starting amplitude of a trajectory.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Initial {
    Value(f64),
    /// Draw δT_k(0) from the stationary law N(0, T0²/c0).
    Equilibrium,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    dt: f64,
    t_end: f64,
    method: Method,
    seed: u64,
    initial: Initial,
    noise_factor: f64,
    burn_in: Option<f64>,
}

impl SimConfig {
    pub fn new(dt: f64, t_end: f64, method: Method, seed: u64, initial: Initial) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        if !(t_end >= dt && t_end.is_finite()) {
            return Err(invalid("t_end", format!("must be finite and >= dt, got {t_end}")));
        }
        if let Initial::Value(x) = initial {
            if !x.is_finite() {
                return Err(invalid("initial", "must be finite"));
            }
        }
        Ok(Self {
            dt,
            t_end,
            method,
            seed,
            initial,
            noise_factor: 1.0,
            burn_in: None,
        })
    }

    /// Multiplies Γ_k by `factor`. 0 gives the deterministic limit; any
    /// value other than 1 breaks the fluctuation-dissipation relation.
    pub fn with_noise_factor(mut self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0 && factor.is_finite()) {
            return Err(invalid("noise_factor", format!("must be >= 0, got {factor}")));
        }
        self.noise_factor = factor;
        Ok(self)
    }

    /// Overrides the default burn-in of 10 relaxation times.
    pub fn with_burn_in(mut self, burn_in: f64) -> Result<Self> {
        if !(burn_in >= 0.0 && burn_in.is_finite()) {
            return Err(invalid("burn_in", format!("must be >= 0, got {burn_in}")));
        }
        self.burn_in = Some(burn_in);
        Ok(self)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn initial(&self) -> Initial {
        self.initial
    }

    pub fn noise_factor(&self) -> f64 {
        self.noise_factor
    }

    pub fn is_deterministic(&self) -> bool {
        self.noise_factor == 0.0
    }

    /// floor(t_end/dt), guarded against t_end/dt landing a hair below an integer.
    pub fn n_steps(&self) -> usize {
        let ratio = self.t_end / self.dt;
        let rounded = ratio.round();
        if (ratio - rounded).abs() <= 1e-9 * rounded.max(1.0) {
            rounded as usize
        } else {
            ratio.floor() as usize
        }
    }

    /// Burn-in time for mode `k`: the explicit override, else 10/γ_k
    /// (0 for the conserved mode).
    pub fn burn_in_for(&self, params: &MediumParams, k: f64) -> f64 {
        self.burn_in.unwrap_or_else(|| {
            let rate = relaxation_rate(params, k);
            if rate > 0.0 {
                10.0 / rate
            } else {
                0.0
            }
        })
    }

    pub fn burn_in(&self) -> Option<f64> {
        self.burn_in
    }

    /// Γ_k as seen by this configuration's noise streams.
    pub fn effective_noise_strength(&self, params: &MediumParams, k: f64) -> f64 {
        self.noise_factor * noise_strength(params, k)
    }
}

/// Time series δT_k(n·dt), n = 0..=N.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeHistory {
    k: f64,
    dt: f64,
    values: Vec<f64>,
}

impl ModeHistory {
    pub fn new(k: f64, dt: f64, values: Vec<f64>) -> Result<Self> {
        check_wavenumber(k)?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive, got {dt}")));
        }
        if values.is_empty() {
            return Err(Error::TooShortHistory { needed: 1, got: 0 });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("values", "history entries must be finite"));
        }
        Ok(Self { k, dt, values })
    }

    /// Constant history of `steps + 1` samples spanning `steps·dt`.
    pub fn constant(k: f64, dt: f64, steps: usize, value: f64) -> Result<Self> {
        Self::new(k, dt, vec![value; steps + 1])
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    /// The samples with t ≥ `t_start`, re-based so they start at t = 0.
    /// Keeps at least the final sample.
    pub fn after(&self, t_start: f64) -> ModeHistory {
        let skip = ((t_start / self.dt).ceil().max(0.0) as usize).min(self.values.len() - 1);
        ModeHistory {
            k: self.k,
            dt: self.dt,
            values: self.values[skip..].to_vec(),
        }
    }
}

/// One Euler–Maruyama step x − γ_k·x·dt + √(2Γ·dt)·n, with Γ taken from
/// the stream. Stable only for γ_k·dt < 2 (keep it below 1 for accuracy).
/// The conserved mode is returned unchanged.
pub fn step_euler_maruyama(
    params: &MediumParams,
    k: f64,
    x: f64,
    dt: f64,
    stream: &mut NoiseStream,
) -> f64 {
    let rate = relaxation_rate(params, k);
    let kick = stream.draw_noise_increment(dt) * dt;
    if rate == 0.0 {
        return x;
    }
    x - rate * x * dt + kick
}

/// Exact one-step transition of the linear Langevin equation:
/// e^(−γdt)·x + σ·√(1 − e^(−2γdt))·n with σ² = Γ/γ (= T0²/c0 when Γ obeys
/// the fluctuation-dissipation relation). The conserved mode is returned
/// unchanged.
pub fn step_exact_ou(
    params: &MediumParams,
    k: f64,
    x: f64,
    dt: f64,
    stream: &mut NoiseStream,
) -> f64 {
    let rate = relaxation_rate(params, k);
    let n = stream.standard_normal();
    if rate == 0.0 {
        return x;
    }
    let decay = (-rate * dt).exp();
    let gamma = stream.gamma();
    if gamma == 0.0 {
        return decay * x;
    }
    let sigma2 = gamma / rate;
    let spread = (-(-2.0 * rate * dt).exp_m1()).sqrt();
    decay * x + sigma2.sqrt() * spread * n
}

/// Deterministic relaxation x0·e^(−γ_k t).
pub fn deterministic_decay(params: &MediumParams, k: f64, x0: f64, t: f64) -> f64 {
    x0 * (-relaxation_rate(params, k) * t).exp()
}

/// Simulates one trajectory on noise substream 0 of `cfg.seed`.
pub fn simulate_mode(params: &MediumParams, k: f64, cfg: &SimConfig) -> Result<ModeHistory> {
    let stream = NoiseStream::new(cfg.seed, 0, cfg.effective_noise_strength(params, k));
    simulate_on_stream(params, k, cfg, stream)
}

/// Simulates one trajectory consuming the given stream. The stream's Γ sets
/// the noise; an equilibrium start draws its amplitude from the same stream.
pub fn simulate_on_stream(
    params: &MediumParams,
    k: f64,
    cfg: &SimConfig,
    mut stream: NoiseStream,
) -> Result<ModeHistory> {
    check_wavenumber(k)?;
    let steps = cfg.n_steps();
    let mut values = Vec::with_capacity(steps + 1);
    let mut x = match cfg.initial {
        Initial::Value(x) => x,
        Initial::Equilibrium => {
            equilibrium_mode_variance(params).sqrt() * stream.standard_normal()
        }
    };
    values.push(x);
    let dt = cfg.dt;
    match cfg.method {
        Method::ExactOu => {
            for _ in 0..steps {
                x = step_exact_ou(params, k, x, dt, &mut stream);
                values.push(x);
            }
        }
        Method::EulerMaruyama => {
            for _ in 0..steps {
                x = step_euler_maruyama(params, k, x, dt, &mut stream);
                values.push(x);
            }
        }
    }
    ModeHistory::new(k, dt, values)
}

/// Trajectories of an ensemble, indexed `[mode][trajectory]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub modes: Vec<ModeSpec>,
    pub histories: Vec<Vec<ModeHistory>>,
}

/// Runs `n_traj` independent trajectories for every mode.
///
/// Trajectory i of mode j draws from `NoiseStream::for_mode(seed, j, i, ..)`,
/// so the output does not depend on the rayon pool size or scheduling.
pub fn simulate_ensemble(
    params: &MediumParams,
    modes: &[ModeSpec],
    n_traj: usize,
    cfg: &SimConfig,
) -> Result<Ensemble> {
    if n_traj == 0 {
        return Err(invalid("n_traj", "need at least one trajectory"));
    }
    let jobs: Vec<(usize, usize)> = (0..modes.len())
        .flat_map(|j| (0..n_traj).map(move |i| (j, i)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(j, i)| {
            let k = modes[j].k();
            let stream = NoiseStream::for_mode(
                cfg.seed,
                j as u64,
                i as u64,
                cfg.effective_noise_strength(params, k),
            );
            simulate_on_stream(params, k, cfg, stream)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut runs = runs.into_iter();
    let histories = (0..modes.len())
        .map(|_| runs.by_ref().take(n_traj).collect())
        .collect();
    Ok(Ensemble {
        modes: modes.to_vec(),
        histories,
    })
}

/// Central-difference time derivative, second-order one-sided at the ends.
pub(crate) fn time_derivative(values: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::TooShortHistory { needed: 3, got: n });
    }
    let mut out = Vec::with_capacity(n);
    out.push((-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dt));
    for w in values.windows(3) {
        out.push((w[2] - w[0]) / (2.0 * dt));
    }
    out.push((3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dt));
    Ok(out)
}

/// Pointwise residual (∂t + γ_k)·δT_k of a history under the deterministic
/// drift; vanishes (up to O(dt²)) on solutions of the macroscopic equation.
pub fn drift_residual(params: &MediumParams, history: &ModeHistory) -> Result<Vec<f64>> {
    let rate = relaxation_rate(params, history.k);
    let deriv = time_derivative(&history.values, history.dt)?;
    Ok(deriv
        .iter()
        .zip(&history.values)
        .map(|(d, x)| d + rate * x)
        .collect())
}
