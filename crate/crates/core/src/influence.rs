//! Influence action on pairs of thermal histories and the decoherence
//! exponent derived from it.
//!
//! For branches (δT)¹, (δT)² write [δT] = δT¹ − δT² and {δT} = δT¹ + δT².
//! The action is
//!
//! ```text
//! A_IF = ½ Σ_k w_k ∫dt [δT_k]·A_k(∂t + γ_k){δT_k} + i Σ_k w_k ∫dt Γ_k A_k² [δT_k]²
//! ```
//!
//! with A_k = c0²/(D0k²T0), and the decoherence functional satisfies
//! |D|² = exp(−Σ_k w_k ∫dt 2c0²/(D0k²)·[δT_k]²). Time integrals are left
//! Riemann sums over samples 0..N−1 of an (N+1)-sample history; ∂t is the
//! central difference, second-order one-sided at the ends.

use crate::error::{invalid, Error, Result};
use crate::langevin::{time_derivative, ModeHistory};
use crate::medium::{
    check_wavenumber, coupling_constant, noise_strength, relaxation_rate, MediumParams,
};

/// Two branch histories over identical mode and time grids.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryPair {
    branch1: Vec<ModeHistory>,
    branch2: Vec<ModeHistory>,
    weights: Vec<f64>,
}

impl HistoryPair {
    pub fn new(
        branch1: Vec<ModeHistory>,
        branch2: Vec<ModeHistory>,
        weights: Vec<f64>,
    ) -> Result<Self> {
        if branch1.len() != branch2.len() || branch1.len() != weights.len() {
            return Err(Error::GridMismatch(format!(
                "{} / {} modes with {} weights",
                branch1.len(),
                branch2.len(),
                weights.len()
            )));
        }
        for (i, (a, b)) in branch1.iter().zip(&branch2).enumerate() {
            if a.k() != b.k() || a.dt() != b.dt() || a.len() != b.len() {
                return Err(Error::GridMismatch(format!(
                    "mode {i}: (k={}, dt={}, len={}) vs (k={}, dt={}, len={})",
                    a.k(),
                    a.dt(),
                    a.len(),
                    b.k(),
                    b.dt(),
                    b.len()
                )));
            }
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(invalid("weights", "mode weights must be positive"));
        }
        Ok(Self {
            branch1,
            branch2,
            weights,
        })
    }

    /// Single-mode pair with unit weight.
    pub fn single(branch1: ModeHistory, branch2: ModeHistory) -> Result<Self> {
        Self::new(vec![branch1], vec![branch2], vec![1.0])
    }

    pub fn branch1(&self) -> &[ModeHistory] {
        &self.branch1
    }

    pub fn branch2(&self) -> &[ModeHistory] {
        &self.branch2
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_modes(&self) -> usize {
        self.weights.len()
    }

    /// The same pair with branches exchanged.
    pub fn swapped(&self) -> Self {
        Self {
            branch1: self.branch2.clone(),
            branch2: self.branch1.clone(),
            weights: self.weights.clone(),
        }
    }

    /// Difference history [δT] of mode `i`.
    pub fn difference(&self, i: usize) -> Vec<f64> {
        zip_map(&self.branch1[i], &self.branch2[i], |a, b| a - b)
    }

    /// Sum history {δT} of mode `i`.
    pub fn sum(&self, i: usize) -> Vec<f64> {
        zip_map(&self.branch1[i], &self.branch2[i], |a, b| a + b)
    }
}

fn zip_map(a: &ModeHistory, b: &ModeHistory, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
    a.values().iter().zip(b.values()).map(|(x, y)| f(*x, *y)).collect()
}

/// Value of the influence action: dissipative real part, noise imaginary part.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfluenceValue {
    pub re: f64,
    pub im: f64,
}

impl InfluenceValue {
    pub fn conj(self) -> Self {
        Self {
            re: self.re,
            im: -self.im,
        }
    }

    /// |F|² = |e^{iA}|² = e^(−2·Im A).
    pub fn influence_magnitude_sq(&self) -> f64 {
        (-2.0 * self.im).exp()
    }
}

/// Applies the dissipation kernel μ_k = A_k(∂t + γ_k) to a history:
/// A_k·∂t δT + (c0/T0)·δT, using A_kγ_k = c0/T0.
pub fn dissipation_kernel_apply(params: &MediumParams, history: &ModeHistory) -> Result<Vec<f64>> {
    let coupling = coupling_constant(params, history.k())?;
    let deriv = time_derivative(history.values(), history.dt())?;
    let static_part = params.c0() / params.t0();
    Ok(deriv
        .iter()
        .zip(history.values())
        .map(|(d, x)| coupling * d + static_part * x)
        .collect())
}

/// Amplitude of the local noise kernel ν_k(t, t′) = 2Γ_k A_k²·δ(t − t′).
pub fn noise_kernel_amplitude(params: &MediumParams, k: f64) -> Result<f64> {
    let coupling = coupling_constant(params, k)?;
    Ok(2.0 * noise_strength(params, k) * coupling * coupling)
}

pub fn influence_action(params: &MediumParams, pair: &HistoryPair) -> Result<InfluenceValue> {
    let mut re = 0.0;
    let mut im = 0.0;
    for i in 0..pair.n_modes() {
        let h1 = &pair.branch1[i];
        let k = h1.k();
        let coupling = coupling_constant(params, k)?;
        let rate = relaxation_rate(params, k);
        let dt = h1.dt();
        let diff = pair.difference(i);
        let sum = pair.sum(i);
        let steps = diff.len() - 1;
        let mut re_k = 0.0;
        let mut im_k = 0.0;
        if steps > 0 {
            let deriv = time_derivative(&sum, dt)?;
            for n in 0..steps {
                re_k += diff[n] * coupling * (deriv[n] + rate * sum[n]);
                im_k += diff[n] * diff[n];
            }
        }
        let w = pair.weights[i];
        re += 0.5 * w * dt * re_k;
        im += w * dt * noise_strength(params, k) * coupling * coupling * im_k;
    }
    Ok(InfluenceValue { re, im })
}

/// |A_IF[h1, h2] + conj(A_IF[h2, h1])|, zero for an action with the
/// required exchange symmetry.
pub fn antisymmetry_residual(params: &MediumParams, pair: &HistoryPair) -> Result<f64> {
    let forward = influence_action(params, pair)?;
    let backward = influence_action(params, &pair.swapped())?.conj();
    Ok((forward.re + backward.re).hypot(forward.im + backward.im))
}

/// For static configurations compares β0 times the dissipative integrand,
/// Σ_k w_k·½A_kγ_k·((δT¹_k)² − (δT²_k)²), with β0 times the free-energy
/// difference density Σ_k w_k·(c0/2T0)·((δT¹_k)² − (δT²_k)²).
///
/// Returns |lhs − rhs| / Σ_k w_k·(c0/2T0)·|(δT¹_k)² − (δT²_k)²|, which is
/// insensitive to cancellation between modes; 0 when every term vanishes.
pub fn static_free_energy_identity(
    params: &MediumParams,
    ks: &[f64],
    static1: &[f64],
    static2: &[f64],
    weights: &[f64],
) -> Result<f64> {
    if static1.len() != ks.len() || static2.len() != ks.len() || weights.len() != ks.len() {
        return Err(Error::GridMismatch("static amplitudes, wavenumbers and weights differ in length".into()));
    }
    let beta = params.beta0();
    let density = params.c0() / (2.0 * params.t0());
    let mut lhs = 0.0;
    let mut rhs = 0.0;
    let mut scale = 0.0;
    for (((&k, &a), &b), &w) in ks.iter().zip(static1).zip(static2).zip(weights) {
        check_wavenumber(k)?;
        let coupling = coupling_constant(params, k)?;
        let rate = relaxation_rate(params, k);
        let delta_sq = a * a - b * b;
        lhs += w * 0.5 * coupling * rate * delta_sq;
        rhs += w * density * delta_sq;
        scale += w * density * delta_sq.abs();
    }
    let (lhs, rhs, scale) = (beta * lhs, beta * rhs, beta * scale);
    if scale == 0.0 {
        Ok((lhs - rhs).abs())
    } else {
        Ok((lhs - rhs).abs() / scale)
    }
}

/// Per-mode and total decoherence exponent with |D|² = e^(−total).
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceResult {
    pub ks: Vec<f64>,
    pub mode_exponents: Vec<f64>,
    pub exponent: f64,
    pub magnitude: f64,
    /// A k = 0 mode differs between branches: the exponent diverges.
    pub conserved_divergence: bool,
}

/// Coefficient 2c0²/(D0k²) of [δT_k]² in the decoherence exponent.
pub fn decoherence_coefficient(params: &MediumParams, k: f64) -> f64 {
    2.0 * params.c0() * params.c0() / (params.d0() * k * k)
}

pub fn decoherence_exponent(params: &MediumParams, pair: &HistoryPair) -> Result<DecoherenceResult> {
    let mut ks = Vec::with_capacity(pair.n_modes());
    let mut mode_exponents = Vec::with_capacity(pair.n_modes());
    let mut conserved_divergence = false;
    for i in 0..pair.n_modes() {
        let h = &pair.branch1[i];
        let k = h.k();
        let diff = pair.difference(i);
        let steps = diff.len() - 1;
        let sum_sq: f64 = diff[..steps].iter().map(|d| d * d).sum();
        let value = if k == 0.0 {
            if sum_sq > 0.0 {
                conserved_divergence = true;
                f64::INFINITY
            } else {
                0.0
            }
        } else {
            pair.weights[i] * h.dt() * decoherence_coefficient(params, k) * sum_sq
        };
        ks.push(k);
        mode_exponents.push(value);
    }
    let exponent: f64 = mode_exponents.iter().sum();
    Ok(DecoherenceResult {
        ks,
        mode_exponents,
        exponent,
        magnitude: (-exponent).exp(),
        conserved_divergence,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanRow {
    pub k: f64,
    pub exponent: f64,
    pub magnitude: f64,
    pub conserved: bool,
}

/// Number of time steps used to discretize each scan history.
pub const DEFAULT_SCAN_STEPS: usize = 100;

/// Decoherence exponent for a constant branch difference `amplitude`
/// held over `duration`, one row per distinct k in ascending order.
pub fn decoherence_scan(
    params: &MediumParams,
    ks: &[f64],
    amplitude: f64,
    duration: f64,
    steps: usize,
) -> Result<Vec<ScanRow>> {
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(invalid("amplitude", format!("must be positive, got {amplitude}")));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(invalid("duration", format!("must be positive, got {duration}")));
    }
    if steps == 0 {
        return Err(invalid("steps", "need at least one step"));
    }
    let mut sorted = ks.to_vec();
    for &k in &sorted {
        check_wavenumber(k)?;
    }
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let dt = duration / steps as f64;
    sorted
        .into_iter()
        .map(|k| {
            let pair = HistoryPair::single(
                ModeHistory::constant(k, dt, steps, amplitude)?,
                ModeHistory::constant(k, dt, steps, 0.0)?,
            )?;
            let res = decoherence_exponent(params, &pair)?;
            Ok(ScanRow {
                k,
                exponent: res.exponent,
                magnitude: res.magnitude,
                conserved: res.conserved_divergence,
            })
        })
        .collect()
}

/// True when the exponents strictly decrease along the (ascending-k) rows.
pub fn scan_is_monotone(rows: &[ScanRow]) -> bool {
    rows.windows(2).all(|w| w[0].exponent > w[1].exponent)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::langevin::drift_residual;
    use crate::noise::NoiseStream;
    use proptest::prelude::*;

    fn unit() -> MediumParams {
        MediumParams::unit()
    }

    fn static_pair(k: f64, a: f64, b: f64, tau: f64, steps: usize) -> HistoryPair {
        let dt = tau / steps as f64;
        HistoryPair::single(
            ModeHistory::constant(k, dt, steps, a).unwrap(),
            ModeHistory::constant(k, dt, steps, b).unwrap(),
        )
        .unwrap()
    }

    fn random_history(k: f64, dt: f64, len: usize, s: &mut NoiseStream) -> ModeHistory {
        ModeHistory::new(k, dt, (0..len).map(|_| s.standard_normal()).collect()).unwrap()
    }

    #[test]
    fn pair_validation() {
        let a = ModeHistory::constant(1.0, 0.1, 10, 1.0).unwrap();
        let b = ModeHistory::constant(2.0, 0.1, 10, 1.0).unwrap();
        let c = ModeHistory::constant(1.0, 0.2, 10, 1.0).unwrap();
        let d = ModeHistory::constant(1.0, 0.1, 11, 1.0).unwrap();
        assert!(HistoryPair::single(a.clone(), b).is_err());
        assert!(HistoryPair::single(a.clone(), c).is_err());
        assert!(HistoryPair::single(a.clone(), d).is_err());
        assert!(HistoryPair::new(vec![a.clone()], vec![a.clone()], vec![]).is_err());
        assert!(HistoryPair::new(vec![a.clone()], vec![a], vec![0.0]).is_err());
    }

    #[test]
    fn kernel_on_constant_history() {
        let m = MediumParams::new(2.0, 4.0, 0.5, 1).unwrap();
        let h = ModeHistory::constant(3.0, 0.1, 10, 0.8).unwrap();
        let out = dissipation_kernel_apply(&m, &h).unwrap();
        let want = coupling_constant(&m, 3.0).unwrap() * relaxation_rate(&m, 3.0) * 0.8;
        for v in &out[1..out.len() - 1] {
            assert!((v - want).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_annihilates_decay() {
        let m = unit();
        let err = |dt: f64| {
            let vals = (0..=(2.0 / dt) as usize).map(|n| (-(n as f64) * dt).exp()).collect();
            let h = ModeHistory::new(1.0, dt, vals).unwrap();
            let out = dissipation_kernel_apply(&m, &h).unwrap();
            out[1..out.len() - 1].iter().fold(0.0f64, |a, v| a.max(v.abs()))
        };
        let (e1, e2) = (err(0.02), err(0.01));
        assert!(e1 < 1e-3);
        let order = (e1 / e2).log2();
        assert!((1.9..2.1).contains(&order), "order {order}");
    }

    #[test]
    fn kernel_errors() {
        let h0 = ModeHistory::constant(0.0, 0.1, 5, 1.0).unwrap();
        assert_eq!(dissipation_kernel_apply(&unit(), &h0), Err(Error::SingularMode));
        let short = ModeHistory::constant(1.0, 0.1, 1, 1.0).unwrap();
        assert!(matches!(
            dissipation_kernel_apply(&unit(), &short),
            Err(Error::TooShortHistory { .. })
        ));
    }

    #[test]
    fn kernel_reduces_to_langevin_drift() {
        let m = MediumParams::new(1.3, 0.6, 2.2, 1).unwrap();
        let mut s = NoiseStream::new(4, 0, 1.0);
        let h = random_history(1.7, 0.05, 64, &mut s);
        let coupling = coupling_constant(&m, 1.7).unwrap();
        let mu = dissipation_kernel_apply(&m, &h).unwrap();
        let drift = drift_residual(&m, &h).unwrap();
        for (a, b) in mu.iter().zip(&drift) {
            assert!((a / coupling - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn noise_kernel_examples() {
        assert!((noise_kernel_amplitude(&unit(), 1.0).unwrap() - 2.0).abs() < 1e-15);
        let m = MediumParams::new(2.0, 4.0, 0.5, 1).unwrap();
        // 2·1.125·(16/9)² = 64/9
        let v = noise_kernel_amplitude(&m, 3.0).unwrap();
        assert!((v - 64.0 / 9.0).abs() < 1e-14);
        assert_eq!(noise_kernel_amplitude(&m, 0.0), Err(Error::SingularMode));
    }

    #[test]
    fn action_examples() {
        let m = unit();
        let same = static_pair(1.0, 0.4, 0.4, 2.0, 20);
        assert_eq!(influence_action(&m, &same).unwrap(), InfluenceValue { re: 0.0, im: 0.0 });

        // Static (1, 0) over τ = 2: Re = ½·τ·1·1·(0 + 1·1), Im = τ·1·1·1.
        let pair = static_pair(1.0, 1.0, 0.0, 2.0, 20);
        let v = influence_action(&m, &pair).unwrap();
        assert!((v.re - 1.0).abs() < 1e-14, "{v:?}");
        assert!((v.im - 2.0).abs() < 1e-14, "{v:?}");

        let w = influence_action(&m, &pair.swapped()).unwrap();
        assert_eq!(w.re, -v.re);
        assert_eq!(w.im, v.im);
        assert_eq!(antisymmetry_residual(&m, &pair).unwrap(), 0.0);
        assert_eq!(antisymmetry_residual(&m, &same).unwrap(), 0.0);
    }

    #[test]
    fn action_rejects_conserved_mode() {
        let pair = static_pair(0.0, 1.0, 0.0, 1.0, 4);
        assert_eq!(influence_action(&unit(), &pair), Err(Error::SingularMode));
    }

    #[test]
    fn static_identity_examples() {
        let m = unit();
        assert_eq!(static_free_energy_identity(&m, &[1.0], &[0.5], &[0.5], &[1.0]).unwrap(), 0.0);
        // Both sides ½.
        let r = static_free_energy_identity(&m, &[1.0], &[1.0], &[0.0], &[1.0]).unwrap();
        assert!(r <= 1e-15);
        assert_eq!(
            static_free_energy_identity(&m, &[0.0], &[1.0], &[0.0], &[1.0]),
            Err(Error::SingularMode)
        );
        assert!(static_free_energy_identity(&m, &[1.0], &[1.0, 2.0], &[0.0], &[1.0]).is_err());
    }

    #[test]
    fn decoherence_examples() {
        let m = unit();
        let same = static_pair(1.0, 0.3, 0.3, 10.0, 50);
        let r = decoherence_exponent(&m, &same).unwrap();
        assert_eq!((r.exponent, r.magnitude), (0.0, 1.0));

        // 2·0.01·10
        let pair = static_pair(1.0, 0.1, 0.0, 10.0, 100);
        let r = decoherence_exponent(&m, &pair).unwrap();
        assert!((r.exponent - 0.2).abs() < 1e-13, "{}", r.exponent);
        assert!((r.magnitude - (-0.2f64).exp()).abs() < 1e-13);
        assert!((r.magnitude - 0.8187307530779818).abs() < 1e-13);
        assert!(!r.conserved_divergence);
    }

    #[test]
    fn decoherence_of_conserved_mode() {
        let m = unit();
        let r = decoherence_exponent(&m, &static_pair(0.0, 0.1, 0.0, 1.0, 4)).unwrap();
        assert!(r.exponent.is_infinite());
        assert_eq!(r.magnitude, 0.0);
        assert!(r.conserved_divergence);
        let r = decoherence_exponent(&m, &static_pair(0.0, 0.1, 0.1, 1.0, 4)).unwrap();
        assert_eq!(r.magnitude, 1.0);
        assert!(!r.conserved_divergence);
    }

    #[test]
    fn decoherence_is_twice_noise_action() {
        // |D|² = |e^{iA}|² requires exponent = 2·Im A_IF.
        let m = MediumParams::new(0.8, 1.9, 0.4, 1).unwrap();
        let mut s = NoiseStream::new(9, 0, 1.0);
        let ks = [0.3, 1.1, 2.5];
        let b1: Vec<_> = ks.iter().map(|&k| random_history(k, 0.02, 40, &mut s)).collect();
        let b2: Vec<_> = ks.iter().map(|&k| random_history(k, 0.02, 40, &mut s)).collect();
        let pair = HistoryPair::new(b1, b2, vec![0.5, 1.0, 2.0]).unwrap();
        let deco = decoherence_exponent(&m, &pair).unwrap();
        let act = influence_action(&m, &pair).unwrap();
        assert!((deco.exponent - 2.0 * act.im).abs() <= 1e-12 * deco.exponent);
        assert!((deco.magnitude - act.influence_magnitude_sq()).abs() <= 1e-12);
    }

    #[test]
    fn scan_examples() {
        let rows = decoherence_scan(&unit(), &[4.0, 1.0, 2.0], 0.1, 10.0, DEFAULT_SCAN_STEPS).unwrap();
        let ks: Vec<f64> = rows.iter().map(|r| r.k).collect();
        assert_eq!(ks, vec![1.0, 2.0, 4.0]);
        for (row, want) in rows.iter().zip([0.2, 0.05, 0.0125]) {
            assert!((row.exponent - want).abs() < 1e-13, "{row:?}");
        }
        assert!(scan_is_monotone(&rows));

        let single = decoherence_scan(&unit(), &[3.0], 0.1, 1.0, 10).unwrap();
        assert!(scan_is_monotone(&single));

        let with_zero = decoherence_scan(&unit(), &[1.0, 0.0], 0.1, 1.0, 10).unwrap();
        assert_eq!(with_zero[0].k, 0.0);
        assert_eq!(with_zero[0].magnitude, 0.0);
        assert!(with_zero[0].conserved);
        assert!(scan_is_monotone(&with_zero));

        assert!(decoherence_scan(&unit(), &[1.0], 0.0, 1.0, 10).is_err());
        assert!(decoherence_scan(&unit(), &[1.0], 0.1, -1.0, 10).is_err());
        assert!(decoherence_scan(&unit(), &[-1.0], 0.1, 1.0, 10).is_err());
    }

    fn arb_params() -> impl Strategy<Value = MediumParams> {
        (0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0)
            .prop_map(|(t, c, d)| MediumParams::new(t, c, d, 1).unwrap())
    }

    proptest! {
        #[test]
        fn antisymmetry_holds(m in arb_params(), seed in any::<u64>(), k in 0.05f64..5.0, len in 3usize..40) {
            let mut s = NoiseStream::new(seed, 0, 1.0);
            let pair = HistoryPair::single(
                random_history(k, 0.1, len, &mut s),
                random_history(k, 0.1, len, &mut s),
            ).unwrap();
            prop_assert!(antisymmetry_residual(&m, &pair).unwrap() <= 1e-12);
            prop_assert!(influence_action(&m, &pair).unwrap().im > 0.0);
        }

        #[test]
        fn noise_kernel_identity(m in arb_params(), k in 0.01f64..20.0) {
            let nu = noise_kernel_amplitude(&m, k).unwrap();
            let two_t0_a = 2.0 * m.t0() * coupling_constant(&m, k).unwrap();
            prop_assert!((nu - two_t0_a).abs() <= 1e-14 * two_t0_a);
        }

        #[test]
        fn static_identity_random(
            m in arb_params(),
            amps in proptest::collection::vec((0.05f64..5.0, -3.0f64..3.0, -3.0f64..3.0, 0.1f64..2.0), 1..8),
        ) {
            let ks: Vec<f64> = amps.iter().map(|a| a.0).collect();
            let a: Vec<f64> = amps.iter().map(|a| a.1).collect();
            let b: Vec<f64> = amps.iter().map(|a| a.2).collect();
            let w: Vec<f64> = amps.iter().map(|a| a.3).collect();
            prop_assert!(static_free_energy_identity(&m, &ks, &a, &b, &w).unwrap() <= 1e-14);
        }

        #[test]
        fn decoherence_scales_as_inverse_k_squared(m in arb_params(), seed in any::<u64>(), k in 0.05f64..5.0) {
            let mut s = NoiseStream::new(seed, 0, 1.0);
            let a = random_history(k, 0.1, 20, &mut s);
            let b = random_history(k, 0.1, 20, &mut s);
            let at = |kk: f64| {
                let re = |h: &ModeHistory| ModeHistory::new(kk, h.dt(), h.values().to_vec()).unwrap();
                decoherence_exponent(&m, &HistoryPair::single(re(&a), re(&b)).unwrap()).unwrap()
            };
            let (lo, hi) = (at(k), at(2.0 * k));
            prop_assert!((lo.exponent / hi.exponent - 4.0).abs() <= 1e-14 * 4.0);
            prop_assert!(hi.magnitude >= lo.magnitude);
        }
    }
}
