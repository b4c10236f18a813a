//! Background thermodynamic state and the closed-form kinetic quantities
//! derived from it: relaxation rates, noise strengths, coupling constants,
//! the quadratic free-energy functional and its equilibrium measure.
//!
//! Units are natural throughout (Boltzmann constant = 1).

use crate::error::{invalid, Error, Result};
use crate::lattice::LatticeField;

/// Background state (T0, c0, D0, d) around which temperature fluctuations
/// are linearized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MediumParams {
    t0: f64,
    c0: f64,
    d0: f64,
    dim: usize,
    beta0: f64,
}

impl MediumParams {
    pub fn new(t0: f64, c0: f64, d0: f64, dim: usize) -> Result<Self> {
        for (name, v) in [("T0", t0), ("c0", c0), ("D0", d0)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be positive and finite, got {v}")));
            }
        }
        if !(1..=3).contains(&dim) {
            return Err(invalid("d", format!("spatial dimension must be 1..=3, got {dim}")));
        }
        Ok(Self {
            t0,
            c0,
            d0,
            dim,
            beta0: 1.0 / t0,
        })
    }

    /// T0 = c0 = D0 = 1 in one dimension.
    pub fn unit() -> Self {
        Self::new(1.0, 1.0, 1.0, 1).expect("unit parameters are valid")
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn d0(&self) -> f64 {
        self.d0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn with_dim(self, dim: usize) -> Result<Self> {
        Self::new(self.t0, self.c0, self.d0, dim)
    }
}

/// One Fourier mode: wavenumber magnitude and the quadrature weight that
/// stands in for d^dk when modes are summed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpec {
    k: f64,
    weight: f64,
}

impl ModeSpec {
    pub fn new(k: f64, weight: f64) -> Result<Self> {
        check_wavenumber(k)?;
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(invalid("weight", format!("must be positive, got {weight}")));
        }
        Ok(Self { k, weight })
    }

    /// Unit-weight mode.
    pub fn at(k: f64) -> Result<Self> {
        Self::new(k, 1.0)
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    pub fn is_conserved(&self) -> bool {
        self.k == 0.0
    }
}

pub(crate) fn check_wavenumber(k: f64) -> Result<()> {
    if k >= 0.0 && k.is_finite() {
        Ok(())
    } else {
        Err(invalid("k", format!("wavenumber must be finite and >= 0, got {k}")))
    }
}

/// Relaxation rate γ_k = D0·k²/c0 of the macroscopic diffusion equation.
pub fn relaxation_rate(params: &MediumParams, k: f64) -> f64 {
    params.d0 * k * k / params.c0
}

/// Noise strength Γ_k = D0·k²·T0²/c0², half the white-noise correlation.
pub fn noise_strength(params: &MediumParams, k: f64) -> f64 {
    params.d0 * k * k * params.t0 * params.t0 / (params.c0 * params.c0)
}

/// Coupling constant A_k = c0²/(D0·k²·T0) of the influence action.
///
/// Fixed by requiring the static, imaginary-time-rotated dissipative action
/// to reproduce the free-energy difference; equivalently A_k = T0/Γ_k.
pub fn coupling_constant(params: &MediumParams, k: f64) -> Result<f64> {
    check_wavenumber(k)?;
    if k == 0.0 {
        return Err(Error::SingularMode);
    }
    Ok(params.c0 * params.c0 / (params.d0 * k * k * params.t0))
}

/// Equilibrium variance of a single mode amplitude, ⟨(δT_k)²⟩ = T0²/c0.
pub fn equilibrium_mode_variance(params: &MediumParams) -> f64 {
    params.t0 * params.t0 / params.c0
}

fn check_dim(params: &MediumParams, field: &LatticeField) -> Result<()> {
    if field.dim() != params.dim {
        return Err(Error::DimensionMismatch {
            expected: params.dim,
            found: field.dim(),
        });
    }
    Ok(())
}

/// Free-energy cost ΔF = (c0/2T0)·Σ_sites a^d·δT² of a temperature
/// perturbation (midpoint rule for the spatial integral).
pub fn free_energy_change(params: &MediumParams, field: &LatticeField) -> Result<f64> {
    check_dim(params, field)?;
    let sum_sq = field.values().iter().map(|v| v * v).sum::<f64>();
    Ok(0.5 * params.c0 / params.t0 * field.geometry().cell_volume() * sum_sq)
}

/// Unnormalized log-density of the equilibrium measure, −β0·ΔF.
pub fn equilibrium_log_density(params: &MediumParams, field: &LatticeField) -> Result<f64> {
    Ok(-params.beta0 * free_energy_change(params, field)?)
}

/// Outcome of the finite-difference Hessian check of ΔF.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HessianCheck {
    /// (c0/T0)·a^d, the lattice counterpart of (c0/T0)·δ(x − y).
    pub expected_diagonal: f64,
    /// max_i |H_ii − expected| / expected.
    pub max_diagonal_residual: f64,
    /// max_{i≠j} |H_ij|.
    pub max_off_diagonal: f64,
}

impl HessianCheck {
    /// Max relative deviation from the expected diagonal matrix, with
    /// off-diagonal entries measured against the expected diagonal scale.
    pub fn max_relative_residual(&self) -> f64 {
        self.max_diagonal_residual
            .max(self.max_off_diagonal / self.expected_diagonal)
    }
}

/// Default central-difference step, 1e-3·max(1, max|δT|).
pub fn default_hessian_step(field: &LatticeField) -> f64 {
    let amp = field.values().iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    1e-3 * amp.max(1.0)
}

/// Finite-difference Hessian of [`free_energy_change`] compared with
/// (c0/T0)·a^d·identity.
///
/// Sums of squares are accumulated in double-double arithmetic and the
/// difference stencils are combined before rounding, so the check measures
/// the functional rather than cancellation in the stencil.
pub fn free_energy_hessian_check(
    params: &MediumParams,
    field: &LatticeField,
    step: Option<f64>,
) -> Result<HessianCheck> {
    check_dim(params, field)?;
    let h = step.unwrap_or_else(|| default_hessian_step(field));
    if !(h > 0.0 && h.is_finite()) {
        return Err(invalid("step", format!("must be positive, got {h}")));
    }
    let prefactor = 0.5 * params.c0 / params.t0 * field.geometry().cell_volume();
    let expected = params.c0 / params.t0 * field.geometry().cell_volume();

    let base = field.values();
    let n = base.len();
    let mut probe = base.to_vec();
    let sum_sq = |probe: &[f64]| -> DoubleDouble {
        probe
            .iter()
            .fold(DoubleDouble::ZERO, |acc, &v| acc.add(DoubleDouble::square(v)))
    };

    let centre = sum_sq(&probe);
    let mut max_diag = 0.0_f64;
    let mut max_off = 0.0_f64;
    for i in 0..n {
        let xi = base[i];
        let (xp, xm) = (xi + h, xi - h);
        probe[i] = xp;
        let fp = sum_sq(&probe);
        probe[i] = xm;
        let fm = sum_sq(&probe);
        probe[i] = xi;
        // Second difference with the steps actually realised in floating point.
        let (hp, hm) = (xp - xi, xi - xm);
        let second = fp
            .sub(centre)
            .scale(hm)
            .add(fm.sub(centre).scale(hp))
            .to_f64()
            * 2.0
            / (hp * hm * (hp + hm));
        let hii = prefactor * second;
        max_diag = max_diag.max(((hii - expected) / expected).abs());

        for j in (i + 1)..n {
            let xj = base[j];
            let (yp, ym) = (xj + h, xj - h);
            let mut corner = |a: f64, b: f64| {
                probe[i] = a;
                probe[j] = b;
                sum_sq(&probe)
            };
            let fpp = corner(xp, yp);
            let fpm = corner(xp, ym);
            let fmp = corner(xm, yp);
            let fmm = corner(xm, ym);
            probe[i] = xi;
            probe[j] = xj;
            let mixed = fpp.sub(fpm).sub(fmp).add(fmm).to_f64() / ((hp + hm) * (yp - ym));
            max_off = max_off.max((prefactor * mixed).abs());
        }
    }
    Ok(HessianCheck {
        expected_diagonal: expected,
        max_diagonal_residual: max_diag,
        max_off_diagonal: max_off,
    })
}

/// Unevaluated sum hi + lo with |lo| ≤ ulp(hi)/2.
#[derive(Debug, Clone, Copy)]
struct DoubleDouble {
    hi: f64,
    lo: f64,
}

impl DoubleDouble {
    const ZERO: Self = Self { hi: 0.0, lo: 0.0 };

    fn two_sum(a: f64, b: f64) -> Self {
        let s = a + b;
        let bb = s - a;
        let err = (a - (s - bb)) + (b - bb);
        Self { hi: s, lo: err }
    }

    fn square(v: f64) -> Self {
        let p = v * v;
        Self {
            hi: p,
            lo: v.mul_add(v, -p),
        }
    }

    fn add(self, other: Self) -> Self {
        let s = Self::two_sum(self.hi, other.hi);
        let t = Self::two_sum(self.lo, other.lo);
        let s = Self::two_sum(s.hi, s.lo + t.hi);
        Self::two_sum(s.hi, s.lo + t.lo)
    }

    fn sub(self, other: Self) -> Self {
        self.add(Self {
            hi: -other.hi,
            lo: -other.lo,
        })
    }

    fn scale(self, f: f64) -> Self {
        let p = self.hi * f;
        let err = self.hi.mul_add(f, -p);
        Self::two_sum(p, err + self.lo * f)
    }

    fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::LatticeGeometry;
    use proptest::prelude::*;

    fn p(t0: f64, c0: f64, d0: f64) -> MediumParams {
        MediumParams::new(t0, c0, d0, 1).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn params_validation() {
        assert!(MediumParams::new(0.0, 1.0, 1.0, 1).is_err());
        assert!(MediumParams::new(1.0, -1.0, 1.0, 1).is_err());
        assert!(MediumParams::new(1.0, 1.0, f64::NAN, 1).is_err());
        assert!(MediumParams::new(1.0, 1.0, 1.0, 0).is_err());
        assert!(MediumParams::new(1.0, 1.0, 1.0, 4).is_err());
        let m = MediumParams::new(3.0, 1.0, 1.0, 3).unwrap();
        assert!((m.beta0() * m.t0() - 1.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn mode_spec_validation() {
        assert!(ModeSpec::new(-1.0, 1.0).is_err());
        assert!(ModeSpec::new(1.0, 0.0).is_err());
        assert!(ModeSpec::at(0.0).unwrap().is_conserved());
    }

    #[test]
    fn relaxation_rate_examples() {
        assert_eq!(relaxation_rate(&MediumParams::unit(), 1.0), 1.0);
        // 0.5·9/4
        assert!(rel(relaxation_rate(&p(2.0, 4.0, 0.5), 3.0), 1.125) < 1e-15);
        assert_eq!(relaxation_rate(&p(2.0, 4.0, 0.5), 0.0), 0.0);
    }

    #[test]
    fn noise_strength_examples() {
        assert_eq!(noise_strength(&MediumParams::unit(), 1.0), 1.0);
        // 0.5·9·4/16
        assert!(rel(noise_strength(&p(2.0, 4.0, 0.5), 3.0), 1.125) < 1e-15);
        assert_eq!(noise_strength(&p(2.0, 4.0, 0.5), 0.0), 0.0);
    }

    #[test]
    fn coupling_constant_examples() {
        assert_eq!(coupling_constant(&MediumParams::unit(), 1.0).unwrap(), 1.0);
        // 16/(0.5·9·2)
        let a = coupling_constant(&p(2.0, 4.0, 0.5), 3.0).unwrap();
        assert!(rel(a, 16.0 / 9.0) < 1e-15);
        assert_eq!(
            coupling_constant(&MediumParams::unit(), 0.0),
            Err(Error::SingularMode)
        );
        assert!(coupling_constant(&MediumParams::unit(), -1.0).is_err());
    }

    #[test]
    fn coupling_times_noise_is_t0() {
        let m = p(2.0, 4.0, 0.5);
        let a = coupling_constant(&m, 3.0).unwrap();
        assert!(rel(a * noise_strength(&m, 3.0), m.t0()) < 1e-14);
    }

    #[test]
    fn equilibrium_variance_examples() {
        assert_eq!(equilibrium_mode_variance(&MediumParams::unit()), 1.0);
        assert_eq!(equilibrium_mode_variance(&p(2.0, 4.0, 1.0)), 1.0);
        assert_eq!(equilibrium_mode_variance(&p(3.0, 2.0, 1.0)), 4.5);
    }

    #[test]
    fn free_energy_examples() {
        let unit = MediumParams::unit();
        let zero = LatticeField::zeros(LatticeGeometry::uniform(vec![4], 1.0).unwrap());
        assert_eq!(free_energy_change(&unit, &zero).unwrap(), 0.0);

        let f = LatticeField::line(1.0, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(free_energy_change(&unit, &f).unwrap(), 0.5);

        // (4/4)·0.5·(1 + 1)
        let f = LatticeField::line(0.5, vec![1.0, 1.0]).unwrap();
        assert_eq!(free_energy_change(&p(2.0, 4.0, 1.0), &f).unwrap(), 1.0);
    }

    #[test]
    fn free_energy_dimension_mismatch() {
        let f = LatticeField::zeros(LatticeGeometry::uniform(vec![2, 2], 1.0).unwrap());
        assert_eq!(
            free_energy_change(&MediumParams::unit(), &f),
            Err(Error::DimensionMismatch { expected: 1, found: 2 })
        );
        assert!(equilibrium_log_density(&MediumParams::unit(), &f).is_err());
        assert!(free_energy_hessian_check(&MediumParams::unit(), &f, None).is_err());
    }

    #[test]
    fn log_density_examples() {
        let unit = MediumParams::unit();
        let zero = LatticeField::zeros(LatticeGeometry::uniform(vec![3], 1.0).unwrap());
        assert_eq!(equilibrium_log_density(&unit, &zero).unwrap(), 0.0);
        let f = LatticeField::line(1.0, vec![2.0]).unwrap();
        assert_eq!(equilibrium_log_density(&unit, &f).unwrap(), -2.0);
        let f2 = f.scaled(2.0);
        assert_eq!(equilibrium_log_density(&unit, &f2).unwrap(), -8.0);
    }

    #[test]
    fn hessian_examples() {
        let unit = MediumParams::unit();
        let f = LatticeField::line(1.0, vec![0.3, -1.7, 2.2, 0.0, 5.0]).unwrap();
        let check = free_energy_hessian_check(&unit, &f, Some(1e-3)).unwrap();
        assert_eq!(check.expected_diagonal, 1.0);
        assert!(check.max_relative_residual() <= 1e-6, "{check:?}");
        assert!(check.max_off_diagonal <= 1e-10, "{check:?}");

        let m = p(2.0, 4.0, 1.0);
        let f = LatticeField::line(0.5, vec![1.0, -2.0, 0.25]).unwrap();
        let check = free_energy_hessian_check(&m, &f, None).unwrap();
        assert_eq!(check.expected_diagonal, 1.0);
        assert!(check.max_diagonal_residual <= 1e-6);
        assert!(check.max_off_diagonal <= 1e-10);

        assert!(free_energy_hessian_check(&unit, &f, Some(0.0)).is_err());
    }

    #[test]
    fn hessian_in_three_dimensions() {
        let m = MediumParams::new(1.5, 0.7, 2.0, 3).unwrap();
        let g = LatticeGeometry::new(vec![2, 2, 2], vec![0.5, 1.0, 2.0]).unwrap();
        let vals = (0..8).map(|i| (i as f64 * 0.37).sin() * 3.0).collect();
        let f = LatticeField::new(g, vals).unwrap();
        let check = free_energy_hessian_check(&m, &f, None).unwrap();
        assert!(rel(check.expected_diagonal, 0.7 / 1.5) < 1e-15);
        assert!(check.max_diagonal_residual <= 1e-6);
        assert!(check.max_off_diagonal <= 1e-10);
    }

    fn arb_params() -> impl Strategy<Value = MediumParams> {
        (0.1f64..10.0, 0.1f64..10.0, 0.1f64..10.0)
            .prop_map(|(t, c, d)| MediumParams::new(t, c, d, 1).unwrap())
    }

    proptest! {
        #[test]
        fn einstein_relation_closes(m in arb_params(), k in 1e-3f64..50.0) {
            let ratio = noise_strength(&m, k) / relaxation_rate(&m, k);
            prop_assert!(rel(ratio, equilibrium_mode_variance(&m)) < 1e-12);
        }

        #[test]
        fn coupling_noise_product(m in arb_params(), k in 1e-3f64..50.0) {
            let a = coupling_constant(&m, k).unwrap();
            prop_assert!(rel(a * noise_strength(&m, k), m.t0()) < 1e-12);
        }

        #[test]
        fn rates_scale_as_k_squared(m in arb_params(), k in 1e-3f64..50.0) {
            prop_assert!(rel(relaxation_rate(&m, 2.0 * k), 4.0 * relaxation_rate(&m, k)) < 1e-14);
            prop_assert!(rel(noise_strength(&m, 2.0 * k), 4.0 * noise_strength(&m, k)) < 1e-14);
        }

        #[test]
        fn free_energy_is_quadratic(
            m in arb_params(),
            vals in proptest::collection::vec(-5.0f64..5.0, 1..32),
            lambda in -4.0f64..4.0,
        ) {
            let f = LatticeField::line(0.7, vals).unwrap();
            let base = free_energy_change(&m, &f).unwrap();
            let scaled = free_energy_change(&m, &f.scaled(lambda)).unwrap();
            prop_assert!(base >= 0.0);
            prop_assert!((scaled - lambda * lambda * base).abs() <= 1e-12 * base.max(1e-300) + 1e-300);
        }

        #[test]
        fn log_density_peaks_at_zero_field(
            m in arb_params(),
            vals in proptest::collection::vec(-5.0f64..5.0, 1..16),
        ) {
            let f = LatticeField::line(1.0, vals).unwrap();
            let zero = LatticeField::zeros(f.geometry().clone());
            prop_assert!(
                equilibrium_log_density(&m, &zero).unwrap() >= equilibrium_log_density(&m, &f).unwrap()
            );
        }
    }
}
