//! Real-space lattice fields versus mode amplitudes.
//!
//! Convention: c(m) = (1/N)·Σ_j δT(x_j)·e^(−i k_m·x_j) with k_m = 2π m/L per
//! axis, so c(0) is the spatial mean and Σ_j a^d δT_j² = V·Σ_m |c(m)|².

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};
use crate::lattice::{LatticeField, LatticeGeometry};
use crate::medium::{free_energy_change, MediumParams};
use crate::noise::NoiseStream;
use crate::stats::{sample_variance, EnsembleStats};

/// Tolerance (relative to the largest coefficient) for Hermitian symmetry
/// and for the imaginary residue of the inverse transform.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Complex mode amplitudes of a real periodic field, stored in the same
/// row-major layout as the lattice. Index m_ax ∈ [0, N_ax) stands for the
/// signed wave index m_ax − N_ax when m_ax > N_ax/2.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    geometry: LatticeGeometry,
    coefficients: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(geometry: LatticeGeometry, coefficients: Vec<Complex64>) -> Result<Self> {
        if coefficients.len() != geometry.n_sites() {
            return Err(Error::InvalidGeometry(format!(
                "{} coefficients for {} modes",
                coefficients.len(),
                geometry.n_sites()
            )));
        }
        Ok(Self {
            geometry,
            coefficients,
        })
    }

    pub fn zeros(geometry: LatticeGeometry) -> Self {
        let n = geometry.n_sites();
        Self {
            geometry,
            coefficients: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coefficients
    }

    fn flat_index(&self, m: &[i64]) -> usize {
        assert_eq!(m.len(), self.geometry.dim(), "wave index has wrong dimension");
        m.iter()
            .zip(self.geometry.extents())
            .fold(0, |acc, (&mi, &n)| acc * n + mi.rem_euclid(n as i64) as usize)
    }

    /// Coefficient at a signed integer wave index (wrapped periodically).
    pub fn coefficient(&self, m: &[i64]) -> Complex64 {
        self.coefficients[self.flat_index(m)]
    }

    pub fn set_coefficient(&mut self, m: &[i64], value: Complex64) {
        let i = self.flat_index(m);
        self.coefficients[i] = value;
    }

    /// Signed wave index of a flat storage position.
    pub fn wave_index(&self, flat: usize) -> Vec<i64> {
        self.geometry
            .site_index(flat)
            .into_iter()
            .zip(self.geometry.extents())
            .map(|(i, &n)| {
                let i = i as i64;
                if 2 * i > n as i64 {
                    i - n as i64
                } else {
                    i
                }
            })
            .collect()
    }

    /// Physical wave vector k_m = 2π m/L.
    pub fn wave_vector(&self, m: &[i64]) -> Vec<f64> {
        m.iter()
            .zip(self.geometry.lengths())
            .map(|(&mi, l)| 2.0 * PI * mi as f64 / l)
            .collect()
    }

    /// max_m |c(−m) − conj(c(m))| relative to max_m |c(m)|.
    pub fn hermitian_residual(&self) -> f64 {
        let scale = self.coefficients.iter().fold(0.0f64, |a, c| a.max(c.norm()));
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0f64;
        for flat in 0..self.coefficients.len() {
            let m = self.wave_index(flat);
            let neg: Vec<i64> = m.iter().map(|v| -v).collect();
            let diff = (self.coefficient(&neg) - self.coefficients[flat].conj()).norm();
            worst = worst.max(diff);
        }
        worst / scale
    }
}

/// In-place multi-dimensional DFT (unnormalized) over a row-major array.
fn fft_nd(data: &mut [Complex64], extents: &[usize], direction: FftDirection) {
    let mut planner = FftPlanner::<f64>::new();
    let total = data.len();
    let mut stride = 1;
    for ax in (0..extents.len()).rev() {
        let n = extents[ax];
        if n > 1 {
            let fft = planner.plan_fft(n, direction);
            let mut line = vec![Complex64::new(0.0, 0.0); n];
            let block = n * stride;
            for outer in (0..total).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (i, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + i * stride];
                    }
                    fft.process(&mut line);
                    for (i, v) in line.iter().enumerate() {
                        data[base + i * stride] = *v;
                    }
                }
            }
        }
        stride *= n;
    }
}

pub fn to_modes(field: &LatticeField) -> SpectralField {
    let geometry = field.geometry().clone();
    let n = geometry.n_sites() as f64;
    let mut data: Vec<Complex64> = field
        .values()
        .iter()
        .map(|&v| Complex64::new(v, 0.0))
        .collect();
    fft_nd(&mut data, geometry.extents(), FftDirection::Forward);
    for c in &mut data {
        *c /= n;
    }
    SpectralField {
        geometry,
        coefficients: data,
    }
}

/// Inverse of [`to_modes`]. Rejects spectra that are not Hermitian to
/// [`HERMITIAN_TOLERANCE`]; the imaginary residue of the result is checked
/// against the same tolerance and then dropped.
pub fn from_modes(spec: &SpectralField) -> Result<LatticeField> {
    let residual = spec.hermitian_residual();
    if residual > HERMITIAN_TOLERANCE {
        return Err(Error::NonHermitian { residual });
    }
    let scale = spec.coefficients.iter().fold(0.0f64, |a, c| a.max(c.norm()));
    let mut data = spec.coefficients.clone();
    fft_nd(&mut data, spec.geometry.extents(), FftDirection::Inverse);
    let max_imag = data.iter().fold(0.0f64, |a, c| a.max(c.im.abs()));
    let bound = HERMITIAN_TOLERANCE * scale * (spec.geometry.n_sites() as f64).max(1.0);
    if max_imag > bound {
        return Err(Error::NonHermitian {
            residual: max_imag / scale,
        });
    }
    LatticeField::new(spec.geometry.clone(), data.iter().map(|c| c.re).collect())
}

/// Relative mismatch between Σ_sites a^d·δT² and V·Σ_m |c(m)|².
pub fn parseval_check(field: &LatticeField) -> f64 {
    let geometry = field.geometry();
    let real_side = geometry.cell_volume() * field.values().iter().map(|v| v * v).sum::<f64>();
    let spec = to_modes(field);
    let mode_side = geometry.volume() * spec.coefficients.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let scale = real_side.abs().max(mode_side.abs());
    if scale == 0.0 {
        0.0
    } else {
        (real_side - mode_side).abs() / scale
    }
}

/// Exact draw from ρ ∝ exp(−β0·ΔF): independent N(0, T0²/(c0·a^d)) sites.
pub fn sample_equilibrium_field(
    params: &MediumParams,
    geometry: &LatticeGeometry,
    stream: &mut NoiseStream,
) -> Result<LatticeField> {
    if geometry.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: geometry.dim(),
        });
    }
    let sd = (params.t0() * params.t0() / (params.c0() * geometry.cell_volume())).sqrt();
    let values = (0..geometry.n_sites())
        .map(|_| sd * stream.standard_normal())
        .collect();
    LatticeField::new(geometry.clone(), values)
}

/// Energy of a perturbation relative to the background, ΔU = c0·Σ a^d·δT.
pub fn energy_change(params: &MediumParams, field: &LatticeField) -> f64 {
    params.c0() * field.geometry().cell_volume() * field.values().iter().sum::<f64>()
}

/// Statistics of ΔU over an ensemble of fields; in equilibrium the variance
/// should be C·T0² with heat capacity C = V·c0.
pub fn total_energy_fluctuation(
    params: &MediumParams,
    fields: &[LatticeField],
) -> Result<EnsembleStats> {
    let first = fields.first().ok_or(Error::TooFewSamples { needed: 2, got: 0 })?;
    if fields.iter().any(|f| f.geometry() != first.geometry()) {
        return Err(Error::GeometryMismatch);
    }
    if first.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            found: first.dim(),
        });
    }
    let energies: Vec<f64> = fields.iter().map(|f| energy_change(params, f)).collect();
    sample_variance(&energies)
}

/// Heat capacity times T0², the expected equilibrium ⟨(ΔU)²⟩.
pub fn expected_energy_variance(params: &MediumParams, geometry: &LatticeGeometry) -> f64 {
    geometry.volume() * params.c0() * params.t0() * params.t0()
}

/// Statistics of ΔF over an ensemble; equipartition predicts mean N·T0/2.
pub fn free_energy_statistics(
    params: &MediumParams,
    fields: &[LatticeField],
) -> Result<EnsembleStats> {
    let values = fields
        .iter()
        .map(|f| free_energy_change(params, f))
        .collect::<Result<Vec<_>>>()?;
    sample_variance(&values)
}
