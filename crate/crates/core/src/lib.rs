//! Simulation and verification toolkit for fluctuating heat diffusion.
//!
//! Temperature perturbations δT are decomposed into Fourier modes δT_k that
//! relax at γ_k = D0k²/c0 and are driven by white noise whose strength
//! Γ_k = D0k²T0²/c0² keeps the equilibrium variance at T0²/c0. On top of the
//! dynamics the crate evaluates the two-history influence action and the
//! decoherence exponent ∝ 1/k², which makes long-wavelength (nearly
//! conserved) modes the most strongly decohered.
//!
//! Modules:
//! - [`medium`]: background state, rates, coupling constants, free energy.
//! - [`lattice`]: real-space fields on periodic lattices.
//! - [`noise`]: reproducible Gaussian noise substreams.
//! - [`langevin`]: exact and Euler–Maruyama steppers, ensembles.
//! - [`stats`]: variances with error bars, autocorrelation, rate fits.
//! - [`field`]: lattice/mode transforms and equilibrium field sampling.
//! - [`influence`]: influence action, kernels and decoherence exponents.

pub mod error;
pub mod field;
pub mod influence;
pub mod langevin;
pub mod lattice;
pub mod medium;
pub mod noise;
pub mod stats;

pub use error::{Error, Result};
pub use lattice::{LatticeField, LatticeGeometry};
pub use medium::{MediumParams, ModeSpec};
