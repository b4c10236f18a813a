//! Real-space temperature perturbations on periodic rectangular lattices.

use crate::error::{Error, Result};

/// Shape of a rectangular lattice: points per axis and spacing per axis.
///
/// Sites are stored in row-major order, the last axis varying fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeGeometry {
    extents: Vec<usize>,
    spacing: Vec<f64>,
}

impl LatticeGeometry {
    pub fn new(extents: Vec<usize>, spacing: Vec<f64>) -> Result<Self> {
        if extents.is_empty() || extents.len() > 3 {
            return Err(Error::InvalidGeometry(format!(
                "dimension must be 1..=3, got {}",
                extents.len()
            )));
        }
        if spacing.len() != extents.len() {
            return Err(Error::InvalidGeometry(format!(
                "{} extents but {} spacings",
                extents.len(),
                spacing.len()
            )));
        }
        if extents.contains(&0) {
            return Err(Error::InvalidGeometry("extents must be >= 1".into()));
        }
        if spacing.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::InvalidGeometry(
                "spacing must be positive and finite".into(),
            ));
        }
        Ok(Self { extents, spacing })
    }

    /// Same spacing `a` along every axis.
    pub fn uniform(extents: Vec<usize>, a: f64) -> Result<Self> {
        let spacing = vec![a; extents.len()];
        Self::new(extents, spacing)
    }

    pub fn dim(&self) -> usize {
        self.extents.len()
    }

    pub fn extents(&self) -> &[usize] {
        &self.extents
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn n_sites(&self) -> usize {
        self.extents.iter().product()
    }

    /// Volume of one lattice cell, a^d.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Per-axis periodic box lengths L = N·a.
    pub fn lengths(&self) -> Vec<f64> {
        self.extents
            .iter()
            .zip(&self.spacing)
            .map(|(&n, &a)| n as f64 * a)
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.lengths().iter().product()
    }

    /// Multi-index of a flat site index.
    pub fn site_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for ax in (0..self.dim()).rev() {
            idx[ax] = flat % self.extents[ax];
            flat /= self.extents[ax];
        }
        idx
    }
}

/// Temperature perturbation δT sampled on the sites of a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeField {
    geometry: LatticeGeometry,
    values: Vec<f64>,
}

impl LatticeField {
    pub fn new(geometry: LatticeGeometry, values: Vec<f64>) -> Result<Self> {
        if values.len() != geometry.n_sites() {
            return Err(Error::InvalidGeometry(format!(
                "{} values for {} sites",
                values.len(),
                geometry.n_sites()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidGeometry("field values must be finite".into()));
        }
        Ok(Self { geometry, values })
    }

    pub fn zeros(geometry: LatticeGeometry) -> Self {
        let n = geometry.n_sites();
        Self {
            geometry,
            values: vec![0.0; n],
        }
    }

    /// One-dimensional field with spacing `a`.
    pub fn line(a: f64, values: Vec<f64>) -> Result<Self> {
        let geometry = LatticeGeometry::uniform(vec![values.len()], a)?;
        Self::new(geometry, values)
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn dim(&self) -> usize {
        self.geometry.dim()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Returns a copy with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            geometry: self.geometry.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}
