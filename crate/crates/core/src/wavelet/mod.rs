//! Haar and Walsh bases on the normalized interval `[0, 1)`.
//!
//! The Haar system used here is the constant scaling function plus the
//! wavelets `h_i^j` for orders `i >= 1`. Both transforms are midpoint-rule
//! projections of a sampled signal, exact for signals that are constant on
//! dyadic bins aligned with the sample grid.

mod haar;
mod walsh;

pub use haar::{
    haar_eval, haar_partial_sum, haar_reconstruct_points, haar_transform, inner_product,
    Coefficient, DyadicIndex, HaarBasis, HaarCoefficients, HaarLevel, MAX_ORDER,
};
pub use walsh::{
    walsh_eval, walsh_inner_product, walsh_inverse, walsh_reconstruct, walsh_sign_changes,
    walsh_transform, WalshSpectrum,
};

pub(crate) use walsh::walsh_value;

use crate::error::{Error, Result};
use crate::protocol::Provenance;

/// Piecewise-constant field estimate at the `2^n` dyadic bin centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    order: u32,
    points: Vec<f64>,
    sigmas: Vec<f64>,
    provenance: Option<Provenance>,
}

impl Reconstruction {
    pub fn new(order: u32, points: Vec<f64>, sigmas: Vec<f64>) -> Result<Self> {
        if points.len() != sigmas.len() {
            return Err(Error::LengthMismatch {
                expected: points.len(),
                actual: sigmas.len(),
            });
        }
        if sigmas.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::InvalidSignal("negative sigma in reconstruction".into()));
        }
        Ok(Self {
            order,
            points,
            sigmas,
            provenance: None,
        })
    }

    pub fn with_provenance(mut self, provenance: Provenance) -> Self {
        self.provenance = Some(provenance);
        self
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn provenance(&self) -> Option<&Provenance> {
        self.provenance.as_ref()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Bin centers in microseconds for a window of length `duration_us`.
    pub fn bin_centers_us(&self, duration_us: f64) -> Vec<f64> {
        let n = self.points.len() as f64;
        (0..self.points.len())
            .map(|k| (k as f64 + 0.5) / n * duration_us)
            .collect()
    }
}
