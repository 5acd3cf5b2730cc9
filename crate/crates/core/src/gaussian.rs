use nalgebra::{DMatrix, DVector};

use crate::error::{KppcaError, Result};

/// A multivariate normal given by its mean and a factor `B` with
/// covariance `B Bᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianSpec {
    pub mean: DVector<f64>,
    pub cov_factor: DMatrix<f64>,
}

impl GaussianSpec {
    pub fn new(mean: DVector<f64>, cov_factor: DMatrix<f64>) -> Result<Self> {
        if cov_factor.nrows() != mean.len() {
            return Err(KppcaError::DimensionMismatch {
                expected: mean.len(),
                found: cov_factor.nrows(),
            });
        }
        Ok(GaussianSpec { mean, cov_factor })
    }

    /// Builds the factor from an explicit SPD covariance via Cholesky.
    pub(crate) fn from_covariance(mean: DVector<f64>, cov: DMatrix<f64>) -> Result<Self> {
        let chol = cov.cholesky().ok_or(KppcaError::RankDeficient)?;
        Self::new(mean, chol.l())
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.cov_factor * self.cov_factor.transpose()
    }
}
