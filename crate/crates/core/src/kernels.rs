//! Kernel functions, Gram assembly and out-of-sample centering.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{KppcaError, Result};
use crate::spectral::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelFamily {
    Linear,
    Rbf,
}

/// Kernel family and its hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    /// RBF bandwidth; ignored by the linear kernel.
    pub gamma: f64,
}

impl KernelSpec {
    pub fn linear() -> Self {
        KernelSpec {
            family: KernelFamily::Linear,
            gamma: 0.0,
        }
    }

    /// `k(x, y) = exp(−‖x − y‖² / (2γ²))`.
    pub fn rbf(gamma: f64) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(KppcaError::InvalidArgument(format!(
                "RBF bandwidth must be positive and finite, got {gamma}"
            )));
        }
        Ok(KernelSpec {
            family: KernelFamily::Rbf,
            gamma,
        })
    }

    fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match self.family {
            KernelFamily::Linear => x.iter().zip(y).map(|(a, b)| a * b).sum(),
            KernelFamily::Rbf => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-sq / (2.0 * self.gamma * self.gamma)).exp()
            }
        }
    }
}

impl std::fmt::Display for KernelSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.family {
            KernelFamily::Linear => write!(f, "linear"),
            KernelFamily::Rbf => write!(f, "rbf(gamma={})", self.gamma),
        }
    }
}

/// `N` input points of common dimension, stored one point per column.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    points: DMatrix<f64>,
}

impl TrainingSet {
    /// `points` is `d_in × N`, one sample per column.
    pub fn new(points: DMatrix<f64>) -> Result<Self> {
        if points.ncols() == 0 || points.nrows() == 0 {
            return Err(KppcaError::InvalidArgument(
                "training set needs at least one point of dimension >= 1".into(),
            ));
        }
        crate::spectral::ensure_finite(&points)?;
        Ok(TrainingSet { points })
    }

    pub fn from_points(points: &[Vec<f64>]) -> Result<Self> {
        let d = points.first().map_or(0, Vec::len);
        if let Some(bad) = points.iter().find(|p| p.len() != d) {
            return Err(KppcaError::DimensionMismatch {
                expected: d,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(d, points.len(), |i, j| points[j][i]))
    }

    pub fn len(&self) -> usize {
        self.points.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.points.ncols() == 0
    }

    pub fn input_dim(&self) -> usize {
        self.points.nrows()
    }

    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn point(&self, i: usize) -> &[f64] {
        let d = self.input_dim();
        &self.points.as_slice()[i * d..(i + 1) * d]
    }
}

pub fn kernel_eval(spec: &KernelSpec, x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(KppcaError::DimensionMismatch {
            expected: x.len(),
            found: y.len(),
        });
    }
    Ok(spec.eval_unchecked(x, y))
}

/// Uncentered Gram matrix `K[i][j] = k(x_i, x_j)`.
pub fn gram(spec: &KernelSpec, ts: &TrainingSet) -> Result<SymMatrix> {
    let n = ts.len();
    let mut k = DMatrix::zeros(n, n);
    for j in 0..n {
        for i in 0..=j {
            let v = spec.eval_unchecked(ts.point(i), ts.point(j));
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    SymMatrix::new(k)
}

/// Uncentered kernel vector `(k(x, x_1), …, k(x, x_N))`.
pub fn kernel_vector(spec: &KernelSpec, ts: &TrainingSet, x: &[f64]) -> Result<DVector<f64>> {
    if x.len() != ts.input_dim() {
        return Err(KppcaError::DimensionMismatch {
            expected: ts.input_dim(),
            found: x.len(),
        });
    }
    Ok(DVector::from_iterator(
        ts.len(),
        (0..ts.len()).map(|i| spec.eval_unchecked(x, ts.point(i))),
    ))
}

/// Row means and grand mean of the training Gram matrix; enough to center
/// any out-of-sample kernel vector without recomputing `K`.
#[derive(Debug, Clone, PartialEq)]
pub struct GramCentering {
    pub row_means: DVector<f64>,
    pub total_mean: f64,
}

impl GramCentering {
    pub fn from_gram(k: &SymMatrix) -> Self {
        let n = k.dim() as f64;
        let row_means = DVector::from_iterator(k.dim(), k.matrix().row_iter().map(|r| r.sum() / n));
        let total_mean = row_means.sum() / n;
        GramCentering {
            row_means,
            total_mean,
        }
    }

    /// `k_c,i = k_i − mean(k) − r_i + t`.
    pub fn center(&self, k: &DVector<f64>) -> DVector<f64> {
        let own_mean = k.mean();
        DVector::from_fn(k.len(), |i, _| {
            k[i] - own_mean - self.row_means[i] + self.total_mean
        })
    }

    /// Inverse of [`center`](Self::center) given the vector's own kernel
    /// mean `(1/N) Σ_j k(x, x_j)`, which centering discards.
    pub fn uncenter(&self, kc: &DVector<f64>, own_mean: f64) -> DVector<f64> {
        DVector::from_fn(kc.len(), |i, _| {
            kc[i] + own_mean + self.row_means[i] - self.total_mean
        })
    }
}

/// Centered out-of-sample kernel vector with entries `k_c(x, x_i)`.
pub fn centered_kernel_vector(
    spec: &KernelSpec,
    ts: &TrainingSet,
    x: &[f64],
) -> Result<DVector<f64>> {
    let k = kernel_vector(spec, ts, x)?;
    let centering = GramCentering::from_gram(&gram(spec, ts)?);
    Ok(centering.center(&k))
}
