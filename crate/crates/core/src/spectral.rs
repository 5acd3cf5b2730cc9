//! Dense symmetric eigendecomposition, centering, and PSD square roots.
//!
//! Every estimator in the crate reduces to one full eigendecomposition of
//! either a centered Gram matrix (dual) or an unnormalized covariance
//! `X_c X_cᵀ` (primal). Eigenpairs are always stored in descending order
//! with a deterministic sign convention so fitted models are reproducible.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{KppcaError, Result};

/// Relative eigenvalue floor: values below `CLAMP_RELATIVE * max(1, λ_1)`
/// are treated as exact zeros.
pub const CLAMP_RELATIVE: f64 = 1e-12;

const MAX_SWEEPS: usize = 10_000;

/// A square matrix that is symmetric exactly as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix(DMatrix<f64>);

impl SymMatrix {
    /// Symmetrizes `m` as `(M + Mᵀ)/2`.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(KppcaError::DimensionMismatch {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        if m.nrows() == 0 {
            return Err(KppcaError::InvalidArgument(
                "symmetric matrix must be at least 1x1".into(),
            ));
        }
        ensure_finite(&m)?;
        let mut out = m;
        let n = out.nrows();
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
                out[(i, j)] = avg;
                out[(j, i)] = avg;
            }
        }
        Ok(SymMatrix(out))
    }

    pub fn from_fn(n: usize, f: impl FnMut(usize, usize) -> f64) -> Result<Self> {
        Self::new(DMatrix::from_fn(n, n, f))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// Largest absolute row sum; zero (to rounding) for a centered Gram matrix.
    pub fn max_abs_row_sum(&self) -> f64 {
        self.0.row_iter().map(|r| r.sum().abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }
}

/// Descending eigenpairs of a symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    /// Clamped eigenvalues, descending. Values with magnitude below the floor are zero.
    pub eigenvalues: DVector<f64>,
    /// Eigenvalues as returned by the solver (sorted, unclamped).
    pub raw_eigenvalues: DVector<f64>,
    /// Column `p` pairs with `eigenvalues[p]`.
    pub eigenvectors: DMatrix<f64>,
    pub clamp_floor: f64,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Number of eigenvalues strictly above the clamp floor.
    pub fn rank(&self) -> usize {
        self.eigenvalues.iter().filter(|&&l| l > 0.0).count()
    }

    pub fn vector(&self, p: usize) -> DVector<f64> {
        self.eigenvectors.column(p).into_owned()
    }

    /// `V diag(λ_raw) Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        rebuild(&self.eigenvectors, self.raw_eigenvalues.iter().copied())
    }

    /// `V diag(f(λ_p)) Vᵀ` over the clamped spectrum.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        rebuild(&self.eigenvectors, self.eigenvalues.iter().map(|&l| f(l)))
    }

    /// `V diag(c) Vᵀ` for an arbitrary per-eigenvector scale `c`.
    pub fn map_spectrum_with(&self, scales: impl IntoIterator<Item = f64>) -> DMatrix<f64> {
        rebuild(&self.eigenvectors, scales.into_iter())
    }
}

fn rebuild(v: &DMatrix<f64>, diag: impl Iterator<Item = f64>) -> DMatrix<f64> {
    let mut scaled = v.clone();
    for (mut col, d) in scaled.column_iter_mut().zip(diag) {
        col *= d;
    }
    scaled * v.transpose()
}

pub(crate) fn ensure_finite(m: &DMatrix<f64>) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(KppcaError::NonFinite)
    }
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()))
}

/// Full eigendecomposition of a symmetric matrix, eigenvalues descending.
///
/// Each eigenvector is flipped so that its entry of largest magnitude is
/// positive; near-ties (within 1e-10 relative) go to the lowest index.
pub fn sym_eig(m: &SymMatrix) -> Result<EigenDecomposition> {
    let n = m.dim();
    let eig = SymmetricEigen::try_new(m.matrix().clone(), f64::EPSILON, MAX_SWEEPS)
        .ok_or(KppcaError::NoConvergence)?;
    if !eig.eigenvalues.iter().all(|x| x.is_finite()) {
        return Err(KppcaError::NoConvergence);
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let raw = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        normalize_sign(&mut col);
        vectors.set_column(dst, &col);
    }

    let clamp_floor = CLAMP_RELATIVE * raw[0].max(1.0);
    let clamped = raw.map(|l| {
        if l.abs() < clamp_floor || l < 0.0 {
            0.0
        } else {
            l
        }
    });

    Ok(EigenDecomposition {
        eigenvalues: clamped,
        raw_eigenvalues: raw,
        eigenvectors: vectors,
        clamp_floor,
    })
}

fn normalize_sign(v: &mut DVector<f64>) {
    let peak = v.iter().fold(0.0, |acc: f64, x| acc.max(x.abs()));
    if peak == 0.0 {
        return;
    }
    let threshold = peak * (1.0 - 1e-10);
    let lead = v
        .iter()
        .position(|x| x.abs() >= threshold)
        .expect("peak entry exists");
    if v[lead] < 0.0 {
        v.neg_mut();
    }
}

/// Double-centers a Gram matrix: `J K J` with `J = I − 𝟙𝟙ᵀ/N`.
pub fn center_gram(k: &SymMatrix) -> Result<SymMatrix> {
    let n = k.dim();
    let m = k.matrix();
    ensure_finite(m)?;
    let inv_n = 1.0 / n as f64;
    let row_means: Vec<f64> = m.row_iter().map(|r| r.sum() * inv_n).collect();
    let total_mean = row_means.iter().sum::<f64>() * inv_n;
    let centered = DMatrix::from_fn(n, n, |i, j| {
        m[(i, j)] - row_means[i] - row_means[j] + total_mean
    });
    SymMatrix::new(centered)
}

/// Subtracts the column average from every column of a `d×N` data matrix.
pub fn center_columns(x: &DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if x.ncols() == 0 {
        return Err(KppcaError::InvalidArgument(
            "at least one sample is required".into(),
        ));
    }
    ensure_finite(x)?;
    let mean = x.column_mean();
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        col -= &mean;
    }
    Ok((centered, mean))
}

/// Symmetric PSD square root `V diag(√λ) Vᵀ`.
pub fn psd_sqrt_factor(e: &EigenDecomposition) -> Result<DMatrix<f64>> {
    if let Some(&bad) = e.raw_eigenvalues.iter().find(|&&l| l < -e.clamp_floor) {
        return Err(KppcaError::NegativeEigenvalue {
            value: bad,
            floor: e.clamp_floor,
        });
    }
    Ok(e.map_spectrum(f64::sqrt))
}
