//! Probabilistic PCA expressed entirely through kernel evaluations.
//!
//! Training decomposes the centered Gram matrix `K_c = E Λ Eᵀ` once. The
//! dual loadings are `A = E_q (I/N − σ² Λ_q⁻¹)^{1/2}`, so that with an
//! explicit feature map the primal loadings are recovered as `W = X_c A`.
//! All `N` eigenpairs are kept because the sampler needs the whole spectrum.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{KppcaError, Result};
use crate::gaussian::GaussianSpec;
use crate::kernels::{gram, kernel_vector, GramCentering, KernelSpec, TrainingSet};
use crate::primal::{resolve_latent, LatentChoice};
use crate::rng::SeedSource;
use crate::spectral::{center_gram, psd_sqrt_factor, sym_eig, EigenDecomposition, SymMatrix};

/// Row sums of an input Gram matrix must stay below this (relative to its
/// largest entry, floored at 1) for it to count as centered.
pub const CENTERING_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct DualModel {
    /// `N×q` dual loadings.
    pub a: DMatrix<f64>,
    pub sigma2: f64,
    pub q: usize,
    /// Full decomposition of `kc`.
    pub eig: EigenDecomposition,
    pub kc: SymMatrix,
    pub spec: KernelSpec,
    pub ts: TrainingSet,
    centering: GramCentering,
}

/// Where a kernel-space vector came from.
#[derive(Debug, Clone, PartialEq)]
pub enum SampleOrigin {
    Observed(Vec<f64>),
    Generated { seed: u64, index: u64 },
    Reconstructed,
}

/// A centered kernel representation `k_c` of length `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSample {
    pub kc_vec: DVector<f64>,
    pub origin: SampleOrigin,
}

impl KernelSample {
    pub fn new(kc_vec: DVector<f64>, origin: SampleOrigin) -> Self {
        KernelSample { kc_vec, origin }
    }
}

impl DualModel {
    /// Builds the Gram matrix of `ts`, centers it, and fits.
    pub fn fit(spec: KernelSpec, ts: TrainingSet, latent: LatentChoice) -> Result<Self> {
        let kc = center_gram(&gram(&spec, &ts)?)?;
        fit_dual(kc, latent, spec, ts)
    }

    pub fn n_samples(&self) -> usize {
        self.kc.dim()
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eig.eigenvalues
    }

    pub fn centering(&self) -> &GramCentering {
        &self.centering
    }

    /// Same decomposition, different latent choice; no refactorization.
    pub fn refit(&self, latent: LatentChoice) -> Result<Self> {
        let (q, sigma2, a) = assemble(&self.eig, latent)?;
        Ok(DualModel {
            a,
            sigma2,
            q,
            ..self.clone()
        })
    }

    /// The `σ² → 0` limit at the same `q`: classical kernel PCA.
    pub fn kpca_limit(&self) -> Self {
        let n = self.n_samples() as f64;
        let mut a = self.eig.eigenvectors.columns(0, self.q).into_owned();
        a /= n.sqrt();
        DualModel {
            a,
            sigma2: 0.0,
            ..self.clone()
        }
    }

    /// Centered kernel representation of an input point.
    pub fn observe(&self, x: &[f64]) -> Result<KernelSample> {
        let k = kernel_vector(&self.spec, &self.ts, x)?;
        Ok(KernelSample::new(
            self.centering.center(&k),
            SampleOrigin::Observed(x.to_vec()),
        ))
    }

    /// `(1/N) Σ_j k(x, x_j)` for an input point; the part of the kernel
    /// vector that centering removes.
    pub fn kernel_mean(&self, x: &[f64]) -> Result<f64> {
        Ok(kernel_vector(&self.spec, &self.ts, x)?.mean())
    }

    fn check_sample(&self, k: &KernelSample) -> Result<()> {
        if k.kc_vec.len() != self.n_samples() {
            return Err(KppcaError::DimensionMismatch {
                expected: self.n_samples(),
                found: k.kc_vec.len(),
            });
        }
        Ok(())
    }

    fn check_latent(&self, h: &DVector<f64>) -> Result<()> {
        if h.len() != self.q {
            return Err(KppcaError::DimensionMismatch {
                expected: self.q,
                found: h.len(),
            });
        }
        Ok(())
    }

    /// `AᵀK_cA + σ²I`.
    fn posterior_precision(&self) -> DMatrix<f64> {
        self.a.transpose() * self.kc.matrix() * &self.a
            + DMatrix::identity(self.q, self.q) * self.sigma2
    }
}

/// Loadings for a latent choice, with `q` capped at the numerical rank.
fn assemble(eig: &EigenDecomposition, latent: LatentChoice) -> Result<(usize, f64, DMatrix<f64>)> {
    let n = eig.dim();
    let rank = eig.rank();
    if let LatentChoice::Q(q) = latent {
        if q > rank {
            return Err(KppcaError::LatentExceedsRank { q, rank });
        }
    }
    let (q, sigma2) =
        resolve_latent(eig.eigenvalues.as_slice(), n, rank, latent).map_err(|e| match e {
            KppcaError::LatentTooLarge { q, .. } if q > 0 => {
                KppcaError::LatentExceedsRank { q, rank }
            }
            other => other,
        })?;

    let inv_n = 1.0 / n as f64;
    let mut a = eig.eigenvectors.columns(0, q).into_owned();
    for (p, mut col) in a.column_iter_mut().enumerate() {
        col *= (inv_n - sigma2 / eig.eigenvalues[p]).max(0.0).sqrt();
    }
    Ok((q, sigma2, a))
}

/// Fits the dual model on an already-centered Gram matrix of `ts`.
pub fn fit_dual(
    kc: SymMatrix,
    latent: LatentChoice,
    spec: KernelSpec,
    ts: TrainingSet,
) -> Result<DualModel> {
    if kc.dim() != ts.len() {
        return Err(KppcaError::DimensionMismatch {
            expected: ts.len(),
            found: kc.dim(),
        });
    }
    let max_row_sum = kc.max_abs_row_sum();
    if max_row_sum > CENTERING_TOLERANCE * kc.max_abs().max(1.0) {
        return Err(KppcaError::NotCentered { max_row_sum });
    }
    let eig = sym_eig(&kc)?;
    let (q, sigma2, a) = assemble(&eig, latent)?;
    let centering = GramCentering::from_gram(&gram(&spec, &ts)?);
    Ok(DualModel {
        a,
        sigma2,
        q,
        eig,
        kc,
        spec,
        ts,
        centering,
    })
}

/// Restores a model from stored parts without refactorizing.
pub(crate) fn from_parts(
    a: DMatrix<f64>,
    sigma2: f64,
    eig: EigenDecomposition,
    kc: SymMatrix,
    spec: KernelSpec,
    ts: TrainingSet,
) -> Result<DualModel> {
    let centering = GramCentering::from_gram(&gram(&spec, &ts)?);
    Ok(DualModel {
        q: a.ncols(),
        a,
        sigma2,
        eig,
        kc,
        spec,
        ts,
        centering,
    })
}

/// MAP latent code `(AᵀK_cA + σ²I)⁻¹ Aᵀ k_c`.
pub fn dual_latent_map(m: &DualModel, k: &KernelSample) -> Result<DVector<f64>> {
    m.check_sample(k)?;
    if m.eig.eigenvalues[m.q - 1] <= m.eig.clamp_floor {
        return Err(KppcaError::RankDeficient);
    }
    let chol = m
        .posterior_precision()
        .cholesky()
        .ok_or(KppcaError::RankDeficient)?;
    Ok(chol.solve(&(m.a.transpose() * &k.kc_vec)))
}

/// Diagonal shortcut `N Λ_q⁻¹ Aᵀ k_c`, valid for maximum-likelihood loadings.
pub fn dual_latent_map_closed_form(m: &DualModel, k: &KernelSample) -> Result<DVector<f64>> {
    m.check_sample(k)?;
    if m.eig.eigenvalues[m.q - 1] <= m.eig.clamp_floor {
        return Err(KppcaError::RankDeficient);
    }
    let n = m.n_samples() as f64;
    let proj = m.a.transpose() * &k.kc_vec;
    Ok(DVector::from_fn(m.q, |p, _| {
        n * proj[p] / m.eig.eigenvalues[p]
    }))
}

/// `(k_c)_MAP = K_c A h`.
pub fn dual_reconstruct(m: &DualModel, h: &DVector<f64>) -> Result<KernelSample> {
    m.check_latent(h)?;
    Ok(KernelSample::new(
        m.kc.matrix() * (&m.a * h),
        SampleOrigin::Reconstructed,
    ))
}

/// Per-eigendirection scale of the sampler: `λ_p/√N` for retained
/// components, `σ√λ_p` for the rest, zero on the null space.
pub fn sampler_scales(m: &DualModel) -> DVector<f64> {
    let sqrt_n = (m.n_samples() as f64).sqrt();
    let sigma = m.sigma2.sqrt();
    DVector::from_fn(m.n_samples(), |p, _| {
        let l = m.eig.eigenvalues[p];
        if l <= 0.0 {
            0.0
        } else if p < m.q {
            l / sqrt_n
        } else {
            sigma * l.sqrt()
        }
    })
}

/// Self-adjoint sampling operator `B = E diag(c) Eᵀ`; `B Bᵀ` is the
/// marginal covariance of `k_c`.
pub fn build_sampler(m: &DualModel) -> DMatrix<f64> {
    let c = sampler_scales(m);
    m.eig.map_spectrum_with(c.iter().copied())
}

/// Draws `count` kernel-space samples `B ũ`, `ũ ~ N(0, I_N)`, sample `i`
/// using substream `i` of `seed`.
pub fn dual_sample(m: &DualModel, seed: &SeedSource, count: usize) -> Vec<KernelSample> {
    let b = build_sampler(m);
    let n = m.n_samples();
    (0..count as u64)
        .map(|index| {
            let mut rng = seed.substream(index);
            let u = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
            KernelSample::new(
                &b * u,
                SampleOrigin::Generated {
                    seed: seed.seed(),
                    index,
                },
            )
        })
        .collect()
}

/// Maps a given standard-normal draw through the sampler.
pub fn sample_from_normal(m: &DualModel, u: &DVector<f64>) -> Result<DVector<f64>> {
    if u.len() != m.n_samples() {
        return Err(KppcaError::DimensionMismatch {
            expected: m.n_samples(),
            found: u.len(),
        });
    }
    Ok(build_sampler(m) * u)
}

/// `Σ_{p≤q} λ_p / Σ_p λ_p`.
pub fn explained_variance(m: &DualModel) -> Result<f64> {
    explained_variance_of(m.eig.eigenvalues.as_slice(), m.q)
}

pub fn explained_variance_of(eigenvalues: &[f64], q: usize) -> Result<f64> {
    let total: f64 = eigenvalues.iter().sum();
    if total <= 0.0 {
        return Err(KppcaError::ZeroSpectrum);
    }
    let kept: f64 = eigenvalues.iter().take(q).sum();
    Ok((kept / total).clamp(0.0, 1.0))
}

/// `h | k_c ~ N(Σ Aᵀk_c, Σ)` with `Σ = (AᵀK_cA + σ²I)⁻¹`.
pub fn dual_latent_posterior(m: &DualModel, k: &KernelSample) -> Result<GaussianSpec> {
    m.check_sample(k)?;
    if m.sigma2 <= 0.0 {
        return Err(KppcaError::SigmaZero);
    }
    let cov = m
        .posterior_precision()
        .cholesky()
        .ok_or(KppcaError::RankDeficient)?
        .inverse();
    let mean = &cov * (m.a.transpose() * &k.kc_vec);
    GaussianSpec::from_covariance(mean, cov)
}

/// `k_c | h ~ N(K_c A h, σ² K_c)`, factor `σ K_c^{1/2}`.
pub fn dual_conditional_kernel(m: &DualModel, h: &DVector<f64>) -> Result<GaussianSpec> {
    let mean = dual_reconstruct(m, h)?.kc_vec;
    let factor = psd_sqrt_factor(&m.eig)? * m.sigma2.sqrt();
    GaussianSpec::new(mean, factor)
}
