//! Probabilistic PCA over explicit, finite-dimensional features.
//!
//! The covariance convention is the unnormalized `C = X_c X_cᵀ`; the `1/N`
//! enters only through the loadings `√(λ_p/N − σ²)`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{KppcaError, Result};
use crate::gaussian::GaussianSpec;
use crate::spectral::{center_columns, sym_eig, SymMatrix};

/// How the latent dimension and noise variance are chosen at fit time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LatentChoice {
    /// Fix `q`; the noise variance takes its maximum-likelihood value.
    Q(usize),
    /// Fix `σ²`; `q` becomes the largest `p` with `λ_p/N ≥ σ²`.
    Sigma2(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalModel {
    /// Feature mean.
    pub mu: DVector<f64>,
    /// `d×q` loadings; column `p` is `√(λ_p/N − σ²) v_p`.
    pub w: DMatrix<f64>,
    pub sigma2: f64,
    pub q: usize,
    /// Spectrum of `X_c X_cᵀ`, padded with zeros to length `N`, descending.
    pub eigenvalues: DVector<f64>,
    /// `d×q` leading covariance eigenvectors.
    pub v: DMatrix<f64>,
}

impl PrimalModel {
    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn n_samples(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Loadings' singular values `s_p = √(λ_p/N − σ²)`.
    pub fn singular_values(&self) -> DVector<f64> {
        let n = self.n_samples() as f64;
        DVector::from_fn(self.q, |p, _| {
            (self.eigenvalues[p] / n - self.sigma2).max(0.0).sqrt()
        })
    }

    fn check_feature(&self, phi: &DVector<f64>) -> Result<()> {
        if phi.len() != self.dim() {
            return Err(KppcaError::DimensionMismatch {
                expected: self.dim(),
                found: phi.len(),
            });
        }
        Ok(())
    }
}

/// Mean discarded eigenvalue over `N`: `Σ_{p>q} λ_p / (N (N − q))`.
///
/// `eigenvalues` may be shorter than `n`; missing trailing values count as
/// zero. Returns [`KppcaError::QEqualsN`] when `q ≥ n`, where the caller
/// should use zero by convention.
pub fn sigma2_ml(eigenvalues: &[f64], q: usize, n: usize) -> Result<f64> {
    if eigenvalues.len() > n {
        return Err(KppcaError::DimensionMismatch {
            expected: n,
            found: eigenvalues.len(),
        });
    }
    if q >= n {
        return Err(KppcaError::QEqualsN);
    }
    let discarded: f64 = eigenvalues.iter().skip(q).sum();
    Ok(discarded / (n as f64 * (n - q) as f64))
}

pub(crate) fn sigma2_ml_or_zero(eigenvalues: &[f64], q: usize, n: usize) -> Result<f64> {
    match sigma2_ml(eigenvalues, q, n) {
        Err(KppcaError::QEqualsN) => Ok(0.0),
        other => other,
    }
}

/// Resolves `(q, σ²)` against a descending spectrum, allowing `q ≤ max_q`.
pub(crate) fn resolve_latent(
    eigenvalues: &[f64],
    n: usize,
    max_q: usize,
    latent: LatentChoice,
) -> Result<(usize, f64)> {
    let nf = n as f64;
    match latent {
        LatentChoice::Q(q) => {
            if q == 0 || q > max_q {
                return Err(KppcaError::LatentTooLarge { q, max: max_q });
            }
            Ok((q, sigma2_ml_or_zero(eigenvalues, q, n)?))
        }
        LatentChoice::Sigma2(sigma2) => {
            if !(sigma2.is_finite() && sigma2 >= 0.0) {
                return Err(KppcaError::InvalidArgument(format!(
                    "noise variance must be finite and non-negative, got {sigma2}"
                )));
            }
            let max = eigenvalues.first().copied().unwrap_or(0.0) / nf;
            if max_q == 0 || sigma2 > max {
                return Err(KppcaError::SigmaTooLarge { sigma2, max });
            }
            let q = (1..=max_q)
                .rev()
                .find(|&p| eigenvalues[p - 1] / nf >= sigma2)
                .unwrap_or(1);
            Ok((q, sigma2))
        }
    }
}

/// Closed-form maximum-likelihood fit on a `d×N` data matrix (one sample
/// per column).
pub fn fit_primal(x: &DMatrix<f64>, latent: LatentChoice) -> Result<PrimalModel> {
    let (d, n) = x.shape();
    if d == 0 || n == 0 {
        return Err(KppcaError::InvalidArgument(
            "data matrix must be at least 1x1".into(),
        ));
    }
    let (xc, mu) = center_columns(x)?;
    let cov = SymMatrix::new(&xc * xc.transpose())?;
    let eig = sym_eig(&cov)?;

    let kept = d.min(n);
    let eigenvalues = DVector::from_fn(n, |p, _| if p < kept { eig.eigenvalues[p] } else { 0.0 });
    let (q, sigma2) = resolve_latent(eigenvalues.as_slice(), n, kept, latent)?;

    let v = eig.eigenvectors.columns(0, q).into_owned();
    let mut w = v.clone();
    for (p, mut col) in w.column_iter_mut().enumerate() {
        col *= (eigenvalues[p] / n as f64 - sigma2).max(0.0).sqrt();
    }

    Ok(PrimalModel {
        mu,
        w,
        sigma2,
        q,
        eigenvalues,
        v,
    })
}

fn posterior_precision(m: &PrimalModel) -> DMatrix<f64> {
    m.w.transpose() * &m.w + DMatrix::identity(m.q, m.q) * m.sigma2
}

/// `h | φ ~ N(M⁻¹ Wᵀ(φ − μ), σ² M⁻¹)` with `M = WᵀW + σ²I`.
pub fn latent_posterior(m: &PrimalModel, phi: &DVector<f64>) -> Result<GaussianSpec> {
    m.check_feature(phi)?;
    if m.sigma2 <= 0.0 {
        return Err(KppcaError::SigmaZero);
    }
    let m_inv = posterior_precision(m)
        .cholesky()
        .ok_or(KppcaError::RankDeficient)?
        .inverse();
    let mean = &m_inv * m.w.transpose() * (phi - &m.mu);
    GaussianSpec::from_covariance(mean, m_inv * m.sigma2)
}

/// MAP latent code. At `σ² = 0` this is the pseudo-inverse `W⁺(φ − μ)`
/// with singular values below `1e-10·s_1` treated as zero.
pub fn latent_map(m: &PrimalModel, phi: &DVector<f64>) -> Result<DVector<f64>> {
    m.check_feature(phi)?;
    let centered = phi - &m.mu;
    if m.sigma2 > 0.0 {
        let chol = posterior_precision(m)
            .cholesky()
            .ok_or(KppcaError::RankDeficient)?;
        return Ok(chol.solve(&(m.w.transpose() * centered)));
    }
    let svd = m.w.clone().svd(true, true);
    let s1 = svd.singular_values.max();
    if s1 == 0.0 {
        return Ok(DVector::zeros(m.q));
    }
    let pinv = svd
        .pseudo_inverse(1e-10 * s1)
        .map_err(|e| KppcaError::InvalidArgument(e.to_string()))?;
    Ok(pinv * centered)
}

/// `φ = W h + μ`.
pub fn feature_reconstruct(m: &PrimalModel, h: &DVector<f64>) -> Result<DVector<f64>> {
    if h.len() != m.w.ncols() {
        return Err(KppcaError::DimensionMismatch {
            expected: m.w.ncols(),
            found: h.len(),
        });
    }
    Ok(&m.w * h + &m.mu)
}

/// Log-likelihood of the columns of `x` under `N(μ, WWᵀ + σ²I)`.
///
/// Uses the singular values of `W`: the covariance has eigenvalues
/// `s_p² + σ²` along the left singular vectors and `σ²` elsewhere.
pub fn marginal_loglik(m: &PrimalModel, x: &DMatrix<f64>) -> Result<f64> {
    if m.sigma2 <= 0.0 {
        return Err(KppcaError::SigmaZero);
    }
    let d = m.dim();
    if x.nrows() != d {
        return Err(KppcaError::DimensionMismatch {
            expected: d,
            found: x.nrows(),
        });
    }
    let svd = m.w.clone().svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let s2 = m.sigma2;

    let mut log_det = (d - svd.singular_values.len()) as f64 * s2.ln();
    for s in svd.singular_values.iter() {
        log_det += (s * s + s2).ln();
    }
    let norm_const = d as f64 * (2.0 * std::f64::consts::PI).ln() + log_det;

    let mut total = 0.0;
    for col in x.column_iter() {
        let y = col - &m.mu;
        let proj = u.transpose() * &y;
        let mut quad = y.norm_squared();
        for (c, s) in proj.iter().zip(svd.singular_values.iter()) {
            quad -= c * c * (s * s) / (s * s + s2);
        }
        total -= 0.5 * (norm_const + quad / s2);
    }
    Ok(total)
}

/// Draws `count` feature vectors as `μ + W z + σ ζ`.
pub fn sample_feature<R: Rng + ?Sized>(m: &PrimalModel, rng: &mut R, count: usize) -> DMatrix<f64> {
    let d = m.dim();
    let sigma = m.sigma2.sqrt();
    let mut out = DMatrix::zeros(d, count);
    for mut col in out.column_iter_mut() {
        let z = DVector::from_fn(m.q, |_, _| rng.sample::<f64, _>(StandardNormal));
        let noise = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        col.copy_from(&(&m.w * z + &m.mu + noise * sigma));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn sigma2_worked_example() {
        assert_eq!(sigma2_ml(&[4.0, 2.0, 1.0, 1.0], 2, 4).unwrap(), 0.25);
    }

    #[test]
    fn sigma2_zero_tail() {
        assert_eq!(sigma2_ml(&[4.0, 2.0, 0.0, 0.0], 2, 4).unwrap(), 0.0);
        assert_eq!(sigma2_ml(&[4.0, 2.0], 2, 4).unwrap(), 0.0);
    }

    #[test]
    fn sigma2_q_equals_n() {
        assert!(matches!(
            sigma2_ml(&[1.0, 0.5], 2, 2),
            Err(KppcaError::QEqualsN)
        ));
        assert_eq!(sigma2_ml_or_zero(&[1.0, 0.5], 2, 2).unwrap(), 0.0);
    }

    fn rank_one_data() -> DMatrix<f64> {
        // All samples along (1, 2, 2)/3.
        let t = [-2.0, -0.5, 0.5, 1.0, 1.0];
        DMatrix::from_fn(3, 5, |i, j| {
            t[j] * [1.0, 2.0, 2.0][i] / 3.0 + [1.0, 0.0, -1.0][i]
        })
    }

    #[test]
    fn rank_one_fit() {
        let x = rank_one_data();
        let m = fit_primal(&x, LatentChoice::Q(1)).unwrap();
        assert!(m.sigma2.abs() < 1e-15);
        let n = 5.0;
        let dir = DVector::from_vec(vec![1.0, 2.0, 2.0]) / 3.0;
        let w = m.w.column(0).into_owned();
        assert!((w.norm() - (m.eigenvalues[0] / n).sqrt()).abs() < 1e-12);
        assert!((w.normalize().dot(&dir).abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn full_rank_has_zero_noise() {
        let x = dmatrix![1.0, 2.0, 0.0, -1.0; 0.5, -1.0, 2.0, 0.0];
        let m = fit_primal(&x, LatentChoice::Q(2)).unwrap();
        assert_eq!(m.sigma2, 0.0);
        let expected = m.eigenvalues.rows(0, 2).map(|l| (l / 4.0).sqrt());
        let norms = DVector::from_iterator(2, m.w.column_iter().map(|c| c.norm()));
        assert!((norms - expected).amax() < 1e-12);
    }

    #[test]
    fn latent_out_of_range() {
        let x = rank_one_data();
        assert!(matches!(
            fit_primal(&x, LatentChoice::Q(4)),
            Err(KppcaError::LatentTooLarge { q: 4, max: 3 })
        ));
        assert!(matches!(
            fit_primal(&x, LatentChoice::Q(0)),
            Err(KppcaError::LatentTooLarge { .. })
        ));
    }

    #[test]
    fn sigma_choice_picks_latent_dimension() {
        let x = dmatrix![3.0, -3.0, 0.0, 0.0; 0.0, 0.0, 1.0, -1.0];
        // C_c = diag(18, 2), N = 4 → λ/N = (4.5, 0.5).
        let m = fit_primal(&x, LatentChoice::Sigma2(1.0)).unwrap();
        assert_eq!((m.q, m.sigma2), (1, 1.0));
        let m = fit_primal(&x, LatentChoice::Sigma2(0.5)).unwrap();
        assert_eq!(m.q, 2, "tie on λ_p/N includes p");
        assert!(m.w.column(1).norm() < 1e-12);
        assert!(matches!(
            fit_primal(&x, LatentChoice::Sigma2(5.0)),
            Err(KppcaError::SigmaTooLarge { .. })
        ));
    }

    fn noisy_model() -> (DMatrix<f64>, PrimalModel) {
        let x = DMatrix::from_fn(3, 7, |i, j| {
            ((i * 7 + j) as f64 * 1.37).sin() * (i + 1) as f64
        });
        let m = fit_primal(&x, LatentChoice::Q(1)).unwrap();
        (x, m)
    }

    #[test]
    fn posterior_at_mean_is_zero() {
        let (_, m) = noisy_model();
        let post = latent_posterior(&m, &m.mu).unwrap();
        assert!(post.mean.amax() < 1e-15);
        assert_eq!(latent_map(&m, &m.mu).unwrap().amax(), 0.0);
    }

    #[test]
    fn posterior_covariance_closed_form() {
        let (_, m) = noisy_model();
        let post = latent_posterior(&m, &m.mu).unwrap();
        let cov = post.covariance();
        let n = m.n_samples() as f64;
        assert!((cov[(0, 0)] - n * m.sigma2 / m.eigenvalues[0]).abs() < 1e-12);
    }

    #[test]
    fn scalar_posterior_mean() {
        let (x, m) = noisy_model();
        let phi = x.column(2).into_owned();
        let s1 = m.singular_values()[0];
        let v1 = m.v.column(0);
        let expected = s1 * v1.dot(&(&phi - &m.mu)) / (s1 * s1 + m.sigma2);
        let post = latent_posterior(&m, &phi).unwrap();
        assert!((post.mean[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn posterior_needs_noise() {
        let x = dmatrix![1.0, 2.0, 0.0; 0.5, -1.0, 2.0];
        let m = fit_primal(&x, LatentChoice::Sigma2(0.0)).unwrap();
        assert!(matches!(
            latent_posterior(&m, &m.mu),
            Err(KppcaError::SigmaZero)
        ));
        assert!(matches!(
            marginal_loglik(&m, &x),
            Err(KppcaError::SigmaZero)
        ));
    }

    #[test]
    fn reconstruct_zero_is_mean() {
        let (_, m) = noisy_model();
        assert_eq!(feature_reconstruct(&m, &DVector::zeros(1)).unwrap(), m.mu);
        assert!(feature_reconstruct(&m, &DVector::zeros(2)).is_err());
    }

    #[test]
    fn scalar_loglik_at_mean() {
        let m = PrimalModel {
            mu: DVector::from_element(1, 0.3),
            w: DMatrix::zeros(1, 1),
            sigma2: 0.7,
            q: 1,
            eigenvalues: DVector::zeros(1),
            v: DMatrix::identity(1, 1),
        };
        let x = DMatrix::from_element(1, 1, 0.3);
        let ll = marginal_loglik(&m, &x).unwrap();
        let expected = -0.5 * (2.0 * std::f64::consts::PI * 0.7).ln();
        assert!((ll - expected).abs() < 1e-14);
    }

    #[test]
    fn adding_the_mean_adds_the_normalizer() {
        let (x, m) = noisy_model();
        let base = marginal_loglik(&m, &x).unwrap();
        let mut extended = x.clone().insert_column(x.ncols(), 0.0);
        extended.set_column(x.ncols(), &m.mu);
        let more = marginal_loglik(&m, &extended).unwrap();
        let at_mean =
            marginal_loglik(&m, &DMatrix::from_columns(std::slice::from_ref(&m.mu))).unwrap();
        assert!((more - base - at_mean).abs() < 1e-10);
    }

    #[test]
    fn degenerate_sampler_returns_mean() {
        let m = PrimalModel {
            mu: DVector::from_vec(vec![1.0, -2.0]),
            w: DMatrix::zeros(2, 1),
            sigma2: 0.0,
            q: 1,
            eigenvalues: DVector::zeros(3),
            v: DMatrix::zeros(2, 1),
        };
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let s = sample_feature(&m, &mut rng, 4);
        for col in s.column_iter() {
            assert_eq!(col, m.mu);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        let (_, m) = noisy_model();
        let a = sample_feature(&m, &mut ChaCha20Rng::seed_from_u64(11), 16);
        let b = sample_feature(&m, &mut ChaCha20Rng::seed_from_u64(11), 16);
        assert_eq!(a, b);
    }
}
