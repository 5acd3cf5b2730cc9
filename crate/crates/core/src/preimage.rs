//! Kernel-smoother preimages: `x̂ = Σ w_i x_i / (Σ w_i + ε)`.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::dual::{DualModel, KernelSample, SampleOrigin};
use crate::error::{KppcaError, Result};
use crate::kernels::TrainingSet;

/// Denominators smaller than this in magnitude are rejected.
pub const NORMALIZER_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PreimageConfig {
    /// Added to the normalizer.
    pub epsilon: f64,
    /// Zero out negative weights before normalizing.
    pub clip_negative: bool,
}

impl PreimageConfig {
    pub fn new(epsilon: f64, clip_negative: bool) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(KppcaError::InvalidArgument(format!(
                "stabilization epsilon must be finite and non-negative, got {epsilon}"
            )));
        }
        Ok(PreimageConfig {
            epsilon,
            clip_negative,
        })
    }
}

/// Which kernel vector feeds the smoother.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightMode {
    /// The centered representation `k_c` as is.
    #[default]
    Centered,
    /// `k_c` with the training row means added back.
    Uncentered,
}

pub fn kernel_smoother(
    ts: &TrainingSet,
    k: &DVector<f64>,
    cfg: &PreimageConfig,
) -> Result<DVector<f64>> {
    if k.len() != ts.len() {
        return Err(KppcaError::DimensionMismatch {
            expected: ts.len(),
            found: k.len(),
        });
    }
    let weights = if cfg.clip_negative {
        k.map(|w| w.max(0.0))
    } else {
        k.clone()
    };
    let denom = weights.sum() + cfg.epsilon;
    if denom.is_nan() || denom.abs() < NORMALIZER_FLOOR {
        return Err(KppcaError::DegenerateNormalizer(denom));
    }
    Ok(ts.points() * weights / denom)
}

/// Smoother weights for a kernel-space sample under `mode`.
///
/// Uncentering needs the sample's own kernel mean, which is only known for
/// observed inputs; other samples use the training average.
pub fn smoother_weights(
    m: &DualModel,
    sample: &KernelSample,
    mode: WeightMode,
    own_mean: Option<f64>,
) -> Result<DVector<f64>> {
    match mode {
        WeightMode::Centered => Ok(sample.kc_vec.clone()),
        WeightMode::Uncentered => {
            let c = m.centering();
            let own = match (own_mean, &sample.origin) {
                (Some(v), _) => v,
                (None, SampleOrigin::Observed(x)) => m.kernel_mean(x)?,
                (None, _) => c.total_mean,
            };
            Ok(c.uncenter(&sample.kc_vec, own))
        }
    }
}

/// Preimage of a kernel-space sample.
pub fn preimage(
    m: &DualModel,
    sample: &KernelSample,
    mode: WeightMode,
    own_mean: Option<f64>,
    cfg: &PreimageConfig,
) -> Result<DVector<f64>> {
    let w = smoother_weights(m, sample, mode, own_mean)?;
    kernel_smoother(&m.ts, &w, cfg)
}
