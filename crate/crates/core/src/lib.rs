//! Probabilistic principal component analysis in primal (explicit feature)
//! and dual (kernel) form.
//!
//! Both formulations are trained in closed form from a single symmetric
//! eigendecomposition: the `d×d` covariance `X_c X_cᵀ` for [`primal`], the
//! `N×N` centered Gram matrix `K_c` for [`dual`]. The dual model projects
//! and reconstructs through kernel vectors only, samples new kernel-space
//! representations through a self-adjoint operator `B`, and maps them back
//! to input space with the kernel smoother in [`preimage`].
//!
//! ```
//! use kppca::{DualModel, KernelSpec, LatentChoice, TrainingSet};
//!
//! let ts = TrainingSet::from_points(&[
//!     vec![0.0, 0.0], vec![1.0, 0.2], vec![2.0, 0.1], vec![0.5, 1.5],
//! ]).unwrap();
//! let model = DualModel::fit(KernelSpec::rbf(1.0).unwrap(), ts, LatentChoice::Q(2)).unwrap();
//! let k = model.observe(&[1.0, 0.0]).unwrap();
//! let h = kppca::dual::dual_latent_map(&model, &k).unwrap();
//! assert_eq!(h.len(), 2);
//! ```

pub mod dual;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod kernels;
pub mod preimage;
pub mod primal;
pub mod rng;
pub mod spectral;
pub mod toy;

pub use dual::{DualModel, KernelSample, SampleOrigin};
pub use error::{ErrorClass, KppcaError, Result};
pub use gaussian::GaussianSpec;
pub use kernels::{KernelFamily, KernelSpec, TrainingSet};
pub use preimage::{PreimageConfig, WeightMode};
pub use primal::{LatentChoice, PrimalModel};
pub use rng::SeedSource;
pub use spectral::{EigenDecomposition, SymMatrix};
