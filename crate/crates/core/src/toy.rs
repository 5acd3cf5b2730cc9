//! Synthetic two-arc data for demonstrations and tests.
//!
//! This is a stand-in 2-D dataset of interleaved arcs; it is not any
//! published dataset.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::rng::SeedSource;

pub const DEFAULT_RADIUS: f64 = 4.0;
pub const DEFAULT_NOISE: f64 = 0.4;

/// `count` points, alternating between an upper arc centered at the origin
/// and a lower arc shifted by `(radius, radius/2)`, with isotropic Gaussian
/// jitter of standard deviation `noise`. Returned as `2×count`.
pub fn two_arcs(count: usize, radius: f64, noise: f64, seed: &SeedSource) -> DMatrix<f64> {
    let mut rng = seed.rng();
    let upper = count.div_ceil(2);
    let lower = count / 2;
    let mut out = DMatrix::zeros(2, count);
    for j in 0..count {
        let (k, of) = if j % 2 == 0 {
            (j / 2, upper)
        } else {
            (j / 2, lower)
        };
        let t = if of > 1 {
            k as f64 / (of - 1) as f64
        } else {
            0.5
        };
        let angle = std::f64::consts::PI * t;
        let (x, y) = if j % 2 == 0 {
            (radius * angle.cos(), radius * angle.sin())
        } else {
            (
                radius - radius * angle.cos(),
                radius / 2.0 - radius * angle.sin(),
            )
        };
        let jx: f64 = rng.sample(StandardNormal);
        let jy: f64 = rng.sample(StandardNormal);
        out[(0, j)] = x + noise * jx;
        out[(1, j)] = y + noise * jy;
    }
    out
}
