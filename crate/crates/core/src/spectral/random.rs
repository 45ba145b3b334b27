use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::num_complex::Complex64;

use super::{Grid, SpectralField};

/// Zero-mean random field with every lattice index `|j| <= band` on every axis (cosine order
/// `p <= band` on a Neumann axis), scaled to the given L² norm.
///
/// A band below the Nyquist index keeps the field clear of the modes that first derivatives
/// discard.
pub fn random_band_limited<R: Rng + ?Sized>(
    grid: &Grid,
    band: usize,
    norm: f64,
    rng: &mut R,
) -> SpectralField {
    let noise: Vec<f64> = (0..grid.len()).map(|_| rng.sample(StandardNormal)).collect();
    let white = SpectralField::new(grid.clone(), noise).expect("sample count matches grid");
    let band = band as i64;
    let filtered = white.map_spectrum(|mode, c| {
        if mode.k2 == 0.0 || mode.index.iter().any(|j| j.abs() > band) {
            Complex64::default()
        } else {
            c
        }
    });
    let current = filtered.norm_l2();
    if current == 0.0 {
        return filtered;
    }
    filtered.scale(norm / current)
}
