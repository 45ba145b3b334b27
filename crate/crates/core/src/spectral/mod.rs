//! Band-limited real fields on the N-torus (optionally with a cosine last axis) and their
//! exact spectral calculus.

mod fft;
mod field;
mod grid;
mod padded;
mod random;

pub use field::{Moments, Parity, SpectralField, View};
pub use grid::{AxisKind, Grid, Mode};
pub use padded::Padded;
pub use random::random_band_limited;

pub use rustfft::num_complex::Complex64;
