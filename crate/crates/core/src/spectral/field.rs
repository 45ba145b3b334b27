use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::fft::{fft3, Direction};
use super::grid::{Grid, Mode};
use super::padded::{pad, Padded};
use crate::error::{Error, Result};

/// Symmetry of a field across the faces of a Neumann axis.
///
/// Admissible fields are even (cosine series). Differentiating once along the Neumann axis
/// produces an odd (sine series) field; such fields only appear as intermediate quantities.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    fn flip(self) -> Self {
        match self {
            Parity::Even => Parity::Odd,
            Parity::Odd => Parity::Even,
        }
    }
}

/// Which view [`SpectralField::transform`] should populate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum View {
    Spectrum,
    Samples,
}

/// `M2 = ∫u², M3 = ∫u³, M4 = ∫u⁴` with exact quadrature for band-limited `u`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub m2: f64,
    pub m3: f64,
    pub m4: f64,
}

/// A real band-limited scalar field on a [`Grid`], held as samples and/or spectrum.
///
/// Fields are immutable; each view is computed at most once and cached. The spectrum lives
/// on the extended lattice (see [`Grid`]) in FFT order and is normalised so entry 0 is the
/// mean over the unit cell.
#[derive(Clone)]
pub struct SpectralField {
    grid: Grid,
    parity: Parity,
    values: OnceLock<Arc<[f64]>>,
    spectrum: OnceLock<Arc<[Complex64]>>,
}

impl fmt::Debug for SpectralField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SpectralField")
            .field("grid", &self.grid)
            .field("parity", &self.parity)
            .field("mean", &self.mean())
            .finish()
    }
}

impl SpectralField {
    /// Field from real samples, row-major with the last axis fastest.
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ShapeMismatch {
                expected: grid.len(),
                found: values.len(),
            });
        }
        let field = Self {
            grid,
            parity: Parity::Even,
            values: OnceLock::new(),
            spectrum: OnceLock::new(),
        };
        let _ = field.values.set(values.into());
        Ok(field)
    }

    pub fn constant(grid: Grid, m: f64) -> Self {
        let mut spectrum = vec![Complex64::default(); grid.ext_len()];
        spectrum[0] = Complex64::new(m, 0.0);
        Self::from_spectrum(grid, Parity::Even, spectrum)
    }

    /// Sample `f(x)` at the grid points; `x` has one coordinate per axis.
    pub fn from_fn(grid: Grid, f: impl Fn(&[f64]) -> f64) -> Self {
        let dims = grid.dims3();
        let offset = 3 - grid.rank();
        let mut values = Vec::with_capacity(grid.len());
        let mut x = [0.0; 3];
        for i0 in 0..dims[0] {
            x[0] = grid.coordinate(0, i0);
            for i1 in 0..dims[1] {
                x[1] = grid.coordinate(1, i1);
                for i2 in 0..dims[2] {
                    x[2] = grid.coordinate(2, i2);
                    values.push(f(&x[offset..]));
                }
            }
        }
        Self::new(grid, values).expect("sample count matches grid")
    }

    pub fn from_spectrum(grid: Grid, parity: Parity, spectrum: Vec<Complex64>) -> Self {
        debug_assert_eq!(spectrum.len(), grid.ext_len());
        let field = Self {
            grid,
            parity,
            values: OnceLock::new(),
            spectrum: OnceLock::new(),
        };
        let _ = field.spectrum.set(spectrum.into());
        field
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// Real samples (row-major, last axis fastest; Neumann samples at cell midpoints).
    pub fn values(&self) -> &[f64] {
        self.values.get_or_init(|| self.samples_from_spectrum().into())
    }

    /// Extended-lattice coefficients in FFT order, normalised so entry 0 is the mean.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum
            .get_or_init(|| self.spectrum_from_samples().into())
    }

    /// Populate the requested view.
    pub fn transform(&self, view: View) -> Self {
        match view {
            View::Spectrum => {
                self.spectrum();
            }
            View::Samples => {
                self.values();
            }
        }
        self.clone()
    }

    pub fn mean(&self) -> f64 {
        match self.parity {
            Parity::Even => self.spectrum()[0].re,
            // An odd field integrates to zero over the mirrored cell but not over the
            // physical one; report the physical mean from the samples.
            Parity::Odd => {
                let v = self.values();
                v.iter().sum::<f64>() / v.len() as f64
            }
        }
    }

    fn spectrum_from_samples(&self) -> Vec<Complex64> {
        let values = self.values.get().expect("field has samples");
        let ext = self.grid.ext_dims();
        let stored = self.grid.dims3();
        let mut buf = vec![Complex64::default(); self.grid.ext_len()];
        let sign = match self.parity {
            Parity::Even => 1.0,
            Parity::Odd => -1.0,
        };
        let mirrored = ext[2] != stored[2];
        for outer in 0..stored[0] * stored[1] {
            for j in 0..stored[2] {
                let v = values[outer * stored[2] + j];
                buf[outer * ext[2] + j] = Complex64::new(v, 0.0);
                if mirrored {
                    buf[outer * ext[2] + ext[2] - 1 - j] = Complex64::new(sign * v, 0.0);
                }
            }
        }
        fft3(&mut buf, ext, Direction::Forward);
        let scale = 1.0 / self.grid.ext_len() as f64;
        for c in &mut buf {
            *c *= scale;
        }
        buf
    }

    fn samples_from_spectrum(&self) -> Vec<f64> {
        let spectrum = self.spectrum.get().expect("field has a spectrum");
        let ext = self.grid.ext_dims();
        let stored = self.grid.dims3();
        let mut buf = spectrum.to_vec();
        fft3(&mut buf, ext, Direction::Inverse);
        let mut out = Vec::with_capacity(self.grid.len());
        for outer in 0..stored[0] * stored[1] {
            for j in 0..stored[2] {
                out.push(buf[outer * ext[2] + j].re);
            }
        }
        out
    }

    /// Cosine/sine pair `(a_k, b_k)` of the real expansion
    /// `a_0 + Σ (a_k cos(k·x) + b_k sin(k·x))` over the half lattice.
    ///
    /// `index` holds one signed lattice index per axis (`k = 2π·index` on periodic axes).
    /// On a Neumann axis the entry is the cosine order `p >= 0` and the pair refers to the
    /// coefficient multiplying `cos(pπ x_N)`.
    pub fn coefficients(&self, index: &[i64]) -> Result<(f64, f64)> {
        if index.len() != self.grid.rank() {
            return Err(Error::InvalidArgument(format!(
                "index of length {} for rank {}",
                index.len(),
                self.grid.rank()
            )));
        }
        let ext = self.grid.ext_dims();
        let offset = 3 - self.grid.rank();
        let mut flat = 0usize;
        let mut conj_flat = 0usize;
        let mut nonzero = false;
        let mut nyquist_axes = 0;
        let mut phase = 0.0;
        let mut cos_factor = 1.0;
        for s in 0..3 {
            let n = ext[s] as i64;
            let j = if s >= offset { index[s - offset] } else { 0 };
            if j.abs() * 2 > n {
                return Err(Error::InvalidArgument(format!(
                    "index {j} beyond the band of an axis with {n} modes"
                )));
            }
            let neumann = s == 2 && self.grid.has_neumann();
            if neumann {
                if j < 0 {
                    return Err(Error::InvalidArgument("cosine order must be >= 0".into()));
                }
                // Samples sit at (i + 1/2)/P, i.e. shifted by half a cell from the FFT origin.
                phase = -PI * j as f64 / (2.0 * (n / 2) as f64);
                if j > 0 {
                    cos_factor = 2.0;
                }
                flat = flat * n as usize + j as usize;
                conj_flat = conj_flat * n as usize + j as usize;
                continue;
            }
            if j != 0 {
                nonzero = true;
            }
            if 2 * j.abs() == n {
                nyquist_axes += 1;
            }
            flat = flat * n as usize + j.rem_euclid(n) as usize;
            conj_flat = conj_flat * n as usize + (-j).rem_euclid(n) as usize;
        }
        let spectrum = self.spectrum();
        let c = spectrum[flat] * Complex64::from_polar(1.0, phase) * cos_factor;
        if !nonzero || nyquist_axes > 0 && flat == conj_flat {
            return Ok((c.re, 0.0));
        }
        Ok((2.0 * c.re, -2.0 * c.im))
    }

    /// New field with `c_k ↦ f(mode, c_k)`; parity is preserved.
    pub fn map_spectrum(&self, f: impl Fn(&Mode, Complex64) -> Complex64) -> Self {
        self.map_spectrum_with_parity(self.parity, f)
    }

    pub(crate) fn map_spectrum_with_parity(
        &self,
        parity: Parity,
        f: impl Fn(&Mode, Complex64) -> Complex64,
    ) -> Self {
        let modes = self.grid.modes();
        let spectrum = self
            .spectrum()
            .iter()
            .zip(modes.iter())
            .map(|(&c, mode)| f(mode, c))
            .collect();
        Self::from_spectrum(self.grid.clone(), parity, spectrum)
    }

    /// Multiply each mode by a real symbol of the wave vector.
    pub fn apply_symbol(&self, symbol: impl Fn(&Mode) -> f64) -> Self {
        self.map_spectrum(|mode, c| c * symbol(mode))
    }

    pub fn laplacian(&self) -> Self {
        self.apply_symbol(|mode| -mode.k2)
    }

    /// `ψ` with `-Δψ = self - mean(self)` and `∫ψ = 0`.
    pub fn inverse_laplacian_zero_mean(&self) -> Self {
        self.apply_symbol(|mode| if mode.k2 == 0.0 { 0.0 } else { 1.0 / mode.k2 })
    }

    /// Spectral `∂/∂x_axis`. Periodic Nyquist modes are dropped; on the Neumann axis the
    /// parity flips (cosine series become sine series and vice versa).
    pub fn partial_derivative(&self, axis: usize) -> Result<Self> {
        let slot = self.grid.internal_axis(axis)?;
        let neumann = slot == 2 && self.grid.has_neumann();
        let parity = if neumann {
            self.parity.flip()
        } else {
            self.parity
        };
        Ok(self.map_spectrum_with_parity(parity, |mode, c| {
            if mode.nyquist[slot] {
                Complex64::default()
            } else {
                c * Complex64::new(0.0, mode.k[slot])
            }
        }))
    }

    pub fn scale(&self, factor: f64) -> Self {
        self.map_spectrum(|_, c| c * factor)
    }

    /// Same field with the mean replaced by `mean`.
    pub fn with_mean(&self, mean: f64) -> Self {
        let mut spectrum = self.spectrum().to_vec();
        spectrum[0] = Complex64::new(mean, 0.0);
        Self::from_spectrum(self.grid.clone(), self.parity, spectrum)
    }

    /// `self + factor * other`.
    pub fn axpy(&self, factor: f64, other: &SpectralField) -> Result<Self> {
        self.check_compatible(other)?;
        let spectrum = self
            .spectrum()
            .iter()
            .zip(other.spectrum())
            .map(|(a, b)| a + b * factor)
            .collect();
        Ok(Self::from_spectrum(self.grid.clone(), self.parity, spectrum))
    }

    fn check_compatible(&self, other: &SpectralField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        if self.parity != other.parity {
            return Err(Error::InvalidArgument(
                "fields of opposite parity cannot be combined".into(),
            ));
        }
        Ok(())
    }

    /// `Σ_k w_k s(k) |c_k|²`, i.e. `∫ (S u) u` for a real even symbol `S`.
    pub fn quadratic_form(&self, symbol: impl Fn(&Mode) -> f64) -> f64 {
        let modes = self.grid.modes();
        self.spectrum()
            .iter()
            .zip(modes.iter())
            .map(|(c, mode)| mode.weight * symbol(mode) * c.norm_sqr())
            .sum()
    }

    /// `∫ self · other` via Parseval.
    pub fn integral_of_product(&self, other: &SpectralField) -> Result<f64> {
        self.check_compatible(other)?;
        let modes = self.grid.modes();
        Ok(self
            .spectrum()
            .iter()
            .zip(other.spectrum())
            .zip(modes.iter())
            .map(|((a, b), mode)| mode.weight * (a * b.conj()).re)
            .sum())
    }

    pub fn norm_l2(&self) -> f64 {
        self.quadratic_form(|_| 1.0).sqrt()
    }

    /// Samples on the dealiasing grid.
    pub fn padded(&self) -> Padded {
        pad(&self.grid, self.spectrum())
    }

    /// Build a field from padded samples by Fourier projection onto this grid's band.
    pub fn from_padded(grid: &Grid, padded: &Padded) -> Self {
        Self::from_spectrum(grid.clone(), Parity::Even, padded.project(grid))
    }

    /// `∫ u^p` for p = 2, 3, 4, exact for band-limited fields.
    pub fn moments(&self) -> Moments {
        let padded = self.padded();
        let n = padded.samples().len() as f64;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &u in padded.samples() {
            let u2 = u * u;
            m2 += u2;
            m3 += u2 * u;
            m4 += u2 * u2;
        }
        Moments {
            m2: m2 / n,
            m3: m3 / n,
            m4: m4 / n,
        }
    }

    /// `α² m² + ½ Σ_{k≠0} (α − |k|²)² (a_k² + b_k²)`, which equals `∫(αφ + Δφ)²`.
    pub fn plancherel_quadratic(&self, alpha: f64) -> Result<f64> {
        if !self.grid.is_periodic() {
            return Err(Error::InvalidGrid(
                "Plancherel form is defined on the periodic torus".into(),
            ));
        }
        Ok(self.quadratic_form(|mode| (alpha - mode.k2).powi(2)))
    }
}
