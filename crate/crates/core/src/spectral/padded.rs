//! Zero-padded evaluation of pointwise nonlinearities.
//!
//! A field with retained band `b` per axis is interpolated onto `M >= 4b + 1` points, so
//! the uniform rule integrates any quartic of it exactly and the Fourier projection of any
//! cubic back onto the band is alias-free. A periodic Nyquist coefficient is split evenly
//! between `+n/2` and `-n/2` on the way out and summed on the way back.

use rustfft::num_complex::Complex64;

use super::fft::{fft3, Direction};
use super::grid::{signed_index, AxisKind, Grid};

/// Real samples on the padded extended grid of some [`Grid`].
#[derive(Clone, Debug)]
pub struct Padded {
    dims: [usize; 3],
    data: Vec<f64>,
}

type Targets = Vec<Vec<(usize, f64)>>;

fn axis_targets(grid: &Grid) -> [Targets; 3] {
    let ext = grid.ext_dims();
    let padded = grid.padded_dims();
    let offset = 3 - grid.rank();
    let mut out: [Targets; 3] = Default::default();
    for s in 0..3 {
        let n = ext[s];
        let m = padded[s];
        let kind = if s >= offset {
            Some(grid.kinds()[s - offset])
        } else {
            None
        };
        out[s] = (0..n)
            .map(|e| {
                if n == 1 {
                    return vec![(0, 1.0)];
                }
                let j = signed_index(e, n);
                let wrap = |j: i64| j.rem_euclid(m as i64) as usize;
                match kind {
                    Some(AxisKind::Periodic) if 2 * e == n => {
                        vec![(wrap(j), 0.5), (wrap(-j), 0.5)]
                    }
                    Some(AxisKind::Neumann) if 2 * e == n => Vec::new(),
                    _ => vec![(wrap(j), 1.0)],
                }
            })
            .collect();
    }
    out
}

/// Interpolate a spectrum (normalised so that entry 0 is the mean) onto the padded grid.
pub(crate) fn pad(grid: &Grid, spectrum: &[Complex64]) -> Padded {
    let ext = grid.ext_dims();
    let dims = grid.padded_dims();
    let targets = axis_targets(grid);
    let mut buf = vec![Complex64::default(); dims.iter().product()];
    for i0 in 0..ext[0] {
        for i1 in 0..ext[1] {
            let row = (i0 * ext[1] + i1) * ext[2];
            for i2 in 0..ext[2] {
                let c = spectrum[row + i2];
                if c == Complex64::default() {
                    continue;
                }
                for &(t0, f0) in &targets[0][i0] {
                    for &(t1, f1) in &targets[1][i1] {
                        let base = (t0 * dims[1] + t1) * dims[2];
                        for &(t2, f2) in &targets[2][i2] {
                            buf[base + t2] += c * (f0 * f1 * f2);
                        }
                    }
                }
            }
        }
    }
    fft3(&mut buf, dims, Direction::Inverse);
    Padded {
        dims,
        data: buf.into_iter().map(|z| z.re).collect(),
    }
}

impl Padded {
    pub fn samples(&self) -> &[f64] {
        &self.data
    }

    /// Uniform-rule mean, i.e. the integral over the unit cell.
    pub fn mean(&self) -> f64 {
        self.mean_of(|x| x)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Padded {
        Padded {
            dims: self.dims,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    /// Mean of `f(samples)`, summed blockwise to keep roundoff low on large grids.
    pub fn mean_of(&self, f: impl Fn(f64) -> f64) -> f64 {
        let total: f64 = self
            .data
            .chunks(512)
            .map(|block| block.iter().map(|&x| f(x)).sum::<f64>())
            .sum();
        total / self.data.len() as f64
    }

    /// Pointwise product (both operands must come from the same grid).
    pub fn mul(&self, other: &Padded) -> Padded {
        assert_eq!(self.dims, other.dims, "padded grids differ");
        Padded {
            dims: self.dims,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a * b).collect(),
        }
    }

    /// Fourier projection back onto the retained band of `grid`.
    pub(crate) fn project(&self, grid: &Grid) -> Vec<Complex64> {
        assert_eq!(self.dims, grid.padded_dims(), "padded grid does not match");
        let total = self.data.len() as f64;
        let mut buf: Vec<Complex64> = self
            .data
            .iter()
            .map(|&x| Complex64::new(x / total, 0.0))
            .collect();
        fft3(&mut buf, self.dims, Direction::Forward);
        let ext = grid.ext_dims();
        let dims = self.dims;
        let targets = axis_targets(grid);
        let mut out = vec![Complex64::default(); grid.ext_len()];
        for i0 in 0..ext[0] {
            for i1 in 0..ext[1] {
                let row = (i0 * ext[1] + i1) * ext[2];
                for i2 in 0..ext[2] {
                    let mut acc = Complex64::default();
                    for &(t0, _) in &targets[0][i0] {
                        for &(t1, _) in &targets[1][i1] {
                            let base = (t0 * dims[1] + t1) * dims[2];
                            for &(t2, _) in &targets[2][i2] {
                                acc += buf[base + t2];
                            }
                        }
                    }
                    out[row + i2] = acc;
                }
            }
        }
        out
    }
}
