use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::fft::next_smooth;
use crate::error::{Error, Result};

/// Boundary treatment of one grid axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisKind {
    /// Unit-period axis, Fourier basis.
    Periodic,
    /// Unit interval with zero normal derivative at both ends, cosine basis.
    /// Samples sit at cell midpoints `(j + 1/2) / n`.
    Neumann,
}

/// One entry of the extended spectral lattice.
#[derive(Clone, Copy, Debug)]
pub struct Mode {
    /// Wave vector in internal (right-aligned, 3-slot) axis order.
    pub k: [f64; 3],
    /// `|k|^2`.
    pub k2: f64,
    /// Quadrature weight: `1/2` per periodic axis sitting on its Nyquist index.
    pub weight: f64,
    /// Per internal axis: this index is the Nyquist index of a periodic axis.
    pub nyquist: [bool; 3],
    /// Signed lattice index per internal axis.
    pub index: [i64; 3],
}

/// Rectangular sampling of the unit torus `[0,1)^N` (optionally with a cosine last axis).
///
/// Internally every grid is treated as 3-D with leading axes of length one. A Neumann axis
/// of `P` samples is mirrored to a period-2 axis of `2P` samples, so the whole spectral
/// calculus is a plain FFT on this "extended" grid.
#[derive(Clone)]
pub struct Grid {
    counts: Vec<usize>,
    kinds: Vec<AxisKind>,
    modes: Arc<OnceLock<Arc<[Mode]>>>,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.counts == other.counts && self.kinds == other.kinds
    }
}

impl Eq for Grid {}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("counts", &self.counts)
            .field("kinds", &self.kinds)
            .finish()
    }
}

impl Grid {
    pub fn new(counts: &[usize], kinds: &[AxisKind]) -> Result<Self> {
        let rank = counts.len();
        if !(1..=3).contains(&rank) {
            return Err(Error::InvalidGrid(format!("rank {rank} not in 1..=3")));
        }
        if kinds.len() != rank {
            return Err(Error::InvalidGrid(format!(
                "{} axis kinds for rank {rank}",
                kinds.len()
            )));
        }
        for (axis, (&n, &kind)) in counts.iter().zip(kinds).enumerate() {
            if n % 2 != 0 {
                return Err(Error::InvalidGrid(format!("axis {axis}: count {n} is odd")));
            }
            match kind {
                AxisKind::Periodic if n < 4 => {
                    return Err(Error::InvalidGrid(format!(
                        "axis {axis}: periodic count {n} < 4"
                    )))
                }
                AxisKind::Neumann if n < 2 => {
                    return Err(Error::InvalidGrid(format!("axis {axis}: count {n} < 2")))
                }
                AxisKind::Neumann if axis + 1 != rank => {
                    return Err(Error::InvalidGrid(
                        "only the last axis may be a Neumann axis".into(),
                    ))
                }
                _ => {}
            }
        }
        Ok(Self {
            counts: counts.to_vec(),
            kinds: kinds.to_vec(),
            modes: Arc::new(OnceLock::new()),
        })
    }

    /// All-periodic grid.
    pub fn periodic(counts: &[usize]) -> Result<Self> {
        Self::new(counts, &vec![AxisKind::Periodic; counts.len()])
    }

    /// `n1 x n2` periodic in-plane, `nz` cosine samples vertically.
    pub fn thin_film(n1: usize, n2: usize, nz: usize) -> Result<Self> {
        Self::new(
            &[n1, n2, nz],
            &[AxisKind::Periodic, AxisKind::Periodic, AxisKind::Neumann],
        )
    }

    /// Default torus resolution for rank `n`: 64 per axis up to rank 2, `32 x 32 x 16` in 3-D.
    pub fn default_torus(rank: usize) -> Result<Self> {
        match rank {
            1 => Self::periodic(&[64]),
            2 => Self::periodic(&[64, 64]),
            3 => Self::periodic(&[32, 32, 16]),
            _ => Err(Error::InvalidGrid(format!("rank {rank} not in 1..=3"))),
        }
    }

    pub fn rank(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn kinds(&self) -> &[AxisKind] {
        &self.kinds
    }

    /// Number of stored real samples.
    pub fn len(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn has_neumann(&self) -> bool {
        self.kinds.last() == Some(&AxisKind::Neumann)
    }

    pub fn is_periodic(&self) -> bool {
        !self.has_neumann()
    }

    /// Map a user axis to its internal 3-slot position.
    pub(crate) fn internal_axis(&self, axis: usize) -> Result<usize> {
        if axis >= self.rank() {
            return Err(Error::InvalidAxis {
                axis,
                rank: self.rank(),
            });
        }
        Ok(3 - self.rank() + axis)
    }

    fn internal(&self) -> [(usize, Option<AxisKind>); 3] {
        let mut out = [(1, None); 3];
        let offset = 3 - self.rank();
        for (a, (&n, &kind)) in self.counts.iter().zip(&self.kinds).enumerate() {
            out[offset + a] = (n, Some(kind));
        }
        out
    }

    /// Stored-sample dimensions in internal order.
    pub(crate) fn dims3(&self) -> [usize; 3] {
        self.internal().map(|(n, _)| n)
    }

    /// Extended dimensions (Neumann axis doubled).
    pub(crate) fn ext_dims(&self) -> [usize; 3] {
        self.internal().map(|(n, kind)| match kind {
            Some(AxisKind::Neumann) => 2 * n,
            _ => n,
        })
    }

    pub(crate) fn ext_len(&self) -> usize {
        self.ext_dims().iter().product()
    }

    /// Largest retained lattice index per internal axis.
    pub(crate) fn band3(&self) -> [usize; 3] {
        self.internal().map(|(n, kind)| match kind {
            None => 0,
            Some(AxisKind::Periodic) => n / 2,
            Some(AxisKind::Neumann) => n - 1,
        })
    }

    /// Dealiasing grid: exact quadrature of quartics and exact projection of cubics.
    pub(crate) fn padded_dims(&self) -> [usize; 3] {
        self.band3().map(|b| if b == 0 { 1 } else { next_smooth(4 * b + 1) })
    }

    /// Wave-number scale per internal axis (`2*pi` periodic, `pi` on the mirrored axis).
    pub(crate) fn wave_scale(&self) -> [f64; 3] {
        self.internal().map(|(_, kind)| match kind {
            Some(AxisKind::Neumann) => PI,
            _ => 2.0 * PI,
        })
    }

    /// Sample coordinate of stored index `i` along internal axis `slot`.
    pub(crate) fn coordinate(&self, slot: usize, i: usize) -> f64 {
        let (n, kind) = self.internal()[slot];
        match kind {
            Some(AxisKind::Neumann) => (i as f64 + 0.5) / n as f64,
            _ => i as f64 / n as f64,
        }
    }

    /// Mode table of the extended lattice, row-major over `ext_dims`.
    pub fn modes(&self) -> Arc<[Mode]> {
        self.modes
            .get_or_init(|| {
                let dims = self.ext_dims();
                let scale = self.wave_scale();
                let kinds = self.internal().map(|(_, k)| k);
                let mut table = Vec::with_capacity(dims.iter().product());
                for i0 in 0..dims[0] {
                    for i1 in 0..dims[1] {
                        for i2 in 0..dims[2] {
                            let idx = [i0, i1, i2];
                            let mut mode = Mode {
                                k: [0.0; 3],
                                k2: 0.0,
                                weight: 1.0,
                                nyquist: [false; 3],
                                index: [0; 3],
                            };
                            for s in 0..3 {
                                let n = dims[s];
                                let j = signed_index(idx[s], n);
                                mode.index[s] = j;
                                mode.k[s] = scale[s] * j as f64;
                                if kinds[s] == Some(AxisKind::Periodic) && 2 * idx[s] == n {
                                    mode.nyquist[s] = true;
                                    mode.weight *= 0.5;
                                }
                            }
                            mode.k2 = mode.k.iter().map(|k| k * k).sum();
                            table.push(mode);
                        }
                    }
                }
                table.into()
            })
            .clone()
    }
}

/// Signed lattice index of FFT position `i` on an axis of length `n` (Nyquist counted positive).
pub(crate) fn signed_index(i: usize, n: usize) -> i64 {
    if 2 * i <= n {
        i as i64
    } else {
        i as i64 - n as i64
    }
}
