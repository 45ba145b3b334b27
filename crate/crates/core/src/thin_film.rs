//! Thin-film energy `F_{L,h}` on `[0,1)² × (0,1)` with a null-flux vertical axis.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{self, Functional, ModelParams};
use crate::error::{Error, Result};
use crate::oracle::representable_norms;
use crate::potential::Potential;
use crate::relax::{multistart_min, multistart_with, random_initial, relax, FlowConfig, RelaxResult};
use crate::spectral::{random_band_limited, AxisKind, Complex64, Grid, Mode, Parity, SpectralField};

/// `F_{L,h}(φ) = ∫ ½(αφ + L⁻²Δ'φ + (L²h²)⁻¹∂₃₃φ)² + W(φ)`.
#[derive(Clone, Debug)]
pub struct ThinFilmParams {
    pub l: f64,
    pub h: f64,
    pub alpha: f64,
    pub m: f64,
    pub potential: Potential,
}

impl ThinFilmParams {
    pub fn new(l: f64, h: f64, alpha: f64, m: f64, potential: Potential) -> Result<Self> {
        if !(l > 0.0 && h > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "L and h must be positive, got L = {l}, h = {h}"
            )));
        }
        Ok(Self {
            l,
            h,
            alpha,
            m,
            potential,
        })
    }

    /// `α = |k|²/L²` for some `k ∈ 2πZ² \ {0}`, within `1e-9`.
    pub fn resonant(&self) -> bool {
        let q = self.alpha * self.l * self.l / (4.0 * PI * PI);
        if q < 0.5 {
            return false;
        }
        let candidates = [q.floor() as u64, q.ceil() as u64];
        let norms = representable_norms(2, q.ceil() as u64).unwrap_or_default();
        candidates.iter().any(|&c| {
            c >= 1
                && norms.binary_search(&c).is_ok()
                && (self.alpha - 4.0 * PI * PI * c as f64 / (self.l * self.l)).abs() <= 1e-9
        })
    }

    fn check_resonance(&self) -> Result<()> {
        if self.resonant() {
            Err(Error::Resonance {
                alpha: self.alpha,
                length: self.l,
            })
        } else {
            Ok(())
        }
    }

    /// The `L = 1`, `h → 0` limit energy on the 2-torus.
    pub fn limit_params(&self) -> ModelParams {
        ModelParams::pfc(self.alpha, self.m, self.potential.clone())
    }
}

fn check_film_grid(grid: &Grid) -> Result<()> {
    if grid.rank() == 3 && grid.kinds()[2] == AxisKind::Neumann {
        Ok(())
    } else {
        Err(Error::InvalidGrid(
            "thin-film fields need rank 3 with a Neumann last axis".into(),
        ))
    }
}

impl Functional for ThinFilmParams {
    fn symbol(&self, mode: &Mode) -> f64 {
        let l2 = self.l * self.l;
        let planar = mode.k[0] * mode.k[0] + mode.k[1] * mode.k[1];
        let vertical = mode.k[2] * mode.k[2];
        (self.alpha - planar / l2 - vertical / (l2 * self.h * self.h)).powi(2)
    }

    fn potential(&self) -> &Potential {
        &self.potential
    }

    fn mass(&self) -> f64 {
        self.m
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        check_film_grid(grid)
    }
}

pub fn flh_energy(phi: &SpectralField, p: &ThinFilmParams) -> Result<f64> {
    energy::energy(p, phi)
}

/// Mass-projected first variation of `F_{L,h}`.
pub fn flh_gradient(phi: &SpectralField, p: &ThinFilmParams) -> Result<SpectralField> {
    energy::gradient(p, phi)
}

pub fn relax3d(phi0: &SpectralField, p: &ThinFilmParams, cfg: &FlowConfig) -> Result<RelaxResult> {
    relax(phi0, p, cfg)
}

/// `∫(∂₃φ)²`.
pub fn vertical_energy(phi: &SpectralField) -> Result<f64> {
    check_film_grid(phi.grid())?;
    Ok(phi.partial_derivative(2)?.norm_l2().powi(2))
}

/// Residuals of `∫φ∂₃₃φ = −∫(∂₃φ)²` and `∫∂ⱼⱼφ∂₃₃φ = ∫(∂ⱼ₃φ)²` (worst of `j = 1, 2`).
pub fn crossing_identity_check(phi: &SpectralField) -> Result<(f64, f64)> {
    check_film_grid(phi.grid())?;
    let d3 = phi.partial_derivative(2)?;
    let d33 = d3.partial_derivative(2)?;
    let r1 = (phi.integral_of_product(&d33)? + d3.norm_l2().powi(2)).abs();
    let mut r2: f64 = 0.0;
    for j in 0..2 {
        let dj = phi.partial_derivative(j)?;
        let djj = dj.partial_derivative(j)?;
        let dj3 = dj.partial_derivative(2)?;
        r2 = r2.max((djj.integral_of_product(&d33)? - dj3.norm_l2().powi(2)).abs());
    }
    Ok((r1, r2))
}

/// `x₃`-average as a field on the periodic in-plane grid.
pub fn vertical_average(phi: &SpectralField) -> Result<SpectralField> {
    check_film_grid(phi.grid())?;
    let counts = phi.grid().counts();
    let plane = Grid::periodic(&counts[..2])?;
    let ext = phi.grid().ext_dims();
    let spectrum = phi.spectrum();
    let mut out = Vec::with_capacity(counts[0] * counts[1]);
    for i0 in 0..ext[0] {
        for i1 in 0..ext[1] {
            out.push(spectrum[(i0 * ext[1] + i1) * ext[2]]);
        }
    }
    Ok(SpectralField::from_spectrum(plane, Parity::Even, out))
}

/// Extend a 2-D field constantly in `x₃` onto a film grid with `nz` vertical samples.
pub fn lift(phi2: &SpectralField, nz: usize) -> Result<SpectralField> {
    let counts = phi2.grid().counts();
    if counts.len() != 2 || !phi2.grid().is_periodic() {
        return Err(Error::InvalidGrid("lift expects a periodic 2-D field".into()));
    }
    let grid = Grid::thin_film(counts[0], counts[1], nz)?;
    let ext = grid.ext_dims();
    let mut spectrum = vec![Complex64::default(); grid.ext_len()];
    for (flat, &c) in phi2.spectrum().iter().enumerate() {
        spectrum[flat * ext[2]] = c;
    }
    Ok(SpectralField::from_spectrum(grid, Parity::Even, spectrum))
}

/// The eight symmetries of the square acting on sample indices of an `n x n` grid.
fn square_symmetries(values: &[f64], n0: usize, n1: usize) -> Vec<Vec<f64>> {
    let mut maps: Vec<Box<dyn Fn(usize, usize) -> (usize, usize)>> = vec![
        Box::new(|i, j| (i, j)),
        Box::new(move |i, j| ((n0 - i) % n0, j)),
        Box::new(move |i, j| (i, (n1 - j) % n1)),
        Box::new(move |i, j| ((n0 - i) % n0, (n1 - j) % n1)),
    ];
    if n0 == n1 {
        maps.push(Box::new(|i, j| (j, i)));
        maps.push(Box::new(move |i, j| ((n0 - j) % n0, i)));
        maps.push(Box::new(move |i, j| (j, (n1 - i) % n1)));
        maps.push(Box::new(move |i, j| ((n0 - j) % n0, (n1 - i) % n1)));
    }
    maps.iter()
        .map(|f| {
            let mut out = vec![0.0; n0 * n1];
            for i in 0..n0 {
                for j in 0..n1 {
                    let (a, b) = f(i, j);
                    out[i * n1 + j] = values[a * n1 + b];
                }
            }
            out
        })
        .collect()
}

/// `max_s ⟨a, b(· − s)⟩` over continuous in-plane shifts, refined by Newton from the best
/// grid shift.
fn best_overlap(a: &SpectralField, b: &SpectralField) -> f64 {
    let modes = a.grid().modes();
    let terms: Vec<(f64, [f64; 2], Complex64)> = a
        .spectrum()
        .iter()
        .zip(b.spectrum())
        .zip(modes.iter())
        .filter(|(_, mode)| mode.nyquist.iter().all(|&n| !n))
        .map(|((&x, &y), mode)| (mode.weight, [mode.k[1], mode.k[2]], x * y.conj()))
        .collect();
    let largest = terms.iter().map(|t| t.2.norm()).fold(0.0, f64::max);
    let terms: Vec<_> = terms
        .into_iter()
        .filter(|t| t.2.norm() > 1e-14 * largest)
        .collect();
    let overlap = |s: [f64; 2]| -> f64 {
        terms
            .iter()
            .map(|(w, k, p)| w * (p * Complex64::from_polar(1.0, -(k[0] * s[0] + k[1] * s[1]))).re)
            .sum()
    };
    let counts = a.grid().counts();
    let mut best = (f64::NEG_INFINITY, [0.0, 0.0]);
    for i in 0..counts[0] {
        for j in 0..counts[1] {
            let s = [i as f64 / counts[0] as f64, j as f64 / counts[1] as f64];
            let v = overlap(s);
            if v > best.0 {
                best = (v, s);
            }
        }
    }
    let (mut value, mut s) = best;
    for _ in 0..20 {
        let (mut g, mut hess) = ([0.0; 2], [[0.0; 2]; 2]);
        for (w, k, p) in &terms {
            let z = p * Complex64::from_polar(1.0, -(k[0] * s[0] + k[1] * s[1]));
            for r in 0..2 {
                g[r] += w * k[r] * z.im;
                for c in 0..2 {
                    hess[r][c] -= w * k[r] * k[c] * z.re;
                }
            }
        }
        // Damped Newton; the shift may be undetermined along one direction (stripes).
        let damp = 1e-10 * (hess[0][0].abs() + hess[1][1].abs());
        hess[0][0] -= damp;
        hess[1][1] -= damp;
        let det = hess[0][0] * hess[1][1] - hess[0][1] * hess[1][0];
        if det.abs() < 1e-300 {
            break;
        }
        let mut step = [
            (hess[1][1] * g[0] - hess[0][1] * g[1]) / det,
            (hess[0][0] * g[1] - hess[1][0] * g[0]) / det,
        ];
        let mut improved = false;
        for _ in 0..30 {
            let trial = [s[0] - step[0], s[1] - step[1]];
            let v = overlap(trial);
            if v > value {
                value = v;
                s = trial;
                improved = true;
                break;
            }
            step = [0.5 * step[0], 0.5 * step[1]];
        }
        if !improved {
            break;
        }
    }
    value
}

/// `min ‖a − T b‖₂` over in-plane translations `T` and the symmetries of the square.
pub fn distance_modulo_symmetry(a: &SpectralField, b: &SpectralField) -> Result<f64> {
    if a.grid() != b.grid() || a.grid().rank() != 2 {
        return Err(Error::GridMismatch);
    }
    let counts = a.grid().counts();
    let na = a.norm_l2().powi(2);
    let nb = b.norm_l2().powi(2);
    let mut best = f64::INFINITY;
    for values in square_symmetries(b.values(), counts[0], counts[1]) {
        let tb = SpectralField::new(a.grid().clone(), values)?;
        let d2 = (na + nb - 2.0 * best_overlap(a, &tb)).max(0.0);
        best = best.min(d2.sqrt());
    }
    Ok(best)
}

/// Settings for the `(L, h)` sequence study.
#[derive(Clone, Debug)]
pub struct GammaExperiment {
    pub h_list: Vec<f64>,
    /// One entry (used for every `h`) or one per `h`.
    pub l_list: Vec<f64>,
    pub alpha: f64,
    pub m: f64,
    pub potential: Potential,
    /// In-plane counts and vertical samples.
    pub grid3: [usize; 3],
    pub restarts: usize,
    pub flow: FlowConfig,
}

/// One `(L, h)` point of the study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThinFilmRecord {
    #[serde(rename = "L")]
    pub l: f64,
    pub h: f64,
    pub energy3d: f64,
    pub energy2d_ref: f64,
    pub vertical_energy: f64,
    pub vertical_energy_over_h4: f64,
    pub dist_to_2d: f64,
    pub restarts: usize,
    pub seed: u64,
    pub mass_drift: f64,
    pub converged: bool,
}

/// Random start for the film: the 2-D start of the same seed, lifted, plus vertical modes.
/// The squared amplitude is split evenly between the two parts.
pub fn film_initial(m: f64, cfg: &FlowConfig, grid3: [usize; 3]) -> Result<SpectralField> {
    let plane = Grid::periodic(&grid3[..2])?;
    let half = FlowConfig {
        init_amplitude: cfg.init_amplitude / 2f64.sqrt(),
        ..cfg.clone()
    };
    let base = lift(&random_initial(m, &half, &plane), grid3[2])?;
    let grid = base.grid().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x9e37_79b9_7f4a_7c15);
    let noise = random_band_limited(&grid, cfg.init_band, 1.0, &mut rng);
    let vertical = noise.map_spectrum(|mode, c| {
        if mode.index[2] == 0 {
            Complex64::default()
        } else {
            c
        }
    });
    let norm = vertical.norm_l2();
    if norm == 0.0 || half.init_amplitude == 0.0 {
        return Ok(base);
    }
    base.axpy(half.init_amplitude / norm, &vertical)
}

fn pairs(exp: &GammaExperiment) -> Result<Vec<(f64, f64)>> {
    if exp.h_list.is_empty() {
        return Err(Error::InvalidArgument("empty h list".into()));
    }
    if exp.h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("h list must be decreasing".into()));
    }
    match exp.l_list.len() {
        1 => Ok(exp.h_list.iter().map(|&h| (exp.l_list[0], h)).collect()),
        n if n == exp.h_list.len() => Ok(exp.l_list.iter().copied().zip(exp.h_list.iter().copied()).collect()),
        n => Err(Error::InvalidArgument(format!(
            "{n} values of L for {} values of h",
            exp.h_list.len()
        ))),
    }
}

/// Minimal 2-D energy and its minimiser for the limit functional.
pub fn limit_minimiser(exp: &GammaExperiment) -> Result<RelaxResult> {
    let params = ModelParams::pfc(exp.alpha, exp.m, exp.potential.clone());
    let plane = Grid::periodic(&exp.grid3[..2])?;
    Ok(multistart_min(&params, &plane, exp.restarts, &exp.flow)?.best)
}

/// Relax the film at every `(L, h)` and compare with the 2-D limit.
pub fn gamma_sequence_experiment(exp: &GammaExperiment) -> Result<Vec<ThinFilmRecord>> {
    let points = pairs(exp)?;
    let params: Vec<ThinFilmParams> = points
        .iter()
        .map(|&(l, h)| ThinFilmParams::new(l, h, exp.alpha, exp.m, exp.potential.clone()))
        .collect::<Result<_>>()?;
    for p in &params {
        p.check_resonance()?;
    }
    let reference = limit_minimiser(exp)?;
    let results: Vec<Result<ThinFilmRecord>> = params
        .par_iter()
        .map(|p| {
            let run = multistart_with(p, exp.restarts, &exp.flow, |seed| {
                film_initial(
                    exp.m,
                    &FlowConfig {
                        seed,
                        ..exp.flow.clone()
                    },
                    exp.grid3,
                )
                .expect("film grid is valid")
            })?;
            let best = run.best;
            let vertical = vertical_energy(&best.phi)?;
            let avg = vertical_average(&best.phi)?;
            Ok(ThinFilmRecord {
                l: p.l,
                h: p.h,
                energy3d: best.energy,
                energy2d_ref: reference.energy,
                vertical_energy: vertical,
                vertical_energy_over_h4: vertical / p.h.powi(4),
                dist_to_2d: distance_modulo_symmetry(&avg, &reference.phi)?,
                restarts: exp.restarts,
                seed: run.best_seed,
                mass_drift: (best.phi.mean() - exp.m).abs(),
                converged: best.converged,
            })
        })
        .collect();
    results.into_iter().collect()
}
