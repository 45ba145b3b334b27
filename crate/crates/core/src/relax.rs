//! Mass-conserving semi-implicit gradient flows used as minimisers.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{energy_with_padded, Functional};
use crate::error::{Error, Result};
use crate::spectral::{random_band_limited, Complex64, Grid, Padded, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// `∂ₜφ = Δ δE/δφ`; the mean is untouched by construction.
    ConservedHMinus1,
    /// `∂ₜφ = −(δE/δφ − mean)`.
    ProjectedL2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub scheme: Scheme,
    pub dt: f64,
    pub max_steps: usize,
    pub energy_tol: f64,
    pub seed: u64,
    /// L² norm of the random initial perturbation.
    pub init_amplitude: f64,
    /// Largest lattice index (per axis) of the random initial perturbation.
    pub init_band: usize,
    /// Convergence also needs `‖δE/δφ − mean‖ ≤ residual_tol·(1 + ‖φ‖)`.
    pub residual_tol: f64,
}

impl Default for FlowConfig {
    fn default() -> Self {
        Self {
            scheme: Scheme::ConservedHMinus1,
            dt: 1e-3,
            max_steps: 200_000,
            energy_tol: 1e-12,
            seed: 0,
            init_amplitude: 0.1,
            init_band: 4,
            residual_tol: 1e-4,
        }
    }
}

impl FlowConfig {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.energy_tol > 0.0) || !(self.residual_tol > 0.0) {
            return Err(Error::InvalidArgument(
                "dt, energy_tol and residual_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One accepted state of a flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub step: usize,
    pub energy: f64,
    pub dt: f64,
}

#[derive(Clone, Debug)]
pub struct RelaxResult {
    pub phi: SpectralField,
    pub energy: f64,
    /// Non-increasing energies of the accepted states, starting with the initial one.
    pub trace: Vec<TraceEntry>,
    pub converged: bool,
}

/// `m` plus a zero-mean random perturbation; deterministic in `cfg.seed`.
pub fn random_initial(m: f64, cfg: &FlowConfig, grid: &Grid) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    random_band_limited(grid, cfg.init_band, cfg.init_amplitude, &mut rng).with_mean(m)
}

struct State {
    phi: SpectralField,
    padded: Padded,
    energy: f64,
}

impl State {
    fn new<F: Functional + ?Sized>(f: &F, phi: SpectralField) -> Self {
        let padded = phi.padded();
        let energy = energy_with_padded(f, &phi, &padded);
        Self {
            phi,
            padded,
            energy,
        }
    }
}

/// Relax `phi0` by the stabilised semi-implicit scheme
/// `ĉ⁺ = [ĉ − dt·G(N̂ − σĉ)] / [1 + dt·G(S + σ)]` for `k ≠ 0`,
/// with `N̂` the projected `W'(φ)`, `σ = max(0, max W''(φ))/2`, `G = |k|²` (H⁻¹) or `1` (L²).
pub fn relax<F: Functional + ?Sized>(
    phi0: &SpectralField,
    f: &F,
    cfg: &FlowConfig,
) -> Result<RelaxResult> {
    cfg.validate()?;
    f.check_grid(phi0.grid())?;
    let m = f.mass();
    if (phi0.mean() - m).abs() > 1e-12 * (1.0 + m.abs()) {
        return Err(Error::InvalidArgument(format!(
            "initial mean {} differs from m = {m}",
            phi0.mean()
        )));
    }
    let grid = phi0.grid().clone();
    let modes = grid.modes();
    let symbol: Vec<f64> = modes.iter().map(|mode| f.symbol(mode)).collect();
    let mobility: Vec<f64> = modes
        .iter()
        .map(|mode| match cfg.scheme {
            Scheme::ConservedHMinus1 => mode.k2,
            Scheme::ProjectedL2 => 1.0,
        })
        .collect();
    let w = f.potential();

    let mut state = State::new(f, phi0.clone());
    let mut dt = cfg.dt;
    let mut trace = vec![TraceEntry {
        step: 0,
        energy: state.energy,
        dt,
    }];
    let tol = |e: f64| cfg.energy_tol * (1.0 + e.abs());

    for step in 1..=cfg.max_steps {
        let nonlinear = state.padded.map(|s| w.d1(s)).project(&grid);
        let sigma = 0.5
            * state
                .padded
                .samples()
                .iter()
                .map(|&s| w.d2(s))
                .fold(0.0, f64::max);
        let current = state.phi.spectrum();
        let residual_sq: f64 = current
            .iter()
            .zip(&nonlinear)
            .zip(symbol.iter().zip(modes.iter()))
            .filter(|(_, (_, mode))| mode.k2 != 0.0)
            .map(|((&c, &n), (&s, mode))| mode.weight * (c * s + n).norm_sqr())
            .sum();
        let stationary =
            residual_sq.sqrt() <= cfg.residual_tol * (1.0 + state.phi.norm_l2());
        loop {
            let spectrum: Vec<Complex64> = current
                .iter()
                .zip(&nonlinear)
                .zip(symbol.iter().zip(&mobility))
                .zip(modes.iter())
                .map(|(((&c, &n), (&s, &g)), mode)| {
                    if mode.k2 == 0.0 {
                        c
                    } else {
                        (c - (n - c * sigma) * (dt * g)) / (1.0 + dt * g * (s + sigma))
                    }
                })
                .collect();
            let scale = current.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let moved = spectrum
                .iter()
                .zip(current)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            if moved <= 1e-15 * (1.0 + scale) {
                return Ok(RelaxResult {
                    energy: state.energy,
                    phi: state.phi,
                    trace,
                    converged: true,
                });
            }
            let phi = SpectralField::from_spectrum(grid.clone(), state.phi.parity(), spectrum);
            let next = State::new(f, phi);
            let change = next.energy - state.energy;
            if change <= 0.0 {
                trace.push(TraceEntry {
                    step,
                    energy: next.energy,
                    dt,
                });
                let done = stationary && -change <= tol(next.energy);
                state = next;
                if done {
                    return Ok(RelaxResult {
                        energy: state.energy,
                        phi: state.phi,
                        trace,
                        converged: true,
                    });
                }
                break;
            }
            if stationary && change <= tol(state.energy) {
                // Increase within roundoff of the stopping rule: stationary.
                return Ok(RelaxResult {
                    energy: state.energy,
                    phi: state.phi,
                    trace,
                    converged: true,
                });
            }
            dt *= 0.5;
            if dt < 1e-12 {
                return Err(Error::StalledFlow { trace, min_dt: dt });
            }
        }
    }
    Ok(RelaxResult {
        energy: state.energy,
        phi: state.phi,
        trace,
        converged: false,
    })
}

/// Outcome of independent relaxations from seeds `cfg.seed .. cfg.seed + restarts`.
#[derive(Clone, Debug)]
pub struct MultistartResult {
    pub best: RelaxResult,
    pub best_seed: u64,
    /// `(seed, final energy)` sorted by energy, ties by seed.
    pub energies: Vec<(u64, f64)>,
    /// Seeds whose flow stalled.
    pub stalled: Vec<u64>,
}

/// Run `restarts` relaxations in parallel, starting each from `init(seed)`.
pub fn multistart_with<F, I>(
    f: &F,
    restarts: usize,
    cfg: &FlowConfig,
    init: I,
) -> Result<MultistartResult>
where
    F: Functional + ?Sized,
    I: Fn(u64) -> SpectralField + Sync,
{
    if restarts == 0 {
        return Err(Error::InvalidArgument("restarts must be >= 1".into()));
    }
    let runs: Vec<(u64, Result<RelaxResult>)> = (0..restarts as u64)
        .into_par_iter()
        .map(|i| {
            let seed = cfg.seed.wrapping_add(i);
            let run_cfg = FlowConfig {
                seed,
                ..cfg.clone()
            };
            (seed, relax(&init(seed), f, &run_cfg))
        })
        .collect();
    let mut stalled = Vec::new();
    let mut done = Vec::new();
    let mut last_err = None;
    for (seed, run) in runs {
        match run {
            Ok(r) => done.push((seed, r)),
            Err(err @ Error::StalledFlow { .. }) => {
                stalled.push(seed);
                last_err = Some(err);
            }
            Err(err) => return Err(err),
        }
    }
    if done.is_empty() {
        return Err(last_err.expect("at least one restart ran"));
    }
    let mut energies: Vec<(u64, f64)> = done.iter().map(|(s, r)| (*s, r.energy)).collect();
    energies.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let best_seed = energies[0].0;
    let best = done
        .into_iter()
        .find(|(s, _)| *s == best_seed)
        .map(|(_, r)| r)
        .expect("best seed present");
    Ok(MultistartResult {
        best,
        best_seed,
        energies,
        stalled,
    })
}

/// Multistart from [`random_initial`] fields on `grid`.
pub fn multistart_min<F: Functional + ?Sized>(
    f: &F,
    grid: &Grid,
    restarts: usize,
    cfg: &FlowConfig,
) -> Result<MultistartResult> {
    let m = f.mass();
    multistart_with(f, restarts, cfg, |seed| {
        random_initial(
            m,
            &FlowConfig {
                seed,
                ..cfg.clone()
            },
            grid,
        )
    })
}
