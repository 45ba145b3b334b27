//! Upper estimates of the optimal constant `inf Quad(u)·M4(u)/M3(u)²` over zero-mean fields.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lattice::stability_test;
use crate::energy::{Functional, ModelParams};
use crate::error::{Error, Result};
use crate::spectral::{random_band_limited, Complex64, Grid, Moments, SpectralField};

/// Settings of the multistart descent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Retained lattice indices `|j|∞ <= band`.
    pub band: usize,
    pub restarts: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop when `‖∇R‖·‖u‖ <= grad_tol · max(|R|, 1)`.
    pub grad_tol: f64,
}

impl SearchConfig {
    /// Band 8 up to rank 2, 4 in 3-D; 16 restarts.
    pub fn for_rank(n: usize) -> Self {
        Self {
            band: if n <= 2 { 8 } else { 4 },
            restarts: 16,
            seed: 0,
            max_iter: 5000,
            grad_tol: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PnEstimate {
    /// `W''(m) + lattice minimum`, present when that is `>= 0`.
    pub lower_bound: Option<f64>,
    pub upper_bound: f64,
    /// Zero-mean minimiser candidate scaled to `M3 = 1`.
    pub witness: SpectralField,
    pub restarts_used: usize,
    pub iterations: usize,
    pub band: usize,
    /// Restarts abandoned because the cubic moment vanished.
    pub degenerate_restarts: usize,
}

fn check_direction(u: &SpectralField) -> Result<()> {
    let scale = u.norm_l2();
    if u.mean().abs() > 1e-12 * (1.0 + scale) {
        return Err(Error::NonzeroMean { mean: u.mean() });
    }
    Ok(())
}

/// `Quad(u) = ∫(Su)u + W''(m)∫u²`.
fn quad_form(params: &ModelParams, u: &SpectralField, m2: f64) -> f64 {
    let d2 = params.potential.d2(params.m);
    u.quadratic_form(|mode| if mode.k2 == 0.0 { 0.0 } else { params.symbol(mode) }) + d2 * m2
}

fn quotient(quad: f64, mo: &Moments) -> f64 {
    quad * mo.m4 / (mo.m3 * mo.m3)
}

/// `Quad(u)·M4(u)/M3(u)²`.
pub fn rayleigh_quotient(u: &SpectralField, params: &ModelParams) -> Result<f64> {
    params.check_grid(u.grid())?;
    check_direction(u)?;
    let mo = u.moments();
    if mo.m3 == 0.0 || mo.m3.abs() < 1e-14 * mo.m2.powf(1.5) {
        return Err(Error::DegenerateDirection(format!(
            "cubic moment {:e} vanishes",
            mo.m3
        )));
    }
    Ok(quotient(quad_form(params, u, mo.m2), &mo))
}

/// Closed-form quotient of `v_n = n` on `(0, 1/n)`, `−n/(n−1)` elsewhere.
pub fn eqal11_sequence(n: u64) -> Result<f64> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "sequence index must be >= 3, got {n}"
        )));
    }
    let n = n as f64;
    let r = n / (n - 1.0);
    let m2 = n + r;
    let m3 = n * n - r * r;
    let m4 = n.powi(3) + r.powi(3);
    Ok(m2 * m4 / (m3 * m3))
}

/// Per-grid data shared by every restart.
struct Problem {
    grid: Grid,
    /// `S(k) + W''(m)` inside the band, 0 elsewhere.
    q: Vec<f64>,
    mask: Vec<bool>,
    mu: f64,
}

struct Eval {
    r: f64,
    grad: SpectralField,
}

impl Problem {
    fn new(params: &ModelParams, rank: usize, band: usize) -> Result<Self> {
        let n = 2 * band + 2;
        let grid = Grid::periodic(&vec![n; rank])?;
        let d2 = params.potential.d2(params.m);
        let modes = grid.modes();
        let band = band as i64;
        let mask: Vec<bool> = modes
            .iter()
            .map(|m| m.k2 != 0.0 && m.index.iter().all(|j| j.abs() <= band))
            .collect();
        let q: Vec<f64> = modes
            .iter()
            .zip(&mask)
            .map(|(m, &keep)| if keep { params.symbol(m) + d2 } else { 0.0 })
            .collect();
        let mu = q
            .iter()
            .zip(&mask)
            .filter(|(_, &keep)| keep)
            .map(|(&v, _)| v.abs())
            .fold(f64::INFINITY, f64::min)
            .max(1.0);
        Ok(Self {
            grid,
            q,
            mask,
            mu,
        })
    }

    fn restrict(&self, u: &SpectralField) -> SpectralField {
        let spectrum: Vec<Complex64> = u
            .spectrum()
            .iter()
            .zip(&self.mask)
            .map(|(&c, &keep)| if keep { c } else { Complex64::default() })
            .collect();
        SpectralField::from_spectrum(self.grid.clone(), u.parity(), spectrum)
    }

    fn quad(&self, u: &SpectralField) -> f64 {
        let modes = self.grid.modes();
        u.spectrum()
            .iter()
            .zip(modes.iter())
            .zip(&self.q)
            .map(|((c, m), q)| m.weight * q * c.norm_sqr())
            .sum()
    }

    fn value(&self, u: &SpectralField) -> Option<f64> {
        let mo = u.moments();
        let r = quotient(self.quad(u), &mo);
        (mo.m3.abs() > 1e-300 && r.is_finite()).then_some(r)
    }

    fn eval(&self, u: &SpectralField) -> Option<Eval> {
        let padded = u.padded();
        let n = padded.samples().len() as f64;
        let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
        for &s in padded.samples() {
            let s2 = s * s;
            m2 += s2;
            m3 += s2 * s;
            m4 += s2 * s2;
        }
        let mo = Moments {
            m2: m2 / n,
            m3: m3 / n,
            m4: m4 / n,
        };
        let quad = self.quad(u);
        let r = quotient(quad, &mo);
        if !(mo.m3.abs() > 1e-300 && r.is_finite()) {
            return None;
        }
        let m3sq = mo.m3 * mo.m3;
        // ∇R = (M4 ∇Quad + Quad ∇M4)/M3² − 2 Quad M4 ∇M3 / M3³
        let c4 = 4.0 * quad / m3sq;
        let c3 = -6.0 * quad * mo.m4 / (m3sq * mo.m3);
        let nonlinear = padded.map(|s| s * s * (c4 * s + c3));
        let projected = SpectralField::from_padded(&self.grid, &nonlinear);
        let cq = 2.0 * mo.m4 / m3sq;
        let spectrum: Vec<Complex64> = projected
            .spectrum()
            .iter()
            .zip(u.spectrum())
            .zip(self.q.iter().zip(&self.mask))
            .map(|((&p, &c), (&q, &keep))| {
                if keep {
                    p + c * (cq * q)
                } else {
                    Complex64::default()
                }
            })
            .collect();
        Some(Eval {
            r,
            grad: SpectralField::from_spectrum(self.grid.clone(), u.parity(), spectrum),
        })
    }

    /// Diagonal preconditioner `1/(|S(k) + W''(m)| + μ)`.
    fn precondition(&self, g: &SpectralField) -> SpectralField {
        let spectrum: Vec<Complex64> = g
            .spectrum()
            .iter()
            .zip(&self.q)
            .map(|(&c, &q)| c / (q.abs() + self.mu))
            .collect();
        SpectralField::from_spectrum(self.grid.clone(), g.parity(), spectrum)
    }
}

struct RunResult {
    r: f64,
    u: SpectralField,
    iterations: usize,
}

fn dot(a: &SpectralField, b: &SpectralField) -> f64 {
    a.integral_of_product(b).expect("same grid")
}

/// Scale `u` to unit L² norm and push it off the `M3 = 0` set if needed.
fn prepare(problem: &Problem, u: SpectralField) -> Option<SpectralField> {
    let norm = u.norm_l2();
    if norm == 0.0 {
        return None;
    }
    let u = u.scale(1.0 / norm);
    if u.moments().m3.abs() >= 1e-8 {
        return Some(u);
    }
    // One push along the band projection of u², which raises M3 to first order.
    let sq = SpectralField::from_padded(&problem.grid, &u.padded().map(|s| s * s));
    let dir = problem.restrict(&sq);
    let dn = dir.norm_l2();
    if dn == 0.0 {
        return None;
    }
    let v = u.axpy(0.1 / dn, &dir).ok()?;
    let v = v.scale(1.0 / v.norm_l2());
    (v.moments().m3.abs() >= 1e-8).then_some(v)
}

fn descend(problem: &Problem, u0: SpectralField, cfg: &SearchConfig) -> Option<RunResult> {
    let mut u = prepare(problem, u0)?;
    let mut cur = problem.eval(&u)?;
    let mut z = problem.precondition(&cur.grad);
    let mut d = z.scale(-1.0);
    let mut gz = dot(&cur.grad, &z);
    let mut step = 1.0;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        let gnorm = cur.grad.norm_l2() * u.norm_l2();
        if gnorm <= cfg.grad_tol * cur.r.abs().max(1.0) {
            break;
        }
        iterations += 1;
        let mut slope = dot(&cur.grad, &d);
        if slope >= 0.0 {
            d = z.scale(-1.0);
            slope = -gz;
        }
        // Armijo backtracking.
        let mut s = step;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = u.axpy(s, &d).expect("same grid");
            if let Some(r) = problem.value(&trial) {
                if r <= cur.r + 1e-4 * s * slope {
                    accepted = Some(trial);
                    break;
                }
            }
            s *= 0.5;
        }
        let Some(next) = accepted else { break };
        step = (2.0 * s).min(1e6);
        let norm = next.norm_l2();
        u = next.scale(1.0 / norm);
        d = d.scale(1.0 / norm);
        let Some(new) = problem.eval(&u) else { break };
        let z_new = problem.precondition(&new.grad);
        let gz_new = dot(&new.grad, &z_new);
        let diff = z_new.axpy(-1.0, &z).expect("same grid");
        let beta = (dot(&new.grad, &diff) / gz).max(0.0);
        d = d.scale(beta).axpy(-1.0, &z_new).expect("same grid");
        cur = new;
        z = z_new;
        gz = gz_new;
    }
    Some(RunResult {
        r: cur.r,
        u,
        iterations,
    })
}

/// Multistart preconditioned nonlinear conjugate gradients on the band `|j|∞ <= band` of an
/// `n = 2·band + 2` grid. Refuses to run when the uniform state is unstable.
pub fn estimate_pn(params: &ModelParams, rank: usize, cfg: &SearchConfig) -> Result<PnEstimate> {
    if cfg.band < 2 || cfg.restarts < 1 {
        return Err(Error::InvalidArgument(
            "search needs band >= 2 and at least one restart".into(),
        ));
    }
    let stability = stability_test(params, rank)?;
    if !stability.stable {
        return Err(Error::UnstableRegime {
            margin: stability.margin,
        });
    }
    let problem = Problem::new(params, rank, cfg.band)?;
    let runs: Vec<Option<RunResult>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(i as u64));
            let u0 = random_band_limited(&problem.grid, cfg.band, 1.0, &mut rng);
            descend(&problem, u0, cfg)
        })
        .collect();
    let degenerate = runs.iter().filter(|r| r.is_none()).count();
    let iterations = runs.iter().flatten().map(|r| r.iterations).sum();
    let best = runs
        .into_iter()
        .flatten()
        .reduce(|a, b| if b.r < a.r { b } else { a })
        .ok_or_else(|| Error::EstimationFailed {
            restarts: cfg.restarts,
            detail: "every restart hit a vanishing cubic moment".into(),
        })?;
    let m3 = best.u.moments().m3;
    let witness = best.u.scale(m3.cbrt().recip());
    let upper_bound = rayleigh_quotient(&witness, params)?;
    Ok(PnEstimate {
        lower_bound: Some(stability.margin),
        upper_bound,
        witness,
        restarts_used: cfg.restarts - degenerate,
        iterations,
        band: cfg.band,
        degenerate_restarts: degenerate,
    })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::potential::Potential;

    #[test]
    fn degenerate_two_mode_quotient_vanishes() {
        let alpha = 10.0 * PI * PI;
        let p = ModelParams::pfc(alpha, 0.0, Potential::double_well(36.0 * PI.powi(4)));
        let g = Grid::periodic(&[16]).unwrap();
        let v = SpectralField::from_fn(g, |x| (2.0 * PI * x[0]).cos() + (4.0 * PI * x[0]).cos());
        let r = rayleigh_quotient(&v, &p).unwrap();
        assert!(r.abs() <= 1e-10, "{r}");
    }

    #[test]
    fn quotient_is_scale_invariant() {
        let p = ModelParams::pfc(1.0, 0.5, Potential::double_well(0.3));
        let g = Grid::periodic(&[16, 16]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let u = random_band_limited(&g, 4, 1.0, &mut rng);
        let r = rayleigh_quotient(&u, &p).unwrap();
        for lambda in [-3.0, 0.5, 2.0, 3.0] {
            let rl = rayleigh_quotient(&u.scale(lambda), &p).unwrap();
            assert!((rl - r).abs() <= 1e-12 * r.abs());
        }
        let sym = SpectralField::from_fn(g, |x| (2.0 * PI * x[0]).cos());
        assert!(matches!(rayleigh_quotient(&sym, &p), Err(Error::DegenerateDirection(_))));
    }

    #[test]
    fn eqal11_values() {
        assert_eq!(eqal11_sequence(3).unwrap(), 3.0);
        let v100 = eqal11_sequence(100).unwrap();
        assert!((1.0..=1.05).contains(&v100), "{v100}");
        let seq: Vec<f64> = [10, 20, 50, 100, 1000, 100000]
            .iter()
            .map(|&n| eqal11_sequence(n).unwrap())
            .collect();
        assert!(seq.windows(2).all(|w| w[1] < w[0]));
        assert!((seq[5] - 1.0).abs() < 1e-4);
        assert!(eqal11_sequence(2).is_err());
    }

    #[test]
    fn eqal11_matches_sampled_moments() {
        // Independent check: integrate the step function exactly on a grid aligned with 1/n.
        for n in [3usize, 7, 25] {
            let samples = 100 * n;
            let v: Vec<f64> = (0..samples)
                .map(|i| if i < 100 { n as f64 } else { -(n as f64) / (n as f64 - 1.0) })
                .collect();
            let moment = |p: i32| v.iter().map(|x| x.powi(p)).sum::<f64>() / samples as f64;
            let direct = moment(2) * moment(4) / moment(3).powi(2);
            let closed = eqal11_sequence(n as u64).unwrap();
            assert!((direct - closed).abs() < 1e-12 * closed, "{n}: {direct} {closed}");
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let p = ModelParams::ok(2.0, 0.3, Potential::double_well(0.5)).unwrap();
        let problem = Problem::new(&p, 2, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let u = random_band_limited(&problem.grid, 3, 1.0, &mut rng);
        let v = random_band_limited(&problem.grid, 3, 1.0, &mut rng);
        let e = problem.eval(&u).unwrap();
        let h = 1e-4;
        let f = |t: f64| problem.value(&u.axpy(t, &v).unwrap()).unwrap();
        let fd = (-f(2.0 * h) + 8.0 * f(h) - 8.0 * f(-h) + f(-2.0 * h)) / (12.0 * h);
        let exact = dot(&e.grad, &v);
        assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "{fd} {exact}");
    }

    #[test]
    fn estimator_finds_the_degenerate_zero() {
        let alpha = 10.0 * PI * PI;
        let p = ModelParams::pfc(alpha, 0.0, Potential::double_well(36.0 * PI.powi(4)));
        let cfg = SearchConfig {
            band: 4,
            ..SearchConfig::for_rank(1)
        };
        let est = estimate_pn(&p, 1, &cfg).unwrap();
        assert!(est.upper_bound <= 1e-6, "{}", est.upper_bound);
        assert_eq!(est.lower_bound, Some(0.0));
        assert!((est.witness.moments().m3 - 1.0).abs() < 1e-10);
    }

    #[test]
    fn estimator_respects_the_lower_bound() {
        let p = ModelParams::pfc(1.0, 1.0, Potential::double_well(0.5));
        let cfg = SearchConfig {
            restarts: 4,
            ..SearchConfig::for_rank(1)
        };
        let est = estimate_pn(&p, 1, &cfg).unwrap();
        let lower = est.lower_bound.unwrap();
        assert!((lower - (2.5 + (1.0 - 4.0 * PI * PI).powi(2))).abs() < 1e-9);
        assert!(lower >= 2.0);
        assert!(est.upper_bound >= lower - 1e-8);
    }

    #[test]
    fn estimator_refuses_unstable_points() {
        let p = ModelParams::pfc(1.0, 0.0, Potential::double_well(2000.0));
        assert!(matches!(
            estimate_pn(&p, 2, &SearchConfig::for_rank(2)),
            Err(Error::UnstableRegime { .. })
        ));
    }
}
