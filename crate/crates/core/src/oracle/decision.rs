//! Certified verdicts on global optimality of the uniform state.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::estimator::{estimate_pn, SearchConfig};
use super::lattice::{lattice_vector, stability_test};
use crate::energy::{abc_with_moments, energy, ModelParams};
use crate::error::{Error, Result};
use crate::spectral::{Grid, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    CertifiedGlobal,
    CertifiedGlobalUnique,
    CertifiedNotGlobal,
    UnstableNotGlobal,
    Undetermined,
}

impl Verdict {
    pub fn as_str(&self) -> &'static str {
        match self {
            Verdict::CertifiedGlobal => "CertifiedGlobal",
            Verdict::CertifiedGlobalUnique => "CertifiedGlobalUnique",
            Verdict::CertifiedNotGlobal => "CertifiedNotGlobal",
            Verdict::UnstableNotGlobal => "UnstableNotGlobal",
            Verdict::Undetermined => "Undetermined",
        }
    }

    pub fn is_global(&self) -> bool {
        matches!(self, Verdict::CertifiedGlobal | Verdict::CertifiedGlobalUnique)
    }

    pub fn is_not_global(&self) -> bool {
        matches!(self, Verdict::CertifiedNotGlobal | Verdict::UnstableNotGlobal)
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug)]
pub struct Decision {
    pub verdict: Verdict,
    /// Lower-energy state; present exactly for the two not-global verdicts.
    pub witness: Option<SpectralField>,
    pub witness_energy: Option<f64>,
    pub uniform_energy: f64,
    pub margin: f64,
    pub lower_bound: Option<f64>,
    pub upper_bound: Option<f64>,
    /// `W'''(m)²/(3w²)`, absent when `w = 0`.
    pub threshold: Option<f64>,
    pub notes: Vec<String>,
}

/// Smallest energy decrease accepted as a verified counterexample.
pub fn verification_gap(uniform_energy: f64) -> f64 {
    1e-9 + 1e-12 * uniform_energy.abs()
}

/// Default torus of rank `n`, widened so that lattice vector `index` sits below Nyquist.
fn grid_holding(n: usize, index: &[i64]) -> Result<Grid> {
    let base = Grid::default_torus(n)?;
    let counts: Vec<usize> = base
        .counts()
        .iter()
        .zip(index)
        .map(|(&c, &j)| c.max(2 * (j.unsigned_abs() as usize + 1)))
        .collect();
    Grid::periodic(&counts)
}

/// Minimise `t ↦ E(m + t u)` for `t > 0`.
fn line_minimise(params: &ModelParams, u: &SpectralField) -> Result<f64> {
    let base = SpectralField::constant(u.grid().clone(), params.m);
    let f = |t: f64| -> Result<f64> { energy(params, &base.axpy(t, u)?) };
    let w = &params.potential;
    if w.has_constant_fourth_derivative() && w.d4(params.m) > 0.0 {
        // E(m + tu) − E(m) = A t² + B t³ + C t⁴ exactly; take the best critical point.
        let mo = u.moments();
        let a = 0.5 * (crate::energy::quadratic_part(params, u) + w.d2(params.m) * mo.m2);
        let b = w.d3(params.m) * mo.m3 / 6.0;
        let c = w.d4(params.m) * mo.m4 / 24.0;
        let disc = 9.0 * b * b - 32.0 * a * c;
        let mut best = (0.0, 0.0);
        if disc >= 0.0 {
            for sign in [-1.0, 1.0] {
                let t = (-3.0 * b + sign * disc.sqrt()) / (8.0 * c);
                let v = t * t * (a + t * (b + t * c));
                if v < best.1 {
                    best = (t, v);
                }
            }
        }
        return Ok(best.0);
    }
    let f0 = f(0.0)?;
    let mut hi = 1e-3;
    let mut prev = f(hi)?;
    if prev >= f0 {
        return Ok(0.0);
    }
    for _ in 0..80 {
        let next = f(2.0 * hi)?;
        if next >= prev {
            break;
        }
        hi *= 2.0;
        prev = next;
    }
    // Golden section on [hi/2, 2hi], which brackets the decrease found above.
    let (mut lo, mut up) = (0.5 * hi, 2.0 * hi);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = up - g * (up - lo);
    let mut x2 = lo + g * (up - lo);
    let (mut f1, mut f2) = (f(x1)?, f(x2)?);
    for _ in 0..100 {
        if f1 < f2 {
            up = x2;
            x2 = x1;
            f2 = f1;
            x1 = up - g * (up - lo);
            f1 = f(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (up - lo);
            f2 = f(x2)?;
        }
        if up - lo <= 1e-12 * up {
            break;
        }
    }
    Ok(0.5 * (lo + up))
}

/// Run the decision ladder for the uniform state `m` on the rank-`n` torus.
pub fn decide_uniform(params: &ModelParams, n: usize, search: &SearchConfig) -> Result<Decision> {
    let stability = stability_test(params, n)?;
    let uniform_energy = params.uniform_energy();
    let margin = stability.margin;
    let w = &params.potential;
    let threshold = (w.w() > 0.0).then(|| w.d3(params.m).powi(2) / (3.0 * w.w() * w.w()));
    let mut decision = Decision {
        verdict: Verdict::Undetermined,
        witness: None,
        witness_energy: None,
        uniform_energy,
        margin,
        lower_bound: None,
        upper_bound: None,
        threshold,
        notes: Vec::new(),
    };

    if margin < 0.0 {
        let q = stability.lattice.argmin_norms[0];
        let index = lattice_vector(n, q).expect("argmin norm is representable");
        let grid = grid_holding(n, &index)?;
        let u = SpectralField::from_fn(grid.clone(), |x| {
            let phase: f64 = x.iter().zip(&index).map(|(x, &j)| j as f64 * x).sum();
            (2.0 * PI * phase).sin()
        });
        let t = line_minimise(params, &u)?;
        let phi = SpectralField::constant(grid, params.m).axpy(t, &u)?;
        let e = energy(params, &phi)?;
        decision.notes.push(format!(
            "second variation negative along k = 2π{index:?} (|k|² = 4π²·{q}); t = {t:.6e} by line minimisation"
        ));
        if e < uniform_energy - verification_gap(uniform_energy) {
            decision.verdict = Verdict::UnstableNotGlobal;
            decision.witness = Some(phi);
            decision.witness_energy = Some(e);
            decision.notes.push(format!("witness energy {e:.12e} verified below uniform {uniform_energy:.12e}"));
        } else {
            decision.notes.push(format!(
                "witness energy {e:.12e} failed verification against {uniform_energy:.12e}"
            ));
        }
        return Ok(decision);
    }

    decision.lower_bound = Some(margin);
    let Some(threshold) = threshold else {
        decision
            .notes
            .push("potential has no lower bound w on its fourth derivative".into());
        return Ok(decision);
    };

    if margin >= threshold {
        decision.verdict = if margin > threshold {
            Verdict::CertifiedGlobalUnique
        } else {
            Verdict::CertifiedGlobal
        };
        decision.notes.push(format!(
            "closed-form lower bound {margin:.12e} >= threshold {threshold:.12e}"
        ));
        return Ok(decision);
    }

    let estimate = match estimate_pn(params, n, search) {
        Ok(est) => est,
        Err(err @ Error::EstimationFailed { .. }) => {
            decision.notes.push(format!("estimator failed: {err}"));
            return Ok(decision);
        }
        Err(err) => return Err(err),
    };
    decision.upper_bound = Some(estimate.upper_bound);
    decision.notes.push(format!(
        "estimated upper bound {:.12e} (band {}, {} restarts, {} iterations)",
        estimate.upper_bound, estimate.band, estimate.restarts_used, estimate.iterations
    ));

    if margin == 0.0 {
        decision
            .notes
            .push("stability margin is exactly zero (resonance)".into());
        return Ok(decision);
    }
    if !w.has_constant_fourth_derivative() {
        decision
            .notes
            .push("fourth derivative not constant; no counterexample construction".into());
        return Ok(decision);
    }
    if estimate.upper_bound >= threshold {
        return Ok(decision);
    }

    let u = &estimate.witness;
    let abc = abc_with_moments(params, params.m, u, &u.moments())?;
    let t = -abc.b / (2.0 * abc.c);
    let phi = u.scale(t).with_mean(params.m);
    let e = energy(params, &phi)?;
    decision.notes.push(format!(
        "A = {:.6e}, B = {:.6e}, C = {:.6e}, t = {t:.6e}",
        abc.a, abc.b, abc.c
    ));
    if e < uniform_energy - verification_gap(uniform_energy) {
        decision.verdict = Verdict::CertifiedNotGlobal;
        decision.witness = Some(phi);
        decision.witness_energy = Some(e);
        decision.notes.push(format!("witness energy {e:.12e} verified below uniform {uniform_energy:.12e}"));
    } else {
        decision.notes.push(format!(
            "witness energy {e:.12e} not below uniform {uniform_energy:.12e}; left undetermined"
        ));
    }
    Ok(decision)
}
