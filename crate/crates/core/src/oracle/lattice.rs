//! Minimisation of per-mode symbols over the lattice `|k|² = 4π²q`, `q` a sum of `N` squares.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::energy::{Model, ModelParams};
use crate::error::{Error, Result};

const FOUR_PI2: f64 = 4.0 * PI * PI;

/// Minimum of a lattice objective together with every minimising `q`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeMinResult {
    pub value: f64,
    pub argmin_norms: Vec<u64>,
    pub searched_bound: u64,
}

fn check_rank(n: usize) -> Result<()> {
    if (1..=3).contains(&n) {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("rank {n} not in 1..=3")))
    }
}

/// Sorted distinct `q <= q_max`, `q >= 1`, that are sums of `n` integer squares.
pub fn representable_norms(n: usize, q_max: u64) -> Result<Vec<u64>> {
    check_rank(n)?;
    let mut hit = vec![false; q_max as usize + 1];
    let r = (q_max as f64).sqrt() as u64 + 1;
    match n {
        1 => {
            for i in 0..=r {
                if i * i <= q_max {
                    hit[(i * i) as usize] = true;
                }
            }
        }
        2 => {
            for i in 0..=r {
                for j in i..=r {
                    let q = i * i + j * j;
                    if q <= q_max {
                        hit[q as usize] = true;
                    }
                }
            }
        }
        _ => {
            for i in 0..=r {
                for j in i..=r {
                    let s = i * i + j * j;
                    if s > q_max {
                        break;
                    }
                    for k in j..=r {
                        let q = s + k * k;
                        if q > q_max {
                            break;
                        }
                        hit[q as usize] = true;
                    }
                }
            }
        }
    }
    Ok((1..=q_max).filter(|&q| hit[q as usize]).collect())
}

/// Lexicographically smallest nonnegative integer vector of length `n` with squared length `q`.
pub fn lattice_vector(n: usize, q: u64) -> Option<Vec<i64>> {
    fn search(n: usize, q: u64, prefix: &mut Vec<i64>) -> bool {
        if n == 0 {
            return q == 0;
        }
        let r = (q as f64).sqrt() as u64 + 1;
        for i in 0..=r {
            if i * i > q {
                break;
            }
            prefix.push(i as i64);
            if search(n - 1, q - i * i, prefix) {
                return true;
            }
            prefix.pop();
        }
        false
    }
    let mut out = Vec::with_capacity(n);
    search(n, q, &mut out).then_some(out)
}

/// Search bound covering the representable norm just above the continuous optimum `q_opt`.
fn search_bound(q_opt: f64) -> u64 {
    (2.0 * q_opt).max(4.0).ceil() as u64 + 8
}

/// Minimise a function of `q` that is non-increasing then non-decreasing.
fn unimodal_min(n: usize, q_opt: f64, f: impl Fn(u64) -> f64) -> Result<LatticeMinResult> {
    let bound = search_bound(q_opt);
    let norms = representable_norms(n, bound)?;
    // Every square is representable, so the first representable norm above q_opt lies
    // within (sqrt(q_opt) + 1)² <= 2 q_opt + 8; past it the objective only grows.
    let values: Vec<(u64, f64)> = norms.iter().map(|&q| (q, f(q))).collect();
    let value = values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * value.abs().max(1e-300);
    let argmin_norms = values
        .iter()
        .filter(|v| v.1 - value <= tol)
        .map(|v| v.0)
        .collect();
    Ok(LatticeMinResult {
        value,
        argmin_norms,
        searched_bound: bound,
    })
}

/// `min_{k ≠ 0} (α − |k|²)²`.
pub fn lattice_min_pfc(alpha: f64, n: usize) -> Result<LatticeMinResult> {
    unimodal_min(n, (alpha / FOUR_PI2).max(0.0), |q| {
        (alpha - FOUR_PI2 * q as f64).powi(2)
    })
}

/// `min_{k ≠ 0} (|k|²/γ² + 1/|k|²)`.
pub fn lattice_min_ok(gamma: f64, n: usize) -> Result<LatticeMinResult> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidArgument(format!("gamma must be > 0, got {gamma}")));
    }
    unimodal_min(n, gamma / FOUR_PI2, |q| {
        let x = FOUR_PI2 * q as f64;
        x / (gamma * gamma) + 1.0 / x
    })
}

pub fn lattice_min(params: &ModelParams, n: usize) -> Result<LatticeMinResult> {
    match params.model {
        Model::Pfc { alpha } => lattice_min_pfc(alpha, n),
        Model::Ok { gamma } => lattice_min_ok(gamma, n),
    }
}

/// Second-variation test of the uniform state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityResult {
    pub stable: bool,
    /// `W''(m) + lattice minimum`; snapped to exactly 0 within roundoff of its two terms.
    pub margin: f64,
    pub lattice: LatticeMinResult,
}

pub fn stability_test(params: &ModelParams, n: usize) -> Result<StabilityResult> {
    let lattice = lattice_min(params, n)?;
    let d2 = params.potential.d2(params.m);
    let mut margin = d2 + lattice.value;
    if margin.abs() <= 1e-12 * (d2.abs() + lattice.value.abs()) {
        margin = 0.0;
    }
    Ok(StabilityResult {
        stable: margin >= 0.0,
        margin,
        lattice,
    })
}
