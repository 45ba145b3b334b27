//! Built-in identity checks, runnable from the command line.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::io::FieldFile;
use crate::spectral::{random_band_limited, Grid, SpectralField, View};
use crate::thin_film::crossing_identity_check;

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub name: String,
    /// Largest observed error, in the units `tol` is stated in.
    pub worst: f64,
    pub tol: f64,
    pub passed: bool,
}

impl CheckResult {
    fn new(name: impl Into<String>, worst: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            worst,
            tol,
            passed: worst <= tol,
        }
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

fn periodic_grids() -> Vec<Grid> {
    [vec![32], vec![16, 16], vec![8, 8, 8]]
        .iter()
        .map(|c| Grid::periodic(c).unwrap())
        .collect()
}

/// Run the suite with `fields` random fields per rank.
pub fn run_selftest(seed: u64, fields: usize) -> Result<Vec<CheckResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let (mut round, mut planch, mut lap_mean, mut inv, mut holder) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for grid in periodic_grids() {
        let band = grid.counts()[0] / 4 - 1;
        for i in 0..fields {
            let phi = random_band_limited(&grid, band, 1.0, &mut rng).with_mean(0.3);

            let spectrum = SpectralField::new(grid.clone(), phi.values().to_vec())?
                .transform(View::Spectrum)
                .spectrum()
                .to_vec();
            let back = SpectralField::from_spectrum(grid.clone(), phi.parity(), spectrum);
            let scale = phi.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let err = back
                .values()
                .iter()
                .zip(phi.values())
                .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            round = round.max(err / scale);

            let alpha = [-1.0, 0.0, 1.0, 10.0 * PI * PI][i % 4];
            let lap = phi.laplacian();
            let direct: f64 = phi
                .values()
                .iter()
                .zip(lap.values())
                .map(|(p, l)| (alpha * p + l).powi(2))
                .sum::<f64>()
                / grid.len() as f64;
            planch = planch.max(rel(phi.plancherel_quadratic(alpha)?, direct));

            lap_mean = lap_mean.max(lap.mean().abs());

            let u = phi.with_mean(0.0);
            let psi = u.inverse_laplacian_zero_mean();
            let r1 = psi.laplacian().scale(-1.0).axpy(-1.0, &u)?.norm_l2() / u.norm_l2();
            let r2 = u.laplacian().scale(-1.0).inverse_laplacian_zero_mean().axpy(-1.0, &u)?.norm_l2()
                / u.norm_l2();
            inv = inv.max(r1).max(r2);

            let mo = u.moments();
            let abs3 = u.padded().mean_of(|s| s.abs().powi(3));
            let slack = 1e-12 * mo.m4 * mo.m2;
            holder = holder
                .max(abs3 * abs3 - mo.m4 * mo.m2 - slack)
                .max(mo.m3 * mo.m3 - abs3 * abs3 - slack)
                .max(0.0);
        }
    }
    out.push(CheckResult::new("transform round trip (relative)", round, 1e-12));
    out.push(CheckResult::new("Plancherel quadratic form (relative)", planch, 1e-10));
    out.push(CheckResult::new("mean of Laplacian (absolute)", lap_mean, 1e-12));
    out.push(CheckResult::new("inverse Laplacian, both sides (relative)", inv, 1e-10));
    out.push(CheckResult::new("Hoelder chain M4 M2 >= (int|u|^3)^2 >= M3^2 (excess)", holder, 0.0));

    let film = Grid::thin_film(8, 8, 8)?;
    let mut crossing = 0.0f64;
    for _ in 0..fields {
        let phi = random_band_limited(&film, 3, 1.0, &mut rng).with_mean(-0.2);
        let (r1, r2) = crossing_identity_check(&phi)?;
        let h2 = phi.quadratic_form(|mode| (1.0 + mode.k2).powi(2));
        crossing = crossing.max(r1.max(r2) / (1.0 + h2));
    }
    out.push(CheckResult::new("crossing identities (relative to 1 + H2 norm)", crossing, 1e-10));

    let mut bits = 0.0;
    for grid in periodic_grids() {
        let phi = random_band_limited(&grid, 2, 1.0, &mut rng);
        let file = FieldFile::from_field(&phi);
        if FieldFile::from_bytes(&file.to_bytes())? != file {
            bits = 1.0;
        }
    }
    out.push(CheckResult::new("PFCF round trip (mismatches)", bits, 0.0));
    Ok(out)
}
