//! PFC and Ohta-Kawasaki energies, mass-projected gradients and the quartic A/B/C split.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potential::Potential;
use crate::spectral::{Grid, Mode, Moments, Padded, SpectralField};

/// Which torus energy.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum Model {
    /// `∫ ½(αφ + Δφ)² + W(φ)`.
    Pfc { alpha: f64 },
    /// `∫ |∇φ|²/(2γ²) + ½‖φ − m‖²_{H⁻¹} + W(φ)`.
    Ok { gamma: f64 },
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Pfc { .. } => "pfc",
            Model::Ok { .. } => "ok",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ModelParams {
    pub model: Model,
    /// Prescribed mean.
    pub m: f64,
    pub potential: Potential,
}

impl ModelParams {
    pub fn pfc(alpha: f64, m: f64, potential: Potential) -> Self {
        Self {
            model: Model::Pfc { alpha },
            m,
            potential,
        }
    }

    pub fn ok(gamma: f64, m: f64, potential: Potential) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("gamma must be > 0, got {gamma}")));
        }
        Ok(Self {
            model: Model::Ok { gamma },
            m,
            potential,
        })
    }

    /// Energy of the uniform state `φ ≡ m`.
    pub fn uniform_energy(&self) -> f64 {
        let w = self.potential.eval(self.m);
        match self.model {
            Model::Pfc { alpha } => 0.5 * alpha * alpha * self.m * self.m + w,
            Model::Ok { .. } => w,
        }
    }

    /// Multiplier of `|c_k|²` in twice the quadratic part of the energy, as a function of
    /// `x = |k|²`.
    pub fn symbol_of_k2(&self, k2: f64) -> f64 {
        match self.model {
            Model::Pfc { alpha } => (alpha - k2).powi(2),
            Model::Ok { gamma } => {
                if k2 == 0.0 {
                    0.0
                } else {
                    k2 / (gamma * gamma) + 1.0 / k2
                }
            }
        }
    }
}

/// An energy `½ Σ_k S(k)|c_k|² + ∫ W(φ)` with a diagonal linear part.
///
/// Everything downstream (gradients, relaxation, the A/B/C split) only needs the symbol
/// `S` and the potential.
pub trait Functional: Sync {
    fn symbol(&self, mode: &Mode) -> f64;
    fn potential(&self) -> &Potential;
    /// Prescribed mean `m`.
    fn mass(&self) -> f64;
    /// Reject grids the energy is not defined on.
    fn check_grid(&self, grid: &Grid) -> Result<()>;
}

impl Functional for ModelParams {
    fn symbol(&self, mode: &Mode) -> f64 {
        self.symbol_of_k2(mode.k2)
    }

    fn potential(&self) -> &Potential {
        &self.potential
    }

    fn mass(&self) -> f64 {
        self.m
    }

    fn check_grid(&self, grid: &Grid) -> Result<()> {
        if grid.is_periodic() {
            Ok(())
        } else {
            Err(Error::InvalidGrid(
                "torus energies need all axes periodic".into(),
            ))
        }
    }
}

/// `∫(Sφ)φ`, twice the quadratic part.
pub fn quadratic_part<F: Functional + ?Sized>(f: &F, phi: &SpectralField) -> f64 {
    phi.quadratic_form(|mode| f.symbol(mode))
}

/// Energy from a field and its padded samples (lets callers reuse the padding).
pub(crate) fn energy_with_padded<F: Functional + ?Sized>(
    f: &F,
    phi: &SpectralField,
    padded: &Padded,
) -> f64 {
    let w = f.potential();
    0.5 * quadratic_part(f, phi) + padded.mean_of(|s| w.eval(s))
}

pub fn energy<F: Functional + ?Sized>(f: &F, phi: &SpectralField) -> Result<f64> {
    f.check_grid(phi.grid())?;
    Ok(energy_with_padded(f, phi, &phi.padded()))
}

/// Zero-mean projection of the first variation, `Sφ + W'(φ) − mean`.
pub fn gradient<F: Functional + ?Sized>(f: &F, phi: &SpectralField) -> Result<SpectralField> {
    f.check_grid(phi.grid())?;
    let w = f.potential();
    let nonlinear = SpectralField::from_padded(phi.grid(), &phi.padded().map(|s| w.d1(s)));
    let linear = phi.apply_symbol(|mode| f.symbol(mode));
    Ok(linear.axpy(1.0, &nonlinear)?.with_mean(0.0))
}

fn expect_model(params: &ModelParams, expected: &'static str) -> Result<()> {
    let found = params.model.name();
    if found == expected {
        Ok(())
    } else {
        Err(Error::ModelMismatch { expected, found })
    }
}

pub fn pfc_energy(phi: &SpectralField, params: &ModelParams) -> Result<f64> {
    expect_model(params, "pfc")?;
    energy(params, phi)
}

pub fn ok_energy(phi: &SpectralField, params: &ModelParams) -> Result<f64> {
    expect_model(params, "ok")?;
    energy(params, phi)
}

/// `∫|∇ψ|²` with `−Δψ = φ − m`, `∫ψ = 0`, evaluated through ψ and its gradient rather than
/// the spectral `Σ|c_k|²/|k|²`.
pub fn hminus1_norm_sq_via_psi(phi: &SpectralField) -> Result<f64> {
    let psi = phi.inverse_laplacian_zero_mean();
    let mut total = 0.0;
    for axis in 0..phi.grid().rank() {
        total += psi.partial_derivative(axis)?.norm_l2().powi(2);
    }
    Ok(total)
}

/// Mass-projected variational derivative for either torus model.
pub fn variational_gradient(phi: &SpectralField, params: &ModelParams) -> Result<SpectralField> {
    gradient(params, phi)
}

/// Coefficients of `E(m + tu) − E(m) ≥ At² + Bt³ + Ct⁴`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AbcTriple {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl AbcTriple {
    pub fn eval(&self, t: f64) -> f64 {
        t * t * (self.a + t * (self.b + t * self.c))
    }
}

fn require_zero_mean(u: &SpectralField) -> Result<()> {
    let mean = u.mean();
    let scale = 1.0 + u.norm_l2();
    if mean.abs() > 1e-12 * scale {
        return Err(Error::NonzeroMean { mean });
    }
    Ok(())
}

/// `A = ½(∫(Su)u + W''(m)M2)`, `B = W'''(m)M3/6`, `C = w²M4/24` for a zero-mean direction.
pub fn abc_with_moments<F: Functional + ?Sized>(
    f: &F,
    m: f64,
    u: &SpectralField,
    moments: &Moments,
) -> Result<AbcTriple> {
    let w = f.potential();
    if w.w() <= 0.0 {
        return Err(Error::UnsupportedPotential(format!(
            "{} has no positive lower bound w on its fourth derivative",
            w.id()
        )));
    }
    let quad = quadratic_part(f, u) + w.d2(m) * moments.m2;
    Ok(AbcTriple {
        a: 0.5 * quad,
        b: w.d3(m) * moments.m3 / 6.0,
        c: w.w() * w.w() * moments.m4 / 24.0,
    })
}

pub fn abc_decomposition(u: &SpectralField, params: &ModelParams) -> Result<AbcTriple> {
    params.check_grid(u.grid())?;
    require_zero_mean(u)?;
    abc_with_moments(params, params.m, u, &u.moments())
}

/// `|E(m + tu) − E(m) − (At² + Bt³ + Ct⁴)|`, which vanishes up to quadrature roundoff when
/// `W''''` is constant.
pub fn quartic_exactness_residual(u: &SpectralField, t: f64, params: &ModelParams) -> Result<f64> {
    if !params.potential.has_constant_fourth_derivative() {
        return Err(Error::UnsupportedPotential(format!(
            "{} has a non-constant fourth derivative",
            params.potential.id()
        )));
    }
    let abc = abc_decomposition(u, params)?;
    let phi = u.scale(t).with_mean(params.m);
    let e_phi = energy(params, &phi)?;
    let e_m = energy(params, &SpectralField::constant(u.grid().clone(), params.m))?;
    Ok((e_phi - e_m - abc.eval(t)).abs())
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::spectral::random_band_limited;

    fn approx(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + b.abs())
    }

    fn zero_w() -> Potential {
        Potential::polynomial(vec![0.0])
    }

    /// Five-point central difference of `t ↦ E(φ + tv)` at 0; exact for quartics.
    fn fd_directional<F: Functional>(f: &F, phi: &SpectralField, v: &SpectralField, h: f64) -> f64 {
        let e = |t: f64| energy(f, &phi.axpy(t, v).unwrap()).unwrap();
        (-e(2.0 * h) + 8.0 * e(h) - 8.0 * e(-h) + e(-2.0 * h)) / (12.0 * h)
    }

    #[test]
    fn constant_states() {
        let g = Grid::periodic(&[16, 16]).unwrap();
        let p = ModelParams::pfc(1.3, 0.4, Potential::double_well(1.0));
        let phi = SpectralField::constant(g.clone(), 0.4);
        let expected = 0.5 * 1.3 * 1.3 * 0.16 + p.potential.eval(0.4);
        assert!(approx(pfc_energy(&phi, &p).unwrap(), expected, 1e-15));
        assert!(variational_gradient(&phi, &p).unwrap().norm_l2() < 1e-13);

        let zero = SpectralField::constant(g.clone(), 0.0);
        let p0 = ModelParams::pfc(2.0, 0.0, Potential::double_well(1.0));
        assert!(approx(pfc_energy(&zero, &p0).unwrap(), 0.25, 1e-15));

        let ok = ModelParams::ok(3.0, 0.4, Potential::double_well(1.0)).unwrap();
        assert!(approx(ok_energy(&phi, &ok).unwrap(), ok.potential.eval(0.4), 1e-15));
        assert!(variational_gradient(&phi, &ok).unwrap().norm_l2() < 1e-13);
        assert!(matches!(pfc_energy(&phi, &ok), Err(Error::ModelMismatch { .. })));
        assert!(ModelParams::ok(0.0, 0.0, zero_w()).is_err());
    }

    #[test]
    fn single_mode_energies() {
        let g = Grid::periodic(&[16, 16]).unwrap();
        let (alpha, m, gamma) = (2.5, 0.3, 1.7);
        let phi = SpectralField::from_fn(g, |x| m + (2.0 * PI * x[0]).cos());
        let pfc = ModelParams::pfc(alpha, m, zero_w());
        let expected = 0.5 * alpha * alpha * m * m + 0.25 * (alpha - 4.0 * PI * PI).powi(2);
        assert!(approx(pfc_energy(&phi, &pfc).unwrap(), expected, 1e-13));

        let ok = ModelParams::ok(gamma, m, zero_w()).unwrap();
        let expected = PI * PI / (gamma * gamma) + 1.0 / (16.0 * PI * PI);
        assert!(approx(ok_energy(&phi, &ok).unwrap(), expected, 1e-13));
    }

    #[test]
    fn hminus1_spectral_matches_psi_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for dims in [vec![32], vec![16, 16], vec![8, 8, 8]] {
            let g = Grid::periodic(&dims).unwrap();
            let phi = random_band_limited(&g, 3, 1.0, &mut rng).with_mean(0.6);
            let spectral = phi.quadratic_form(|m| if m.k2 == 0.0 { 0.0 } else { 1.0 / m.k2 });
            let direct = hminus1_norm_sq_via_psi(&phi).unwrap();
            assert!(approx(spectral, direct, 1e-10), "{spectral} {direct}");
        }
    }

    #[test]
    fn pfc_quadratic_part_is_half_plancherel() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Grid::periodic(&[16, 16]).unwrap();
        let phi = random_band_limited(&g, 8, 1.0, &mut rng).with_mean(0.2);
        let p = ModelParams::pfc(5.0, 0.2, zero_w());
        let e = pfc_energy(&phi, &p).unwrap();
        assert!(approx(e, 0.5 * phi.plancherel_quadratic(5.0).unwrap(), 1e-12));
    }

    #[test]
    fn single_mode_gradient_symbol() {
        let g = Grid::periodic(&[16]).unwrap();
        let alpha = 7.0;
        let phi = SpectralField::from_fn(g.clone(), |x| (2.0 * PI * x[0]).cos());
        let grad = variational_gradient(&phi, &ModelParams::pfc(alpha, 0.0, zero_w())).unwrap();
        let s = (alpha - 4.0 * PI * PI).powi(2);
        let expected = SpectralField::from_fn(g, |x| s * (2.0 * PI * x[0]).cos());
        for (a, b) in grad.values().iter().zip(expected.values()) {
            assert!((a - b).abs() < 1e-10 * s);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Grid::periodic(&[16, 16]).unwrap();
        let models = [
            ModelParams::pfc(1.0, 0.3, Potential::double_well(1.0)),
            ModelParams::ok(2.0, -0.2, Potential::double_well(0.7)).unwrap(),
        ];
        for p in &models {
            for _ in 0..5 {
                let phi = random_band_limited(&g, 4, 1.0, &mut rng).with_mean(p.m);
                let v = random_band_limited(&g, 4, 1.0, &mut rng);
                let grad = variational_gradient(&phi, p).unwrap();
                let exact = grad.integral_of_product(&v).unwrap();
                let fd = fd_directional(p, &phi, &v, 1e-2);
                assert!((exact - fd).abs() <= 1e-6 * exact.abs().max(1.0), "{exact} {fd}");
            }
        }
    }

    #[test]
    fn second_variation_along_a_mode() {
        let g = Grid::periodic(&[16, 16]).unwrap();
        let (alpha, m) = (3.0, 0.5);
        let p = ModelParams::pfc(alpha, m, Potential::double_well(1.2));
        let u = SpectralField::from_fn(g.clone(), |x| (2.0 * PI * (x[0] + x[1])).sin());
        let base = SpectralField::constant(g, m);
        let e = |t: f64| energy(&p, &base.axpy(t, &u).unwrap()).unwrap();
        let h = 1e-3;
        let fd = (-e(2.0 * h) + 16.0 * e(h) - 30.0 * e(0.0) + 16.0 * e(-h) - e(-2.0 * h))
            / (12.0 * h * h);
        let expected = 0.5 * (alpha - 8.0 * PI * PI).powi(2) + 0.5 * p.potential.d2(m);
        assert!((fd - expected).abs() <= 1e-6 * expected.abs(), "{fd} {expected}");
    }

    #[test]
    fn abc_single_mode() {
        let g = Grid::periodic(&[16, 16]).unwrap();
        let (alpha, a, m) = (1.0, 1.5, 0.4);
        let p = ModelParams::pfc(alpha, m, Potential::double_well(a));
        let u = SpectralField::from_fn(g.clone(), |x| (2.0 * PI * x[0]).cos());
        let abc = abc_decomposition(&u, &p).unwrap();
        assert!(approx(abc.a, 0.25 * (alpha - 4.0 * PI * PI).powi(2) + 0.25 * (3.0 * m * m - a), 1e-13));
        assert!(abc.b.abs() < 1e-15);
        assert!(approx(abc.c, 3.0 / 32.0, 1e-14));

        let zero = abc_decomposition(&SpectralField::constant(g.clone(), 0.0), &p).unwrap();
        assert_eq!(zero, AbcTriple { a: 0.0, b: 0.0, c: 0.0 });
        let shifted = u.with_mean(0.1);
        assert!(matches!(abc_decomposition(&shifted, &p), Err(Error::NonzeroMean { .. })));
        let no_w = ModelParams::pfc(1.0, 0.0, Potential::polynomial(vec![0.0, 0.0, 1.0]));
        assert!(matches!(abc_decomposition(&u, &no_w), Err(Error::UnsupportedPotential(_))));
    }

    #[test]
    fn quartic_expansion_is_exact() {
        let g = Grid::periodic(&[16, 16]).unwrap();
        let p = ModelParams::pfc(1.0, 0.0, Potential::double_well(1.0));
        let u = SpectralField::from_fn(g.clone(), |x| (2.0 * PI * x[0]).cos());
        let r = quartic_exactness_residual(&u, 0.7, &p).unwrap();
        assert!(r <= 1e-10, "{r}");
        assert_eq!(quartic_exactness_residual(&u, 0.0, &p).unwrap(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let ok = ModelParams::ok(1.5, 0.3, Potential::double_well(0.8)).unwrap();
        for _ in 0..5 {
            let u = random_band_limited(&g, 5, 1.0, &mut rng);
            let r = quartic_exactness_residual(&u, 1.3, &ok).unwrap();
            assert!(r <= 1e-9, "{r}");
        }
        let wild = ModelParams::pfc(1.0, 0.0, Potential::polynomial(vec![0.0, 0.0, 0.0, 0.0, 1.0, 1.0]));
        assert!(matches!(
            quartic_exactness_residual(&u, 1.0, &wild),
            Err(Error::UnsupportedPotential(_))
        ));
    }
}
