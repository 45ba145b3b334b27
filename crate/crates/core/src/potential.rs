//! Scalar potentials `W` with derivatives up to fourth order.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// User-supplied potential: value plus four derivatives.
#[derive(Clone)]
pub struct CustomPotential {
    pub name: String,
    pub eval: ScalarFn,
    pub d1: ScalarFn,
    pub d2: ScalarFn,
    pub d3: ScalarFn,
    pub d4: ScalarFn,
    /// Declared constant fourth derivative.
    pub constant_d4: bool,
}

#[derive(Clone)]
enum Kind {
    DoubleWell { a: f64 },
    Polynomial { coeffs: Vec<f64> },
    Custom(CustomPotential),
}

/// A potential `W` together with a guaranteed lower bound `w²` on `W''''` (`w = 0` if unknown).
#[derive(Clone)]
pub struct Potential {
    kind: Kind,
    w: f64,
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Potential({}, w = {})", self.id(), self.w)
    }
}

/// On-disk description of a polynomial potential, `W(s) = Σ c_i s^i`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PotentialFile {
    pub polynomial: Vec<f64>,
    /// Lower bound on `sqrt(W'''')`; inferred for degree <= 4 when omitted.
    #[serde(default)]
    pub w: Option<f64>,
}

impl Potential {
    /// `W(s) = (s² − a)² / 4`, with `W'''' = 6` so `w² = 6`.
    pub fn double_well(a: f64) -> Self {
        Self {
            kind: Kind::DoubleWell { a },
            w: 6f64.sqrt(),
        }
    }

    /// `W(s) = Σ coeffs[i] s^i`. For degree <= 4, `w² = 24·c₄` when positive; otherwise `w = 0`.
    pub fn polynomial(coeffs: Vec<f64>) -> Self {
        let mut coeffs = coeffs;
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        let w = if coeffs.len() == 5 && coeffs[4] > 0.0 {
            (24.0 * coeffs[4]).sqrt()
        } else {
            0.0
        };
        Self {
            kind: Kind::Polynomial { coeffs },
            w,
        }
    }

    pub fn custom(potential: CustomPotential, w: f64) -> Self {
        Self {
            kind: Kind::Custom(potential),
            w: w.max(0.0),
        }
    }

    /// Override the fourth-derivative lower bound.
    pub fn with_w(mut self, w: f64) -> Self {
        self.w = w.max(0.0);
        self
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let spec: PotentialFile = serde_json::from_str(&text)?;
        if spec.polynomial.is_empty() {
            return Err(Error::InvalidArgument(
                "potential file lists no coefficients".into(),
            ));
        }
        let p = Self::polynomial(spec.polynomial);
        Ok(match spec.w {
            Some(w) => p.with_w(w),
            None => p,
        })
    }

    /// Short identifier used in records, e.g. `double-well(a=1)`.
    pub fn id(&self) -> String {
        match &self.kind {
            Kind::DoubleWell { a } => format!("double-well(a={a})"),
            Kind::Polynomial { coeffs } => format!("polynomial({coeffs:?})"),
            Kind::Custom(c) => format!("custom({})", c.name),
        }
    }

    pub fn double_well_a(&self) -> Option<f64> {
        match self.kind {
            Kind::DoubleWell { a } => Some(a),
            _ => None,
        }
    }

    pub fn w(&self) -> f64 {
        self.w
    }

    pub fn has_constant_fourth_derivative(&self) -> bool {
        match &self.kind {
            Kind::DoubleWell { .. } => true,
            Kind::Polynomial { coeffs } => coeffs.len() <= 5,
            Kind::Custom(c) => c.constant_d4,
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::DoubleWell { a } => {
                let t = s * s - a;
                0.25 * t * t
            }
            Kind::Polynomial { coeffs } => poly_derivative(coeffs, 0, s),
            Kind::Custom(c) => (c.eval)(s),
        }
    }

    pub fn d1(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::DoubleWell { a } => s * (s * s - a),
            Kind::Polynomial { coeffs } => poly_derivative(coeffs, 1, s),
            Kind::Custom(c) => (c.d1)(s),
        }
    }

    pub fn d2(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::DoubleWell { a } => 3.0 * s * s - a,
            Kind::Polynomial { coeffs } => poly_derivative(coeffs, 2, s),
            Kind::Custom(c) => (c.d2)(s),
        }
    }

    pub fn d3(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::DoubleWell { .. } => 6.0 * s,
            Kind::Polynomial { coeffs } => poly_derivative(coeffs, 3, s),
            Kind::Custom(c) => (c.d3)(s),
        }
    }

    pub fn d4(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::DoubleWell { .. } => 6.0,
            Kind::Polynomial { coeffs } => poly_derivative(coeffs, 4, s),
            Kind::Custom(c) => (c.d4)(s),
        }
    }

    /// `(W'''(m))² / (3w²)`; the uniform state is globally optimal when the optimal constant
    /// reaches this value.
    pub fn optimality_threshold(&self, m: f64) -> Result<f64> {
        if self.w <= 0.0 {
            return Err(Error::UnsupportedPotential(format!(
                "{} has no positive lower bound w on its fourth derivative",
                self.id()
            )));
        }
        Ok(self.d3(m).powi(2) / (3.0 * self.w * self.w))
    }
}

/// `d^order/ds^order Σ c_i s^i` by Horner's rule.
fn poly_derivative(coeffs: &[f64], order: usize, s: f64) -> f64 {
    let mut acc = 0.0;
    for i in (order..coeffs.len()).rev() {
        let falling: f64 = (i + 1 - order..=i).map(|f| f as f64).product();
        acc = acc * s + coeffs[i] * falling;
    }
    acc
}
