//! Pseudospectral energies, stability tests and optimality certificates for the uniform
//! state of phase-field-crystal and Ohta-Kawasaki models, plus a thin-film reduction study.

pub mod energy;
pub mod error;
pub mod io;
pub mod oracle;
pub mod phase;
pub mod potential;
pub mod relax;
pub mod selftest;
pub mod spectral;
pub mod thin_film;

pub use energy::{AbcTriple, Functional, Model, ModelParams};
pub use error::{Error, Result};
pub use io::{CurveKind, CurvePoint, Format, Metadata, SweepRecord};
pub use oracle::{Decision, PnEstimate, SearchConfig, Verdict};
pub use potential::Potential;
pub use relax::{FlowConfig, Scheme, TraceEntry};
pub use spectral::{AxisKind, Grid, SpectralField};
