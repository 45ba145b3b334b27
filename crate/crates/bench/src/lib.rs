//! Fixtures shared by the benchmarks.

use pfc_core::relax::random_initial;
use pfc_core::{FlowConfig, Grid, ModelParams, Potential, SpectralField};

/// Random field with mean `m` on a periodic grid, band 8 per axis.
pub fn field(counts: &[usize], m: f64, seed: u64) -> SpectralField {
    let grid = Grid::periodic(counts).expect("benchmark grid is valid");
    let cfg = FlowConfig {
        seed,
        init_band: 8,
        ..FlowConfig::default()
    };
    random_initial(m, &cfg, &grid)
}

/// PFC in the unstable regime, where flows move.
pub fn unstable_pfc() -> ModelParams {
    ModelParams::pfc(1.0, 0.0, Potential::double_well(2000.0))
}

/// Sample counts used across the benches.
pub const SIZES: &[&[usize]] = &[&[256], &[64, 64], &[128, 128], &[32, 32, 32]];

pub fn label(counts: &[usize]) -> String {
    counts
        .iter()
        .map(usize::to_string)
        .collect::<Vec<_>>()
        .join("x")
}
