//! Spatial operators, preset problems and the thermopiezoelectric law.

mod catalog;
mod presets;
pub mod random;
mod spatial;
mod thermopiezo;

pub use catalog::{kappa_by_id, preset, preset_ids, Preset};
pub use presets::{
    count_field, count_operator, preset_counterexample_compactness,
    preset_counterexample_positivity, preset_counterexample_range, scalar_pulse_problem,
    unit_vector, CountSetup,
};
pub use random::{
    periodic_coupled_sequence, random_certified_law, random_certified_problem, RandomLaw,
    RandomProblem,
};
pub use spatial::{build_grad_div_1d, nullspace_projections, ProjectionPair, SpatialOperatorPair};
pub use thermopiezo::{
    build_thermopiezo_law, Condition, ThermopiezoBlocks, ThermopiezoLaw, TPZ_SIZES,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelsError {
    #[error("ambiguous rank: singular value {sigma:e} within a factor √10 of {tol:e}")]
    AmbiguousRank { sigma: f64, tol: f64 },
    #[error("index {index} outside 1..={dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("grid {grid} is not a multiple of n = {n} times {pieces} pieces")]
    AliasError {
        grid: usize,
        n: usize,
        pieces: usize,
    },
    #[error("condition violated at {block}: {detail}")]
    ConditionViolated { block: String, detail: String },
    #[error("unknown preset id {0:?}")]
    UnknownPreset(String),
}
