//! Limits of material-law sequences: the ODE case, the four-expression limit
//! law `N`, the null-space split, the 1-D heat limit system and probe-based
//! G-convergence checks.

mod field;
mod gconv;
mod heat;
mod ode;
mod p2;

pub use field::{cell_average, coarse_probes, dct_probes, harmonic_mean, PeriodicField};
pub use gconv::{
    check_g_convergence, probed_inverse_limit, DenseOperator, DiagonalOperator, GConvergenceReport,
    ProbeReport, SolutionMap,
};
pub use heat::{heat_limit_system, HeatLevel, HeatLimitSystem, DEFAULT_HEAT_PROBES};
pub use ode::{homogenize_ode, homogenize_ode_probed, OdeLimit};
pub use p2::{homogenize_nullsplit, homogenize_p2, DiagnosticRow, HomogenizationResult};

use crate::decomp::DecompError;
use crate::law::LawError;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HomogError {
    #[error(transparent)]
    Decomp(#[from] DecompError),
    #[error("hypothesis {condition} violated: {detail}")]
    HypothesisViolated { condition: String, detail: String },
    #[error("piece {index} of the field is singular")]
    SingularPiece { index: usize },
    #[error("grid {grid} is not a multiple of n = {n} times {pieces} pieces")]
    AliasError {
        grid: usize,
        n: usize,
        pieces: usize,
    },
    #[error("invalid field: {0}")]
    BadField(String),
    #[error("ambiguous rank: singular value {sigma:e} within a factor 10 of {tol:e}")]
    AmbiguousRank { sigma: f64, tol: f64 },
}

impl From<LawError> for HomogError {
    fn from(e: LawError) -> Self {
        HomogError::Decomp(DecompError::Law(e))
    }
}

impl HomogError {
    pub fn hypothesis(condition: &str, detail: impl Into<String>) -> Self {
        HomogError::HypothesisViolated {
            condition: condition.into(),
            detail: detail.into(),
        }
    }
}

/// Shared knobs of the pipelines.
#[derive(Clone, Debug)]
pub struct HomogOptions {
    /// Index of each law in the sequence; `1, 2, …` if absent.
    pub ns: Option<Vec<f64>>,
    /// Convergence tolerance handed to the series limits.
    pub probe_tol: f64,
    /// Absolute rank threshold; per-law default if absent.
    pub rank_tol: Option<f64>,
    /// Relative tolerance of the compatibility condition.
    pub compat_tol: f64,
}

impl Default for HomogOptions {
    fn default() -> Self {
        HomogOptions {
            ns: None,
            probe_tol: 1e-10,
            rank_tol: None,
            compat_tol: 1e-8,
        }
    }
}

impl HomogOptions {
    pub(crate) fn indices(&self, len: usize) -> Vec<f64> {
        match &self.ns {
            Some(ns) => ns.clone(),
            None => (1..=len).map(|n| n as f64).collect(),
        }
    }

    pub(crate) fn rank_tol_for(&self, law: &crate::law::MaterialLaw) -> f64 {
        self.rank_tol.unwrap_or_else(|| law.default_rank_tol())
    }
}
