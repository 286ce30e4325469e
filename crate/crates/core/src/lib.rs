//! Material-law algebra, block homogenization limits and causal
//! frequency-domain solvers for evolutionary systems `(∂₀M(∂₀⁻¹) + A)u = f`.
//!
//! * [`law`]: truncated operator-valued Laurent series, bounds, certification.
//! * [`decomp`]: four-block structure, Schur inverses with a pole, Gauss transforms.
//! * [`homog`]: limits of law sequences, the heat limit system, G-convergence probes.
//! * [`evolve`]: weighted Fourier–Laplace solver and causality checks.
//! * [`models`]: grad/div pairs, counterexample presets, thermopiezoelectric laws.

pub mod decomp;
pub mod evolve;
pub mod homog;
pub mod json;
pub mod law;
pub mod linalg;
pub mod models;

pub use law::{certify, sample_positivity, series_limit, MaterialLaw, PositivityCertificate};

use thiserror::Error as ThisError;

/// Any failure of the library.
#[derive(Debug, ThisError, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Law(#[from] law::LawError),
    #[error(transparent)]
    Decomp(#[from] decomp::DecompError),
    #[error(transparent)]
    Homog(#[from] homog::HomogError),
    #[error(transparent)]
    Evolve(#[from] evolve::EvolveError),
    #[error(transparent)]
    Models(#[from] models::ModelsError),
}

impl Error {
    /// Whether the input broke a mathematical hypothesis (as opposed to a
    /// numerical or usage failure).
    pub fn is_hypothesis_violation(&self) -> bool {
        use decomp::DecompError as D;
        use law::LawError as L;
        let law = |e: &L| {
            matches!(
                e,
                L::NotSelfadjoint { .. } | L::NotPsd { .. } | L::PrereqFailed(_)
            )
        };
        let dec = |e: &D| match e {
            D::Law(l) => law(l),
            D::StructureViolation { .. }
            | D::RangeChanged { .. }
            | D::CompatibilityViolated { .. } => true,
            _ => false,
        };
        match self {
            Error::Law(e) => law(e),
            Error::Decomp(e) => dec(e),
            Error::Homog(homog::HomogError::HypothesisViolated { .. }) => true,
            Error::Homog(homog::HomogError::Decomp(e)) => dec(e),
            Error::Evolve(
                evolve::EvolveError::NuTooSmall { .. } | evolve::EvolveError::NotSkew { .. },
            ) => true,
            Error::Evolve(evolve::EvolveError::Law(e)) => law(e),
            Error::Models(models::ModelsError::ConditionViolated { .. }) => true,
            _ => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hypothesis_classification() {
        let e: Error = homog::HomogError::hypothesis("(ii)", "x").into();
        assert!(e.is_hypothesis_violation());
        let e: Error = evolve::EvolveError::GridTooCoarse { energy: 1.0 }.into();
        assert!(!e.is_hypothesis_violation());
        let e: Error = law::LawError::NotPsd { eigenvalue: -1.0 }.into();
        assert!(e.is_hypothesis_violation());
    }
}
