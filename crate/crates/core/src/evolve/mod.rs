//! Causal solver for `(∂₀M(∂₀⁻¹) + A)u = f` on a weighted periodic time grid.
//!
//! The weighted forcing `e^{−νt}f` is transformed with an FFT; at bin `k` the
//! time derivative acts as `s_k = ν + (2i/Δt)·tan(πk/T)`, the symbol of the
//! trapezoidal rule, so `1/s_k` stays on the circle through `0` and `1/ν`.

mod band;
mod export;
mod heat;
mod solve;
mod system;

pub use band::{BandLu, BandMatrix};
pub use export::{read_evh1, write_csv, write_evh1, EVH1_MAGIC};
pub use heat::{fine_scale_sweep, heat_problem, temperature_at, temperature_error, HeatSetup};
pub use solve::{
    check_causality, check_causality_with, solve, solve_with, Direction, SolutionReport,
    SolveOptions,
};
pub use system::{
    BandedSystem, BinSolve, DenseSystem, SpatialSystem, DENSE_DIAGNOSTIC_DIM, MAX_CONDITION,
};

use crate::law::{LawError, PositivityCertificate};
use crate::linalg::{CMat, C64};
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

/// Weighted forcing at either end of the window must stay below this fraction of its peak.
pub const END_DECAY_TOL: f64 = 1e-10;
/// Allowed fraction of forcing energy in the top 10% of the frequency band.
pub const TOP_BAND_TOL: f64 = 1e-6;
/// Relative skew defect accepted for `A`.
pub const SKEW_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error(transparent)]
    Law(#[from] LawError),
    #[error("operator singular at s = {s} (condition {condition:e})")]
    SingularFrequency { s: C64, condition: f64 },
    #[error("forcing has {energy:e} of its energy near the Nyquist frequency")]
    GridTooCoarse { energy: f64 },
    #[error("weighted forcing at the {end} end is {ratio:e} of its peak")]
    ForcingNotDecayed { end: &'static str, ratio: f64 },
    #[error("nu = {nu} does not exceed 1/(2r) = {min}")]
    NuTooSmall { nu: f64, min: f64 },
    #[error("A is not skew-Hermitian (relative defect {defect:e})")]
    NotSkew { defect: f64 },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("invalid time grid: {0}")]
    BadGrid(String),
    #[error("i/o: {0}")]
    Io(String),
}

/// `samples` equispaced points `t0 + jΔt`, `Δt = (t1 − t0)/samples`, periodic.
/// `samples` is odd so that no bin sits on the pole of `tan`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub t1: f64,
    pub samples: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, t1: f64, samples: usize) -> Result<Self, EvolveError> {
        if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
            return Err(EvolveError::BadGrid(format!("empty window [{t0}, {t1}]")));
        }
        if samples < 3 || samples % 2 == 0 {
            return Err(EvolveError::BadGrid(format!(
                "{samples} samples; need an odd count ≥ 3"
            )));
        }
        Ok(TimeGrid { t0, t1, samples })
    }

    pub fn dt(&self) -> f64 {
        (self.t1 - self.t0) / self.samples as f64
    }

    pub fn time(&self, j: usize) -> f64 {
        self.t0 + j as f64 * self.dt()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.samples).map(|j| self.time(j)).collect()
    }

    /// `s_k` for the causal direction.
    pub fn symbol(&self, nu: f64, k: usize) -> C64 {
        let x = std::f64::consts::PI * k as f64 / self.samples as f64;
        C64::new(nu, 2.0 * x.tan() / self.dt())
    }

    /// `√(Δt Σ e^{−2νt_j}‖u_j‖²)` over samples with `t_j < upto`.
    pub fn weighted_norm(&self, u: &CMat, nu: f64, upto: f64) -> f64 {
        let dt = self.dt();
        (0..self.samples)
            .filter(|&j| self.time(j) < upto)
            .map(|j| (-2.0 * nu * self.time(j)).exp() * u.column(j).norm_squared() * dt)
            .sum::<f64>()
            .sqrt()
    }
}

/// Everything a solve needs. Forcing columns are the time samples.
#[derive(Clone, Debug)]
pub struct EvolutionProblem {
    pub system: Arc<dyn SpatialSystem>,
    pub grid: TimeGrid,
    pub nu: f64,
    pub forcing: CMat,
    pub certificate: Option<PositivityCertificate>,
}

impl EvolutionProblem {
    /// Checks the skew part, the weight against the certificate, the forcing
    /// shape and its decay at the window ends.
    pub fn new(
        system: Arc<dyn SpatialSystem>,
        grid: TimeGrid,
        nu: f64,
        forcing: CMat,
        certificate: Option<PositivityCertificate>,
    ) -> Result<Self, EvolveError> {
        let defect = system.skew_defect();
        if defect > SKEW_TOL {
            return Err(EvolveError::NotSkew { defect });
        }
        if !(nu > 0.0) {
            return Err(EvolveError::NuTooSmall { nu, min: 0.0 });
        }
        if let Some(c) = &certificate {
            if nu <= c.nu_min() {
                return Err(EvolveError::NuTooSmall {
                    nu,
                    min: c.nu_min(),
                });
            }
        }
        if forcing.shape() != (system.dim(), grid.samples) {
            return Err(EvolveError::Shape(format!(
                "forcing is {}x{}, expected {}x{}",
                forcing.nrows(),
                forcing.ncols(),
                system.dim(),
                grid.samples
            )));
        }
        let w: Vec<f64> = (0..grid.samples)
            .map(|j| (-nu * grid.time(j)).exp() * forcing.column(j).norm())
            .collect();
        let peak = w.iter().copied().fold(0.0, f64::max);
        if peak > 0.0 {
            for (end, v) in [("left", w[0]), ("right", w[grid.samples - 1])] {
                if v > END_DECAY_TOL * peak {
                    return Err(EvolveError::ForcingNotDecayed {
                        end,
                        ratio: v / peak,
                    });
                }
            }
        }
        Ok(EvolutionProblem {
            system,
            grid,
            nu,
            forcing,
            certificate,
        })
    }

    /// Same problem with a different forcing (no decay check: truncations
    /// of an admissible forcing stay admissible).
    pub fn with_forcing(&self, forcing: CMat) -> Self {
        EvolutionProblem {
            forcing,
            ..self.clone()
        }
    }

    /// `g(t)·φ` sampled on the grid.
    pub fn separable_forcing(grid: &TimeGrid, profile: &[C64], pulse: impl Fn(f64) -> f64) -> CMat {
        CMat::from_fn(profile.len(), grid.samples, |i, j| {
            profile[i] * pulse(grid.time(j))
        })
    }
}

/// `max(2/ε, 1.25/(2r))` from a certificate.
pub fn default_nu(cert: &PositivityCertificate) -> f64 {
    cert.default_nu()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::law::MaterialLaw;
    use crate::linalg::{c64, diag_real};

    #[test]
    fn grid_rules() {
        assert!(TimeGrid::new(0.0, 1.0, 10).is_err());
        assert!(TimeGrid::new(1.0, 1.0, 11).is_err());
        let g = TimeGrid::new(0.0, 1.0, 11).unwrap();
        assert!((g.dt() - 1.0 / 11.0).abs() < 1e-16);
        assert_eq!(g.symbol(2.0, 0), c64(2.0, 0.0));
        // conjugate pairs
        let a = g.symbol(1.0, 3);
        let b = g.symbol(1.0, 8);
        assert!((a.im + b.im).abs() < 1e-12);
    }

    #[test]
    fn problem_validation() {
        let law = MaterialLaw::constant(diag_real(&[1.0]), 1.0).unwrap();
        let sys: Arc<dyn SpatialSystem> =
            Arc::new(DenseSystem::new(diag_real(&[1.0]), law.clone()).unwrap());
        let g = TimeGrid::new(0.0, 10.0, 101).unwrap();
        let f = EvolutionProblem::separable_forcing(&g, &[c64(1.0, 0.0)], |t| {
            (-2.0 * (t - 5.0) * (t - 5.0)).exp()
        });
        assert!(matches!(
            EvolutionProblem::new(sys, g, 1.0, f.clone(), None),
            Err(EvolveError::NotSkew { .. })
        ));
        let sys: Arc<dyn SpatialSystem> =
            Arc::new(DenseSystem::new(crate::linalg::zeros(1, 1), law).unwrap());
        assert!(EvolutionProblem::new(sys.clone(), g, 1.0, f, None).is_ok());
        let flat = CMat::from_element(1, 101, c64(1.0, 0.0));
        assert!(matches!(
            EvolutionProblem::new(sys, g, 1.0, flat, None),
            Err(EvolveError::ForcingNotDecayed { end: "left", .. })
        ));
    }
}
