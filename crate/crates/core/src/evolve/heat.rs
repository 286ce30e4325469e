//! First-order 1-D heat system `∂₀θ + div q = f`, `q = −κ(n·)grad₀θ`.

use super::{
    solve_with, BandMatrix, BandedSystem, EvolutionProblem, SolutionReport, SolveOptions, TimeGrid,
};
use crate::homog::PeriodicField;
use crate::linalg::{c64, CMat, C64};
use crate::models::{build_grad_div_1d, SpatialOperatorPair};
use crate::Error;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeatSetup {
    pub cells: usize,
    pub length: f64,
    pub grid: TimeGrid,
    pub nu: f64,
    /// Time pulse `exp(−((t − center)/width)²)` times `sin(πx/L)` on the temperature.
    pub pulse_center: f64,
    pub pulse_width: f64,
}

impl Default for HeatSetup {
    fn default() -> Self {
        HeatSetup {
            cells: 1024,
            length: 1.0,
            grid: TimeGrid {
                t0: 0.0,
                t1: 6.0,
                samples: 601,
            },
            nu: 1.0,
            pulse_center: 1.5,
            pulse_width: 0.25,
        }
    }
}

impl HeatSetup {
    pub fn forcing(&self) -> CMat {
        let n = self.cells;
        let h = self.length / n as f64;
        let mut profile = vec![c64(0.0, 0.0); 2 * n - 1];
        for i in 0..n - 1 {
            let x = (i + 1) as f64 * h;
            profile[SpatialOperatorPair::theta_index(i)] =
                c64((std::f64::consts::PI * x / self.length).sin(), 0.0);
        }
        let (c, w) = (self.pulse_center, self.pulse_width);
        EvolutionProblem::separable_forcing(&self.grid, &profile, |t| {
            (-((t - c) / w).powi(2)).exp()
        })
    }
}

/// The heat system with conductivity `κ(n·)` in the interleaved ordering of
/// [`SpatialOperatorPair::a_banded`]. `M(z) = diag(1_θ, 0_q) + z·diag(0_θ, κ⁻¹)`.
pub fn heat_problem(
    kappa: &PeriodicField,
    n: usize,
    setup: &HeatSetup,
) -> Result<EvolutionProblem, Error> {
    let pair = build_grad_div_1d(setup.cells, setup.length)?;
    let k = kappa.sample_scalar(setup.cells, n)?;
    let dim = pair.dim();
    let mut m0 = vec![c64(0.0, 0.0); dim];
    let mut m1 = vec![c64(0.0, 0.0); dim];
    for i in 0..pair.nodes() {
        m0[SpatialOperatorPair::theta_index(i)] = c64(1.0, 0.0);
    }
    for (j, kj) in k.iter().enumerate() {
        m1[SpatialOperatorPair::q_index(j)] = c64(1.0, 0.0) / kj;
    }
    let system = BandedSystem::new(
        pair.a_banded(),
        vec![
            BandMatrix::from_diagonal(&m0),
            BandMatrix::from_diagonal(&m1),
        ],
        None,
    )?;
    Ok(EvolutionProblem::new(
        Arc::new(system),
        setup.grid,
        setup.nu,
        setup.forcing(),
        None,
    )?)
}

/// Solves the heat system for every `n` of the ladder.
pub fn fine_scale_sweep(
    kappa: &PeriodicField,
    ladder: &[usize],
    setup: &HeatSetup,
) -> Result<Vec<SolutionReport>, Error> {
    ladder
        .iter()
        .map(|&n| {
            Ok(solve_with(
                &heat_problem(kappa, n, setup)?,
                &SolveOptions::default(),
            )?)
        })
        .collect()
}

/// Relative weighted `L₂(time × space)` distance of the temperatures.
pub fn temperature_error(u: &SolutionReport, reference: &SolutionReport, setup: &HeatSetup) -> f64 {
    let nodes = setup.cells - 1;
    let pick = |r: &SolutionReport| -> CMat {
        CMat::from_fn(nodes, r.u.ncols(), |i, j| {
            r.u[(SpatialOperatorPair::theta_index(i), j)]
        })
    };
    let (a, b) = (pick(u), pick(reference));
    let g = &setup.grid;
    let diff = g.weighted_norm(&(&a - &b), setup.nu, f64::INFINITY);
    let base = g.weighted_norm(&b, setup.nu, f64::INFINITY);
    diff / base.max(f64::MIN_POSITIVE)
}

/// Temperature at the interior nodes for sample `j`.
pub fn temperature_at(u: &SolutionReport, j: usize, cells: usize) -> Vec<C64> {
    (0..cells - 1)
        .map(|i| u.u[(SpatialOperatorPair::theta_index(i), j)])
        .collect()
}
