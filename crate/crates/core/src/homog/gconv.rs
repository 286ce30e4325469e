//! Probe-based G-convergence checks for sequences of invertible operators.

use crate::linalg::{self, CMat, C64};
use rayon::prelude::*;
use serde::Serialize;

/// An invertible operator known through its action and its solution map.
pub trait SolutionMap: Sync {
    fn dim(&self) -> usize;
    /// `u = B⁻¹f`, column by column.
    fn solve(&self, f: &CMat) -> CMat;
    /// `B u`.
    fn apply(&self, u: &CMat) -> CMat;
}

/// Multiplication by a vector of values.
#[derive(Clone, Debug)]
pub struct DiagonalOperator(pub Vec<C64>);

impl SolutionMap for DiagonalOperator {
    fn dim(&self) -> usize {
        self.0.len()
    }

    fn solve(&self, f: &CMat) -> CMat {
        CMat::from_fn(f.nrows(), f.ncols(), |i, j| f[(i, j)] / self.0[i])
    }

    fn apply(&self, u: &CMat) -> CMat {
        CMat::from_fn(u.nrows(), u.ncols(), |i, j| u[(i, j)] * self.0[i])
    }
}

/// Dense operator with a cached LU factorization.
#[derive(Clone, Debug)]
pub struct DenseOperator {
    matrix: CMat,
    lu: nalgebra::LU<C64, nalgebra::Dyn, nalgebra::Dyn>,
}

impl DenseOperator {
    pub fn new(matrix: CMat) -> Self {
        let lu = matrix.clone().lu();
        DenseOperator { matrix, lu }
    }
}

impl SolutionMap for DenseOperator {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn solve(&self, f: &CMat) -> CMat {
        self.lu.solve(f).unwrap_or_else(|| {
            CMat::from_element(f.nrows(), f.ncols(), C64::new(f64::NAN, f64::NAN))
        })
    }

    fn apply(&self, u: &CMat) -> CMat {
        &self.matrix * u
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ProbeReport {
    pub index: usize,
    /// `‖Φ*B(Φw) − Φ*f‖/‖Φ*f‖` with `w` the weak coordinates of the last solution.
    pub residual: f64,
    /// Distance between the weak coordinates of the last two levels.
    pub weak_step: f64,
    /// `⟨w, Φ*BΦw⟩/‖w‖²`.
    pub candidate_coefficient: C64,
    /// `⟨w, Φ*f⟩/‖w‖²`, the coefficient the sequence actually realizes.
    pub effective_coefficient: C64,
    pub coefficient_gap: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct GConvergenceReport {
    pub probes: Vec<ProbeReport>,
    pub max_residual: f64,
    pub max_coefficient_gap: f64,
    /// Probe whose weak coordinates moved most between the last two levels.
    pub slowest_probe: usize,
}

impl GConvergenceReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual <= tol && self.probes.iter().all(|p| p.weak_step <= tol)
    }
}

fn inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

/// Solves every right-hand side with every operator of the sequence, reads the
/// solutions through the orthonormal columns of `weak_basis` and tests the
/// last weak coordinates against `candidate`.
pub fn check_g_convergence<S: SolutionMap, B: SolutionMap>(
    solvers: &[S],
    candidate: &B,
    rhs: &[CMat],
    weak_basis: &CMat,
) -> GConvergenceReport {
    let probes: Vec<ProbeReport> = rhs
        .par_iter()
        .enumerate()
        .map(|(index, f)| {
            let weak: Vec<CMat> = solvers
                .iter()
                .map(|s| weak_basis.adjoint() * s.solve(f))
                .collect();
            let w = weak
                .last()
                .cloned()
                .unwrap_or_else(|| linalg::zeros(weak_basis.ncols(), 1));
            let weak_step = match weak.len() {
                0 | 1 => 0.0,
                l => (&weak[l - 1] - &weak[l - 2]).norm(),
            };
            let ff = weak_basis.adjoint() * f;
            let bw = weak_basis.adjoint() * candidate.apply(&(weak_basis * &w));
            let scale = ff.norm().max(f64::MIN_POSITIVE);
            let ww = w.norm_squared().max(f64::MIN_POSITIVE);
            let candidate_coefficient = inner(&w, &bw) / ww;
            let effective_coefficient = inner(&w, &ff) / ww;
            ProbeReport {
                index,
                residual: (&bw - &ff).norm() / scale,
                weak_step,
                candidate_coefficient,
                effective_coefficient,
                coefficient_gap: (candidate_coefficient - effective_coefficient).norm(),
            }
        })
        .collect();
    let max_residual = probes.iter().map(|p| p.residual).fold(0.0, f64::max);
    let max_coefficient_gap = probes.iter().map(|p| p.coefficient_gap).fold(0.0, f64::max);
    let slowest_probe = probes
        .iter()
        .max_by(|a, b| a.weak_step.total_cmp(&b.weak_step))
        .map(|p| p.index)
        .unwrap_or(0);
    GConvergenceReport {
        probes,
        max_residual,
        max_coefficient_gap,
        slowest_probe,
    }
}

/// `(Φ*B⁻¹Φ)⁻¹`: the effective operator seen through the probe columns.
pub fn probed_inverse_limit<S: SolutionMap>(solver: &S, probes: &CMat) -> Option<CMat> {
    linalg::inverse(&(probes.adjoint() * solver.solve(probes)))
}
