//! The three counterexample generators.

use super::ModelsError;
use crate::evolve::{BandMatrix, BandedSystem, EvolutionProblem, TimeGrid};
use crate::homog::{DiagonalOperator, PeriodicField};
use crate::law::MaterialLaw;
use crate::linalg::{self, c64, CMat, C64};
use crate::Error;
use std::sync::Arc;

/// `a = 1` on `[0, ½)`, `2` on `[½, 1)`.
pub fn count_field() -> PeriodicField {
    PeriodicField::two_phase(1.0, 2.0).expect("valid field")
}

#[derive(Clone, Copy, Debug)]
pub struct CountSetup {
    pub grid: TimeGrid,
    pub nu: f64,
}

impl Default for CountSetup {
    fn default() -> Self {
        CountSetup {
            grid: TimeGrid {
                t0: 0.0,
                t1: 12.0,
                samples: 513,
            },
            nu: 1.0,
        }
    }
}

/// `(a(n·) + i)u = f` as `(∂₀M + A)u = f` with `A = i` and `M(z) = z·a(n·)` on
/// `grid` cell centers. The forcing is constant in space with a Gaussian pulse
/// centered at 6.
pub fn preset_counterexample_compactness(
    n: usize,
    grid: usize,
    setup: &CountSetup,
) -> Result<EvolutionProblem, Error> {
    let a = count_field().sample_scalar(grid, n).map_err(|e| match e {
        crate::homog::HomogError::AliasError { grid, n, pieces } => {
            Error::Models(ModelsError::AliasError { grid, n, pieces })
        }
        other => other.into(),
    })?;
    let system = BandedSystem::new(
        BandMatrix::from_diagonal(&vec![c64(0.0, 1.0); grid]),
        vec![BandMatrix::zeros(grid, 0, 0), BandMatrix::from_diagonal(&a)],
        None,
    )?;
    let profile = vec![c64(1.0, 0.0); grid];
    let f = EvolutionProblem::separable_forcing(&setup.grid, &profile, |t| {
        (-(t - 6.0) * (t - 6.0)).exp()
    });
    Ok(EvolutionProblem::new(
        Arc::new(system),
        setup.grid,
        setup.nu,
        f,
        None,
    )?)
}

/// `a(n·) + i` on `grid` cell centers as a multiplication operator.
pub fn count_operator(grid: usize, n: usize) -> Result<DiagonalOperator, Error> {
    let a = count_field().sample_scalar(grid, n).map_err(|e| match e {
        crate::homog::HomogError::AliasError { grid, n, pieces } => {
            Error::Models(ModelsError::AliasError { grid, n, pieces })
        }
        other => other.into(),
    })?;
    Ok(DiagonalOperator(
        a.iter().map(|v| v + c64(0.0, 1.0)).collect(),
    ))
}

/// The scalar law `z/n`.
pub fn preset_counterexample_positivity(n: usize) -> Result<MaterialLaw, Error> {
    if n == 0 {
        return Err(ModelsError::IndexOutOfRange {
            index: 0,
            dim: usize::MAX,
        }
        .into());
    }
    let c = CMat::from_element(1, 1, c64(1.0 / n as f64, 0.0));
    Ok(MaterialLaw::new(vec![linalg::zeros(1, 1), c], 1.0)?)
}

/// `e_n` (1-based) in `C^dim`.
pub fn unit_vector(dim: usize, n: usize) -> CMat {
    CMat::from_fn(dim, 1, |i, _| c64(if i + 1 == n { 1.0 } else { 0.0 }, 0.0))
}

/// `P_n + z(1 − P_n)` with `P_n` the projector onto `e_n`; a finite
/// illustration only, the failure it mimics needs infinitely many modes.
pub fn preset_counterexample_range(dim: usize, n: usize) -> Result<MaterialLaw, Error> {
    if n == 0 || n > dim {
        return Err(ModelsError::IndexOutOfRange { index: n, dim }.into());
    }
    let e = unit_vector(dim, n);
    let p = &e * e.adjoint();
    Ok(MaterialLaw::new(
        vec![p.clone(), linalg::identity(dim) - p],
        1.0,
    )?)
}

/// `A = 0`, the given law, forcing `profile·exp(−(t − 4)²)` on `[−4, 14]`.
pub fn scalar_pulse_problem(
    law: &MaterialLaw,
    profile: &[C64],
    nu: f64,
    samples: usize,
) -> Result<EvolutionProblem, Error> {
    let grid = TimeGrid::new(-4.0, 14.0, samples)?;
    let sys = crate::evolve::DenseSystem::new(linalg::zeros(law.rows(), law.rows()), law.clone())?;
    let f = EvolutionProblem::separable_forcing(&grid, profile, |t| (-(t - 4.0) * (t - 4.0)).exp());
    Ok(EvolutionProblem::new(Arc::new(sys), grid, nu, f, None)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{solve, solve_with};
    use crate::homog::cell_average;

    #[test]
    fn count_steady_response() {
        let setup = CountSetup::default();
        for n in [1, 2, 8] {
            let p = preset_counterexample_compactness(n, 64, &setup).unwrap();
            let rep = solve_with(&p, &Default::default()).unwrap();
            let j = 256; // t = 6
            let f = p.forcing[(0, j)];
            let mean: C64 = (0..64).map(|i| rep.u[(i, j)]).sum::<C64>() / c64(64.0, 0.0);
            assert!((mean / f - c64(9.0 / 20.0, -7.0 / 20.0)).norm() < 1e-13);
        }
        let avg = cell_average(
            &count_field()
                .shifted(c64(0.0, 1.0))
                .unwrap()
                .inverse()
                .unwrap(),
        );
        assert_eq!(avg[(0, 0)], c64(9.0 / 20.0, -7.0 / 20.0));
        assert!(matches!(
            preset_counterexample_compactness(3, 64, &setup),
            Err(Error::Models(ModelsError::AliasError { .. }))
        ));
    }

    #[test]
    fn positivity_preset_grows_like_n() {
        assert_eq!(
            preset_counterexample_positivity(1).unwrap().coeff(1)[(0, 0)],
            c64(1.0, 0.0)
        );
        for n in [1usize, 3, 10] {
            let law = preset_counterexample_positivity(n).unwrap();
            let p = scalar_pulse_problem(&law, &[c64(1.0, 0.0)], 2.5, 401).unwrap();
            let rep = solve(&p).unwrap();
            let ratio = rep.weighted_norm_u / rep.weighted_norm_f;
            assert!((ratio - n as f64).abs() <= 1e-12 * n as f64);
        }
        // c' = 1/n shrinks: no uniform certificate
        let cs: Vec<f64> = [1, 10, 100]
            .iter()
            .map(|&n| {
                preset_counterexample_positivity(n)
                    .unwrap()
                    .check_zero_order(1e-12)
                    .unwrap()
                    .c_prime
                    .unwrap()
            })
            .collect();
        assert!(cs[2] < cs[1] && cs[1] < cs[0]);
    }

    #[test]
    fn range_preset() {
        let law = preset_counterexample_range(8, 3).unwrap();
        let m0 = law.coeff(0);
        assert_eq!(m0[(2, 2)], c64(1.0, 0.0));
        assert_eq!(linalg::max_abs(&m0), 1.0);
        let r3 = linalg::range_basis(&m0, 1e-12);
        let r1 = linalg::range_basis(&preset_counterexample_range(8, 1).unwrap().coeff(0), 1e-12);
        assert!(linalg::subspace_gap(&r1, &r3) > 0.99);
        assert!(matches!(
            preset_counterexample_range(8, 9),
            Err(Error::Models(ModelsError::IndexOutOfRange { .. }))
        ));
        let profile: Vec<C64> = (0..8).map(|i| c64(1.0 + i as f64, 0.5)).collect();
        let p = scalar_pulse_problem(&law, &profile, 2.5, 401).unwrap();
        let rep = solve(&p).unwrap();
        let top = |x: &CMat| x.rows(0, 2).into_owned();
        let diff = p
            .grid
            .weighted_norm(&(top(&rep.u) - top(&p.forcing)), 2.5, f64::INFINITY);
        assert!(diff <= 1e-10 * p.grid.weighted_norm(&top(&p.forcing), 2.5, f64::INFINITY));
    }
}
