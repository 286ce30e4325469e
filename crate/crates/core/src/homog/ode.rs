//! Homogenization of `∂₀Mₙ(∂₀⁻¹)` via limits of the inverse laws.

use super::{HomogError, HomogOptions};
use crate::decomp::{invert_law, invert_pole_law, invert_regular, RANGE_TOL};
use crate::law::{limit_or_even, LimitKind, MaterialLaw, ZERO_ORDER_TOL};
use crate::linalg::{self, CMat};
use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct OdeLimit {
    /// The limit law `μ`.
    pub mu: MaterialLaw,
    /// Limit of the inverses `Mₙ(·)⁻¹`, with its pole.
    pub inverse_limit: MaterialLaw,
    pub kind: LimitKind,
    /// Principal-angle sine between `R(μ(0))` and the reference range.
    pub range_gap: f64,
    /// Distance of every inverse to the limit.
    pub residuals: Vec<f64>,
}

/// `μ` with `Mₙ(·)⁻¹ → μ(·)⁻¹` coefficient-wise.
///
/// Every law must have a self-adjoint `Mₙ(0) ≥ 0`, positive definite on the
/// common range `R(M₁(0))`.
pub fn homogenize_ode(laws: &[MaterialLaw], opts: &HomogOptions) -> Result<OdeLimit, HomogError> {
    let first = laws
        .first()
        .ok_or_else(|| HomogError::hypothesis("range", "empty sequence"))?;
    let rank_tol = opts.rank_tol_for(first);
    let report = first.check_zero_order_with_rank(ZERO_ORDER_TOL.max(rank_tol), rank_tol)?;
    let u = report.adapted_basis();
    let r = report.rank();
    let reference = report.range_basis.clone();
    let mut inverses = Vec::with_capacity(laws.len());
    for law in laws {
        let tol = opts.rank_tol_for(law);
        let rep = law.check_zero_order_with_rank(ZERO_ORDER_TOL.max(tol), tol)?;
        let gap = linalg::subspace_gap(&rep.range_basis, &reference);
        if gap > RANGE_TOL {
            return Err(HomogError::hypothesis(
                "range",
                format!("R(Mn(0)) differs from R(M1(0)) (sine {gap:e})"),
            ));
        }
        inverses.push(invert_regular(&law.conjugate(&u)?, r)?);
    }
    let ns = opts.indices(laws.len());
    let lim = limit_or_even(&inverses, &ns, opts.probe_tol)?;
    let mu_g = invert_pole_law(&lim.law, rank_tol)?;
    let mu = mu_g.sandwich(&u, &u.adjoint())?;
    let range_gap = linalg::subspace_gap(
        &linalg::range_basis(&mu.coeff(0), rank_tol.max(1e-12)),
        &reference,
    );
    if range_gap > RANGE_TOL {
        return Err(crate::decomp::DecompError::RangeChanged { gap: range_gap }.into());
    }
    Ok(OdeLimit {
        mu,
        inverse_limit: lim.law.sandwich(&u, &u.adjoint())?,
        kind: lim.kind,
        range_gap,
        residuals: lim.residuals,
    })
}

/// Like [`homogenize_ode`] but observes the inverses only through the
/// orthonormal probe columns `probes`: the limit of `Φ*Mₙ(·)⁻¹Φ` is inverted
/// in the probe space.
pub fn homogenize_ode_probed(
    laws: &[MaterialLaw],
    probes: &CMat,
    opts: &HomogOptions,
) -> Result<OdeLimit, HomogError> {
    let first = laws
        .first()
        .ok_or_else(|| HomogError::hypothesis("range", "empty sequence"))?;
    if probes.nrows() != first.rows() {
        return Err(HomogError::BadField(
            "probe basis has the wrong length".into(),
        ));
    }
    let compressed = laws
        .iter()
        .map(|law| {
            let inv = invert_law(law, opts.rank_tol_for(law))?;
            Ok(inv.conjugate(probes)?)
        })
        .collect::<Result<Vec<_>, HomogError>>()?;
    let ns = opts.indices(laws.len());
    let lim = limit_or_even(&compressed, &ns, opts.probe_tol)?;
    let tol = lim
        .law
        .pole()
        .map(|p| 1e-9 * linalg::spectral_norm(p).max(1e-300))
        .unwrap_or(1e-12);
    let mu = invert_pole_law(&lim.law, tol)?;
    let reference = linalg::range_basis(&(probes.adjoint() * first.coeff(0) * probes), 1e-9);
    let range_gap = linalg::subspace_gap(&linalg::range_basis(&mu.coeff(0), 1e-9), &reference);
    Ok(OdeLimit {
        mu,
        inverse_limit: lim.law,
        kind: lim.kind,
        range_gap,
        residuals: lim.residuals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homog::{coarse_probes, harmonic_mean, PeriodicField};
    use crate::linalg::{c64, diag_real};

    #[test]
    fn constant_sequence_is_fixed() {
        let law =
            MaterialLaw::new(vec![diag_real(&[2.0, 0.0]), diag_real(&[0.5, 1.5])], 1.0).unwrap();
        let out = homogenize_ode(&vec![law.clone(); 3], &HomogOptions::default()).unwrap();
        let k = law.truncation() - 1;
        assert!(
            out.mu
                .with_truncation(k)
                .max_coeff_diff(&law.with_truncation(k))
                < 1e-12
        );
        assert_eq!(out.kind, LimitKind::Converged);
    }

    #[test]
    fn degenerate_roundtrip() {
        let law =
            MaterialLaw::new(vec![diag_real(&[1.0, 0.0]), diag_real(&[0.0, 1.0])], 1.0).unwrap();
        let out = homogenize_ode(&[law.clone()], &HomogOptions::default()).unwrap();
        let pole = out.inverse_limit.pole().unwrap();
        assert!(linalg::max_abs(&(pole - diag_real(&[0.0, 1.0]))) < 1e-15);
        assert!(out.mu.max_coeff_diff(&law) < 1e-14);
    }

    #[test]
    fn multiplication_laws_give_the_harmonic_mean() {
        let kappa = PeriodicField::two_phase(1.0, 2.0).unwrap();
        let grid = 256;
        let laws: Vec<MaterialLaw> = [16usize, 32, 64]
            .iter()
            .map(|&n| {
                let v: Vec<f64> = kappa
                    .sample_scalar(grid, n)
                    .unwrap()
                    .iter()
                    .map(|x| x.re)
                    .collect();
                MaterialLaw::constant(diag_real(&v), 1.0).unwrap()
            })
            .collect();
        let probes = coarse_probes(grid, 16).unwrap();
        let opts = HomogOptions {
            ns: Some(vec![16.0, 32.0, 64.0]),
            ..Default::default()
        };
        let out = homogenize_ode_probed(&laws, &probes, &opts).unwrap();
        let h = harmonic_mean(&kappa).unwrap()[(0, 0)];
        let expect = linalg::identity(16) * h;
        assert!(linalg::max_abs(&(out.mu.coeff(0) - expect)) < 1e-13);
        assert_eq!(out.mu.coeff(0)[(3, 3)], out.mu.coeff(0)[(0, 0)]);
        assert!((h - c64(4.0 / 3.0, 0.0)).norm() < 1e-15);
    }
}
