//! Zero-order structure, positivity constants and sampling checks.

use super::{LawError, MaterialLaw, SupSource, ZERO_ORDER_TOL};
use crate::linalg::{self, c64, CMat, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Outcome of the zero-order test on `M(0)` and `M′(0)`.
#[derive(Clone, Debug)]
pub struct ZeroOrderReport {
    pub selfadjoint: bool,
    pub psd: bool,
    /// Smallest eigenvalue of `M(0)` above the rank threshold; `None` if the range is trivial.
    pub d: Option<f64>,
    pub range_basis: CMat,
    pub null_basis: CMat,
    /// Smallest eigenvalue of `Re(Q M′(0) Q*)` on the null space; `None` if it is trivial.
    pub c_prime: Option<f64>,
    pub rank_tol: f64,
}

impl ZeroOrderReport {
    pub fn rank(&self) -> usize {
        self.range_basis.ncols()
    }

    /// `[range | null]`, a unitary adapted to `M(0)`.
    pub fn adapted_basis(&self) -> CMat {
        linalg::hstack(&self.range_basis, &self.null_basis)
    }
}

pub(super) fn check_zero_order(
    law: &MaterialLaw,
    tol: f64,
    rank_tol: Option<f64>,
) -> Result<ZeroOrderReport, LawError> {
    if law.has_pole() {
        return Err(LawError::PolePresent);
    }
    if !law.is_square() {
        return Err(LawError::NotSquare {
            rows: law.rows(),
            cols: law.cols(),
        });
    }
    let m0 = law.coeff(0);
    let defect = linalg::max_abs(&(&m0 - m0.adjoint()));
    if defect > tol {
        return Err(LawError::NotSelfadjoint { defect });
    }
    let rank_tol = rank_tol.unwrap_or_else(|| law.default_rank_tol());
    let e = linalg::eigh(&m0);
    if let Some(&lo) = e.values.first() {
        if lo < -tol.max(rank_tol) {
            return Err(LawError::NotPsd { eigenvalue: lo });
        }
    }
    let n = law.dim();
    let split = e.values.iter().take_while(|&&v| v <= rank_tol).count();
    let null_basis = linalg::columns(&e.vectors, 0, split);
    let range_basis = linalg::columns(&e.vectors, split, n - split);
    let d = e.values.get(split).copied();
    let c_prime = if split == 0 {
        None
    } else {
        let q = null_basis.adjoint();
        let m1 = law.coeff(1);
        linalg::min_eig_herm(&(&q * m1 * q.adjoint()))
    };
    Ok(ZeroOrderReport {
        selfadjoint: true,
        psd: true,
        d,
        range_basis,
        null_basis,
        c_prime,
        rank_tol,
    })
}

/// Constants certifying `Re z⁻¹M(z) ≥ c_out` on `B(r, r)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityCertificate {
    pub c: f64,
    pub d: f64,
    pub eps: f64,
    pub sup_bound: f64,
    pub sup_source: SupSource,
    pub nu1: f64,
    pub delta_hat: f64,
    pub r: f64,
    pub c_out: f64,
    /// Set when `r` had to be reduced below `ε/2`.
    pub clamped: bool,
}

impl PositivityCertificate {
    /// Smallest admissible weight `1/(2r)`.
    pub fn nu_min(&self) -> f64 {
        1.0 / (2.0 * self.r)
    }

    /// `max(2/ε, 1.25/(2r))`.
    pub fn default_nu(&self) -> f64 {
        (2.0 / self.eps).max(1.25 * self.nu_min())
    }
}

/// Builds the certificate of a law whose zero-order constants are at least `(d, c)`.
///
/// `d` bounds `M(0)` from below on its range and `c` bounds `Re M′(0)` on the
/// null space. When the null space is trivial `c` is a free parameter.
pub fn certify(law: &MaterialLaw, c: f64, d: f64) -> Result<PositivityCertificate, LawError> {
    if !(c > 0.0) || !(d > 0.0) {
        return Err(LawError::PrereqFailed(format!(
            "constants must be positive (c = {c}, d = {d})"
        )));
    }
    let report = check_zero_order(law, ZERO_ORDER_TOL, None)?;
    let slack = |x: f64| 1e-9 * x.abs().max(1.0);
    if let Some(actual) = report.d {
        if actual < d - slack(d) {
            return Err(LawError::PrereqFailed(format!(
                "M(0) has eigenvalue {actual} below d = {d} on its range"
            )));
        }
    }
    if let Some(actual) = report.c_prime {
        if actual < c - slack(c) {
            return Err(LawError::PrereqFailed(format!(
                "Re M'(0) has eigenvalue {actual} below c = {c} on the null space"
            )));
        }
    }
    let eps = law.radius();
    let s = law.sup_bound();
    // 2c/3 + (3/c)(2s/ε)² + 2s/ε over d, as one quotient: a single rounding
    let nu1 =
        (2.0 * c * c * eps * eps + 36.0 * s * s + 6.0 * c * eps * s) / (3.0 * c * eps * eps * d);
    let delta_hat = ((eps / 2.0).powi(2) * c / 6.0 / s).min(eps / 4.0);
    let mut r = 1.0 / (2.0 * nu1.max(1.0 / delta_hat));
    let mut clamped = false;
    if r >= eps / 2.0 {
        r = eps / 2.0 * (1.0 - 1e-12);
        clamped = true;
    }
    Ok(PositivityCertificate {
        c,
        d,
        eps,
        sup_bound: s,
        sup_source: law.sup_source(),
        nu1,
        delta_hat,
        r,
        c_out: c / 3.0,
        clamped,
    })
}

/// Result of the Monte-Carlo positivity check.
#[derive(Clone, Debug, PartialEq)]
pub struct PositivitySample {
    pub passed: bool,
    /// Smallest `λ_min(Re z⁻¹M(z)) − c_out` seen.
    pub min_margin: f64,
    /// First sample point that failed.
    pub witness: Option<C64>,
}

/// Tolerance used by `sample_positivity`.
pub const SAMPLE_TOL: f64 = 1e-9;

/// Draws points uniformly in `B(r, r)` and tests `Re z⁻¹M(z) ≥ c_out − tol`.
pub fn sample_positivity(
    law: &MaterialLaw,
    cert: &PositivityCertificate,
    num_samples: usize,
    rng_seed: u64,
) -> PositivitySample {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let r = cert.r;
    let mut min_margin = f64::INFINITY;
    let mut witness = None;
    let mut drawn = 0;
    while drawn < num_samples {
        let rho = r * rng.gen::<f64>().sqrt();
        let theta = 2.0 * std::f64::consts::PI * rng.gen::<f64>();
        let z = c64(r, 0.0) + C64::from_polar(rho, theta);
        if z.norm() == 0.0 {
            continue;
        }
        drawn += 1;
        let m = match law.evaluate(z) {
            Ok(m) => m * z.inv(),
            Err(_) => {
                witness.get_or_insert(z);
                min_margin = f64::NEG_INFINITY;
                continue;
            }
        };
        let lo = linalg::min_eig_herm(&m).unwrap_or(f64::INFINITY);
        let margin = lo - cert.c_out;
        if margin < -SAMPLE_TOL && witness.is_none() {
            witness = Some(z);
        }
        min_margin = min_margin.min(margin);
    }
    PositivitySample {
        passed: witness.is_none(),
        min_margin,
        witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag_real;

    fn diag_law() -> MaterialLaw {
        MaterialLaw::new(vec![diag_real(&[1.0, 0.0]), diag_real(&[0.0, 1.0])], 2.0).unwrap()
    }

    #[test]
    fn zero_order_diagonal() {
        let r = diag_law().check_zero_order(1e-12).unwrap();
        assert_eq!(r.d, Some(1.0));
        assert_eq!(r.c_prime, Some(1.0));
        assert_eq!(r.null_basis.ncols(), 1);
        assert!((r.null_basis[(1, 0)].norm() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn zero_order_heat() {
        let k = 4.0 / 3.0;
        let law = MaterialLaw::new(
            vec![diag_real(&[1.0, 0.0]), diag_real(&[0.0, 1.0 / k])],
            1.0,
        )
        .unwrap();
        let r = law.check_zero_order(1e-12).unwrap();
        assert_eq!(r.d, Some(1.0));
        assert!((r.c_prime.unwrap() - 0.75).abs() < 1e-15);
    }

    #[test]
    fn zero_order_coupled() {
        let m0 = CMat::from_row_slice(
            2,
            2,
            &[c64(1.0, 0.0), c64(0.0, 1.0), c64(0.0, -1.0), c64(1.0, 0.0)],
        );
        let law = MaterialLaw::new(vec![m0.clone(), linalg::zeros(2, 2)], 1.0).unwrap();
        let r = law.check_zero_order(1e-12).unwrap();
        assert!((r.d.unwrap() - 2.0).abs() < 1e-14);
        assert_eq!(r.c_prime, Some(0.0));
        // null vector is (1, i)/√2 up to phase
        let v = r.null_basis.column(0).into_owned();
        assert!(linalg::max_abs(&(&m0 * &v)) < 1e-14);
        let ratio = v[1] / v[0];
        assert!((ratio - c64(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_order_rejections() {
        let nsa = MaterialLaw::constant(
            CMat::from_row_slice(
                2,
                2,
                &[c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)],
            ),
            1.0,
        )
        .unwrap();
        assert!(matches!(
            nsa.check_zero_order(1e-12),
            Err(LawError::NotSelfadjoint { .. })
        ));
        let neg = MaterialLaw::constant(diag_real(&[1.0, -1.0]), 1.0).unwrap();
        assert!(matches!(
            neg.check_zero_order(1e-12),
            Err(LawError::NotPsd { .. })
        ));
    }

    #[test]
    fn worked_constants() {
        let law = diag_law().with_sup_bound(1.0).unwrap();
        let cert = certify(&law, 1.0, 1.0).unwrap();
        assert_eq!(cert.nu1, 14.0 / 3.0);
        assert_eq!(cert.delta_hat, 1.0 / 6.0);
        assert_eq!(cert.r, 1.0 / 12.0);
        assert_eq!(cert.c_out, 1.0 / 3.0);
        assert!(!cert.clamped);
        assert!(sample_positivity(&law, &cert, 2000, 7).passed);
    }

    #[test]
    fn certify_rejects_weak_constants() {
        let law = diag_law();
        assert!(matches!(
            certify(&law, 2.0, 1.0),
            Err(LawError::PrereqFailed(_))
        ));
        assert!(matches!(
            certify(&law, 1.0, 2.0),
            Err(LawError::PrereqFailed(_))
        ));
    }

    #[test]
    fn constant_spd_law_certifies() {
        let law = MaterialLaw::constant(diag_real(&[2.0, 3.0]), 1.0).unwrap();
        let cert = certify(&law, 2.0, 2.0).unwrap();
        assert!(sample_positivity(&law, &cert, 2000, 1).passed);
    }

    #[test]
    fn identity_and_negative_laws() {
        let id = MaterialLaw::constant(linalg::identity(2), 1.0).unwrap();
        let cert = certify(&id, 1.0, 1.0).unwrap();
        let s = sample_positivity(&id, &cert, 1000, 3);
        assert!(s.passed);
        // Re z⁻¹ ≥ 1/(2r) on the disc
        assert!(s.min_margin + cert.c_out >= 1.0 / (2.0 * cert.r) - 1e-9);

        let neg = MaterialLaw::constant(-linalg::identity(2), 1.0).unwrap();
        let s = sample_positivity(&neg, &cert, 100, 3);
        assert!(!s.passed);
        assert!(s.witness.is_some());
    }

    #[test]
    fn sampling_is_seeded() {
        let law = diag_law();
        let cert = certify(&law, 1.0, 1.0).unwrap();
        assert_eq!(
            sample_positivity(&law, &cert, 500, 11),
            sample_positivity(&law, &cert, 500, 11)
        );
    }
}
