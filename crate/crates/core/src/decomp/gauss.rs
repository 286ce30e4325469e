//! Gauss (unit-triangular) similarity transforms and their limits.

use super::{four_block, invert_law, BlockDecomposition, DecompError, RANGE_TOL};
use crate::law::series::Laurent;
use crate::law::{certify, limit_or_even, LawError, LimitKind, MaterialLaw, PositivityCertificate};
use crate::linalg::{self, CMat};
use serde::Serialize;

/// Off-diagonal factors of `(1, s·N₁; 0, 1)·M·(1, 0; s·N₁′, 1)`.
#[derive(Clone, Debug)]
pub struct GaussFactors {
    /// `H₂ → H₁`.
    pub n1: MaterialLaw,
    /// `H₁ → H₂`.
    pub n1p: MaterialLaw,
    /// `±1`.
    pub sign: f64,
}

impl GaussFactors {
    pub fn identity(n1: usize, n2: usize, radius: f64) -> Result<Self, LawError> {
        Ok(GaussFactors {
            n1: MaterialLaw::from_parts(None, vec![linalg::zeros(n1, n2)], radius, None)?,
            n1p: MaterialLaw::from_parts(None, vec![linalg::zeros(n2, n1)], radius, None)?,
            sign: 1.0,
        })
    }

    /// Zero pattern and adjoint relations of the zeroth coefficients in G-coordinates.
    pub fn check_structure(&self, dec: &BlockDecomposition) -> Result<(), DecompError> {
        let a = self.n1.coeff(0);
        let b = self.n1p.coeff(0);
        let (g1, g2, g3, g4) = (&dec.g1, &dec.g2, &dec.g3, &dec.g4);
        let blk = |m: &CMat, l: &CMat, r: &CMat| l.adjoint() * m * r;
        let tol = 1e-8 * linalg::max_abs(&a).max(linalg::max_abs(&b)).max(1.0);
        let checks = [
            ("N1(0)(G2,G3)", linalg::max_abs(&blk(&a, g2, g3))),
            ("N1'(0)(G3,G2)", linalg::max_abs(&blk(&b, g3, g2))),
            (
                "N1'(0)(G3,G1) - N1(0)(G1,G3)*",
                linalg::max_abs(&(blk(&b, g3, g1) - blk(&a, g1, g3).adjoint())),
            ),
            (
                "N1'(0)(G4,G2) - N1(0)(G2,G4)*",
                linalg::max_abs(&(blk(&b, g4, g2) - blk(&a, g2, g4).adjoint())),
            ),
        ];
        for (name, norm) in checks {
            if norm > tol {
                return Err(DecompError::StructureViolation {
                    block: name.into(),
                    norm,
                });
            }
        }
        Ok(())
    }

    fn left(&self, n1: usize, n2: usize) -> Laurent {
        let upper = self.n1.to_laurent().scale(self.sign.into());
        Laurent::assemble2(
            &Laurent::identity(n1),
            &upper,
            &Laurent::zero(n2, n1),
            &Laurent::identity(n2),
        )
    }

    fn right(&self, n1: usize, n2: usize) -> Laurent {
        let lower = self.n1p.to_laurent().scale(self.sign.into());
        Laurent::assemble2(
            &Laurent::identity(n1),
            &Laurent::zero(n1, n2),
            &lower,
            &Laurent::identity(n2),
        )
    }

    /// Right factor `(1, 0; s·N₁′(0), 1)` at `z = 0`.
    pub fn right_at_zero(&self) -> CMat {
        let n1 = self.n1.rows();
        let n2 = self.n1.cols();
        self.right(n1, n2).coeff(0)
    }
}

/// `(‖(1, B; 0, 1)⁻¹‖, √(1 + ‖B‖ + ‖B‖²))`.
pub fn unit_triangular_inverse_bound(b: &CMat) -> (f64, f64) {
    let (n1, n2) = b.shape();
    let inv = linalg::assemble2(
        &linalg::identity(n1),
        &(-b),
        &linalg::zeros(n2, n1),
        &linalg::identity(n2),
    );
    let nb = linalg::spectral_norm(b);
    (linalg::spectral_norm(&inv), (1.0 + nb + nb * nb).sqrt())
}

#[derive(Clone, Debug)]
pub struct GaussOutcome {
    pub law: MaterialLaw,
    /// Positivity of `𝓜(0)` on its range; `None` if the range is trivial.
    pub d_prime: Option<f64>,
    /// Positivity of `Re 𝓜′(0)` on the null space; `None` if it is trivial.
    pub c_prime: Option<f64>,
    /// Principal-angle sine between `R(𝓜(0))` and `R(M(0))`.
    pub range_gap: f64,
}

pub fn gauss_transform(
    law: &MaterialLaw,
    f: &GaussFactors,
    dec: &BlockDecomposition,
) -> Result<GaussOutcome, DecompError> {
    let n = law.rows();
    let (n1, n2) = (dec.split, n - dec.split);
    if f.n1.rows() != n1 || f.n1.cols() != n2 || f.n1p.rows() != n2 || f.n1p.cols() != n1 {
        return Err(LawError::Shape("Gauss factors do not match the split".into()).into());
    }
    f.check_structure(dec)?;
    let report =
        law.check_zero_order_with_rank(crate::law::ZERO_ORDER_TOL.max(dec.rank_tol), dec.rank_tol)?;
    let k = law.truncation();
    let s = f
        .left(n1, n2)
        .mul(&law.to_laurent(), k as i32)
        .mul(&f.right(n1, n2), k as i32);
    let radius = law.radius().min(f.n1.radius()).min(f.n1p.radius());
    let out = MaterialLaw::from_laurent(&s.drop_below(0), radius, k)?;

    let r_old = linalg::range_basis(&law.coeff(0), dec.rank_tol);
    let r_new = linalg::range_basis(&out.coeff(0), dec.rank_tol);
    let range_gap = linalg::subspace_gap(&r_old, &r_new);
    if range_gap > RANGE_TOL {
        return Err(DecompError::RangeChanged { gap: range_gap });
    }
    let a0 = f.n1.coeff(0);
    let n13 = dec.g1.adjoint() * &a0 * &dec.g3;
    let n24 = dec.g2.adjoint() * &a0 * &dec.g4;
    let shrink = |b: &CMat| {
        let nb = linalg::spectral_norm(b);
        1.0 + nb + nb * nb
    };
    Ok(GaussOutcome {
        law: out,
        d_prime: report.d.map(|d| d / shrink(&n13)),
        c_prime: report.c_prime.map(|c| c / shrink(&n24)),
        range_gap,
    })
}

/// `‖(B₄₄⁻¹B₄₂)* − B₂₄B₄₄⁻¹‖` with `B = M′(0)` in G-coordinates; zero if
/// `G₂` or `G₄` is trivial.
pub fn check_compatibility(
    law: &MaterialLaw,
    dec: &BlockDecomposition,
) -> Result<f64, DecompError> {
    let [_, d2, _, d4] = dec.dims();
    if d2 == 0 || d4 == 0 {
        return Ok(0.0);
    }
    let bg = dec.to_g(&law.coeff(1));
    let b44 = dec.g_block(&bg, 4, 4);
    let sigma_min = linalg::min_singular(&b44);
    if sigma_min <= dec.rank_tol {
        return Err(DecompError::SingularBlock { sigma_min });
    }
    let inv = linalg::inverse(&b44).ok_or(DecompError::SingularBlock { sigma_min })?;
    let lhs = (&inv * dec.g_block(&bg, 4, 2)).adjoint();
    let rhs = dec.g_block(&bg, 2, 4) * &inv;
    Ok(linalg::spectral_norm(&(lhs - rhs)))
}

/// Limit Gauss factors of a law sequence and the block-diagonalized limit.
#[derive(Clone, Debug, Serialize)]
pub struct ThmFinal {
    /// `lim M₁₂,ₙ·M₂₂,ₙ⁻¹`.
    pub factor: MaterialLaw,
    /// `lim M₂₂,ₙ⁻¹·M₂₁,ₙ`.
    pub factor_prime: MaterialLaw,
    pub transformed: MaterialLaw,
    pub certificate: PositivityCertificate,
    pub d_prime: Option<f64>,
    pub c_prime: Option<f64>,
    /// `Converged`/`Extrapolated` unless some sequence only converged along even positions.
    pub kind: LimitKind,
    /// Distance between `𝓜` and the limit of the per-`n` transforms.
    pub limit_residual: f64,
    pub compatibility: Vec<f64>,
    pub range_gap: f64,
}

fn worst(a: LimitKind, b: LimitKind) -> LimitKind {
    let rank = |k| match k {
        LimitKind::Converged => 0,
        LimitKind::Extrapolated => 1,
        LimitKind::EvenSubsequence => 2,
    };
    if rank(b) > rank(a) {
        b
    } else {
        a
    }
}

/// Compatibility residuals above this (relative to `‖M′(0)‖`) are rejected.
pub const COMPAT_TOL: f64 = 1e-8;

pub fn diagonalize_thm_final(
    laws: &[MaterialLaw],
    split: usize,
    probe_tol: f64,
) -> Result<ThmFinal, DecompError> {
    let first = laws
        .first()
        .ok_or_else(|| LawError::NoConvergence(Box::new(crate::law::Divergence::Empty)))?;
    let n = first.rows();
    if split > n {
        return Err(DecompError::BadSplit { split, dim: n });
    }
    let (n1, n2) = (split, n - split);
    let r_first = linalg::range_basis(&first.coeff(0), first.default_rank_tol());
    let mut compatibility = Vec::with_capacity(laws.len());
    let mut n1s = Vec::with_capacity(laws.len());
    let mut n1ps = Vec::with_capacity(laws.len());
    let mut transforms = Vec::with_capacity(laws.len());
    for law in laws {
        let rank_tol = law.default_rank_tol();
        let dec = four_block(law, split, rank_tol)?;
        let res = check_compatibility(law, &dec)?;
        if res > COMPAT_TOL * linalg::spectral_norm(&law.coeff(1)).max(1.0) {
            return Err(DecompError::CompatibilityViolated { residual: res });
        }
        compatibility.push(res);
        let gap = linalg::subspace_gap(&r_first, &linalg::range_basis(&law.coeff(0), rank_tol));
        if gap > RANGE_TOL {
            return Err(DecompError::RangeChanged { gap });
        }
        let m22inv = invert_law(&law.block(n1, n2, n1, n2)?, rank_tol)?;
        let m12 = law.block(0, n1, n1, n2)?;
        let m21 = law.block(n1, n2, 0, n1)?;
        let f1 = analytic_product(&m12, &m22inv)?;
        let f1p = analytic_product(&m22inv, &m21)?;
        let f = GaussFactors {
            n1: f1.clone(),
            n1p: f1p.clone(),
            sign: -1.0,
        };
        let k = law.truncation() as i32;
        let t = f
            .left(n1, n2)
            .mul(&law.to_laurent(), k)
            .mul(&f.right(n1, n2), k);
        transforms.push(MaterialLaw::from_laurent(
            &t.drop_below(0),
            f1.radius(),
            k as usize,
        )?);
        n1s.push(f1);
        n1ps.push(f1p);
    }
    let ns: Vec<f64> = (1..=laws.len()).map(|n| n as f64).collect();
    let lim_m = limit_or_even(laws, &ns, probe_tol)?;
    let lim_n1 = limit_or_even(&n1s, &ns, probe_tol)?;
    let lim_n1p = limit_or_even(&n1ps, &ns, probe_tol)?;
    let lim_t = limit_or_even(&transforms, &ns, probe_tol)?;
    let kind = [lim_n1.kind, lim_n1p.kind, lim_t.kind]
        .into_iter()
        .fold(lim_m.kind, worst);

    let m = lim_m.law;
    let dec = four_block(&m, split, m.default_rank_tol())?;
    let f = GaussFactors {
        n1: lim_n1.law,
        n1p: lim_n1p.law,
        sign: -1.0,
    };
    let out = gauss_transform(&m, &f, &dec)?;
    let limit_residual = out.law.max_coeff_diff(&lim_t.law);
    let (c, d) = match (out.c_prime, out.d_prime) {
        (Some(c), Some(d)) => (c, d),
        (Some(c), None) => (c, c),
        (None, Some(d)) => (d, d),
        (None, None) => return Err(LawError::PrereqFailed("empty law".into()).into()),
    };
    let certificate = certify(&out.law, c, d)?;
    Ok(ThmFinal {
        factor: f.n1,
        factor_prime: f.n1p,
        transformed: out.law,
        certificate,
        d_prime: out.d_prime,
        c_prime: out.c_prime,
        kind,
        limit_residual,
        compatibility,
        range_gap: out.range_gap,
    })
}

/// Product that must be analytic; a pole larger than round-off is an error.
fn analytic_product(a: &MaterialLaw, b: &MaterialLaw) -> Result<MaterialLaw, DecompError> {
    let k = a.truncation().min(b.truncation());
    let s = a.to_laurent().mul(&b.to_laurent(), k as i32);
    let scale = a.to_laurent().max_abs().max(1.0) * b.to_laurent().max_abs().max(1.0);
    let pole = s.size_below(0);
    if pole > 1e-10 * scale {
        return Err(DecompError::StructureViolation {
            block: "pole of the Gauss factor".into(),
            norm: pole,
        });
    }
    Ok(MaterialLaw::from_laurent(
        &s.drop_below(0),
        a.radius().min(b.radius()),
        k,
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, diag_real};

    #[test]
    fn identity_factors_are_trivial() {
        let law = MaterialLaw::new(
            vec![
                diag_real(&[1.0, 0.0, 2.0, 0.0]),
                diag_real(&[0.5, 1.0, 0.5, 2.0]),
            ],
            1.0,
        )
        .unwrap();
        let dec = four_block(&law, 2, 1e-12).unwrap();
        let f = GaussFactors::identity(2, 2, 1.0).unwrap();
        let out = gauss_transform(&law, &f, &dec).unwrap();
        assert_eq!(out.law.max_coeff_diff(&law), 0.0);
        assert_eq!(out.d_prime, Some(1.0));
        assert_eq!(out.c_prime, Some(1.0));
    }

    #[test]
    fn schur_factor_kills_the_13_block() {
        // H₁ = span{e1, e2}, H₂ = span{e3, e4}; M13(0) = 1/2, M33(0) = 1
        let mut m0 = diag_real(&[1.0, 0.0, 1.0, 0.0]);
        m0[(0, 2)] = c64(0.5, 0.0);
        m0[(2, 0)] = c64(0.5, 0.0);
        let law =
            MaterialLaw::new(vec![m0.clone(), diag_real(&[0.0, 1.0, 0.0, 1.0])], 1.0).unwrap();
        let dec = four_block(&law, 2, 1e-12).unwrap();
        let mut b = linalg::zeros(2, 2);
        b[(0, 0)] = c64(-0.5, 0.0);
        let f = GaussFactors {
            n1: MaterialLaw::constant(b.clone(), 1.0).unwrap(),
            n1p: MaterialLaw::constant(b.adjoint(), 1.0).unwrap(),
            sign: 1.0,
        };
        let out = gauss_transform(&law, &f, &dec).unwrap();
        let t0 = out.law.coeff(0);
        assert!(t0[(0, 2)].norm() < 1e-15 && t0[(2, 0)].norm() < 1e-15);
        assert!((t0[(0, 0)].re - 0.75).abs() < 1e-15);
        // congruence with the right factor at zero
        let t = f.right_at_zero();
        let lhs = linalg::hermitian_part(&t0);
        let rhs = t.adjoint() * linalg::hermitian_part(&m0) * &t;
        assert!(linalg::max_abs(&(lhs - rhs)) < 1e-14);
        // d′ = d/(1 + ½ + ¼)
        assert!((out.d_prime.unwrap() - 0.5 / 1.75).abs() < 1e-14);
        assert!(out.range_gap < 1e-14);
    }

    #[test]
    fn bad_zero_pattern_is_rejected() {
        let law = MaterialLaw::new(
            vec![
                diag_real(&[1.0, 0.0, 1.0, 0.0]),
                diag_real(&[0.0, 1.0, 0.0, 1.0]),
            ],
            1.0,
        )
        .unwrap();
        let dec = four_block(&law, 2, 1e-12).unwrap();
        let mut b = linalg::zeros(2, 2);
        b[(1, 0)] = c64(1.0, 0.0); // (G2, G3)
        let f = GaussFactors {
            n1: MaterialLaw::constant(b, 1.0).unwrap(),
            n1p: MaterialLaw::constant(linalg::zeros(2, 2), 1.0).unwrap(),
            sign: 1.0,
        };
        assert!(matches!(
            gauss_transform(&law, &f, &dec),
            Err(DecompError::StructureViolation { .. })
        ));
    }

    #[test]
    fn inverse_bound() {
        let b = CMat::from_fn(2, 3, |i, j| c64(i as f64 - 0.5 * j as f64, 0.3));
        let (actual, bound) = unit_triangular_inverse_bound(&b);
        assert!(actual <= bound + 1e-14);
    }

    fn two_by_two(m1: [[f64; 2]; 2]) -> MaterialLaw {
        let m1 = CMat::from_fn(2, 2, |i, j| c64(m1[i][j], 0.0));
        MaterialLaw::new(vec![diag_real(&[0.0, 0.0]), m1], 1.0).unwrap()
    }

    #[test]
    fn compatibility_residuals() {
        let herm = two_by_two([[1.0, 0.3], [0.3, 2.0]]);
        let dec = four_block(&herm, 1, 1e-12).unwrap();
        assert_eq!(check_compatibility(&herm, &dec).unwrap(), 0.0);
        // (B44⁻¹B42)* − B24B44⁻¹ = 0.5/2 − 0.1/2
        let skew = two_by_two([[1.0, 0.1], [0.5, 2.0]]);
        let dec = four_block(&skew, 1, 1e-12).unwrap();
        assert!((check_compatibility(&skew, &dec).unwrap() - 0.2).abs() < 1e-15);
        let one_to_one = MaterialLaw::constant(diag_real(&[1.0, 2.0]), 1.0).unwrap();
        let dec = four_block(&one_to_one, 1, 1e-12).unwrap();
        assert_eq!(check_compatibility(&one_to_one, &dec).unwrap(), 0.0);
    }

    #[test]
    fn constant_sequence_of_block_diagonal_laws() {
        let law = MaterialLaw::new(
            vec![
                diag_real(&[1.0, 0.0, 2.0, 0.0]),
                diag_real(&[0.5, 1.0, 0.5, 2.0]),
            ],
            1.0,
        )
        .unwrap();
        let out = diagonalize_thm_final(&vec![law.clone(); 4], 2, 1e-12).unwrap();
        assert!(
            out.factor
                .max_coeff_diff(&MaterialLaw::constant(linalg::zeros(2, 2), 1.0).unwrap())
                < 1e-14
        );
        assert!(out.transformed.max_coeff_diff(&law) < 1e-14);
        assert_eq!(out.kind, LimitKind::Converged);
    }

    #[test]
    fn alternating_sequence_uses_even_limit() {
        // M_n(z) = diag(1, 0) + z·[[1, a_n],[a_n, 1]] with a_n alternating
        let mk = |a: f64| {
            let mut m0 = diag_real(&[1.0, 0.0]);
            m0[(0, 1)] = c64(a, 0.0);
            m0[(1, 0)] = c64(a, 0.0);
            m0[(1, 1)] = c64(a * a + 1.0, 0.0);
            let m1 = CMat::from_fn(2, 2, |i, j| c64(if i == j { 1.0 } else { a }, 0.0));
            MaterialLaw::new(vec![m0, m1], 1.0).unwrap()
        };
        let laws: Vec<MaterialLaw> = (1..=8)
            .map(|n| mk(if n % 2 == 0 { 0.5 } else { 0.25 }))
            .collect();
        let out = diagonalize_thm_final(&laws, 1, 1e-12).unwrap();
        assert_eq!(out.kind, LimitKind::EvenSubsequence);
        // factor = M12·M22⁻¹ = 0.5 / 1.25 at order zero
        assert!((out.factor.coeff(0)[(0, 0)].re - 0.4).abs() < 1e-14);
        assert!(out.limit_residual < 1e-8);
        let t0 = out.transformed.coeff(0);
        assert!(t0[(0, 1)].norm() < 1e-14 && t0[(1, 0)].norm() < 1e-14);
    }
}
