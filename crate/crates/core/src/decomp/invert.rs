//! Inverses of laws whose zeroth coefficient is singular.

use super::DecompError;
use crate::law::series::Laurent;
use crate::law::{LawError, MaterialLaw};
use crate::linalg::{self, CMat};

fn structure_tol(m: &CMat) -> f64 {
    1e-10 * linalg::max_abs(m).max(1.0)
}

fn require_zero(m: &CMat, name: &str, tol: f64) -> Result<(), DecompError> {
    let norm = linalg::max_abs(m);
    if norm > tol {
        return Err(DecompError::StructureViolation {
            block: name.into(),
            norm,
        });
    }
    Ok(())
}

fn min_herm(m: &CMat, which: &str) -> Result<Option<f64>, DecompError> {
    match linalg::min_eig_herm(&linalg::hermitian_part(m)) {
        None => Ok(None),
        Some(v) if v > 0.0 => Ok(Some(v)),
        Some(v) => Err(DecompError::DegenerateBlock {
            which: which.into(),
            value: v,
        }),
    }
}

/// Radius on which the inverse series is guaranteed to exist.
fn inverse_radius(law: &MaterialLaw, c: Option<f64>, d: Option<f64>) -> f64 {
    let eps = law.radius();
    let b1 = law.tail_bound(1);
    let b2 = law.tail_bound(2);
    let mut r = eps / 4.0;
    let bs = match c {
        Some(c) => {
            r = r.min(c / (2.0 * b2));
            b1 + 2.0 * b1 * b1 / c
        }
        None => b1,
    };
    if let Some(d) = d {
        r = r.min(d / (2.0 * bs));
    }
    r
}

fn singular(which: &str) -> DecompError {
    DecompError::DegenerateBlock {
        which: which.into(),
        value: 0.0,
    }
}

/// Inverse of `M` given in coordinates `H₁ ⊕ H₂` (split at `split`) where
/// `M(0) = diag(M₁₁(0), 0)` with `M₁₁(0) > 0` and `Re M₂₂′(0) > 0`.
///
/// The result has a pole `z⁻¹·M₂₂′(0)⁻¹` in the `(2,2)` block and is exact
/// through order `K`.
pub fn invert_regular(law: &MaterialLaw, split: usize) -> Result<MaterialLaw, DecompError> {
    if law.has_pole() {
        return Err(LawError::PolePresent.into());
    }
    if !law.is_square() {
        return Err(LawError::NotSquare {
            rows: law.rows(),
            cols: law.cols(),
        }
        .into());
    }
    let n = law.rows();
    if split > n {
        return Err(DecompError::BadSplit { split, dim: n });
    }
    let (p, q) = (split, n - split);
    let k = law.truncation() as i32;
    let m0 = law.coeff(0);
    let tol = structure_tol(&m0);
    require_zero(&linalg::block(&m0, 0, p, p, q), "(1,2)", tol)?;
    require_zero(&linalg::block(&m0, p, q, 0, p), "(2,1)", tol)?;
    require_zero(&linalg::block(&m0, p, q, p, q), "(2,2)", tol)?;
    let a0 = linalg::block(&m0, 0, p, 0, p);
    let d = min_herm(&a0, "M11(0)")?;

    // (M(z) − M(0))/z
    let s = law.to_laurent();
    let m1 = Laurent {
        rows: n,
        cols: n,
        low: 0,
        terms: s.terms[1..].to_vec(),
    };
    let b11 = m1.block(0, p, 0, p);
    let b12 = m1.block(0, p, p, q);
    let b21 = m1.block(p, q, 0, p);
    let b22 = m1.block(p, q, p, q);
    let c = min_herm(&b22.coeff(0), "M22'(0)")?;

    let x = b22.inverse(k + 1).ok_or_else(|| singular("M22'(0)"))?;
    let schur = b11.sub(&b12.mul(&x, k).mul(&b21, k));
    let t = Laurent::constant(a0).add(&schur.shift(1));
    let m121 = t.inverse(k).ok_or_else(|| singular("M11(0)"))?;
    let xb21 = x.mul(&b21, k);
    let b12x = b12.mul(&x, k);
    let blk12 = m121.mul(&b12x, k).scale((-1.0).into());
    let blk21 = xb21.mul(&m121, k).scale((-1.0).into());
    let blk22 = xb21
        .mul(&m121, k)
        .mul(&b12x, k)
        .add(&x.shift(-1))
        .truncate(k);
    let inv = Laurent::assemble2(&m121, &blk12, &blk21, &blk22);
    let radius = inverse_radius(law, c, d);
    Ok(MaterialLaw::from_laurent(&inv, radius, k as usize)?)
}

/// Inverse of a law whose pole sits in the `(2,2)` block only:
/// `M̂(z) = [[A(z), H₁₂(z)], [H₂₁(z), z⁻¹P + H₂₂(z)]]` with `A(0) > 0` and
/// `Re P > 0`. The inverse is analytic and vanishes on the second block at `z = 0`.
pub fn invert_degenerate_hat(law: &MaterialLaw, split: usize) -> Result<MaterialLaw, DecompError> {
    let n = law.rows();
    if !law.is_square() {
        return Err(LawError::NotSquare {
            rows: law.rows(),
            cols: law.cols(),
        }
        .into());
    }
    if split > n {
        return Err(DecompError::BadSplit { split, dim: n });
    }
    let (p, q) = (split, n - split);
    let k = law.truncation() as i32;
    let zero = linalg::zeros(n, n);
    let pole = law.pole().unwrap_or(&zero);
    let tol = structure_tol(pole);
    require_zero(&linalg::block(pole, 0, p, 0, p), "pole (1,1)", tol)?;
    require_zero(&linalg::block(pole, 0, p, p, q), "pole (1,2)", tol)?;
    require_zero(&linalg::block(pole, p, q, 0, p), "pole (2,1)", tol)?;
    let p22 = linalg::block(pole, p, q, p, q);
    let c = min_herm(&p22, "pole (2,2)")?;

    let s = law.to_laurent().drop_below(0);
    let a = s.block(0, p, 0, p);
    let h12 = s.block(0, p, p, q);
    let h21 = s.block(p, q, 0, p);
    let h22 = s.block(p, q, p, q);
    let d = min_herm(&a.coeff(0), "A(0)")?;

    // W = z·M̂₂₂ = P + z·H₂₂
    let w = Laurent::constant(p22).add(&h22.shift(1));
    let y = w.inverse(k).ok_or_else(|| singular("pole (2,2)"))?;
    let yh21 = y.mul(&h21, k);
    let h12y = h12.mul(&y, k);
    let t = a.sub(&h12.mul(&yh21, k).shift(1));
    let m121 = t.inverse(k).ok_or_else(|| singular("A(0)"))?;
    let blk12 = m121.mul(&h12y, k).shift(1).scale((-1.0).into()).truncate(k);
    let blk21 = yh21.mul(&m121, k).shift(1).scale((-1.0).into()).truncate(k);
    let blk22 = yh21
        .mul(&m121, k)
        .mul(&h12y, k)
        .shift(2)
        .add(&y.shift(1))
        .truncate(k);
    let inv = Laurent::assemble2(&m121, &blk12, &blk21, &blk22);
    let analytic = law.block(0, n, 0, n)?;
    let radius = inverse_radius(&strip_pole(&analytic)?, c, d);
    Ok(MaterialLaw::from_laurent(&inv, radius, k as usize)?)
}

fn strip_pole(law: &MaterialLaw) -> Result<MaterialLaw, LawError> {
    MaterialLaw::from_parts(None, law.coeffs().to_vec(), law.radius(), None)
}

/// Inverse of a law with `M(0) ≥ 0` self-adjoint and `Re M′(0) > 0` on its
/// null space, in the original coordinates.
pub fn invert_law(law: &MaterialLaw, rank_tol: f64) -> Result<MaterialLaw, DecompError> {
    let report =
        law.check_zero_order_with_rank(crate::law::ZERO_ORDER_TOL.max(rank_tol), rank_tol)?;
    let u = report.adapted_basis();
    let lg = law.conjugate(&u)?;
    let inv = invert_regular(&lg, report.rank())?;
    Ok(inv.sandwich(&u, &u.adjoint())?)
}

/// Inverse of an analytic law with invertible `M(0)`.
pub fn invert_analytic(law: &MaterialLaw) -> Result<MaterialLaw, DecompError> {
    if law.has_pole() {
        return Err(LawError::PolePresent.into());
    }
    let k = law.truncation();
    let inv = law
        .to_laurent()
        .inverse(k as i32)
        .ok_or_else(|| singular("M(0)"))?;
    let m0inv = linalg::inverse(&law.coeff(0)).ok_or_else(|| singular("M(0)"))?;
    // ‖M(z) − M(0)‖ ≤ |z|·b1 on |z| ≤ ε/4, so M is invertible while |z|·b1·‖M(0)⁻¹‖ < 1/2
    let radius =
        (law.radius() / 4.0).min(0.5 / (law.tail_bound(1) * linalg::spectral_norm(&m0inv)));
    Ok(MaterialLaw::from_laurent(&inv, radius, k)?)
}

/// Inverse of a law with a pole `z⁻¹P` where `P` has matching row and column
/// spaces and `Re P > 0` there. Laws without a pole must have invertible `M(0)`.
pub fn invert_pole_law(law: &MaterialLaw, rank_tol: f64) -> Result<MaterialLaw, DecompError> {
    let Some(pole) = law.pole() else {
        return invert_analytic(law);
    };
    let n = law.rows();
    let cols = linalg::range_basis(pole, rank_tol);
    let rows = linalg::range_basis(&pole.adjoint(), rank_tol);
    let gap = linalg::subspace_gap(&cols, &rows);
    if gap > super::RANGE_TOL {
        return Err(DecompError::StructureViolation {
            block: "pole row/column space".into(),
            norm: gap,
        });
    }
    let u = linalg::hstack(&linalg::complement_basis(&cols, n), &cols);
    let lg = law.conjugate(&u)?;
    let inv = invert_degenerate_hat(&lg, n - cols.ncols())?;
    Ok(inv.sandwich(&u, &u.adjoint())?)
}
