//! The limit law `N` built from four Schur-type limits, and its null-space
//! split variant.

use super::{HomogError, HomogOptions};
use crate::decomp::{check_compatibility, four_block, invert_law, invert_pole_law, RANGE_TOL};
use crate::law::series::Laurent;
use crate::law::{
    certify, limit_or_even, LawError, LimitKind, MaterialLaw, PositivityCertificate, SeriesLimit,
    ZERO_ORDER_TOL,
};
use crate::linalg::{self, CMat};
use serde::Serialize;
use std::io::Write;

/// One row of the convergence history: distance of the `n`-th expression to
/// its limit.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DiagnosticRow {
    pub n: f64,
    pub eta_index: usize,
    pub probe_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HomogenizationResult {
    #[serde(rename = "N")]
    pub law: MaterialLaw,
    pub eta1: MaterialLaw,
    /// Has a pole on the null space of `M₂₂(0)`.
    pub eta2: MaterialLaw,
    pub eta3: MaterialLaw,
    pub eta4: MaterialLaw,
    pub eta2_inverse: MaterialLaw,
    pub diagnostics: Vec<DiagnosticRow>,
    pub range_preserved: bool,
    pub range_gap: f64,
    pub certificate: PositivityCertificate,
    /// Weakest limit kind among the four sequences.
    pub kind: LimitKind,
    /// `N − (1, η₄; 0, 1)·diag(η₁, η₂⁻¹)·(1, 0; η₃, 1)`, largest coefficient entry.
    pub factorization_residual: f64,
    pub compatibility: Vec<f64>,
    pub split: usize,
}

impl HomogenizationResult {
    pub fn to_json(&self) -> String {
        crate::json::to_string_pretty(self)
    }

    /// Columns `n, eta_index, probe_residual`.
    pub fn write_diagnostics_csv<W: Write>(&self, w: W) -> Result<(), csv::Error> {
        let mut wr = csv::Writer::from_writer(w);
        for row in &self.diagnostics {
            wr.serialize(row)?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `[[η₁ + η₄Yη₃, η₄Y], [Yη₃, Y]]` with `Y = η₂⁻¹`, through order `k`.
pub fn assemble_n(eta1: &Laurent, y: &Laurent, eta3: &Laurent, eta4: &Laurent, k: i32) -> Laurent {
    let e4y = eta4.mul(y, k);
    let ye3 = y.mul(eta3, k);
    let n11 = eta1.add(&e4y.mul(eta3, k)).truncate(k);
    Laurent::assemble2(&n11, &e4y, &ye3, &y.truncate(k))
}

fn unit_upper(b: &Laurent) -> Laurent {
    Laurent::assemble2(
        &Laurent::identity(b.rows),
        b,
        &Laurent::zero(b.cols, b.rows),
        &Laurent::identity(b.cols),
    )
}

fn unit_lower(b: &Laurent) -> Laurent {
    Laurent::assemble2(
        &Laurent::identity(b.cols),
        &Laurent::zero(b.cols, b.rows),
        b,
        &Laurent::identity(b.rows),
    )
}

fn analytic(s: Laurent, scale: f64, what: &str) -> Result<Laurent, HomogError> {
    let pole = s.size_below(0);
    if pole > 1e-9 * scale.max(1.0) {
        return Err(crate::decomp::DecompError::StructureViolation {
            block: format!("pole of {what}"),
            norm: pole,
        }
        .into());
    }
    Ok(s.drop_below(0))
}

fn to_law(s: &Laurent, radius: f64, k: usize) -> Result<MaterialLaw, HomogError> {
    Ok(MaterialLaw::from_laurent(s, radius, k)?)
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

fn diagnostics(lim: &SeriesLimit, ns: &[f64], eta: usize) -> Vec<DiagnosticRow> {
    let used: Vec<f64> = match lim.kind {
        LimitKind::EvenSubsequence => ns.iter().skip(1).step_by(2).copied().collect(),
        _ => ns.to_vec(),
    };
    used.iter()
        .zip(&lim.residuals)
        .map(|(&n, &r)| DiagnosticRow {
            n,
            eta_index: eta,
            probe_residual: r,
        })
        .collect()
}

fn check_hypotheses(
    laws: &[MaterialLaw],
    a: &CMat,
    split: usize,
    opts: &HomogOptions,
) -> Result<Vec<f64>, HomogError> {
    let first = &laws[0];
    let n = first.rows();
    if split > n || a.shape() != (split, split) {
        return Err(HomogError::hypothesis("A", "A must act on the first block"));
    }
    let skew = linalg::max_abs(&(a + a.adjoint()));
    if skew > 1e-12 * linalg::max_abs(a).max(1.0) {
        return Err(HomogError::hypothesis(
            "A",
            format!("not skew-Hermitian (defect {skew:e})"),
        ));
    }
    let mut reference = None;
    let mut compat = Vec::with_capacity(laws.len());
    for (i, law) in laws.iter().enumerate() {
        if law.rows() != n || !law.is_square() {
            return Err(HomogError::hypothesis(
                "boundedness",
                format!("law {i} has a different shape"),
            ));
        }
        if !law.sup_bound().is_finite() {
            return Err(HomogError::hypothesis(
                "boundedness",
                format!("law {i} is unbounded"),
            ));
        }
        let tol = opts.rank_tol_for(law);
        let rep = law
            .check_zero_order_with_rank(ZERO_ORDER_TOL.max(tol), tol)
            .map_err(|e| HomogError::hypothesis("(i)", format!("law {i}: {e}")))?;
        if let Some(c) = rep.c_prime {
            if c <= 0.0 {
                return Err(HomogError::hypothesis(
                    "positivity",
                    format!("law {i}: Re M'(0) not positive on N(M(0)) ({c:e})"),
                ));
            }
        }
        let range = rep.range_basis;
        match &reference {
            None => reference = Some(range),
            Some(r) => {
                let gap = linalg::subspace_gap(r, &range);
                if gap > RANGE_TOL {
                    return Err(HomogError::hypothesis(
                        "(i)",
                        format!("R(M{}(0)) differs from R(M1(0)) (sine {gap:e})", i + 1),
                    ));
                }
            }
        }
        let dec = four_block(law, split, tol)
            .map_err(|e| HomogError::hypothesis("(i)", format!("law {i}: {e}")))?;
        let res = check_compatibility(law, &dec)
            .map_err(|e| HomogError::hypothesis("(ii)", format!("law {i}: {e}")))?;
        if res > opts.compat_tol * linalg::spectral_norm(&law.coeff(1)).max(1.0) {
            return Err(HomogError::hypothesis(
                "(ii)",
                format!("law {i}: compatibility residual {res:e}"),
            ));
        }
        compat.push(res);
    }
    Ok(compat)
}

/// Inverse of the `H₂` block, or an empty law when `H₂ = {0}`.
fn block_inverse(m22: &MaterialLaw, rank_tol: f64) -> Result<MaterialLaw, HomogError> {
    if m22.rows() == 0 {
        return Ok(m22.clone());
    }
    Ok(invert_law(m22, rank_tol)?)
}

/// The limit law `N` of a sequence split as `H₁ ⊕ H₂` at `split`, with the
/// spatial operator `A` acting on `H₁`.
pub fn homogenize_p2(
    laws: &[MaterialLaw],
    a: &CMat,
    split: usize,
    opts: &HomogOptions,
) -> Result<HomogenizationResult, HomogError> {
    if laws.is_empty() {
        return Err(HomogError::hypothesis("boundedness", "empty sequence"));
    }
    let compatibility = check_hypotheses(laws, a, split, opts)?;
    let n = laws[0].rows();
    let (p, q) = (split, n - split);
    let mut mu: [Vec<MaterialLaw>; 4] = Default::default();
    for law in laws {
        let k = law.truncation() as i32;
        let rank_tol = opts.rank_tol_for(law);
        let y = block_inverse(&law.block(p, q, p, q)?, rank_tol)?;
        let l = law.to_laurent();
        let (l11, l12, l21) = (
            l.block(0, p, 0, p),
            l.block(0, p, p, q),
            l.block(p, q, 0, p),
        );
        let yl = y.to_laurent();
        let scale = l.max_abs() * (1.0 + yl.max_abs());
        let m12y = l12.mul(&yl, k);
        let ym21 = yl.mul(&l21, k);
        let radius = law.radius().min(y.radius());
        let kk = k as usize;
        mu[0].push(to_law(
            &analytic(l11.sub(&m12y.mul(&l21, k)), scale * scale, "eta1")?,
            radius,
            kk,
        )?);
        mu[1].push(y.clone());
        mu[2].push(to_law(&analytic(ym21, scale, "eta3")?, radius, kk)?);
        mu[3].push(to_law(&analytic(m12y, scale, "eta4")?, radius, kk)?);
    }
    let ns = opts.indices(laws.len());
    let lims = mu
        .iter()
        .map(|seq| limit_or_even(seq, &ns, opts.probe_tol))
        .collect::<Result<Vec<_>, LawError>>()?;
    let kind = lims
        .iter()
        .map(|l| l.kind)
        .fold(LimitKind::Converged, worst);
    let mut diag = Vec::new();
    for (i, lim) in lims.iter().enumerate() {
        diag.extend(diagnostics(lim, &ns, i + 1));
    }
    let [eta1, eta2, eta3, eta4] = [0, 1, 2, 3].map(|i| lims[i].law.clone());
    let eta2_inverse = if q == 0 {
        eta2.clone()
    } else {
        let tol = eta2
            .pole()
            .map(|pl| 1e-9 * linalg::spectral_norm(pl).max(1e-300))
            .unwrap_or(1e-12);
        invert_pole_law(&eta2, tol)?
    };
    let k = [&eta1, &eta3, &eta4, &eta2_inverse]
        .iter()
        .map(|l| l.truncation())
        .min()
        .unwrap_or(0);
    let radius = [&eta1, &eta3, &eta4, &eta2_inverse]
        .iter()
        .map(|l| l.radius())
        .fold(f64::INFINITY, f64::min);
    let (e1, y, e3, e4) = (
        eta1.to_laurent(),
        eta2_inverse.to_laurent(),
        eta3.to_laurent(),
        eta4.to_laurent(),
    );
    let n_series = assemble_n(&e1, &y, &e3, &e4, k as i32);
    let law = to_law(&n_series, radius, k)?;

    let fact = unit_upper(&e4)
        .mul(
            &Laurent::assemble2(&e1, &Laurent::zero(p, q), &Laurent::zero(q, p), &y),
            k as i32,
        )
        .mul(&unit_lower(&e3), k as i32);
    let factorization_residual = fact.sub(&n_series).max_abs();

    let rank_tol = law.default_rank_tol();
    let r_n = linalg::range_basis(&law.coeff(0), rank_tol);
    let r_1 = linalg::range_basis(&laws[0].coeff(0), opts.rank_tol_for(&laws[0]));
    let range_gap = linalg::subspace_gap(&r_n, &r_1);
    if range_gap > RANGE_TOL {
        return Err(crate::decomp::DecompError::RangeChanged { gap: range_gap }.into());
    }
    let rep = law.check_zero_order_with_rank(ZERO_ORDER_TOL.max(rank_tol), rank_tol)?;
    let (c, d) = match (rep.c_prime, rep.d) {
        (Some(c), Some(d)) => (c, d),
        (Some(c), None) => (c, c),
        (None, Some(d)) => (d, d),
        (None, None) => return Err(HomogError::hypothesis("boundedness", "empty law")),
    };
    let certificate = certify(&law, 0.999 * c, 0.999 * d)?;
    Ok(HomogenizationResult {
        law,
        eta1,
        eta2,
        eta3,
        eta4,
        eta2_inverse,
        diagnostics: diag,
        range_preserved: true,
        range_gap,
        certificate,
        kind,
        factorization_residual,
        compatibility,
        split,
    })
}

/// Splits `H = N(A)^⊥ ⊕ N(A)`, homogenizes in that basis and maps `N` back.
/// The `η`'s stay in split coordinates.
pub fn homogenize_nullsplit(
    laws: &[MaterialLaw],
    a: &CMat,
    opts: &HomogOptions,
) -> Result<HomogenizationResult, HomogError> {
    let rank_tol = opts
        .rank_tol
        .unwrap_or_else(|| (1e-9 * linalg::spectral_norm(a)).max(1e-12));
    let proj = crate::models::nullspace_projections(a, rank_tol).map_err(|e| match e {
        crate::models::ModelsError::AmbiguousRank { sigma, tol } => {
            HomogError::AmbiguousRank { sigma, tol }
        }
        other => HomogError::hypothesis("A", other.to_string()),
    })?;
    let u = linalg::hstack(&proj.p, &proj.q);
    let split = proj.p.ncols();
    let relabelled = laws
        .iter()
        .map(|l| l.conjugate(&u))
        .collect::<Result<Vec<_>, _>>()?;
    let a_p = proj.p.adjoint() * a * &proj.p;
    let inner = HomogOptions {
        rank_tol: None,
        ..opts.clone()
    };
    let mut out = homogenize_p2(&relabelled, &a_p, split, &inner)?;
    out.law = out.law.sandwich(&u, &u.adjoint())?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::homog::homogenize_ode;
    use crate::linalg::{c64, diag_real};

    #[test]
    fn block_diagonal_constant_sequence() {
        let law = MaterialLaw::new(
            vec![
                diag_real(&[1.0, 2.0, 1.0, 0.0]),
                diag_real(&[0.5, 0.5, 0.5, 2.0]),
            ],
            1.0,
        )
        .unwrap();
        let a = CMat::from_fn(2, 2, |i, j| c64(0.0, if i == j { 0.0 } else { 1.0 }));
        let out = homogenize_p2(&vec![law.clone(); 3], &a, 2, &HomogOptions::default()).unwrap();
        assert!(linalg::max_abs(&out.eta3.coeff(0)) < 1e-15);
        assert!(linalg::max_abs(&out.eta4.coeff(0)) < 1e-15);
        assert!(out.eta1.max_coeff_diff(&law.block(0, 2, 0, 2).unwrap()) < 1e-15);
        let k = law.truncation() - 1;
        assert!(
            out.law
                .clone()
                .with_truncation(k)
                .max_coeff_diff(&law.with_truncation(k))
                < 1e-13
        );
        assert!(out.factorization_residual < 1e-14);
        assert!(out.range_gap < 1e-12);
        assert!(out.eta2.has_pole());
        let mut buf = Vec::new();
        out.write_diagnostics_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf)
            .unwrap()
            .starts_with("n,eta_index,probe_residual"));
    }

    #[test]
    fn nullsplit_without_a_matches_the_ode_pipeline() {
        let m1 = CMat::from_fn(3, 3, |i, j| c64(if i == j { 1.0 } else { 0.1 }, 0.0));
        let laws: Vec<MaterialLaw> = [0.5, 0.7, 0.5, 0.7, 0.5, 0.7]
            .iter()
            .map(|&s| {
                MaterialLaw::new(vec![diag_real(&[s + 1.0, 1.0, 0.0]), m1.clone()], 1.0).unwrap()
            })
            .collect();
        let ode = homogenize_ode(&laws, &HomogOptions::default()).unwrap();
        let split =
            homogenize_nullsplit(&laws, &linalg::zeros(3, 3), &HomogOptions::default()).unwrap();
        assert_eq!(split.kind, LimitKind::EvenSubsequence);
        assert!(ode.mu.max_coeff_diff(&split.law) < 1e-8);
    }

    #[test]
    fn hypothesis_violations_are_named() {
        let good =
            MaterialLaw::new(vec![diag_real(&[1.0, 0.0]), diag_real(&[1.0, 1.0])], 1.0).unwrap();
        let bad_range =
            MaterialLaw::new(vec![diag_real(&[0.0, 1.0]), diag_real(&[1.0, 1.0])], 1.0).unwrap();
        let a = linalg::zeros(1, 1);
        match homogenize_p2(&[good.clone(), bad_range], &a, 1, &HomogOptions::default()) {
            Err(HomogError::HypothesisViolated { condition, .. }) => assert_eq!(condition, "(i)"),
            other => panic!("{other:?}"),
        }
        let not_skew = CMat::from_element(1, 1, c64(1.0, 0.0));
        match homogenize_p2(&[good], &not_skew, 1, &HomogOptions::default()) {
            Err(HomogError::HypothesisViolated { condition, .. }) => assert_eq!(condition, "A"),
            other => panic!("{other:?}"),
        }
    }
}
