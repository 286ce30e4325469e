//! Material laws: truncated operator-valued Laurent series
//! `M(z) = z⁻¹·P + Σ_{k=0}^{K} z^k M_k` on a disc `B(0, ε)`.

mod certify;
mod io;
mod limit;
pub mod series;

pub use certify::{
    certify, sample_positivity, PositivityCertificate, PositivitySample, ZeroOrderReport,
};
pub use io::{matrix_from_doc, matrix_to_doc, LawDocument, MatrixDoc};
pub use limit::{
    limit_or_even, series_limit, series_limit_indexed, Divergence, LimitKind, SeriesLimit,
};

use crate::linalg::{self, c64, CMat, C64};
use serde::{Deserialize, Serialize};
use series::Laurent;
use std::sync::OnceLock;
use thiserror::Error;

/// Default truncation order.
pub const DEFAULT_K: usize = 8;
/// Number of circle samples used to estimate `sup_bound`.
pub const SUP_SAMPLES: usize = 256;
/// Default absolute tolerance for the self-adjointness / PSD tests.
pub const ZERO_ORDER_TOL: f64 = 1e-10;
/// Relative rank threshold (times `‖M₀‖`).
pub const RANK_REL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LawError {
    #[error("evaluation point |z| = {modulus} outside the disc of radius {radius}")]
    EvalOutsideDisc { modulus: f64, radius: f64 },
    #[error("pole at z = 0")]
    PoleAtZero,
    #[error("coefficient {index} has norm {norm} above the Cauchy bound {bound}")]
    BoundViolated { index: usize, norm: f64, bound: f64 },
    #[error("zeroth coefficient is not self-adjoint (defect {defect:e})")]
    NotSelfadjoint { defect: f64 },
    #[error("zeroth coefficient is not positive semi-definite (eigenvalue {eigenvalue:e})")]
    NotPsd { eigenvalue: f64 },
    #[error("certification prerequisite failed: {0}")]
    PrereqFailed(String),
    #[error("series limit did not converge: {0}")]
    NoConvergence(Box<Divergence>),
    #[error("law has a pole part where an analytic law is required")]
    PolePresent,
    #[error("law is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite coefficient")]
    NonFinite,
    #[error("invalid radius {0}")]
    BadRadius(f64),
    #[error("malformed law document: {0}")]
    Malformed(String),
}

/// Where the `sup_bound` of a law came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupSource {
    Declared,
    CircleSample,
}

#[derive(Clone, Debug)]
pub struct MaterialLaw {
    rows: usize,
    cols: usize,
    pole: Option<CMat>,
    coeffs: Vec<CMat>,
    radius: f64,
    declared_sup: Option<f64>,
    // circle-sampled estimate, computed on first use
    sampled_sup: OnceLock<f64>,
}

impl PartialEq for MaterialLaw {
    fn eq(&self, other: &Self) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.pole == other.pole
            && self.coeffs == other.coeffs
            && self.radius == other.radius
            && self.declared_sup == other.declared_sup
    }
}

impl MaterialLaw {
    /// Square power-series law from `M₀, …, M_K`; `sup_bound` is sampled.
    pub fn new(coeffs: Vec<CMat>, radius: f64) -> Result<Self, LawError> {
        Self::build(None, coeffs, radius, None)
    }

    /// Square Laurent law with a `z⁻¹` coefficient.
    pub fn with_pole(pole: CMat, coeffs: Vec<CMat>, radius: f64) -> Result<Self, LawError> {
        Self::build(Some(pole), coeffs, radius, None)
    }

    /// General constructor; rectangular shapes are allowed here (Gauss factors
    /// map between different spaces).
    pub fn from_parts(
        pole: Option<CMat>,
        coeffs: Vec<CMat>,
        radius: f64,
        sup_bound: Option<f64>,
    ) -> Result<Self, LawError> {
        Self::build(pole, coeffs, radius, sup_bound)
    }

    pub fn constant(c: CMat, radius: f64) -> Result<Self, LawError> {
        Self::new(vec![c], radius)
    }

    fn build(
        pole: Option<CMat>,
        mut coeffs: Vec<CMat>,
        radius: f64,
        sup_bound: Option<f64>,
    ) -> Result<Self, LawError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(LawError::BadRadius(radius));
        }
        let (rows, cols) = match (pole.as_ref(), coeffs.first()) {
            (_, Some(c)) => c.shape(),
            (Some(p), None) => p.shape(),
            (None, None) => return Err(LawError::Shape("law without coefficients".into())),
        };
        if coeffs.is_empty() {
            coeffs.push(linalg::zeros(rows, cols));
        }
        for c in coeffs.iter().chain(pole.iter()) {
            if c.shape() != (rows, cols) {
                return Err(LawError::Shape(format!(
                    "coefficient {}x{} in a {}x{} law",
                    c.nrows(),
                    c.ncols(),
                    rows,
                    cols
                )));
            }
            if !linalg::is_finite(c) {
                return Err(LawError::NonFinite);
            }
        }
        let law = MaterialLaw {
            rows,
            cols,
            pole,
            coeffs,
            radius,
            declared_sup: None,
            sampled_sup: OnceLock::new(),
        };
        match sup_bound {
            Some(s) => law.with_sup_bound(s),
            None => Ok(law),
        }
    }

    pub(crate) fn from_laurent(s: &Laurent, radius: f64, k: usize) -> Result<Self, LawError> {
        if s.low < -1 {
            return Err(LawError::Shape(format!("pole of order {}", -s.low)));
        }
        let pole = match s.low {
            -1 if s.size_below(0) > 0.0 => Some(s.coeff(-1)),
            _ => None,
        };
        let coeffs = (0..=k as i32).map(|j| s.coeff(j)).collect();
        Self::build(pole, coeffs, radius, None)
    }

    pub(crate) fn to_laurent(&self) -> Laurent {
        let mut terms = Vec::with_capacity(self.coeffs.len() + 1);
        let low = if let Some(p) = &self.pole {
            terms.push(p.clone());
            -1
        } else {
            0
        };
        terms.extend(self.coeffs.iter().cloned());
        Laurent {
            rows: self.rows,
            cols: self.cols,
            low,
            terms,
        }
    }

    /// Changes the truncation order, padding with zeros or cutting.
    pub fn with_truncation(mut self, k: usize) -> Self {
        self.coeffs
            .resize(k + 1, linalg::zeros(self.rows, self.cols));
        self.sampled_sup = OnceLock::new();
        self
    }

    /// Declares `‖M‖_∞` explicitly; fails if a stored coefficient violates the
    /// Cauchy estimate with it.
    pub fn with_sup_bound(mut self, s: f64) -> Result<Self, LawError> {
        if !(s > 0.0) || !s.is_finite() {
            return Err(LawError::Malformed(format!("sup_bound {s}")));
        }
        self.declared_sup = Some(s);
        self.validate_cauchy()?;
        Ok(self)
    }

    /// Replaces the radius; a sampled `sup_bound` is recomputed.
    pub fn with_radius(mut self, radius: f64) -> Result<Self, LawError> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(LawError::BadRadius(radius));
        }
        self.radius = radius;
        self.sampled_sup = OnceLock::new();
        if self.declared_sup.is_some() {
            self.validate_cauchy()?;
        }
        Ok(self)
    }

    /// Drops a declared bound so that the circle estimate is used.
    pub fn with_sampled_sup(mut self) -> Self {
        self.declared_sup = None;
        self
    }

    /// `max ‖M(z)‖` over `SUP_SAMPLES` points of `|z| = ε/2`.
    pub fn circle_sup(&self) -> f64 {
        *self.sampled_sup.get_or_init(|| self.sample_circle())
    }

    fn sample_circle(&self) -> f64 {
        let rho = self.radius / 2.0;
        let s = (0..SUP_SAMPLES)
            .map(|j| {
                let theta = 2.0 * std::f64::consts::PI * (j as f64) / (SUP_SAMPLES as f64);
                let z = C64::from_polar(rho, theta);
                linalg::spectral_norm(&self.eval_unchecked(z))
            })
            .fold(0.0, f64::max);
        s.max(f64::MIN_POSITIVE)
    }

    fn validate_cauchy(&self) -> Result<(), LawError> {
        for n in 0..self.coeffs.len() {
            self.coeff_bound(n)?;
        }
        Ok(())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Dimension of a square law.
    pub fn dim(&self) -> usize {
        self.rows
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn pole(&self) -> Option<&CMat> {
        self.pole.as_ref()
    }

    pub fn has_pole(&self) -> bool {
        self.pole.is_some()
    }

    pub fn coeffs(&self) -> &[CMat] {
        &self.coeffs
    }

    /// `M_k`, zero past the truncation order.
    pub fn coeff(&self, k: usize) -> CMat {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(|| linalg::zeros(self.rows, self.cols))
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn truncation(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// `‖M‖_∞`: the declared value, or the circle estimate.
    pub fn sup_bound(&self) -> f64 {
        self.declared_sup.unwrap_or_else(|| self.circle_sup())
    }

    pub fn sup_source(&self) -> SupSource {
        if self.declared_sup.is_some() {
            SupSource::Declared
        } else {
            SupSource::CircleSample
        }
    }

    fn eval_unchecked(&self, z: C64) -> CMat {
        let mut acc = linalg::zeros(self.rows, self.cols);
        for c in self.coeffs.iter().rev() {
            acc = acc * z + c;
        }
        if let Some(p) = &self.pole {
            acc += p / z;
        }
        acc
    }

    /// `pole/z + Σ z^k M_k`.
    pub fn evaluate(&self, z: C64) -> Result<CMat, LawError> {
        if z.norm() >= self.radius {
            return Err(LawError::EvalOutsideDisc {
                modulus: z.norm(),
                radius: self.radius,
            });
        }
        if self.pole.is_some() && z == c64(0.0, 0.0) {
            return Err(LawError::PoleAtZero);
        }
        Ok(self.eval_unchecked(z))
    }

    /// Cauchy bound `sup·(2/ε)^n` for `‖M_n‖`, checked against the stored
    /// coefficient.
    pub fn coeff_bound(&self, n: usize) -> Result<f64, LawError> {
        if self.pole.is_some() {
            return Err(LawError::PolePresent);
        }
        let bound = self.sup_bound() * (2.0 / self.radius).powi(n as i32);
        if let Some(c) = self.coeffs.get(n) {
            let norm = linalg::spectral_norm(c);
            if norm > bound * (1.0 + 1e-8) + 1e-300 {
                return Err(LawError::BoundViolated {
                    index: n,
                    norm,
                    bound,
                });
            }
        }
        Ok(bound)
    }

    /// `2·sup·(2/ε)^k`, a bound for `Σ_{n≥k} z^{n−k} M_n` on `|z| ≤ ε/4`.
    pub fn tail_bound(&self, k: usize) -> f64 {
        2.0 * self.sup_bound() * (2.0 / self.radius).powi(k as i32)
    }

    /// Zero-order structure test with the default rank threshold.
    pub fn check_zero_order(&self, tol: f64) -> Result<ZeroOrderReport, LawError> {
        certify::check_zero_order(self, tol, None)
    }

    /// Zero-order structure test with an explicit absolute rank threshold.
    pub fn check_zero_order_with_rank(
        &self,
        tol: f64,
        rank_tol: f64,
    ) -> Result<ZeroOrderReport, LawError> {
        certify::check_zero_order(self, tol, Some(rank_tol))
    }

    /// Default absolute rank threshold `1e-9·‖M₀‖`.
    pub fn default_rank_tol(&self) -> f64 {
        (RANK_REL * linalg::spectral_norm(&self.coeffs[0])).max(1e-14)
    }

    /// `U*·M·U` for a unitary (or isometric) change of basis.
    pub fn conjugate(&self, u: &CMat) -> Result<Self, LawError> {
        self.sandwich(&u.adjoint(), u)
    }

    /// `L·M·R` coefficient-wise.
    pub fn sandwich(&self, left: &CMat, right: &CMat) -> Result<Self, LawError> {
        let s = self.to_laurent().sandwich(left, right);
        let mut out = Self::from_laurent(&s, self.radius, self.truncation())?;
        if let Some(s) = self.declared_sup {
            let scale = linalg::spectral_norm(left) * linalg::spectral_norm(right);
            if let Ok(o) = out.clone().with_sup_bound(s * scale.max(1e-300)) {
                out = o;
            }
        }
        Ok(out)
    }

    /// `αM + βN` for laws sharing shape; radius and truncation are the smaller of the two.
    pub fn lin_comb(&self, alpha: C64, other: &MaterialLaw, beta: C64) -> Result<Self, LawError> {
        if self.rows != other.rows || self.cols != other.cols {
            return Err(LawError::Shape(
                "linear combination of different shapes".into(),
            ));
        }
        let s = self
            .to_laurent()
            .scale(alpha)
            .axpy(&other.to_laurent(), beta);
        let k = self.truncation().min(other.truncation());
        Self::from_laurent(&s, self.radius.min(other.radius), k)
    }

    /// Truncated product `M·N`.
    pub fn mul(&self, other: &MaterialLaw) -> Result<Self, LawError> {
        if self.cols != other.rows {
            return Err(LawError::Shape("product of incompatible laws".into()));
        }
        let k = self.truncation().min(other.truncation());
        let s = self.to_laurent().mul(&other.to_laurent(), k as i32);
        Self::from_laurent(&s.drop_below(-1), self.radius.min(other.radius), k)
    }

    /// Sub-block `rows r0..r0+nr`, `cols c0..c0+nc` of every coefficient.
    pub fn block(&self, r0: usize, nr: usize, c0: usize, nc: usize) -> Result<Self, LawError> {
        let s = self.to_laurent().block(r0, nr, c0, nc);
        let s = if s.low == -1 && s.size_below(0) == 0.0 {
            s.drop_below(0)
        } else {
            s
        };
        Self::from_laurent(&s, self.radius, self.truncation())
    }

    /// Largest entrywise difference over all coefficients (pole included).
    pub fn max_coeff_diff(&self, other: &MaterialLaw) -> f64 {
        let a = self.to_laurent();
        let b = other.to_laurent();
        a.sub(&b).max_abs()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag_real;

    fn scalar(v: f64) -> CMat {
        CMat::from_element(1, 1, c64(v, 0.0))
    }

    #[test]
    fn evaluate_examples() {
        let c = diag_real(&[1.0, 2.0]);
        let law = MaterialLaw::constant(c.clone(), 1.0).unwrap();
        assert_eq!(law.evaluate(c64(0.3, 0.0)).unwrap(), c);

        let b = diag_real(&[5.0, 7.0]);
        let law = MaterialLaw::new(vec![linalg::identity(2), b], 1.0).unwrap();
        assert_eq!(law.evaluate(c64(0.0, 0.0)).unwrap(), linalg::identity(2));

        let pole = MaterialLaw::with_pole(scalar(2.0), vec![scalar(0.0)], 1.0).unwrap();
        let v = pole.evaluate(c64(0.5, 0.0)).unwrap();
        assert!((v[(0, 0)] - c64(4.0, 0.0)).norm() < 1e-15);
        assert_eq!(pole.evaluate(c64(0.0, 0.0)), Err(LawError::PoleAtZero));
        assert!(matches!(
            pole.evaluate(c64(1.0, 0.0)),
            Err(LawError::EvalOutsideDisc { .. })
        ));
    }

    #[test]
    fn cauchy_bounds() {
        let law = MaterialLaw::constant(linalg::identity(2), 1.0)
            .unwrap()
            .with_truncation(3)
            .with_sup_bound(1.0)
            .unwrap();
        assert_eq!(law.coeff_bound(3).unwrap(), 8.0);

        let law = MaterialLaw::constant(scalar(1.0), 4.0)
            .unwrap()
            .with_sup_bound(2.0)
            .unwrap();
        assert!((law.coeff_bound(2).unwrap() - 0.5).abs() < 1e-15);

        // 1/(1-z) truncated, eps = 1/2, sup = 2
        let geo: Vec<CMat> = (0..=8).map(|_| scalar(1.0)).collect();
        let law = MaterialLaw::new(geo, 0.5)
            .unwrap()
            .with_sup_bound(2.0)
            .unwrap();
        for n in 0..=8 {
            assert!(law.coeff_bound(n).is_ok());
        }

        let bad = MaterialLaw::new(vec![scalar(0.0), scalar(10.0)], 1.0)
            .unwrap()
            .with_sup_bound(1.0);
        assert!(matches!(bad, Err(LawError::BoundViolated { index: 1, .. })));
    }

    #[test]
    fn tail_bound_examples() {
        let mk = |s: f64, eps: f64| {
            MaterialLaw::constant(scalar(s / 2.0), eps)
                .unwrap()
                .with_sup_bound(s)
                .unwrap()
        };
        assert_eq!(mk(1.0, 2.0).tail_bound(0), 2.0);
        assert_eq!(mk(1.0, 2.0).tail_bound(4), 2.0);
        assert!((mk(3.0, 6.0).tail_bound(2) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn sampled_sup_of_polynomial() {
        // M(z) = diag(1, z): sup on |z| = 1 is 1
        let law =
            MaterialLaw::new(vec![diag_real(&[1.0, 0.0]), diag_real(&[0.0, 1.0])], 2.0).unwrap();
        assert!((law.sup_bound() - 1.0).abs() < 1e-12);
        assert_eq!(law.sup_source(), SupSource::CircleSample);
    }

    #[test]
    fn product_of_pole_and_inverse_law() {
        let p = MaterialLaw::with_pole(scalar(2.0), vec![scalar(1.0)], 1.0).unwrap();
        let q = MaterialLaw::new(vec![scalar(0.0), scalar(0.5), scalar(-0.25)], 1.0).unwrap();
        // (2/z + 1)(z/2 - z²/4) = 1 + 0·z - z³/4
        let r = p.mul(&q).unwrap();
        assert!(r.pole().map_or(true, |m| linalg::max_abs(m) == 0.0));
        assert!((r.coeff(0)[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-15);
        assert!(r.coeff(1)[(0, 0)].norm() < 1e-15);
    }
}
