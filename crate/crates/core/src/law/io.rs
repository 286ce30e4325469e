//! JSON form of a law: `{dim, eps, K, pole?, coeffs, sup_bound?}` with
//! matrices as rows of `[re, im]` pairs.

use super::{LawError, MaterialLaw, SupSource};
use crate::linalg::{c64, CMat};
use serde::{Deserialize, Serialize};

pub type MatrixDoc = Vec<Vec<[f64; 2]>>;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LawDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cols: Option<usize>,
    pub eps: f64,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pole: Option<MatrixDoc>,
    pub coeffs: Vec<MatrixDoc>,
    /// Present only when the bound was declared rather than sampled.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sup_bound: Option<f64>,
}

pub fn matrix_to_doc(m: &CMat) -> MatrixDoc {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| [m[(i, j)].re, m[(i, j)].im])
                .collect()
        })
        .collect()
}

pub fn matrix_from_doc(doc: &MatrixDoc, rows: usize, cols: usize) -> Result<CMat, LawError> {
    if doc.len() != rows || doc.iter().any(|r| r.len() != cols) {
        return Err(LawError::Malformed(format!(
            "expected a {rows}x{cols} matrix"
        )));
    }
    Ok(CMat::from_fn(rows, cols, |i, j| {
        let [re, im] = doc[i][j];
        c64(re, im)
    }))
}

impl From<&MaterialLaw> for LawDocument {
    fn from(law: &MaterialLaw) -> Self {
        let square = law.is_square();
        LawDocument {
            dim: square.then_some(law.rows()),
            rows: (!square).then_some(law.rows()),
            cols: (!square).then_some(law.cols()),
            eps: law.radius(),
            k: law.truncation(),
            pole: law.pole().map(matrix_to_doc),
            coeffs: law.coeffs().iter().map(matrix_to_doc).collect(),
            sup_bound: (law.sup_source() == SupSource::Declared).then(|| law.sup_bound()),
        }
    }
}

impl TryFrom<LawDocument> for MaterialLaw {
    type Error = LawError;

    fn try_from(doc: LawDocument) -> Result<Self, LawError> {
        let (rows, cols) = match (doc.dim, doc.rows, doc.cols) {
            (Some(d), None, None) => (d, d),
            (None, Some(r), Some(c)) => (r, c),
            _ => {
                return Err(LawError::Malformed(
                    "give either dim or rows and cols".into(),
                ))
            }
        };
        if doc.coeffs.len() > doc.k + 1 {
            return Err(LawError::Malformed(format!(
                "{} coefficients for K = {}",
                doc.coeffs.len(),
                doc.k
            )));
        }
        let coeffs = doc
            .coeffs
            .iter()
            .map(|m| matrix_from_doc(m, rows, cols))
            .collect::<Result<Vec<_>, _>>()?;
        let pole = doc
            .pole
            .as_ref()
            .map(|m| matrix_from_doc(m, rows, cols))
            .transpose()?;
        let law = MaterialLaw::from_parts(pole, coeffs, doc.eps, doc.sup_bound)?;
        Ok(law.with_truncation_keep_sup(doc.k))
    }
}

impl Serialize for MaterialLaw {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        LawDocument::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for MaterialLaw {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let doc = LawDocument::deserialize(d)?;
        MaterialLaw::try_from(doc).map_err(serde::de::Error::custom)
    }
}

impl MaterialLaw {
    pub fn to_json(&self) -> String {
        crate::json::to_string_pretty(self)
    }

    pub fn from_json(text: &str) -> Result<Self, LawError> {
        serde_json::from_str(text).map_err(|e| LawError::Malformed(e.to_string()))
    }

    fn with_truncation_keep_sup(self, k: usize) -> Self {
        let declared = self.declared_sup;
        let mut out = self.with_truncation(k);
        out.declared_sup = declared;
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag_real;

    #[test]
    fn roundtrip_preserves_bits() {
        let m0 = CMat::from_fn(2, 2, |i, j| {
            c64(
                1.0 / (1.0 + i as f64 + j as f64),
                0.1 * j as f64 - 0.3 * i as f64,
            )
        });
        let m0 = (&m0 + m0.adjoint()) * c64(0.5, 0.0);
        let law = MaterialLaw::with_pole(
            diag_real(&[0.0, 2.0 / 3.0]),
            vec![m0, diag_real(&[std::f64::consts::PI, 1e-300])],
            0.7,
        )
        .unwrap()
        .with_truncation(5);
        let back = MaterialLaw::from_json(&law.to_json()).unwrap();
        assert_eq!(back, law);
    }

    #[test]
    fn declared_sup_survives() {
        let law = MaterialLaw::constant(diag_real(&[1.0]), 2.0)
            .unwrap()
            .with_sup_bound(1.5)
            .unwrap();
        let back = MaterialLaw::from_json(&law.to_json()).unwrap();
        assert_eq!(back.sup_source(), SupSource::Declared);
        assert_eq!(back.sup_bound(), 1.5);
    }

    #[test]
    fn rejects_bad_shapes() {
        let text = r#"{"dim": 2, "eps": 1.0, "K": 0, "coeffs": [[[[1,0]]]]}"#;
        assert!(MaterialLaw::from_json(text).is_err());
    }
}
