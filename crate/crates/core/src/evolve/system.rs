//! Per-frequency operators `s·M(1/s) + A`.

use super::{BandMatrix, EvolveError};
use crate::law::MaterialLaw;
use crate::linalg::{self, c64, CMat, C64};
use std::fmt::Debug;

/// Pivots below this fraction of the largest entry count as singular.
const PIVOT_TINY: f64 = 1e-15;
/// Largest condition number accepted at a frequency.
pub const MAX_CONDITION: f64 = 1e12;
/// Dense systems up to this size report singular values per frequency.
pub const DENSE_DIAGNOSTIC_DIM: usize = 256;

/// Solution at one frequency.
#[derive(Clone, Debug)]
pub struct BinSolve {
    pub x: Vec<C64>,
    /// `‖S x − b‖/‖b‖` after refinement.
    pub residual: f64,
    /// `‖S⁻¹‖` when the system can afford singular values.
    pub inverse_norm: Option<f64>,
    pub condition: Option<f64>,
}

/// A spatial system `(M, A)` that can be solved at `∂₀ = s`.
pub trait SpatialSystem: Send + Sync + Debug {
    fn dim(&self) -> usize;

    /// `‖A + A*‖` relative to `‖A‖` (entrywise maxima).
    fn skew_defect(&self) -> f64;

    /// Solves `(s·M(1/s) + A)x = b` with one step of iterative refinement;
    /// `diagnose` asks for `‖S⁻¹‖` and the condition number where affordable.
    fn solve_bin(&self, s: C64, b: &[C64], diagnose: bool) -> Result<BinSolve, EvolveError>;
}

fn rel_norm(r: &[C64], b: &[C64]) -> f64 {
    let nb = b.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    let nr = r.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if nb == 0.0 {
        nr
    } else {
        nr / nb
    }
}

/// Dense `A` with a general material law.
#[derive(Clone, Debug)]
pub struct DenseSystem {
    pub a: CMat,
    pub law: MaterialLaw,
}

impl DenseSystem {
    pub fn new(a: CMat, law: MaterialLaw) -> Result<Self, EvolveError> {
        if !law.is_square() || a.shape() != (law.rows(), law.rows()) {
            return Err(EvolveError::Shape(format!(
                "A is {}x{}, the law is {}x{}",
                a.nrows(),
                a.ncols(),
                law.rows(),
                law.cols()
            )));
        }
        Ok(DenseSystem { a, law })
    }

    /// `s·M(1/s) + A`.
    pub fn symbol(&self, s: C64) -> Result<CMat, EvolveError> {
        Ok(self.law.evaluate(c64(1.0, 0.0) / s)? * s + &self.a)
    }
}

impl SpatialSystem for DenseSystem {
    fn dim(&self) -> usize {
        self.a.nrows()
    }

    fn skew_defect(&self) -> f64 {
        linalg::skew_defect(&self.a)
    }

    fn solve_bin(&self, s: C64, b: &[C64], diagnose: bool) -> Result<BinSolve, EvolveError> {
        let m = self.symbol(s)?;
        let n = m.nrows();
        let (inverse_norm, condition) = if diagnose && n <= DENSE_DIAGNOSTIC_DIM {
            let hi = linalg::spectral_norm(&m);
            let inv_norm = linalg::inverse(&m).map_or(f64::INFINITY, |w| linalg::spectral_norm(&w));
            let cond = hi * inv_norm;
            if !(cond <= MAX_CONDITION) {
                return Err(EvolveError::SingularFrequency { s, condition: cond });
            }
            (Some(inv_norm), Some(cond))
        } else {
            (None, None)
        };
        let lu = m.clone().lu();
        let rhs = CMat::from_column_slice(n, 1, b);
        let mut x = lu.solve(&rhs).ok_or(EvolveError::SingularFrequency {
            s,
            condition: f64::INFINITY,
        })?;
        let r = &rhs - &m * &x;
        if let Some(dx) = lu.solve(&r) {
            x += dx;
        }
        let r = &rhs - &m * &x;
        Ok(BinSolve {
            residual: rel_norm(r.as_slice(), b),
            x: x.as_slice().to_vec(),
            inverse_norm,
            condition,
        })
    }
}

/// Banded `A` and a banded law `M(z) = P z⁻¹ + Σ M_k z^k`.
#[derive(Clone, Debug)]
pub struct BandedSystem {
    pub a: BandMatrix,
    pub coeffs: Vec<BandMatrix>,
    pub pole: Option<BandMatrix>,
    kl: usize,
    ku: usize,
}

impl BandedSystem {
    pub fn new(
        a: BandMatrix,
        coeffs: Vec<BandMatrix>,
        pole: Option<BandMatrix>,
    ) -> Result<Self, EvolveError> {
        let n = a.n();
        let all = std::iter::once(&a).chain(coeffs.iter()).chain(pole.iter());
        let mut kl = 0;
        let mut ku = 0;
        for m in all {
            if m.n() != n {
                return Err(EvolveError::Shape(
                    "band matrices of different sizes".into(),
                ));
            }
            let (l, u) = m.bandwidths();
            kl = kl.max(l);
            ku = ku.max(u);
        }
        Ok(BandedSystem {
            a,
            coeffs,
            pole,
            kl,
            ku,
        })
    }

    /// `s·M(1/s) + A` in band storage.
    pub fn symbol(&self, s: C64) -> BandMatrix {
        let mut m = BandMatrix::zeros(self.a.n(), self.kl, self.ku);
        m.axpy(c64(1.0, 0.0), &self.a);
        if let Some(p) = &self.pole {
            m.axpy(s * s, p);
        }
        let inv = c64(1.0, 0.0) / s;
        let mut w = s;
        for c in &self.coeffs {
            m.axpy(w, c);
            w *= inv;
        }
        m
    }
}

impl SpatialSystem for BandedSystem {
    fn dim(&self) -> usize {
        self.a.n()
    }

    fn skew_defect(&self) -> f64 {
        self.a.skew_defect() / self.a.max_abs().max(f64::MIN_POSITIVE)
    }

    fn solve_bin(&self, s: C64, b: &[C64], _diagnose: bool) -> Result<BinSolve, EvolveError> {
        let m = self.symbol(s);
        let lu = m
            .clone()
            .lu(PIVOT_TINY)
            .ok_or(EvolveError::SingularFrequency {
                s,
                condition: f64::INFINITY,
            })?;
        let mut x = lu.solve(b);
        let r: Vec<C64> = m.matvec(&x).iter().zip(b).map(|(mx, bi)| bi - mx).collect();
        let dx = lu.solve(&r);
        for (xi, d) in x.iter_mut().zip(dx) {
            *xi += d;
        }
        let r: Vec<C64> = m.matvec(&x).iter().zip(b).map(|(mx, bi)| bi - mx).collect();
        Ok(BinSolve {
            residual: rel_norm(&r, b),
            x,
            inverse_norm: None,
            condition: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::diag_real;

    #[test]
    fn dense_and_banded_agree() {
        let law = MaterialLaw::new(
            vec![diag_real(&[1.0, 0.0, 2.0]), diag_real(&[0.5, 1.0, 0.0])],
            1.0,
        )
        .unwrap();
        let mut a = linalg::zeros(3, 3);
        a[(0, 1)] = c64(1.0, 0.0);
        a[(1, 0)] = c64(-1.0, 0.0);
        a[(1, 2)] = c64(0.0, 2.0);
        a[(2, 1)] = c64(0.0, 2.0);
        let dense = DenseSystem::new(a.clone(), law.clone()).unwrap();
        let coeffs = law
            .coeffs()
            .iter()
            .map(|c| BandMatrix::from_dense(c, 0, 0).unwrap())
            .collect();
        let banded =
            BandedSystem::new(BandMatrix::from_dense(&a, 1, 1).unwrap(), coeffs, None).unwrap();
        assert_eq!(dense.skew_defect(), 0.0);
        assert_eq!(banded.skew_defect(), 0.0);
        let s = c64(3.0, -7.0);
        let b = [c64(1.0, 0.0), c64(0.0, 1.0), c64(2.0, -1.0)];
        let x1 = dense.solve_bin(s, &b, true).unwrap();
        let x2 = banded.solve_bin(s, &b, true).unwrap();
        for (p, q) in x1.x.iter().zip(&x2.x) {
            assert!((p - q).norm() < 1e-14);
        }
        assert!(x1.residual < 1e-15 && x2.residual < 1e-15);
        assert!(x1.inverse_norm.unwrap() > 0.0);
        assert!(linalg::max_abs(&(banded.symbol(s).to_dense() - dense.symbol(s).unwrap())) < 1e-14);
    }

    #[test]
    fn singular_frequency() {
        let law = MaterialLaw::new(vec![diag_real(&[0.0]), diag_real(&[0.0])], 1.0).unwrap();
        let sys = DenseSystem::new(linalg::zeros(1, 1), law).unwrap();
        assert!(matches!(
            sys.solve_bin(c64(2.0, 0.0), &[c64(1.0, 0.0)], true),
            Err(EvolveError::SingularFrequency { .. })
        ));
    }
}
