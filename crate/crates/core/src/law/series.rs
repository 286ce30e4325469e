//! Truncated matrix Laurent series `Σ_{k=low}^{high} z^k C_k`.
//!
//! Every operation takes the highest order to keep. Inputs are treated as
//! exact Laurent polynomials, so a product truncated at `top` is exact
//! through `top`.

use crate::linalg::{self, c64, CMat, C64};

#[derive(Clone, Debug, PartialEq)]
pub struct Laurent {
    pub rows: usize,
    pub cols: usize,
    pub low: i32,
    pub terms: Vec<CMat>,
}

impl Laurent {
    pub fn zero(rows: usize, cols: usize) -> Self {
        Laurent {
            rows,
            cols,
            low: 0,
            terms: Vec::new(),
        }
    }

    pub fn constant(c: CMat) -> Self {
        Laurent {
            rows: c.nrows(),
            cols: c.ncols(),
            low: 0,
            terms: vec![c],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::constant(linalg::identity(n))
    }

    pub fn high(&self) -> i32 {
        self.low + self.terms.len() as i32 - 1
    }

    pub fn coeff(&self, k: i32) -> CMat {
        if k < self.low || k > self.high() {
            return linalg::zeros(self.rows, self.cols);
        }
        self.terms[(k - self.low) as usize].clone()
    }

    fn coeff_ref(&self, k: i32) -> Option<&CMat> {
        if k < self.low || k > self.high() {
            None
        } else {
            Some(&self.terms[(k - self.low) as usize])
        }
    }

    /// Keeps orders `low..=top`.
    pub fn truncate(&self, top: i32) -> Self {
        let mut out = self.clone();
        let keep = (top - self.low + 1).max(0) as usize;
        out.terms.truncate(keep);
        out
    }

    /// Pads with zero terms so that `high() >= top`.
    pub fn pad(&self, top: i32) -> Self {
        let mut out = self.clone();
        while out.high() < top {
            out.terms.push(linalg::zeros(self.rows, self.cols));
        }
        out
    }

    pub fn mul(&self, other: &Laurent, top: i32) -> Self {
        assert_eq!(self.cols, other.rows, "series product shape");
        let low = self.low + other.low;
        let mut terms = Vec::new();
        for k in low..=top {
            let mut acc = linalg::zeros(self.rows, other.cols);
            for i in self.low..=self.high() {
                if let (Some(a), Some(b)) = (self.coeff_ref(i), other.coeff_ref(k - i)) {
                    acc += a * b;
                }
            }
            terms.push(acc);
        }
        Laurent {
            rows: self.rows,
            cols: other.cols,
            low,
            terms,
        }
    }

    pub fn add(&self, other: &Laurent) -> Self {
        self.axpy(other, c64(1.0, 0.0))
    }

    pub fn sub(&self, other: &Laurent) -> Self {
        self.axpy(other, c64(-1.0, 0.0))
    }

    /// `self + s·other`.
    pub fn axpy(&self, other: &Laurent, s: C64) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (other.rows, other.cols),
            "series sum shape"
        );
        if self.terms.is_empty() {
            return other.scale(s);
        }
        if other.terms.is_empty() {
            return self.clone();
        }
        let low = self.low.min(other.low);
        let high = self.high().max(other.high());
        let terms = (low..=high)
            .map(|k| self.coeff(k) + other.coeff(k) * s)
            .collect();
        Laurent {
            rows: self.rows,
            cols: self.cols,
            low,
            terms,
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        for t in out.terms.iter_mut() {
            *t *= s;
        }
        out
    }

    /// Multiplication by `z^m`.
    pub fn shift(&self, m: i32) -> Self {
        let mut out = self.clone();
        out.low += m;
        out
    }

    pub fn adjoint_coeffs(&self) -> Self {
        Laurent {
            rows: self.cols,
            cols: self.rows,
            low: self.low,
            terms: self.terms.iter().map(|t| t.adjoint()).collect(),
        }
    }

    pub fn block(&self, r0: usize, nr: usize, c0: usize, nc: usize) -> Self {
        Laurent {
            rows: nr,
            cols: nc,
            low: self.low,
            terms: self
                .terms
                .iter()
                .map(|t| linalg::block(t, r0, nr, c0, nc))
                .collect(),
        }
    }

    /// Left and right multiplication by constant matrices: `L·S·R`.
    pub fn sandwich(&self, left: &CMat, right: &CMat) -> Self {
        Laurent {
            rows: left.nrows(),
            cols: right.ncols(),
            low: self.low,
            terms: self.terms.iter().map(|t| left * t * right).collect(),
        }
    }

    pub fn assemble2(a: &Laurent, b: &Laurent, c: &Laurent, d: &Laurent) -> Self {
        let low = [a, b, c, d]
            .iter()
            .filter(|s| !s.terms.is_empty())
            .map(|s| s.low)
            .min()
            .unwrap_or(0);
        let high = [a, b, c, d]
            .iter()
            .filter(|s| !s.terms.is_empty())
            .map(|s| s.high())
            .max()
            .unwrap_or(-1);
        let terms = (low..=high)
            .map(|k| linalg::assemble2(&a.coeff(k), &b.coeff(k), &c.coeff(k), &d.coeff(k)))
            .collect();
        Laurent {
            rows: a.rows + c.rows,
            cols: a.cols + b.cols,
            low,
            terms,
        }
    }

    /// Inverse through order `top`; requires the leading term to be invertible.
    pub fn inverse(&self, top: i32) -> Option<Self> {
        if self.rows != self.cols {
            return None;
        }
        let n = self.rows;
        if n == 0 {
            return Some(Laurent {
                rows: 0,
                cols: 0,
                low: -self.low,
                terms: vec![linalg::zeros(0, 0); (top + self.low + 1).max(1) as usize],
            });
        }
        let a0 = self.terms.first()?;
        let a0inv = linalg::inverse(a0)?;
        let count = (top + self.low + 1).max(0) as usize;
        let mut b: Vec<CMat> = Vec::with_capacity(count);
        for k in 0..count {
            if k == 0 {
                b.push(a0inv.clone());
                continue;
            }
            let mut acc = linalg::zeros(n, n);
            for j in 1..=k {
                if j < self.terms.len() {
                    acc += &self.terms[j] * &b[k - j];
                }
            }
            b.push(-(&a0inv * acc));
        }
        Some(Laurent {
            rows: n,
            cols: n,
            low: -self.low,
            terms: b,
        })
    }

    pub fn eval(&self, z: C64) -> CMat {
        let mut acc = linalg::zeros(self.rows, self.cols);
        // Horner on the polynomial part, then scale by z^low
        for t in self.terms.iter().rev() {
            acc = acc * z + t;
        }
        if self.low != 0 {
            acc *= z.powi(self.low);
        }
        acc
    }

    /// Largest entry of the terms with order below `order`.
    pub fn size_below(&self, order: i32) -> f64 {
        (self.low..order.min(self.high() + 1))
            .map(|k| linalg::max_abs(&self.coeff(k)))
            .fold(0.0, f64::max)
    }

    /// Removes the terms with order below `order`.
    pub fn drop_below(&self, order: i32) -> Self {
        if self.low >= order {
            return self.clone();
        }
        let skip = ((order - self.low) as usize).min(self.terms.len());
        Laurent {
            rows: self.rows,
            cols: self.cols,
            low: order,
            terms: self.terms[skip..].to_vec(),
        }
    }

    /// Largest entry over all terms.
    pub fn max_abs(&self) -> f64 {
        self.terms.iter().map(linalg::max_abs).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar(low: i32, v: &[f64]) -> Laurent {
        Laurent {
            rows: 1,
            cols: 1,
            low,
            terms: v
                .iter()
                .map(|x| CMat::from_element(1, 1, c64(*x, 0.0)))
                .collect(),
        }
    }

    #[test]
    fn geometric_inverse() {
        // (1 - z)^{-1} = 1 + z + z^2 + ...
        let s = scalar(0, &[1.0, -1.0]);
        let inv = s.inverse(5).unwrap();
        for k in 0..=5 {
            assert!((inv.coeff(k)[(0, 0)] - c64(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn pole_inverse_and_product() {
        // (z^{-1}·2)^{-1} = z/2
        let s = scalar(-1, &[2.0]);
        let inv = s.inverse(3).unwrap();
        assert_eq!(inv.low, 1);
        assert!((inv.coeff(1)[(0, 0)].re - 0.5).abs() < 1e-15);
        let p = s.mul(&inv, 3);
        assert!((p.coeff(0)[(0, 0)].re - 1.0).abs() < 1e-15);
        assert!(p.coeff(1)[(0, 0)].norm() < 1e-15);
    }

    #[test]
    fn eval_matches_sum() {
        let s = scalar(-1, &[1.0, 2.0, 3.0]);
        let z = c64(0.3, 0.1);
        let expect = c64(1.0, 0.0) / z + c64(2.0, 0.0) + z * 3.0;
        assert!((s.eval(z)[(0, 0)] - expect).norm() < 1e-14);
    }
}
