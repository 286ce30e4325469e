//! Complex band matrices in LAPACK general-band storage with an unblocked
//! partial-pivoting LU.

use crate::linalg::{c64, CMat, C64};

/// `n × n` matrix with `kl` sub- and `ku` super-diagonals. Storage keeps `kl`
/// extra rows for the fill-in of the factorization (`ldab = 2kl + ku + 1`).
#[derive(Clone, Debug, PartialEq)]
pub struct BandMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    ab: Vec<C64>,
}

impl BandMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        BandMatrix {
            n,
            kl,
            ku,
            ab: vec![c64(0.0, 0.0); (2 * kl + ku + 1) * n],
        }
    }

    pub fn from_diagonal(d: &[C64]) -> Self {
        let mut b = Self::zeros(d.len(), 0, 0);
        for (i, &v) in d.iter().enumerate() {
            b.set(i, i, v);
        }
        b
    }

    /// Copies the band of `m`; entries outside it must vanish.
    pub fn from_dense(m: &CMat, kl: usize, ku: usize) -> Option<Self> {
        let n = m.nrows();
        if m.ncols() != n {
            return None;
        }
        let mut b = Self::zeros(n, kl, ku);
        for j in 0..n {
            for i in 0..n {
                let v = m[(i, j)];
                if b.in_band(i, j) {
                    b.set(i, j, v);
                } else if v != c64(0.0, 0.0) {
                    return None;
                }
            }
        }
        Some(b)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn bandwidths(&self) -> (usize, usize) {
        (self.kl, self.ku)
    }

    fn ldab(&self) -> usize {
        2 * self.kl + self.ku + 1
    }

    fn in_band(&self, i: usize, j: usize) -> bool {
        i + self.ku >= j && i <= j + self.kl
    }

    // row of A[i, j] in storage, including the fill-in rows
    fn idx(&self, i: usize, j: usize) -> usize {
        let kv = self.kl + self.ku;
        (kv + i - j) + j * self.ldab()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        if i < self.n && j < self.n && self.in_band(i, j) {
            self.ab[self.idx(i, j)]
        } else {
            c64(0.0, 0.0)
        }
    }

    /// Panics outside the band.
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        assert!(
            i < self.n && j < self.n && self.in_band(i, j),
            "({i}, {j}) outside the band"
        );
        let k = self.idx(i, j);
        self.ab[k] = v;
    }

    pub fn to_dense(&self) -> CMat {
        CMat::from_fn(self.n, self.n, |i, j| self.get(i, j))
    }

    pub fn matvec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![c64(0.0, 0.0); self.n];
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for (i, yi) in y.iter_mut().enumerate().take(hi + 1).skip(lo) {
                *yi += self.ab[self.idx(i, j)] * x[j];
            }
        }
        y
    }

    /// `self += s·other`; `other` must fit in the band of `self`.
    pub fn axpy(&mut self, s: C64, other: &BandMatrix) {
        assert_eq!(self.n, other.n);
        assert!(
            other.kl <= self.kl && other.ku <= self.ku,
            "band of the summand is wider"
        );
        for j in 0..self.n {
            let lo = j.saturating_sub(other.ku);
            let hi = (j + other.kl).min(self.n - 1);
            for i in lo..=hi {
                let k = self.idx(i, j);
                self.ab[k] += s * other.ab[other.idx(i, j)];
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.ab.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// `max |A + A*|` over the band.
    pub fn skew_defect(&self) -> f64 {
        let mut d: f64 = 0.0;
        for j in 0..self.n {
            let lo = j.saturating_sub(self.ku);
            let hi = (j + self.kl).min(self.n - 1);
            for i in lo..=hi {
                d = d.max((self.get(i, j) + self.get(j, i).conj()).norm());
            }
        }
        d
    }

    /// LU with partial pivoting; `None` if a pivot column is exactly zero or
    /// below `tiny` times the largest entry.
    pub fn lu(mut self, tiny: f64) -> Option<BandLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let scale = self.max_abs();
        let mut ipiv = vec![0usize; n];
        let mut ju = 0usize;
        let mut min_pivot = f64::INFINITY;
        for j in 0..n {
            let km = kl.min(n - 1 - j);
            let mut jp = 0;
            let mut best = -1.0;
            for p in 0..=km {
                let v = self.ab[self.idx(j + p, j)].norm();
                if v > best {
                    best = v;
                    jp = p;
                }
            }
            ipiv[j] = j + jp;
            if !(best > tiny * scale) {
                return None;
            }
            min_pivot = min_pivot.min(best);
            ju = ju.max((j + ku + jp).min(n - 1));
            if jp != 0 {
                for c in j..=ju {
                    let (a, b) = (self.idx(j, c), self.idx(j + jp, c));
                    self.ab.swap(a, b);
                }
            }
            if km > 0 {
                let piv = self.ab[self.idx(j, j)];
                for i in 1..=km {
                    let k = self.idx(j + i, j);
                    self.ab[k] /= piv;
                }
                for c in (j + 1)..=ju {
                    let u = self.ab[self.idx(j, c)];
                    if u == c64(0.0, 0.0) {
                        continue;
                    }
                    for i in 1..=km {
                        let l = self.ab[self.idx(j + i, j)];
                        let k = self.idx(j + i, c);
                        self.ab[k] -= l * u;
                    }
                }
            }
        }
        Some(BandLu {
            lu: self,
            ipiv,
            min_pivot,
        })
    }
}

#[derive(Clone, Debug)]
pub struct BandLu {
    lu: BandMatrix,
    ipiv: Vec<usize>,
    /// Smallest pivot modulus met during the factorization.
    pub min_pivot: f64,
}

impl BandLu {
    pub fn solve(&self, b: &[C64]) -> Vec<C64> {
        let m = &self.lu;
        let n = m.n;
        let kv = m.kl + m.ku;
        let mut x = b.to_vec();
        for j in 0..n.saturating_sub(1) {
            let l = self.ipiv[j];
            if l != j {
                x.swap(l, j);
            }
            let lm = m.kl.min(n - 1 - j);
            let xj = x[j];
            for i in 1..=lm {
                x[j + i] -= m.ab[m.idx(j + i, j)] * xj;
            }
        }
        for j in (0..n).rev() {
            x[j] /= m.ab[m.idx(j, j)];
            let xj = x[j];
            for i in j.saturating_sub(kv)..j {
                x[i] -= m.ab[m.idx(i, j)] * xj;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band(n: usize, kl: usize, ku: usize, seed: u64) -> BandMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut b = BandMatrix::zeros(n, kl, ku);
        for j in 0..n {
            for i in j.saturating_sub(ku)..=(j + kl).min(n - 1) {
                b.set(
                    i,
                    j,
                    c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                );
            }
        }
        b
    }

    #[test]
    fn solve_matches_dense() {
        for (n, kl, ku, seed) in [(1, 0, 0, 1), (7, 1, 1, 2), (20, 2, 3, 3), (33, 4, 1, 4)] {
            let b = random_band(n, kl, ku, seed);
            let rhs: Vec<C64> = (0..n).map(|i| c64(i as f64, 1.0)).collect();
            let x = b.clone().lu(1e-14).unwrap().solve(&rhs);
            let back = b.matvec(&x);
            let err = back
                .iter()
                .zip(&rhs)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-11, "{n} {kl} {ku}: {err}");
        }
    }

    #[test]
    fn pivoting_needed() {
        let m = CMat::from_row_slice(
            3,
            3,
            &[
                c64(0.0, 0.0),
                c64(1.0, 0.0),
                c64(0.0, 0.0),
                c64(1.0, 0.0),
                c64(0.0, 0.0),
                c64(2.0, 0.0),
                c64(0.0, 0.0),
                c64(3.0, 0.0),
                c64(1.0, 0.0),
            ],
        );
        let b = BandMatrix::from_dense(&m, 1, 1).unwrap();
        assert_eq!(b.to_dense(), m);
        let x = b
            .lu(1e-14)
            .unwrap()
            .solve(&[c64(1.0, 0.0), c64(2.0, 0.0), c64(3.0, 0.0)]);
        let r = &m * CMat::from_column_slice(3, 1, &x);
        assert!((r[(0, 0)].re - 1.0).abs() < 1e-14 && (r[(2, 0)].re - 3.0).abs() < 1e-14);
    }

    #[test]
    fn singular_and_out_of_band() {
        assert!(BandMatrix::zeros(3, 1, 1).lu(1e-14).is_none());
        assert!(
            BandMatrix::from_dense(&crate::linalg::identity(3).map(|_| c64(1.0, 0.0)), 1, 0)
                .is_none()
        );
    }

    #[test]
    fn axpy_and_skew() {
        let mut a = BandMatrix::zeros(4, 1, 1);
        a.set(0, 1, c64(2.0, 0.0));
        a.set(1, 0, c64(-2.0, 0.0));
        assert_eq!(a.skew_defect(), 0.0);
        a.axpy(
            c64(0.0, 1.0),
            &BandMatrix::from_diagonal(&[c64(1.0, 0.0); 4]),
        );
        assert_eq!(a.get(2, 2), c64(0.0, 1.0));
        assert_eq!(a.skew_defect(), 0.0);
    }
}
