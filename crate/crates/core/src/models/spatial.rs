//! The 1-D Dirichlet gradient/divergence pair and null-space splits.

use super::ModelsError;
use crate::evolve::BandMatrix;
use crate::linalg::{self, c64, CMat};
use serde::Serialize;

/// `grad₀` on `N` cells of `[0, L]`: temperature at the `N − 1` interior nodes,
/// flux on the cells.
#[derive(Clone, Debug)]
pub struct SpatialOperatorPair {
    /// `N × (N − 1)` forward differences with zero boundary values.
    pub grad0: CMat,
    /// `−grad0*`.
    pub div: CMat,
    pub h: f64,
    pub cells: usize,
}

impl SpatialOperatorPair {
    pub fn nodes(&self) -> usize {
        self.cells - 1
    }

    pub fn dim(&self) -> usize {
        2 * self.cells - 1
    }

    /// `(0, div; grad₀, 0)` on `(θ, q)`, temperature first.
    pub fn a_block(&self) -> CMat {
        let (nt, nq) = (self.nodes(), self.cells);
        linalg::assemble2(
            &linalg::zeros(nt, nt),
            &self.div,
            &self.grad0,
            &linalg::zeros(nq, nq),
        )
    }

    /// Position of `θ_i` (`i` in `0..N−1`) in the interleaved ordering
    /// `q₀, θ₀, q₁, θ₁, …, q_{N−1}`.
    pub fn theta_index(i: usize) -> usize {
        2 * i + 1
    }

    pub fn q_index(j: usize) -> usize {
        2 * j
    }

    /// `a_block` in the interleaved ordering, as a tridiagonal band matrix.
    pub fn a_banded(&self) -> BandMatrix {
        let n = self.dim();
        let mut b = BandMatrix::zeros(n, 1, 1);
        let g = 1.0 / self.h;
        for j in 0..self.cells {
            let q = Self::q_index(j);
            // (grad₀θ)_j = (θ_j − θ_{j−1})/h with θ at nodes j = 1..N−1 stored as θ_{j−1}
            if j >= 1 {
                b.set(q, Self::theta_index(j - 1), c64(-g, 0.0));
            }
            if j + 1 < self.cells {
                b.set(q, Self::theta_index(j), c64(g, 0.0));
            }
        }
        for i in 0..self.nodes() {
            let t = Self::theta_index(i);
            b.set(t, Self::q_index(i), c64(-g, 0.0));
            b.set(t, Self::q_index(i + 1), c64(g, 0.0));
        }
        b
    }
}

/// Forward-difference gradient with Dirichlet values; `div = −grad0*` by construction.
pub fn build_grad_div_1d(cells: usize, length: f64) -> Result<SpatialOperatorPair, ModelsError> {
    if cells < 2 || !(length > 0.0) {
        return Err(ModelsError::ConditionViolated {
            block: "grid".into(),
            detail: format!("need at least 2 cells and a positive length, got {cells}, {length}"),
        });
    }
    let h = length / cells as f64;
    let g = 1.0 / h;
    let grad0 = CMat::from_fn(cells, cells - 1, |j, i| {
        if i + 1 == j {
            c64(-g, 0.0)
        } else if i == j {
            c64(g, 0.0)
        } else {
            c64(0.0, 0.0)
        }
    });
    let div = -grad0.adjoint();
    Ok(SpatialOperatorPair {
        grad0,
        div,
        h,
        cells,
    })
}

/// Orthonormal bases of `N(A)^⊥` (`p`) and `N(A)` (`q`).
#[derive(Clone, Debug, Serialize)]
pub struct ProjectionPair {
    #[serde(skip)]
    pub p: CMat,
    #[serde(skip)]
    pub q: CMat,
    pub rank_tol: f64,
    /// Smallest retained and largest discarded singular values.
    pub sigma_kept: f64,
    pub sigma_dropped: f64,
}

/// Splits at `rank_tol` from the singular values of `A`; a singular value within a factor
/// `√10` of `rank_tol` on either side makes the split ambiguous.
pub fn nullspace_projections(a: &CMat, rank_tol: f64) -> Result<ProjectionPair, ModelsError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(ModelsError::ConditionViolated {
            block: "A".into(),
            detail: "operator must be square".into(),
        });
    }
    if n == 0 {
        return Ok(ProjectionPair {
            p: linalg::zeros(0, 0),
            q: linalg::zeros(0, 0),
            rank_tol,
            sigma_kept: f64::INFINITY,
            sigma_dropped: 0.0,
        });
    }
    let sigma = linalg::singular_values(a);
    let band = 10f64.sqrt();
    for &s in &sigma {
        if s > rank_tol / band && s < rank_tol * band {
            return Err(ModelsError::AmbiguousRank {
                sigma: s,
                tol: rank_tol,
            });
        }
    }
    let p = linalg::range_basis(&a.adjoint(), rank_tol);
    let q = linalg::complement_basis(&p, n);
    let sigma_kept = sigma
        .iter()
        .copied()
        .filter(|&s| s > rank_tol)
        .fold(f64::INFINITY, f64::min);
    let sigma_dropped = sigma
        .iter()
        .copied()
        .filter(|&s| s <= rank_tol)
        .fold(0.0, f64::max);
    Ok(ProjectionPair {
        p,
        q,
        rank_tol,
        sigma_kept,
        sigma_dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_cells() {
        let s = build_grad_div_1d(2, 1.0).unwrap();
        assert_eq!(s.grad0.shape(), (2, 1));
        assert_eq!(s.grad0[(0, 0)].re, 2.0);
        assert_eq!(s.grad0[(1, 0)].re, -2.0);
        assert_eq!(s.div, -s.grad0.transpose());
    }

    #[test]
    fn poincare_constant() {
        let s = build_grad_div_1d(200, 2.0).unwrap();
        let smin = linalg::min_singular(&s.grad0);
        let pi_l = std::f64::consts::PI / 2.0;
        assert!((smin - pi_l).abs() < 0.05 * pi_l);
    }

    #[test]
    fn a_block_is_skew() {
        let s = build_grad_div_1d(16, 1.0).unwrap();
        let a = s.a_block();
        assert_eq!(a.adjoint(), -&a);
        let (_, t) = a.clone().schur().unpack();
        assert!(t.diagonal().iter().all(|l| l.re.abs() < 1e-12));
        let dense = s.a_banded().to_dense();
        assert_eq!(dense.adjoint(), -&dense);
        // same operator after interleaving
        let n = s.dim();
        let perm = CMat::from_fn(n, n, |r, c| {
            let target = if c < s.nodes() {
                SpatialOperatorPair::theta_index(c)
            } else {
                SpatialOperatorPair::q_index(c - s.nodes())
            };
            c64(if r == target { 1.0 } else { 0.0 }, 0.0)
        });
        assert!(linalg::max_abs(&(&perm * &a * perm.transpose() - dense)) < 1e-12);
    }

    #[test]
    fn projections() {
        let z = nullspace_projections(&linalg::zeros(3, 3), 1e-9).unwrap();
        assert_eq!((z.p.ncols(), z.q.ncols()), (0, 3));
        let inv = nullspace_projections(&(linalg::identity(3) * c64(0.0, 1.0)), 1e-9).unwrap();
        assert_eq!((inv.p.ncols(), inv.q.ncols()), (3, 0));
        let s = build_grad_div_1d(8, 1.0).unwrap();
        let a = s.a_block();
        let pr = nullspace_projections(&a, 1e-8).unwrap();
        assert_eq!(pr.q.ncols(), 1);
        assert!(linalg::max_abs(&(&a * &pr.q)) <= 1e-8);
        let both = linalg::hstack(&pr.p, &pr.q);
        assert!(linalg::max_abs(&(both.adjoint() * &both - linalg::identity(a.nrows()))) < 1e-12);
        // the null vector is a constant flux
        let q = pr.q.column(0);
        let first = q[s.nodes()];
        for j in 0..s.cells {
            assert!((q[s.nodes() + j] - first).norm() < 1e-12);
        }
        let amb = CMat::from_fn(2, 2, |i, j| {
            c64(if i == j { [1.0, 2e-9][i] } else { 0.0 }, 0.0)
        });
        assert!(matches!(
            nullspace_projections(&amb, 1e-9),
            Err(ModelsError::AmbiguousRank { .. })
        ));
    }
}
