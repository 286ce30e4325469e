//! Block structure of material laws.
//!
//! With `H = H₁ ⊕ H₂` split at `split`, `G₁`/`G₂` are the range and null space
//! of the `H₁` diagonal block of `M(0)` and `G₃`/`G₄` those of the `H₂` block.
//! "G-coordinates" order a vector as `(G₁, G₂, G₃, G₄)`.

mod gauss;
mod invert;

pub use gauss::{
    check_compatibility, diagonalize_thm_final, gauss_transform, unit_triangular_inverse_bound,
    GaussFactors, GaussOutcome, ThmFinal,
};
pub use invert::{
    invert_analytic, invert_degenerate_hat, invert_law, invert_pole_law, invert_regular,
};

use crate::law::{LawError, MaterialLaw, ZERO_ORDER_TOL};
use crate::linalg::{self, CMat};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DecompError {
    #[error(transparent)]
    Law(#[from] LawError),
    #[error("block {block} violates the canonical form (norm {norm:e})")]
    StructureViolation { block: String, norm: f64 },
    #[error("degenerate block {which}: smallest eigenvalue {value:e}")]
    DegenerateBlock { which: String, value: f64 },
    #[error("range changed (principal-angle sine {gap:e})")]
    RangeChanged { gap: f64 },
    #[error("block on G4 is singular (smallest singular value {sigma_min:e})")]
    SingularBlock { sigma_min: f64 },
    #[error("compatibility condition violated (residual {residual:e})")]
    CompatibilityViolated { residual: f64 },
    #[error("split index {split} outside dimension {dim}")]
    BadSplit { split: usize, dim: usize },
}

/// Principal-angle threshold for range equality.
pub const RANGE_TOL: f64 = 1e-8;

/// Orthonormal bases of `G₁ … G₄`.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    /// Columns in `H₁` coordinates.
    pub g1: CMat,
    pub g2: CMat,
    /// Columns in `H₂` coordinates.
    pub g3: CMat,
    pub g4: CMat,
    pub split: usize,
    pub rank_tol: f64,
    /// Smallest eigenvalue of `M(0)` on `G₁ ⊕ G₃` (`None` if that space is trivial).
    pub d: Option<f64>,
}

impl BlockDecomposition {
    pub fn dims(&self) -> [usize; 4] {
        [
            self.g1.ncols(),
            self.g2.ncols(),
            self.g3.ncols(),
            self.g4.ncols(),
        ]
    }

    /// Start of each `G_i` in G-coordinates.
    pub fn offsets(&self) -> [usize; 4] {
        let [a, b, c, _] = self.dims();
        [0, a, a + b, a + b + c]
    }

    pub fn dim(&self) -> usize {
        self.dims().iter().sum()
    }

    /// Unitary `U` whose columns are `G₁, G₂, G₃, G₄` embedded in `H`.
    pub fn unitary(&self) -> CMat {
        linalg::block_diag(
            &linalg::hstack(&self.g1, &self.g2),
            &linalg::hstack(&self.g3, &self.g4),
        )
    }

    /// `U*·X·U`.
    pub fn to_g(&self, x: &CMat) -> CMat {
        let u = self.unitary();
        u.adjoint() * x * u
    }

    /// `U·X·U*`.
    pub fn from_g(&self, x: &CMat) -> CMat {
        let u = self.unitary();
        &u * x * u.adjoint()
    }

    /// `(G_i, G_j)` block (1-based) of a matrix given in G-coordinates.
    pub fn g_block(&self, xg: &CMat, i: usize, j: usize) -> CMat {
        let o = self.offsets();
        let d = self.dims();
        linalg::block(xg, o[i - 1], d[i - 1], o[j - 1], d[j - 1])
    }

    /// `(G_i, G_j)` block of `X` given in `H` coordinates.
    pub fn block_of(&self, x: &CMat, i: usize, j: usize) -> CMat {
        self.g_block(&self.to_g(x), i, j)
    }

    pub fn law_to_g(&self, law: &MaterialLaw) -> Result<MaterialLaw, LawError> {
        law.conjugate(&self.unitary())
    }

    /// Orthonormal basis of `G₁ ⊕ G₃` in `H`.
    pub fn range_basis(&self) -> CMat {
        linalg::block_diag(&self.g1, &self.g3)
    }
}

fn split_block(m0: &CMat, start: usize, len: usize, tol: f64) -> (CMat, CMat) {
    let b = linalg::block(m0, start, len, start, len);
    let e = linalg::eigh(&b);
    let k = e.values.iter().take_while(|&&v| v <= tol).count();
    let null = linalg::columns(&e.vectors, 0, k);
    let range = linalg::columns(&e.vectors, k, len - k);
    (range, null)
}

/// Computes `G₁ … G₄` for `M(0)` and checks the canonical form: only the
/// `(G₁,G₁)`, `(G₁,G₃)`, `(G₃,G₁)`, `(G₃,G₃)` blocks may be nonzero and
/// `M(0)` is positive definite on `G₁ ⊕ G₃`.
pub fn four_block(
    law: &MaterialLaw,
    split: usize,
    rank_tol: f64,
) -> Result<BlockDecomposition, DecompError> {
    let n = law.rows();
    if split > n {
        return Err(DecompError::BadSplit { split, dim: n });
    }
    law.check_zero_order_with_rank(ZERO_ORDER_TOL.max(rank_tol), rank_tol)?;
    let m0 = law.coeff(0);
    let (g1, g2) = split_block(&m0, 0, split, rank_tol);
    let (g3, g4) = split_block(&m0, split, n - split, rank_tol);
    let mut dec = BlockDecomposition {
        g1,
        g2,
        g3,
        g4,
        split,
        rank_tol,
        d: None,
    };
    let m0g = dec.to_g(&m0);
    // a PSD matrix with an eigenvalue below rank_tol can only couple to that
    // direction at the level sqrt(rank_tol·‖M(0)‖)
    let scale = linalg::spectral_norm(&m0).max(rank_tol);
    let struct_tol = 10.0 * (rank_tol * scale).sqrt() + 1e-12;
    for i in 1..=4 {
        for j in 1..=4 {
            if [i, j].iter().any(|&b| b == 2 || b == 4) {
                let blk = dec.g_block(&m0g, i, j);
                let norm = linalg::max_abs(&blk);
                if norm > struct_tol {
                    return Err(DecompError::StructureViolation {
                        block: format!("({i},{j})"),
                        norm,
                    });
                }
            }
        }
    }
    let [a, b, c, _] = dec.dims();
    let idx: Vec<usize> = (0..a).chain(a + b..a + b + c).collect();
    if !idx.is_empty() {
        let sub = CMat::from_fn(idx.len(), idx.len(), |r, s| m0g[(idx[r], idx[s])]);
        let d = linalg::min_eig_herm(&sub).unwrap_or(0.0);
        if d <= rank_tol {
            return Err(DecompError::DegenerateBlock {
                which: "G1+G3".into(),
                value: d,
            });
        }
        dec.d = Some(d);
    }
    Ok(dec)
}
