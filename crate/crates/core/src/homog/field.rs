//! Piecewise-constant 1-periodic coefficient fields and probe bases.

use super::HomogError;
use crate::linalg::{self, c64, CMat, C64};
use serde::{Deserialize, Serialize};

/// Values on the uniform partition `[k/m, (k+1)/m)` of the unit cell,
/// extended 1-periodically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PeriodicField {
    pieces: Vec<CMat>,
    /// `(α, β)` with `α ≤ Re κ` and `‖κ‖ ≤ β` on every piece.
    bounds: (f64, f64),
}

impl PeriodicField {
    pub fn new(pieces: Vec<CMat>) -> Result<Self, HomogError> {
        let first = pieces
            .first()
            .ok_or_else(|| HomogError::BadField("no pieces".into()))?;
        let d = first.nrows();
        if pieces.iter().any(|p| p.shape() != (d, d)) || d == 0 {
            return Err(HomogError::BadField(
                "pieces must be square of one size".into(),
            ));
        }
        if pieces.iter().any(|p| !linalg::is_finite(p)) {
            return Err(HomogError::BadField("non-finite value".into()));
        }
        let alpha = pieces
            .iter()
            .map(|p| linalg::min_eig_herm(&linalg::hermitian_part(p)).unwrap_or(0.0))
            .fold(f64::INFINITY, f64::min);
        let beta = pieces.iter().map(linalg::spectral_norm).fold(0.0, f64::max);
        Ok(PeriodicField {
            pieces,
            bounds: (alpha, beta),
        })
    }

    pub fn scalar(values: &[C64]) -> Result<Self, HomogError> {
        Self::new(
            values
                .iter()
                .map(|&v| CMat::from_element(1, 1, v))
                .collect(),
        )
    }

    pub fn real(values: &[f64]) -> Result<Self, HomogError> {
        let v: Vec<C64> = values.iter().map(|&x| c64(x, 0.0)).collect();
        Self::scalar(&v)
    }

    /// `v1` on `[0, ½)`, `v2` on `[½, 1)`.
    pub fn two_phase(v1: f64, v2: f64) -> Result<Self, HomogError> {
        Self::real(&[v1, v2])
    }

    pub fn constant(v: f64) -> Result<Self, HomogError> {
        Self::real(&[v])
    }

    pub fn pieces(&self) -> &[CMat] {
        &self.pieces
    }

    pub fn num_pieces(&self) -> usize {
        self.pieces.len()
    }

    pub fn dim(&self) -> usize {
        self.pieces[0].nrows()
    }

    pub fn bounds(&self) -> (f64, f64) {
        self.bounds
    }

    /// Whether every piece is Hermitian with `α > 0`.
    pub fn is_spd(&self) -> bool {
        self.bounds.0 > 0.0
            && self
                .pieces
                .iter()
                .all(|p| linalg::max_abs(&(p - p.adjoint())) <= 1e-14 * linalg::max_abs(p).max(1.0))
    }

    /// `κ + s·I` on every piece.
    pub fn shifted(&self, s: C64) -> Result<Self, HomogError> {
        let id = linalg::identity(self.dim());
        Self::new(self.pieces.iter().map(|p| p + &id * s).collect())
    }

    /// Pointwise inverse.
    pub fn inverse(&self) -> Result<Self, HomogError> {
        let inv = self
            .pieces
            .iter()
            .enumerate()
            .map(|(i, p)| linalg::inverse(p).ok_or(HomogError::SingularPiece { index: i }))
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(inv)
    }

    pub fn value_at(&self, x: f64) -> &CMat {
        let m = self.pieces.len();
        let y = x - x.floor();
        let k = ((y * m as f64).floor() as usize).min(m - 1);
        &self.pieces[k]
    }

    /// `κ(n·x_j)` at the cell centers `x_j = (j + ½)/grid`.
    ///
    /// Requires `grid` to be a multiple of `n·pieces` so that every piece
    /// covers whole cells.
    pub fn sample(&self, grid: usize, n: usize) -> Result<Vec<CMat>, HomogError> {
        let m = self.pieces.len();
        if n == 0 || grid == 0 || grid % (n * m) != 0 {
            return Err(HomogError::AliasError { grid, n, pieces: m });
        }
        let per = grid / (n * m);
        Ok((0..grid)
            .map(|j| self.pieces[(j / per) % m].clone())
            .collect())
    }

    /// Scalar samples; fails for matrix-valued fields.
    pub fn sample_scalar(&self, grid: usize, n: usize) -> Result<Vec<C64>, HomogError> {
        if self.dim() != 1 {
            return Err(HomogError::BadField("field is not scalar".into()));
        }
        Ok(self.sample(grid, n)?.iter().map(|p| p[(0, 0)]).collect())
    }
}

/// Mean over one cell (exact for piecewise constants).
pub fn cell_average(f: &PeriodicField) -> CMat {
    let m = f.num_pieces() as f64;
    f.pieces()
        .iter()
        .fold(linalg::zeros(f.dim(), f.dim()), |acc, p| acc + p)
        / c64(m, 0.0)
}

/// `⟨κ⁻¹⟩⁻¹`.
pub fn harmonic_mean(f: &PeriodicField) -> Result<CMat, HomogError> {
    let avg = cell_average(&f.inverse()?);
    linalg::inverse(&avg).ok_or(HomogError::SingularPiece { index: usize::MAX })
}

/// `m` orthonormal indicator vectors of equal coarse blocks of the grid.
/// Against a field sampled with `grid/m` a multiple of its period they
/// compress multiplication operators to their exact cell mean.
pub fn coarse_probes(grid: usize, m: usize) -> Result<CMat, HomogError> {
    if m == 0 || grid % m != 0 {
        return Err(HomogError::BadField(format!(
            "{m} probes do not tile {grid} cells"
        )));
    }
    let w = grid / m;
    let s = c64(1.0 / (w as f64).sqrt(), 0.0);
    Ok(CMat::from_fn(grid, m, |j, k| {
        if j / w == k {
            s
        } else {
            c64(0.0, 0.0)
        }
    }))
}

/// DCT-II modes `k = first, …, first + m − 1`, orthonormal on `grid` cell centers.
/// Modes with `k ≥ 1` are orthogonal to constants.
pub fn dct_probes(grid: usize, first: usize, m: usize) -> CMat {
    let n = grid as f64;
    CMat::from_fn(grid, m, |j, i| {
        let k = (first + i) as f64;
        let scale = if k == 0.0 {
            (1.0 / n).sqrt()
        } else {
            (2.0 / n).sqrt()
        };
        c64(
            scale * (std::f64::consts::PI * k * (j as f64 + 0.5) / n).cos(),
            0.0,
        )
    })
}
