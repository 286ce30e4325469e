//! Dense complex matrix helpers used throughout the crate.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(rows: usize, cols: usize) -> CMat {
    CMat::zeros(rows, cols)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Real diagonal matrix promoted to complex.
pub fn diag_real(values: &[f64]) -> CMat {
    let mut m = zeros(values.len(), values.len());
    for (i, v) in values.iter().enumerate() {
        m[(i, i)] = c64(*v, 0.0);
    }
    m
}

pub fn from_real(m: &DMatrix<f64>) -> CMat {
    m.map(|v| c64(v, 0.0))
}

/// `(X + X*) / 2`.
pub fn hermitian_part(x: &CMat) -> CMat {
    (x + x.adjoint()) * c64(0.5, 0.0)
}

pub fn is_finite(x: &CMat) -> bool {
    x.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}

pub fn max_abs<R: nalgebra::Dim, C: nalgebra::Dim, S: nalgebra::RawStorage<C64, R, C>>(
    x: &nalgebra::Matrix<C64, R, C, S>,
) -> f64 {
    x.iter().fold(0.0_f64, |acc, v| acc.max(v.norm()))
}

pub fn frobenius(x: &CMat) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
}

/// Singular triplets with `σ > tol`, descending, from the Hermitian
/// embedding `[[0, X], [X*, 0]]` whose eigenpairs are `±σ, (u; ±v)/√2`.
/// nalgebra's complex SVD can lose digits on rank-deficient input.
#[derive(Clone, Debug)]
pub struct Svd {
    pub sigma: Vec<f64>,
    pub u: CMat,
    pub v: CMat,
}

pub fn svd(x: &CMat, tol: f64) -> Svd {
    let (n, m) = x.shape();
    if n == 0 || m == 0 {
        return Svd {
            sigma: Vec::new(),
            u: zeros(n, 0),
            v: zeros(m, 0),
        };
    }
    let mut h = zeros(n + m, n + m);
    h.view_mut((0, n), (n, m)).copy_from(x);
    h.view_mut((n, 0), (m, n)).copy_from(&x.adjoint());
    let e = eigh(&h);
    let keep: Vec<usize> = (0..n + m)
        .rev()
        .take(n.min(m))
        .filter(|&i| e.values[i] > tol)
        .collect();
    let root2 = c64(std::f64::consts::SQRT_2, 0.0);
    let mut u = zeros(n, keep.len());
    let mut v = zeros(m, keep.len());
    for (k, &i) in keep.iter().enumerate() {
        let w = e.vectors.column(i);
        u.set_column(k, &(w.rows(0, n) * root2));
        v.set_column(k, &(w.rows(n, m) * root2));
    }
    Svd {
        sigma: keep.iter().map(|&i| e.values[i]).collect(),
        u,
        v,
    }
}

/// All `min(rows, cols)` singular values, descending.
pub fn singular_values(x: &CMat) -> Vec<f64> {
    let (n, m) = x.shape();
    if n == 0 || m == 0 {
        return Vec::new();
    }
    let mut h = zeros(n + m, n + m);
    h.view_mut((0, n), (n, m)).copy_from(x);
    h.view_mut((n, 0), (m, n)).copy_from(&x.adjoint());
    let mut s: Vec<f64> = eigvals_herm(&h)
        .into_iter()
        .rev()
        .take(n.min(m))
        .map(|v| v.max(0.0))
        .collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
    s
}

/// Largest singular value; zero for empty matrices. The largest Gram
/// eigenvalue is accurate to relative rounding, so no SVD is needed.
pub fn spectral_norm(x: &CMat) -> f64 {
    if x.nrows() == 0 || x.ncols() == 0 {
        return 0.0;
    }
    if x.nrows() == 1 || x.ncols() == 1 {
        return frobenius(x);
    }
    let gram = if x.nrows() <= x.ncols() {
        x * x.adjoint()
    } else {
        x.adjoint() * x
    };
    eigvals_herm(&gram)
        .last()
        .copied()
        .unwrap_or(0.0)
        .max(0.0)
        .sqrt()
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

/// Works on the real embedding `[[Re H, −Im H], [Im H, Re H]]`: nalgebra's
/// complex Hermitian eigenvectors lose accuracy near a null space. Every
/// eigenvalue appears twice there, and `(x; y)`, `(−y; x)` both map to
/// multiples of `x + iy`, so each cluster of `2k` real vectors is reduced to
/// `k` complex ones by pivoted Gram–Schmidt.
pub fn eigh(h: &CMat) -> Eigh {
    let n = h.nrows();
    if n == 0 {
        return Eigh {
            values: Vec::new(),
            vectors: zeros(0, 0),
        };
    }
    let herm = hermitian_part(h);
    let real = nalgebra::DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let z = herm[(i % n, j % n)];
        match (i < n, j < n) {
            (true, false) => -z.im,
            (false, true) => z.im,
            _ => z.re,
        }
    });
    let se = nalgebra::SymmetricEigen::new(real);
    let mut order: Vec<usize> = (0..2 * n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[a]
            .partial_cmp(&se.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let lam: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let scale = lam
        .iter()
        .fold(0.0f64, |m, v| m.max(v.abs()))
        .max(f64::MIN_POSITIVE);
    let candidate = |i: usize| {
        let col = se.eigenvectors.column(order[i]);
        CMat::from_fn(n, 1, |r, _| c64(col[r], col[r + n]))
    };
    let mut values = Vec::with_capacity(n);
    let mut vectors = zeros(n, n);
    let mut start = 0;
    while start < 2 * n {
        let mut end = start + 2;
        while end + 1 < 2 * n && lam[end] - lam[end - 1] <= 1e-10 * scale {
            end += 2;
        }
        let end = end.min(2 * n);
        let mut pool: Vec<CMat> = (start..end).map(candidate).collect();
        for _ in 0..(end - start) / 2 {
            let (best, _) = pool
                .iter()
                .enumerate()
                .map(|(i, c)| (i, c.norm()))
                .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
            let mut pick = pool.swap_remove(best);
            // second pass against this cluster's earlier picks
            for j in start / 2..values.len() {
                let q = vectors.column(j).clone_owned();
                let proj = (q.adjoint() * &pick)[(0, 0)];
                pick -= q * proj;
            }
            let pick = &pick / c64(pick.norm(), 0.0);
            for c in pool.iter_mut() {
                let proj = (pick.adjoint() * &*c)[(0, 0)];
                *c -= &pick * proj;
            }
            let k = values.len();
            vectors.set_column(k, &pick.column(0));
            values.push(
                (lam[start + 2 * (k - start / 2)] + lam[start + 2 * (k - start / 2) + 1]) / 2.0,
            );
        }
        start = end;
    }
    // vectors of nearby clusters leak into each other at rounding over the gap
    for k in 0..n {
        let mut v = vectors.column(k).clone_owned();
        for j in 0..k {
            let q = vectors.column(j);
            let proj = (q.adjoint() * &v)[(0, 0)];
            v -= q * proj;
        }
        let v = &v / c64(v.norm(), 0.0);
        vectors.set_column(k, &v);
    }
    Eigh { values, vectors }
}

/// Eigenvalues of the Hermitian part, ascending.
pub fn eigvals_herm(h: &CMat) -> Vec<f64> {
    if h.nrows() == 0 {
        return Vec::new();
    }
    let mut v: Vec<f64> = hermitian_part(h)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    v
}

/// Smallest eigenvalue of the Hermitian part; `None` for an empty matrix.
pub fn min_eig_herm(h: &CMat) -> Option<f64> {
    eigvals_herm(h).first().copied()
}

/// Inverse through LU; `None` when singular or non-finite.
pub fn inverse(x: &CMat) -> Option<CMat> {
    if x.nrows() != x.ncols() {
        return None;
    }
    if x.nrows() == 0 {
        return Some(zeros(0, 0));
    }
    let inv = x.clone().lu().try_inverse()?;
    if is_finite(&inv) {
        Some(inv)
    } else {
        None
    }
}

/// Smallest singular value (`+inf` for empty).
pub fn min_singular(x: &CMat) -> f64 {
    singular_values(x).last().copied().unwrap_or(f64::INFINITY)
}

/// Orthonormal basis of the column space, singular values above `tol`.
pub fn range_basis(x: &CMat, tol: f64) -> CMat {
    let (n, m) = x.shape();
    if n == 0 || m == 0 {
        return zeros(n, 0);
    }
    orthonormalize(&svd(x, tol).u)
}

/// Columns made exactly orthonormal; the span is unchanged.
fn orthonormalize(b: &CMat) -> CMat {
    if b.ncols() == 0 {
        return b.clone();
    }
    b.clone().qr().q()
}

/// Orthonormal basis of the orthogonal complement of `span(basis)` in `C^n`.
pub fn complement_basis(basis: &CMat, n: usize) -> CMat {
    let k = basis.ncols();
    if k == 0 {
        return identity(n);
    }
    if k >= n {
        return zeros(n, 0);
    }
    let proj = identity(n) - basis * basis.adjoint();
    let e = eigh(&proj);
    // eigenvalues are ~0 (k of them) and ~1 (n-k of them), ascending
    let mut c = zeros(n, n - k);
    for j in 0..(n - k) {
        c.set_column(j, &e.vectors.column(k + j));
    }
    c
}

/// Orthonormal basis of the (right) null space: singular values at or below `tol`.
pub fn null_basis(x: &CMat, tol: f64) -> CMat {
    let row_space = range_basis(&x.adjoint(), tol);
    complement_basis(&row_space, x.ncols())
}

/// Sine of the largest principal angle between two subspaces given by
/// orthonormal column bases. Unequal dimensions give 1.
pub fn subspace_gap(a: &CMat, b: &CMat) -> f64 {
    if a.ncols() != b.ncols() {
        return 1.0;
    }
    if a.ncols() == 0 {
        return 0.0;
    }
    let resid = b - a * (a.adjoint() * b);
    spectral_norm(&resid).min(1.0)
}

/// Columns `cols` of `x`.
pub fn columns(x: &CMat, start: usize, count: usize) -> CMat {
    x.columns(start, count).into_owned()
}

pub fn block(x: &CMat, r0: usize, nr: usize, c0: usize, nc: usize) -> CMat {
    x.view((r0, c0), (nr, nc)).into_owned()
}

pub fn set_block(x: &mut CMat, r0: usize, c0: usize, b: &CMat) {
    if b.nrows() == 0 || b.ncols() == 0 {
        return;
    }
    x.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
}

/// `[a b]`.
pub fn hstack(a: &CMat, b: &CMat) -> CMat {
    assert_eq!(a.nrows(), b.nrows());
    let mut out = zeros(a.nrows(), a.ncols() + b.ncols());
    set_block(&mut out, 0, 0, a);
    set_block(&mut out, 0, a.ncols(), b);
    out
}

/// Block-diagonal `diag(a, b)`.
pub fn block_diag(a: &CMat, b: &CMat) -> CMat {
    let mut out = zeros(a.nrows() + b.nrows(), a.ncols() + b.ncols());
    set_block(&mut out, 0, 0, a);
    set_block(&mut out, a.nrows(), a.ncols(), b);
    out
}

/// `[[a, b], [c, d]]`.
pub fn assemble2(a: &CMat, b: &CMat, c: &CMat, d: &CMat) -> CMat {
    let mut out = zeros(a.nrows() + c.nrows(), a.ncols() + b.ncols());
    set_block(&mut out, 0, 0, a);
    set_block(&mut out, 0, a.ncols(), b);
    set_block(&mut out, a.nrows(), 0, c);
    set_block(&mut out, a.nrows(), a.ncols(), d);
    out
}

/// Relative skew defect `‖A + A*‖ / ‖A‖` (zero for `A = 0`).
pub fn skew_defect(a: &CMat) -> f64 {
    let n = max_abs(a);
    if n == 0.0 {
        return 0.0;
    }
    max_abs(&(a + a.adjoint())) / n
}
