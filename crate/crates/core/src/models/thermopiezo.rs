//! Thermopiezoelectric material law on `(v, T, E, H, θ, Q)`.

use super::ModelsError;
use crate::law::{certify, MaterialLaw, PositivityCertificate, DEFAULT_K};
use crate::linalg::{self, c64, CMat};
use crate::Error;
use serde::{Deserialize, Serialize};

/// Default block sizes of `v, T, E, H, θ, Q`.
pub const TPZ_SIZES: [usize; 6] = [3, 6, 3, 3, 1, 1];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Condition {
    /// `q₀` strictly positive.
    I,
    /// `q₀ = 0`, `q₁` strictly positive and commuting with `κ⁻¹`.
    Ii,
}

/// Coefficient blocks. `d: T×E`, `lambda: T×θ`, `p: E×θ`; `q0, q1, alpha,
/// kappa` act on the scalar thermal variables.
#[derive(Clone, Debug)]
pub struct ThermopiezoBlocks {
    pub rho0: CMat,
    pub c: CMat,
    pub eps: CMat,
    pub mu: CMat,
    pub q0: CMat,
    pub q1: CMat,
    pub alpha: CMat,
    pub kappa: CMat,
    pub d: CMat,
    pub lambda: CMat,
    pub p: CMat,
}

impl ThermopiezoBlocks {
    /// All diagonal blocks the identity, couplings zero.
    pub fn identity() -> Self {
        let [nv, nt, ne, nh, nth, _] = TPZ_SIZES;
        ThermopiezoBlocks {
            rho0: linalg::identity(nv),
            c: linalg::identity(nt),
            eps: linalg::identity(ne),
            mu: linalg::identity(nh),
            q0: linalg::identity(nth),
            q1: linalg::identity(nth),
            alpha: linalg::identity(nth),
            kappa: linalg::identity(nth),
            d: linalg::zeros(nt, ne),
            lambda: linalg::zeros(nt, nth),
            p: linalg::zeros(ne, nth),
        }
    }

    pub fn sizes(&self) -> [usize; 6] {
        [
            self.rho0.nrows(),
            self.c.nrows(),
            self.eps.nrows(),
            self.mu.nrows(),
            self.alpha.nrows(),
            self.q0.nrows(),
        ]
    }
}

#[derive(Clone, Debug)]
pub struct ThermopiezoLaw {
    pub law: MaterialLaw,
    pub certificate: PositivityCertificate,
    pub condition: Condition,
    /// `M₁₁`, the instantaneous part on `(v, T, E, H, θ)`.
    pub m11: CMat,
    /// Largest entry of `M₁₁ − L·D·L*`.
    pub factorization_residual: f64,
    /// Lower bound `λ_min(D)·σ_min(L)²` of `M₁₁`.
    pub m11_lower: f64,
}

fn violated(block: &str, detail: impl Into<String>) -> Error {
    ModelsError::ConditionViolated {
        block: block.into(),
        detail: detail.into(),
    }
    .into()
}

fn spd(name: &str, m: &CMat) -> Result<f64, Error> {
    if m.nrows() != m.ncols() {
        return Err(violated(name, "not square"));
    }
    let scale = linalg::max_abs(m).max(1.0);
    if linalg::max_abs(&(m - m.adjoint())) > 1e-12 * scale {
        return Err(violated(name, "not self-adjoint"));
    }
    let lo = linalg::min_eig_herm(m).unwrap_or(0.0);
    if !(lo > 1e-12 * scale) {
        return Err(violated(
            name,
            format!("not strictly positive (λ_min = {lo:e})"),
        ));
    }
    Ok(lo)
}

fn shape(name: &str, m: &CMat, rows: usize, cols: usize) -> Result<(), Error> {
    if m.shape() != (rows, cols) {
        return Err(violated(
            name,
            format!("expected {rows}x{cols}, got {}x{}", m.nrows(), m.ncols()),
        ));
    }
    Ok(())
}

fn place(out: &mut CMat, offs: &[usize; 7], i: usize, j: usize, b: &CMat) {
    linalg::set_block(out, offs[i], offs[j], b);
}

/// Assembles `M(z) = diag(M₁₁, M₂₂(z))` with
/// `M₂₂(z) = q₀ + Σ_{n≥0} (−1)ⁿ zⁿ⁺¹ q₁(κ⁻¹α)ⁿκ⁻¹` truncated at `K`, checks the
/// chosen condition block by block and certifies the law.
pub fn build_thermopiezo_law(
    b: &ThermopiezoBlocks,
    condition: Condition,
) -> Result<ThermopiezoLaw, Error> {
    let [nv, nt, ne, nh, nth, nq] = b.sizes();
    for (name, m, r, c) in [
        ("rho0", &b.rho0, nv, nv),
        ("C", &b.c, nt, nt),
        ("eps", &b.eps, ne, ne),
        ("mu", &b.mu, nh, nh),
        ("alpha", &b.alpha, nth, nth),
        ("kappa", &b.kappa, nq, nq),
        ("q0", &b.q0, nq, nq),
        ("q1", &b.q1, nq, nq),
        ("d", &b.d, nt, ne),
        ("lambda", &b.lambda, nt, nth),
        ("p", &b.p, ne, nth),
    ] {
        shape(name, m, r, c)?;
    }
    if nth != nq {
        return Err(violated("alpha", "thermal blocks must share one size"));
    }
    spd("rho0", &b.rho0)?;
    spd("C", &b.c)?;
    spd("eps", &b.eps)?;
    spd("mu", &b.mu)?;
    spd("kappa", &b.kappa)?;
    let c_inv = linalg::inverse(&b.c).ok_or_else(|| violated("C", "singular"))?;
    let eps_inv = linalg::inverse(&b.eps).ok_or_else(|| violated("eps", "singular"))?;
    let k_inv = linalg::inverse(&b.kappa).ok_or_else(|| violated("kappa", "singular"))?;
    let schur = &b.alpha - b.p.adjoint() * &eps_inv * &b.p;
    spd("alpha - p* eps^-1 p", &schur)?;
    let q1k = &b.q1 * &k_inv;
    match condition {
        Condition::I => {
            spd("q0", &b.q0)?;
        }
        Condition::Ii => {
            spd("q1", &b.q1)?;
            if linalg::max_abs(&b.q0) != 0.0 {
                return Err(violated("q0", "must vanish under condition (ii)"));
            }
            let comm = linalg::max_abs(&(&q1k - &k_inv * &b.q1));
            if comm > 1e-12 * linalg::max_abs(&q1k).max(1.0) {
                return Err(violated(
                    "q1 kappa^-1",
                    format!("does not commute (defect {comm:e})"),
                ));
            }
        }
    }

    // M₁₁ and its congruence factors on (v, T, E, H, θ)
    let mut offs = [0usize; 7];
    for i in 0..6 {
        offs[i + 1] = offs[i] + b.sizes()[i];
    }
    let n11 = offs[5];
    let n = offs[6];
    let mut m11 = linalg::zeros(n11, n11);
    place(&mut m11, &offs, 0, 0, &b.rho0);
    place(&mut m11, &offs, 1, 1, &c_inv);
    place(&mut m11, &offs, 1, 2, &(&c_inv * &b.d));
    place(&mut m11, &offs, 1, 4, &(&c_inv * &b.lambda));
    place(&mut m11, &offs, 2, 1, &(b.d.adjoint() * &c_inv));
    place(
        &mut m11,
        &offs,
        2,
        2,
        &(&b.eps + b.d.adjoint() * &c_inv * &b.d),
    );
    place(
        &mut m11,
        &offs,
        2,
        4,
        &(&b.p + b.d.adjoint() * &c_inv * &b.lambda),
    );
    place(&mut m11, &offs, 3, 3, &b.mu);
    place(&mut m11, &offs, 4, 1, &(b.lambda.adjoint() * &c_inv));
    place(
        &mut m11,
        &offs,
        4,
        2,
        &(b.p.adjoint() + b.lambda.adjoint() * &c_inv * &b.d),
    );
    place(
        &mut m11,
        &offs,
        4,
        4,
        &(&b.alpha + b.lambda.adjoint() * &c_inv * &b.lambda),
    );

    let mut l = linalg::identity(n11);
    place(&mut l, &offs, 2, 1, &b.d.adjoint());
    place(&mut l, &offs, 4, 1, &b.lambda.adjoint());
    place(&mut l, &offs, 4, 2, &(b.p.adjoint() * &eps_inv));
    let mut dmat = linalg::zeros(n11, n11);
    for (i, blk) in [&b.rho0, &c_inv, &b.eps, &b.mu, &schur].iter().enumerate() {
        place(&mut dmat, &offs, i, i, blk);
    }
    let factorization_residual = linalg::max_abs(&(&l * &dmat * l.adjoint() - &m11));
    let d_lo = linalg::min_eig_herm(&linalg::hermitian_part(&dmat)).unwrap_or(0.0);
    let l_lo = linalg::min_singular(&l);
    let m11_lower = d_lo * l_lo * l_lo;

    // M₂₂ series
    let ka = &k_inv * &b.alpha;
    let ka_norm = linalg::spectral_norm(&ka);
    let radius = if ka_norm > 0.0 { 0.5 / ka_norm } else { 1.0 };
    let k = DEFAULT_K;
    let mut coeffs = Vec::with_capacity(k + 1);
    let mut pow = linalg::identity(nq);
    for j in 0..=k {
        let mut m = linalg::zeros(n, n);
        if j == 0 {
            linalg::set_block(&mut m, 0, 0, &m11);
            linalg::set_block(&mut m, n11, n11, &b.q0);
        } else {
            let sign = if (j - 1) % 2 == 0 { 1.0 } else { -1.0 };
            let term = &b.q1 * &pow * &k_inv * c64(sign, 0.0);
            linalg::set_block(&mut m, n11, n11, &term);
            pow = &pow * &ka;
        }
        coeffs.push(m);
    }
    // sup over |z| < ε of the untruncated law, padded for rounding in the norms
    let r = radius * ka_norm;
    let sup = (1.0 + 1e-12)
        * linalg::spectral_norm(&m11).max(
            linalg::spectral_norm(&b.q0)
                + linalg::spectral_norm(&b.q1) * linalg::spectral_norm(&k_inv) * radius / (1.0 - r),
        );
    let law = MaterialLaw::from_parts(None, coeffs, radius, Some(sup))?;

    let (c, d) = match condition {
        Condition::I => {
            let d = m11_lower.min(linalg::min_eig_herm(&b.q0).unwrap_or(0.0));
            (d, d)
        }
        Condition::Ii => {
            let c = linalg::min_eig_herm(&linalg::hermitian_part(&q1k)).unwrap_or(0.0);
            (c, m11_lower)
        }
    };
    let certificate = certify(&law, 0.999 * c, 0.999 * d)?;
    Ok(ThermopiezoLaw {
        law,
        certificate,
        condition,
        m11,
        factorization_residual,
        m11_lower,
    })
}
