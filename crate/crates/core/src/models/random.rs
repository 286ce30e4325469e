//! Seeded random laws that satisfy the standing hypotheses by construction.

use crate::evolve::{DenseSystem, EvolutionProblem, TimeGrid};
use crate::law::{certify, MaterialLaw, PositivityCertificate};
use crate::linalg::{self, c64, CMat};
use crate::Error;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn gaussian(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| {
        c64(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

/// Random unitary from the QR of a square sample.
pub fn random_unitary(rng: &mut ChaCha8Rng, n: usize) -> CMat {
    if n == 0 {
        return linalg::zeros(0, 0);
    }
    gaussian(rng, n, n).qr().q()
}

/// Hermitian with spectrum in `[lo, hi]`.
pub fn random_hermitian(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> CMat {
    let u = random_unitary(rng, n);
    let d: Vec<f64> = (0..n).map(|_| rng.gen_range(lo..=hi)).collect();
    &u * linalg::diag_real(&d) * u.adjoint()
}

/// Skew-Hermitian with entries of size about `scale`.
pub fn random_skew(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> CMat {
    let g = gaussian(rng, n, n) * c64(scale, 0.0);
    (&g - g.adjoint()) * c64(0.5, 0.0)
}

/// A law with its zero-order constants.
#[derive(Clone, Debug)]
pub struct RandomLaw {
    pub law: MaterialLaw,
    /// Lower bound of `Re M′(0)` on `N(M(0))`, or a free positive value.
    pub c: f64,
    /// Lower bound of `M(0)` on its range, or a free positive value.
    pub d: f64,
}

/// `dim × dim` law with `rank M(0) = rank`, `M(0)` spectrum in `[d, 2d]`
/// on its range, `Re M′(0)` at least `c` on the null space and three
/// further coefficients decaying like `(1/ε)^k`.
pub fn random_certified_law(dim: usize, rank: usize, seed: u64) -> Result<RandomLaw, Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rank = rank.min(dim);
    let eps: f64 = rng.gen_range(0.5..2.0);
    let d = rng.gen_range(0.5..2.0);
    let c = rng.gen_range(0.5..2.0);
    let u = random_unitary(&mut rng, dim);
    let mut spec = vec![0.0; dim];
    for v in spec.iter_mut().take(rank) {
        *v = rng.gen_range(d..=2.0 * d);
    }
    let m0 = &u * linalg::diag_real(&spec) * u.adjoint();
    // Re M′(0) ≥ c everywhere, plus a skew part
    let m1 = random_hermitian(&mut rng, dim, c, 2.0 * c) + random_skew(&mut rng, dim, 0.5);
    let mut coeffs = vec![m0, m1];
    for k in 2..=4 {
        let g = gaussian(&mut rng, dim, dim) * c64(0.3 / eps.powi(k) / dim as f64, 0.0);
        coeffs.push(g);
    }
    let law = MaterialLaw::new(coeffs, eps)?;
    Ok(RandomLaw { law, c, d })
}

/// `len` laws alternating between two members with common `R(M(0))`,
/// split `H₁ ⊕ H₂` with `G`-dimensions `sizes = [g1, g2, g3, g4]`, and a
/// skew `A` on `H₁`. `M(0)` couples `G₁` and `G₃`; `M′(0)` is Hermitian
/// and positive definite, which makes the compatibility residual vanish.
pub fn periodic_coupled_sequence(
    sizes: [usize; 4],
    len: usize,
    seed: u64,
) -> Result<(Vec<MaterialLaw>, CMat), Error> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [g1, g2, g3, g4] = sizes;
    let (p, n) = (g1 + g2, g1 + g2 + g3 + g4);
    let range_idx: Vec<usize> = (0..g1).chain(p..p + g3).collect();
    let members: Vec<MaterialLaw> = (0..2)
        .map(|_| {
            let r = range_idx.len();
            let core = random_hermitian(&mut rng, r, 0.5, 2.0);
            let mut m0 = linalg::zeros(n, n);
            for (a, &i) in range_idx.iter().enumerate() {
                for (b, &j) in range_idx.iter().enumerate() {
                    m0[(i, j)] = core[(a, b)];
                }
            }
            let m1 = random_hermitian(&mut rng, n, 0.5, 2.0);
            let m2 = gaussian(&mut rng, n, n) * c64(0.1 / n as f64, 0.0);
            MaterialLaw::new(vec![m0, m1, m2], 1.0)
        })
        .collect::<Result<_, _>>()?;
    let laws = (0..len).map(|i| members[i % 2].clone()).collect();
    Ok((laws, random_skew(&mut rng, p, 1.0)))
}

/// A dense evolution problem built on a [`random_certified_law`].
#[derive(Clone, Debug)]
pub struct RandomProblem {
    pub problem: EvolutionProblem,
    pub law: RandomLaw,
    pub certificate: PositivityCertificate,
    /// Center of the forcing pulse, a natural causality cut.
    pub center: f64,
}

/// Skew `A`, the certificate's default weight `ν`, `rank M(0) ≥ 1` and
/// forcing `φ·exp(−t²/w²)` with `φ ∈ R(M(0))` and `w = 1/ν`, so the weighted
/// forcing carries frequencies of order `ν`. The window `[−8w, 8w + 24/ν]`
/// leaves the wrap-around below `e^{−24}`.
pub fn random_certified_problem(dim: usize, seed: u64) -> Result<RandomProblem, Error> {
    let law = random_certified_law(dim, 1 + (seed as usize) % dim.max(1), seed)?;
    let certificate = certify(&law.law, law.c, law.d)?;
    let nu = certificate.default_nu();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let a = random_skew(&mut rng, dim, 1.0);
    // a purely algebraic response would be the same in both time directions
    let phi = law.law.coeff(0) * gaussian(&mut rng, dim, 1);
    let profile: Vec<_> = phi.iter().map(|z| z / phi.norm()).collect();
    let w = 1.0 / nu;
    let (lo, hi) = (-8.0 * w, 8.0 * w + 24.0 / nu);
    let samples = 2 * ((32.0 * (hi - lo) / w).ceil() as usize / 2) + 1;
    let grid = TimeGrid::new(lo, hi, samples.max(401))?;
    let f = EvolutionProblem::separable_forcing(&grid, &profile, |t| (-(t / w) * (t / w)).exp());
    let sys = DenseSystem::new(a, law.law.clone())?;
    let problem = EvolutionProblem::new(Arc::new(sys), grid, nu, f, Some(certificate.clone()))?;
    Ok(RandomProblem {
        problem,
        law,
        certificate,
        center: 0.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolve::{check_causality, check_causality_with, solve, Direction};

    #[test]
    fn generated_laws_certify() {
        for seed in 0..10 {
            let r = random_certified_law(4, (seed % 5) as usize, seed).unwrap();
            let rep = r.law.check_zero_order(1e-10).unwrap();
            if let Some(d) = rep.d {
                assert!(d >= r.d * (1.0 - 1e-9));
            }
            if let Some(c) = rep.c_prime {
                assert!(c >= r.c * (1.0 - 1e-9));
            }
            certify(&r.law, r.c, r.d).unwrap();
        }
    }

    #[test]
    fn deterministic() {
        let a = random_certified_law(3, 1, 7).unwrap();
        let b = random_certified_law(3, 1, 7).unwrap();
        assert_eq!(a.law, b.law);
        let (l1, a1) = periodic_coupled_sequence([1, 1, 1, 1], 4, 3).unwrap();
        let (l2, a2) = periodic_coupled_sequence([1, 1, 1, 1], 4, 3).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(a1, a2);
        assert_eq!(l1[0], l1[2]);
        assert_ne!(l1[0], l1[1]);
    }

    #[test]
    fn random_problems_are_admissible() {
        for seed in 0..4 {
            let rp = random_certified_problem(3, seed).unwrap();
            let rep = solve(&rp.problem).unwrap();
            assert!(rep.op_norm_est <= 1.0 / rp.certificate.c_out);
            assert!(check_causality(&rp.problem, rp.center).unwrap() < 1e-7);
            let anti = check_causality_with(&rp.problem, rp.center, Direction::AntiCausal).unwrap();
            assert!(anti > 0.1, "seed {seed}: {anti:e}");
        }
    }
}
