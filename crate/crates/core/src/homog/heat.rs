//! The 1-D heat limit system.
//!
//! On a uniform grid of cell centers the flux space splits into constants
//! (`Q`, the kernel of the discrete divergence) and mean-free functions
//! (`P`, the range of the gradient). Weak limits in `P` are observed through
//! low DCT modes.

use super::{dct_probes, harmonic_mean, HomogError, PeriodicField};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_HEAT_PROBES: usize = 8;

/// Blocks of the limit system at one oscillation scale `n`, seen through
/// the probe modes.
#[derive(Clone, Debug, Serialize)]
pub struct HeatLevel {
    pub n: usize,
    /// `Qκₙ⁻¹Q*`, the mean of `1/κₙ`.
    pub q_block: f64,
    /// `Φ*Pκₙ⁻¹Q*`, one entry per probe.
    pub coupling: Vec<f64>,
    /// Frobenius norm of `Φ*Pκₙ⁻¹Q*(Qκₙ⁻¹Q*)⁻¹Qκₙ⁻¹P*Φ`.
    pub correction_norm: f64,
    /// Same correction on the whole grid, without probing.
    pub raw_correction_norm: f64,
    /// `‖Φ*Pκₙ⁻¹P*Φ − correction − (Qκₙ⁻¹Q*)·I‖_F`.
    pub eta_defect: f64,
    /// `(tr η₁/m)⁻¹`.
    pub k_n: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct HeatLimitSystem {
    pub grid: usize,
    pub probes: usize,
    pub levels: Vec<HeatLevel>,
    /// Extrapolated effective coefficient on `R(grad₀)`.
    pub k_eff: f64,
    /// Rate used for the extrapolation.
    pub rate: f64,
    /// `⟨κ⁻¹⟩⁻¹`, computed from the cell pieces.
    pub harmonic: f64,
    /// `η₁` on the probe space at the finest level.
    #[serde(skip)]
    pub eta1: DMatrix<f64>,
}

impl HeatLimitSystem {
    /// Ratios of successive correction norms.
    pub fn correction_decay(&self) -> Vec<f64> {
        self.levels
            .windows(2)
            .map(|w| w[0].correction_norm / w[1].correction_norm)
            .collect()
    }

    /// Three-block limit system `(θ, Pq, Qq)`: the temperature block, the
    /// effective `P`-block and the `Q`-block, at the finest level.
    pub fn blocks(&self) -> (f64, f64, f64) {
        let last = self.levels.last().expect("non-empty ladder");
        (1.0, self.k_eff, 1.0 / last.q_block)
    }
}

fn level(k_inv: &[f64], probes: &DMatrix<f64>, n: usize) -> HeatLevel {
    let grid = k_inv.len();
    let nf = grid as f64;
    let m = probes.ncols();
    let w = DVector::from_column_slice(k_inv);
    let mean_inv = w.sum() / nf;
    let mut weighted = probes.clone();
    for (j, mut row) in weighted.row_iter_mut().enumerate() {
        row *= k_inv[j];
    }
    let e = probes.transpose() * &weighted;
    let g = probes.transpose() * &w / nf.sqrt();
    let correction = &g * g.transpose() / mean_inv;
    let eta1 = &e - &correction;
    let k_n = m as f64 / eta1.trace();
    let raw = (w.iter().map(|x| x * x).sum::<f64>() / nf - mean_inv * mean_inv) / mean_inv;
    let eta_defect = (&eta1 - DMatrix::<f64>::identity(m, m) * mean_inv).norm();
    HeatLevel {
        n,
        q_block: mean_inv,
        coupling: g.iter().copied().collect(),
        correction_norm: correction.norm(),
        raw_correction_norm: raw.abs(),
        eta_defect,
        k_n,
    }
}

/// Effective second-order coefficient of the heat system with conductivity
/// `κ(n·)` along `ladder`, from `m` DCT probe modes of `R(grad₀)`.
///
/// The last three levels fix the extrapolation rate (clamped to `[1, 4]`);
/// with two levels the rate is 1.
pub fn heat_limit_system(
    kappa: &PeriodicField,
    grid: usize,
    ladder: &[usize],
    m: usize,
) -> Result<HeatLimitSystem, HomogError> {
    if kappa.dim() != 1 || !kappa.is_spd() {
        return Err(HomogError::BadField(
            "conductivity must be a positive scalar field".into(),
        ));
    }
    if kappa.pieces().iter().any(|p| p[(0, 0)].im != 0.0) {
        return Err(HomogError::BadField("conductivity must be real".into()));
    }
    if ladder.is_empty() || m == 0 || m >= grid {
        return Err(HomogError::BadField("empty ladder or probe set".into()));
    }
    let probes = dct_probes(grid, 1, m).map(|c| c.re);
    let inv = kappa.inverse()?;
    let levels = ladder
        .par_iter()
        .map(|&n| {
            let k_inv: Vec<f64> = inv.sample_scalar(grid, n)?.iter().map(|v| v.re).collect();
            Ok(level(&k_inv, &probes, n))
        })
        .collect::<Result<Vec<_>, HomogError>>()?;
    let last_n = *ladder.last().unwrap();
    let k_inv: Vec<f64> = inv
        .sample_scalar(grid, last_n)?
        .iter()
        .map(|v| v.re)
        .collect();
    let eta1 = {
        let mut weighted = probes.clone();
        for (j, mut row) in weighted.row_iter_mut().enumerate() {
            row *= k_inv[j];
        }
        let g = probes.transpose() * DVector::from_column_slice(&k_inv) / (grid as f64).sqrt();
        let mean_inv = k_inv.iter().sum::<f64>() / grid as f64;
        probes.transpose() * weighted - &g * g.transpose() / mean_inv
    };
    let (k_eff, rate) = extrapolate(&levels);
    Ok(HeatLimitSystem {
        grid,
        probes: m,
        levels,
        k_eff,
        rate,
        harmonic: harmonic_mean(kappa)?[(0, 0)].re,
        eta1,
    })
}

fn extrapolate(levels: &[HeatLevel]) -> (f64, f64) {
    let l = levels.len();
    let last = levels[l - 1].k_n;
    if l < 2 {
        return (last, 1.0);
    }
    let ratio = levels[l - 1].n as f64 / levels[l - 2].n as f64;
    let d2 = last - levels[l - 2].k_n;
    if d2.abs() <= 1e-14 * last.abs() || ratio <= 1.0 {
        return (last, 1.0);
    }
    let rate = if l >= 3 {
        let d1 = levels[l - 2].k_n - levels[l - 3].k_n;
        if d1 != 0.0 {
            ((d1 / d2).abs().ln() / ratio.ln()).clamp(1.0, 4.0)
        } else {
            1.0
        }
    } else {
        1.0
    };
    (last + d2 / (ratio.powf(rate) - 1.0), rate)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LADDER: [usize; 5] = [4, 8, 16, 32, 64];

    #[test]
    fn constant_conductivity_is_exact() {
        let k = PeriodicField::constant(2.5).unwrap();
        let sys = heat_limit_system(&k, 256, &LADDER, 8).unwrap();
        for l in &sys.levels {
            assert!((l.k_n - 2.5).abs() < 1e-13);
            assert!(l.correction_norm < 1e-15);
        }
        assert!((sys.k_eff - 2.5).abs() < 1e-13);
    }

    #[test]
    fn two_phase_tends_to_harmonic_mean() {
        let k = PeriodicField::two_phase(1.0, 2.0).unwrap();
        let sys = heat_limit_system(&k, 1024, &LADDER, 8).unwrap();
        assert!((sys.harmonic - 4.0 / 3.0).abs() < 1e-15);
        assert!((sys.k_eff - 4.0 / 3.0).abs() < 10.0 * (1.0 / 64.0 + 1.0 / 1024.0));
        assert!((sys.k_eff - 4.0 / 3.0).abs() < 1e-2);
        let k = PeriodicField::two_phase(1.0, 4.0).unwrap();
        let sys = heat_limit_system(&k, 1024, &LADDER, 8).unwrap();
        assert!((sys.k_eff - 1.6).abs() < 1e-2);
    }

    #[test]
    fn correction_decays_along_the_ladder() {
        let k = PeriodicField::two_phase(1.0, 2.0).unwrap();
        let sys = heat_limit_system(&k, 1024, &LADDER, 8).unwrap();
        for r in sys.correction_decay() {
            assert!(r >= 1.5, "{r}");
        }
        let raw: Vec<f64> = sys.levels.iter().map(|l| l.raw_correction_norm).collect();
        assert!(raw.windows(2).all(|w| (w[0] - w[1]).abs() < 1e-14));
    }

    #[test]
    fn misaligned_grid_is_rejected() {
        let k = PeriodicField::two_phase(1.0, 2.0).unwrap();
        assert!(matches!(
            heat_limit_system(&k, 100, &[64], 4),
            Err(HomogError::AliasError { .. })
        ));
    }
}
