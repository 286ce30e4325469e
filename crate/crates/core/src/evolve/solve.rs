use super::{EvolutionProblem, EvolveError, TimeGrid, TOP_BAND_TOL};
use crate::linalg::{c64, CMat, C64};
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;

/// Which half-line the solution operator integrates over.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Causal,
    /// Conjugated symbols: integrates from the future. Only a negative control.
    AntiCausal,
}

#[derive(Clone, Copy, Debug)]
pub struct SolveOptions {
    pub direction: Direction,
    /// Truncation time of the built-in causality check; `None` skips it.
    pub causality_at: Option<f64>,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            direction: Direction::Causal,
            causality_at: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SolutionReport {
    pub times: Vec<f64>,
    #[serde(skip)]
    pub u: CMat,
    pub nu: f64,
    /// Largest `‖S_k⁻¹‖` over the bins; the ratio of weighted norms when the
    /// system does not report singular values.
    pub op_norm_est: f64,
    pub causal_residual: Option<f64>,
    /// Largest condition number over the bins, when available.
    pub frequency_conditioning: Option<f64>,
    /// Largest relative residual of the per-bin solves.
    pub frequency_residual: f64,
    /// Weighted solution at the last sample relative to its peak.
    pub wraparound: f64,
    pub weighted_norm_u: f64,
    pub weighted_norm_f: f64,
}

fn fft_rows(x: &mut CMat, inverse: bool) {
    let (rows, n) = x.shape();
    let fft = {
        let mut planner = FftPlanner::<f64>::new();
        if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        }
    };
    let mut buf: Vec<Vec<C64>> = (0..rows)
        .map(|i| x.row(i).iter().copied().collect())
        .collect();
    buf.par_iter_mut().for_each(|row| fft.process(row));
    let scale = if inverse { 1.0 / n as f64 } else { 1.0 };
    for (i, row) in buf.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            x[(i, j)] = v * scale;
        }
    }
}

fn top_band_fraction(g_hat: &CMat) -> f64 {
    let t = g_hat.ncols();
    let cut = 0.45 * t as f64;
    let mut top = 0.0;
    let mut total = 0.0;
    for k in 0..t {
        let e = g_hat.column(k).norm_squared();
        total += e;
        if (k.min(t - k) as f64) >= cut {
            top += e;
        }
    }
    if total > 0.0 {
        top / total
    } else {
        0.0
    }
}

fn symbol(grid: &TimeGrid, nu: f64, k: usize, dir: Direction) -> C64 {
    let s = grid.symbol(nu, k);
    match dir {
        Direction::Causal => s,
        Direction::AntiCausal => s.conj(),
    }
}

type Solved = (CMat, f64, Option<f64>, Option<f64>, f64);

// The band check is skipped for forcings cut off at a causality time: the cut
// is a deliberate jump. Only reported solves need the per-bin diagnostics.
fn core_solve(
    p: &EvolutionProblem,
    f: &CMat,
    dir: Direction,
    check_band: bool,
    diagnose: bool,
) -> Result<Solved, EvolveError> {
    let grid = &p.grid;
    let t = grid.samples;
    let weights: Vec<f64> = (0..t).map(|j| (-p.nu * grid.time(j)).exp()).collect();
    let mut g = f.clone();
    for (j, w) in weights.iter().enumerate() {
        g.column_mut(j).scale_mut(*w);
    }
    fft_rows(&mut g, false);
    let energy = top_band_fraction(&g);
    if check_band && energy > TOP_BAND_TOL {
        return Err(EvolveError::GridTooCoarse { energy });
    }
    let bins = (0..t)
        .into_par_iter()
        .map(|k| {
            let b: Vec<C64> = g.column(k).iter().copied().collect();
            if b.iter().all(|v| *v == c64(0.0, 0.0)) {
                return Ok(None);
            }
            p.system
                .solve_bin(symbol(grid, p.nu, k, dir), &b, diagnose)
                .map(Some)
        })
        .collect::<Result<Vec<_>, EvolveError>>()?;
    let dim = p.system.dim();
    let mut u_hat = CMat::zeros(dim, t);
    let mut inv_norm: Option<f64> = None;
    let mut cond: Option<f64> = None;
    let mut resid: f64 = 0.0;
    for (k, bin) in bins.into_iter().enumerate() {
        if let Some(b) = bin {
            for (i, v) in b.x.iter().enumerate() {
                u_hat[(i, k)] = *v;
            }
            resid = resid.max(b.residual);
            if let Some(n) = b.inverse_norm {
                inv_norm = Some(inv_norm.map_or(n, |m| m.max(n)));
            }
            if let Some(c) = b.condition {
                cond = Some(cond.map_or(c, |m| m.max(c)));
            }
        }
    }
    fft_rows(&mut u_hat, true);
    let peak = (0..t).map(|j| u_hat.column(j).norm()).fold(0.0, f64::max);
    let wrap = if peak > 0.0 {
        u_hat.column(t - 1).norm() / peak
    } else {
        0.0
    };
    for (j, w) in weights.iter().enumerate() {
        u_hat.column_mut(j).scale_mut(1.0 / w);
    }
    Ok((u_hat, resid, inv_norm, cond, wrap))
}

pub fn solve(p: &EvolutionProblem) -> Result<SolutionReport, EvolveError> {
    let mid = 0.5 * (p.grid.t0 + p.grid.t1);
    solve_with(
        p,
        &SolveOptions {
            causality_at: Some(mid),
            ..Default::default()
        },
    )
}

pub fn solve_with(
    p: &EvolutionProblem,
    opts: &SolveOptions,
) -> Result<SolutionReport, EvolveError> {
    let (u, frequency_residual, inv_norm, frequency_conditioning, wraparound) =
        core_solve(p, &p.forcing, opts.direction, true, true)?;
    let end = f64::INFINITY;
    let weighted_norm_u = p.grid.weighted_norm(&u, p.nu, end);
    let weighted_norm_f = p.grid.weighted_norm(&p.forcing, p.nu, end);
    let op_norm_est = inv_norm.unwrap_or(if weighted_norm_f > 0.0 {
        weighted_norm_u / weighted_norm_f
    } else {
        0.0
    });
    let causal_residual = match opts.causality_at {
        Some(a) => Some(causality_residual(p, &u, a, opts.direction)?),
        None => None,
    };
    Ok(SolutionReport {
        times: p.grid.times(),
        u,
        nu: p.nu,
        op_norm_est,
        causal_residual,
        frequency_conditioning,
        frequency_residual,
        wraparound,
        weighted_norm_u,
        weighted_norm_f,
    })
}

fn causality_residual(
    p: &EvolutionProblem,
    u: &CMat,
    a: f64,
    dir: Direction,
) -> Result<f64, EvolveError> {
    let mut cut = p.forcing.clone();
    for j in 0..p.grid.samples {
        if p.grid.time(j) >= a {
            cut.column_mut(j).fill(c64(0.0, 0.0));
        }
    }
    let (v, ..) = core_solve(p, &cut, dir, false, false)?;
    let scale = p.grid.weighted_norm(u, p.nu, f64::INFINITY);
    let diff = p.grid.weighted_norm(&(u - v), p.nu, a);
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

/// Weighted norm on `t < a` of the change caused by cutting the forcing at
/// `a`, relative to the weighted norm of the full solution.
pub fn check_causality(p: &EvolutionProblem, a: f64) -> Result<f64, EvolveError> {
    check_causality_with(p, a, Direction::Causal)
}

pub fn check_causality_with(
    p: &EvolutionProblem,
    a: f64,
    dir: Direction,
) -> Result<f64, EvolveError> {
    let (u, ..) = core_solve(p, &p.forcing, dir, true, false)?;
    causality_residual(p, &u, a, dir)
}
