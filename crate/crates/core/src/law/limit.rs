//! Coefficient-wise limits of law sequences.

use super::series::Laurent;
use super::{LawError, MaterialLaw};
use std::fmt;

/// How a limit was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitKind {
    /// Successive differences fell below the tolerance.
    Converged,
    /// Two-level Richardson extrapolation with an `O(1/n)` model stabilized.
    Extrapolated,
    /// Odd and even positions converge to different laws; the even one was kept.
    EvenSubsequence,
}

#[derive(Clone, Debug)]
pub struct SeriesLimit {
    pub law: MaterialLaw,
    pub kind: LimitKind,
    /// Last successive difference of the sequence actually used.
    pub last_step: f64,
    /// Distance of every input law to the limit, in input order.
    pub residuals: Vec<f64>,
}

/// Why a sequence has no detectable limit.
#[derive(Clone, Debug, PartialEq)]
pub enum Divergence {
    /// Odd and even positions converge separately.
    TwoClusters {
        odd: MaterialLaw,
        even: MaterialLaw,
        gap: f64,
    },
    /// Neither the sequence nor its parity subsequences settle.
    Unresolved {
        last_step: f64,
    },
    /// Laws do not share shape or truncation order.
    Mismatch(String),
    Empty,
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Divergence::TwoClusters { odd, even, gap } => write!(
                f,
                "two clusters (odd M(0)[0,0] = {}, even M(0)[0,0] = {}, gap {gap:e})",
                odd.coeff(0).get((0, 0)).copied().unwrap_or_default(),
                even.coeff(0).get((0, 0)).copied().unwrap_or_default(),
            ),
            Divergence::Unresolved { last_step } => {
                write!(f, "unresolved, last step {last_step:e}")
            }
            Divergence::Mismatch(m) => write!(f, "mismatched laws: {m}"),
            Divergence::Empty => write!(f, "empty sequence"),
        }
    }
}

fn no_conv(d: Divergence) -> LawError {
    LawError::NoConvergence(Box::new(d))
}

/// Limit of `laws` indexed by `n = 1, 2, …`.
pub fn series_limit(laws: &[MaterialLaw], probe_tol: f64) -> Result<SeriesLimit, LawError> {
    let ns: Vec<f64> = (1..=laws.len()).map(|n| n as f64).collect();
    series_limit_indexed(laws, &ns, probe_tol)
}

/// Limit of `laws` observed at the increasing indices `ns`.
///
/// The sequence is accepted when its last step is below `probe_tol`, or when
/// two consecutive Richardson estimates (rate `1/n`) agree to `probe_tol`.
/// Otherwise the odd and even positions are tested separately.
pub fn series_limit_indexed(
    laws: &[MaterialLaw],
    ns: &[f64],
    probe_tol: f64,
) -> Result<SeriesLimit, LawError> {
    let first = laws.first().ok_or_else(|| no_conv(Divergence::Empty))?;
    if ns.len() != laws.len() {
        return Err(no_conv(Divergence::Mismatch("index count".into())));
    }
    for l in laws {
        if l.rows() != first.rows() || l.cols() != first.cols() {
            return Err(no_conv(Divergence::Mismatch("shape".into())));
        }
        if l.truncation() != first.truncation() {
            return Err(no_conv(Divergence::Mismatch("truncation order".into())));
        }
    }
    let series: Vec<Laurent> = laws.iter().map(|l| l.to_laurent()).collect();
    let radius = laws
        .iter()
        .map(|l| l.radius())
        .fold(f64::INFINITY, f64::min);
    let k = first.truncation();
    let finish = |s: &Laurent, kind: LimitKind, last_step: f64| -> Result<SeriesLimit, LawError> {
        let mut law = MaterialLaw::from_laurent(s, radius, k)?;
        if laws
            .iter()
            .all(|l| l.sup_source() == super::SupSource::Declared)
        {
            // the norm is weakly lower semicontinuous, so the largest input bound is valid
            let sup = laws.iter().map(|l| l.sup_bound()).fold(0.0, f64::max);
            if let Ok(d) = law.clone().with_sup_bound(sup) {
                law = d;
            }
        }
        let residuals = laws.iter().map(|l| l.max_coeff_diff(&law)).collect();
        Ok(SeriesLimit {
            law,
            kind,
            last_step,
            residuals,
        })
    };

    if series.len() == 1 {
        return finish(&series[0], LimitKind::Converged, 0.0);
    }
    let step = |a: &Laurent, b: &Laurent| a.sub(b).max_abs();
    let n = series.len();
    let last_step = step(&series[n - 1], &series[n - 2]);
    if last_step <= probe_tol {
        return finish(&series[n - 1], LimitKind::Converged, last_step);
    }
    if n >= 3 {
        let rich = |i: usize| -> Laurent {
            // (n_i a_i − n_{i−1} a_{i−1}) / (n_i − n_{i−1})
            let (a, b) = (ns[i], ns[i - 1]);
            series[i]
                .scale((a / (a - b)).into())
                .axpy(&series[i - 1], (-b / (a - b)).into())
        };
        let r1 = rich(n - 1);
        let r0 = rich(n - 2);
        let s = step(&r1, &r0);
        if s <= probe_tol {
            return finish(&r1, LimitKind::Extrapolated, s);
        }
    }
    if n >= 4 {
        // positions are 1-based: even positions are indices 1, 3, 5, …
        let last_of = |parity: usize| -> (usize, usize) {
            let idx: Vec<usize> = (0..n).filter(|i| (i + 1) % 2 == parity).collect();
            (idx[idx.len() - 1], idx[idx.len() - 2])
        };
        let (e1, e0) = last_of(0);
        let (o1, o0) = last_of(1);
        let even_step = step(&series[e1], &series[e0]);
        let odd_step = step(&series[o1], &series[o0]);
        if even_step <= probe_tol && odd_step <= probe_tol {
            let gap = step(&series[e1], &series[o1]);
            let odd = MaterialLaw::from_laurent(&series[o1], radius, k)?;
            let even = MaterialLaw::from_laurent(&series[e1], radius, k)?;
            return Err(no_conv(Divergence::TwoClusters { odd, even, gap }));
        }
    }
    Err(no_conv(Divergence::Unresolved { last_step }))
}

/// Like `series_limit_indexed`, but returns the even-position limit when the
/// sequence splits into two clusters.
pub fn limit_or_even(
    laws: &[MaterialLaw],
    ns: &[f64],
    probe_tol: f64,
) -> Result<SeriesLimit, LawError> {
    match series_limit_indexed(laws, ns, probe_tol) {
        Err(LawError::NoConvergence(d)) => match *d {
            Divergence::TwoClusters { even, .. } => {
                let evens: Vec<MaterialLaw> = laws.iter().skip(1).step_by(2).cloned().collect();
                let residuals = evens.iter().map(|l| l.max_coeff_diff(&even)).collect();
                let last_step = evens
                    .windows(2)
                    .last()
                    .map(|w| w[1].max_coeff_diff(&w[0]))
                    .unwrap_or(0.0);
                Ok(SeriesLimit {
                    law: even,
                    kind: LimitKind::EvenSubsequence,
                    last_step,
                    residuals,
                })
            }
            other => Err(LawError::NoConvergence(Box::new(other))),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, identity, CMat};

    fn scalar_law(v: f64) -> MaterialLaw {
        MaterialLaw::constant(CMat::from_element(1, 1, c64(v, 0.0)), 1.0).unwrap()
    }

    #[test]
    fn constant_sequence() {
        let laws = vec![scalar_law(3.0); 4];
        let l = series_limit(&laws, 1e-12).unwrap();
        assert_eq!(l.kind, LimitKind::Converged);
        assert_eq!(l.law.coeff(0)[(0, 0)], c64(3.0, 0.0));
    }

    #[test]
    fn one_over_n_extrapolates_exactly() {
        let laws: Vec<MaterialLaw> = (1..=6)
            .map(|n| {
                MaterialLaw::constant(identity(2) * c64(1.0 + 1.0 / n as f64, 0.0), 1.0).unwrap()
            })
            .collect();
        let l = series_limit(&laws, 1e-12).unwrap();
        assert_eq!(l.kind, LimitKind::Extrapolated);
        assert!(crate::linalg::max_abs(&(l.law.coeff(0) - identity(2))) < 1e-13);
    }

    #[test]
    fn alternating_reports_two_clusters() {
        let laws: Vec<MaterialLaw> = (1..=8)
            .map(|n| scalar_law(if n % 2 == 1 { 1.0 } else { 2.0 }))
            .collect();
        match series_limit(&laws, 1e-12) {
            Err(LawError::NoConvergence(d)) => match *d {
                Divergence::TwoClusters { odd, even, gap } => {
                    assert_eq!(odd.coeff(0)[(0, 0)], c64(1.0, 0.0));
                    assert_eq!(even.coeff(0)[(0, 0)], c64(2.0, 0.0));
                    assert_eq!(gap, 1.0);
                }
                other => panic!("unexpected {other:?}"),
            },
            other => panic!("unexpected {other:?}"),
        }
        let ns: Vec<f64> = (1..=8).map(|n| n as f64).collect();
        let l = limit_or_even(&laws, &ns, 1e-12).unwrap();
        assert_eq!(l.kind, LimitKind::EvenSubsequence);
        assert_eq!(l.law.coeff(0)[(0, 0)], c64(2.0, 0.0));
    }

    #[test]
    fn three_values_do_not_converge() {
        let laws: Vec<MaterialLaw> = (0..9).map(|n| scalar_law((n % 3) as f64)).collect();
        assert!(matches!(
            series_limit(&laws, 1e-12),
            Err(LawError::NoConvergence(d)) if matches!(*d, Divergence::Unresolved { .. })
        ));
    }

    #[test]
    fn eventually_constant_is_exact() {
        let mut laws: Vec<MaterialLaw> = (1..=3).map(|n| scalar_law(n as f64 * 0.7)).collect();
        laws.extend(std::iter::repeat(scalar_law(5.0)).take(3));
        let l = series_limit(&laws, 0.0).unwrap();
        assert_eq!(l.law, scalar_law(5.0));
    }
}
