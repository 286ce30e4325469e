//! Solution export.
//!
//! EVH1 layout, all little-endian: the 4 bytes `EVH1`, `u64` component count,
//! `u64` sample count, `f64` t₀, `f64` Δt, then for every sample the components
//! as `(re, im)` pairs of `f64`.

use super::{EvolveError, SolutionReport};
use crate::json::sig6;
use crate::linalg::{c64, CMat};
use std::io::{Read, Write};

pub const EVH1_MAGIC: &[u8; 4] = b"EVH1";

/// Rows `t, component, re, im`.
pub fn write_csv<W: Write>(report: &SolutionReport, w: W) -> Result<(), EvolveError> {
    let io = |e: csv::Error| EvolveError::Io(e.to_string());
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(["t", "component", "re", "im"])
        .map_err(io)?;
    for (j, t) in report.times.iter().enumerate() {
        for i in 0..report.u.nrows() {
            let v = report.u[(i, j)];
            wr.write_record(&[sig6(*t), i.to_string(), sig6(v.re), sig6(v.im)])
                .map_err(io)?;
        }
    }
    wr.flush().map_err(|e| EvolveError::Io(e.to_string()))
}

pub fn write_evh1<W: Write>(report: &SolutionReport, mut w: W) -> Result<(), EvolveError> {
    let io = |e: std::io::Error| EvolveError::Io(e.to_string());
    let (dim, samples) = report.u.shape();
    let t0 = report.times.first().copied().unwrap_or(0.0);
    let dt = if samples > 1 {
        report.times[1] - report.times[0]
    } else {
        0.0
    };
    let mut buf = Vec::with_capacity(36 + 16 * dim * samples);
    buf.extend_from_slice(EVH1_MAGIC);
    buf.extend_from_slice(&(dim as u64).to_le_bytes());
    buf.extend_from_slice(&(samples as u64).to_le_bytes());
    buf.extend_from_slice(&t0.to_le_bytes());
    buf.extend_from_slice(&dt.to_le_bytes());
    for j in 0..samples {
        for i in 0..dim {
            let v = report.u[(i, j)];
            buf.extend_from_slice(&v.re.to_le_bytes());
            buf.extend_from_slice(&v.im.to_le_bytes());
        }
    }
    w.write_all(&buf).map_err(io)
}

/// `(t₀, Δt, u)` from an EVH1 stream.
pub fn read_evh1<R: Read>(mut r: R) -> Result<(f64, f64, CMat), EvolveError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)
        .map_err(|e| EvolveError::Io(e.to_string()))?;
    let bad = || EvolveError::Io("not an EVH1 stream".into());
    if bytes.len() < 36 || &bytes[..4] != EVH1_MAGIC {
        return Err(bad());
    }
    let u64_at = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let dim = u64_at(4) as usize;
    let samples = u64_at(12) as usize;
    if bytes.len() != 36 + 16 * dim * samples {
        return Err(bad());
    }
    let (t0, dt) = (f64_at(20), f64_at(28));
    let u = CMat::from_fn(dim, samples, |i, j| {
        let o = 36 + 16 * (j * dim + i);
        c64(f64_at(o), f64_at(o + 8))
    });
    Ok((t0, dt, u))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report() -> SolutionReport {
        SolutionReport {
            times: vec![0.0, 0.5, 1.0],
            u: CMat::from_fn(2, 3, |i, j| c64(i as f64 + 0.25, -(j as f64) / 3.0)),
            nu: 1.0,
            op_norm_est: 1.0,
            causal_residual: None,
            frequency_conditioning: None,
            frequency_residual: 0.0,
            wraparound: 0.0,
            weighted_norm_u: 0.0,
            weighted_norm_f: 0.0,
        }
    }

    #[test]
    fn evh1_roundtrip() {
        let r = report();
        let mut buf = Vec::new();
        write_evh1(&r, &mut buf).unwrap();
        assert_eq!(&buf[..4], b"EVH1");
        let (t0, dt, u) = read_evh1(&buf[..]).unwrap();
        assert_eq!((t0, dt), (0.0, 0.5));
        assert_eq!(u, r.u);
        assert!(read_evh1(&buf[..20]).is_err());
    }

    #[test]
    fn csv_rows() {
        let mut buf = Vec::new();
        write_csv(&report(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t,component,re,im");
        assert_eq!(lines.len(), 1 + 6);
        assert!(
            lines[1].starts_with("0.00000e0,0,2.50000e-1"),
            "{}",
            lines[1]
        );
    }
}
