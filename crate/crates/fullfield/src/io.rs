//! Bit-exact persistence: binary field files, PGM image exports and CSV
//! convergence logs.
//!
//! Field files carry one text header line `FF2D <N> <a> <units>` followed by
//! `N*N` little-endian f64 values, row-major with the second index fastest.
//! Floats in text formats use enough digits to re-parse exactly.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::inversion::ConvergenceLog;
use crate::wave::ScalarField;

/// Writes the field with a self-describing header; the payload round-trips
/// bit for bit.
pub fn write_field(f: &ScalarField, path: &Path) -> Result<()> {
    let grid = f.grid();
    let mut bytes = format!("FF2D {} {} au\n", grid.n(), grid.half_width()).into_bytes();
    bytes.reserve(8 * f.values().len());
    for v in f.values() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<ScalarField> {
    let bytes = fs::read(path)?;
    let newline = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| Error::MalformedHeader("no header line".into()))?;
    let header = std::str::from_utf8(&bytes[..newline])
        .map_err(|_| Error::MalformedHeader("header is not UTF-8".into()))?;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("FF2D") {
        return Err(Error::MalformedHeader(format!("bad magic in '{header}'")));
    }
    let n: usize = tokens
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::MalformedHeader(format!("bad sample count in '{header}'")))?;
    let a: f64 = tokens
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| Error::MalformedHeader(format!("bad half-width in '{header}'")))?;
    if tokens.next().is_none() {
        return Err(Error::MalformedHeader(format!("missing units in '{header}'")));
    }

    let payload = &bytes[newline + 1..];
    let expected = 8 * n * n;
    if payload.len() < expected {
        return Err(Error::TruncatedPayload { expected, found: payload.len() });
    }
    if payload.len() != expected {
        return Err(Error::SizeMismatch { header: n * n, payload: payload.len() / 8 });
    }
    let grid = Arc::new(Grid::new(a, n)?);
    let values = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    ScalarField::from_values(&grid, values)
}

/// 8-bit binary PGM, linearly normalized over `clip` or the field range.
/// A degenerate range renders uniform gray. Rows run top to bottom with the
/// second grid axis pointing up, first axis pointing right.
pub fn write_pgm(f: &ScalarField, path: &Path, clip: Option<(f64, f64)>) -> Result<()> {
    if !f.is_finite() {
        return Err(Error::NonFinite { context: "in PGM export".into() });
    }
    let n = f.n();
    let (lo, hi) = clip.unwrap_or_else(|| {
        f.values()
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    });
    let mut bytes = format!("P5\n{n} {n}\n255\n").into_bytes();
    bytes.reserve(n * n);
    for row in 0..n {
        let i2 = n - 1 - row;
        for i1 in 0..n {
            let v = f.at(i1, i2);
            let px = if hi > lo {
                (255.0 * (v - lo) / (hi - lo)).round().clamp(0.0, 255.0) as u8
            } else {
                128
            };
            bytes.push(px);
        }
    }
    fs::write(path, bytes)?;
    Ok(())
}

/// CSV log, header `iter,residual_h10,error_h10`; the error column stays
/// empty without ground truth. Floats carry 17 significant digits.
pub fn write_log(log: &ConvergenceLog, path: &Path) -> Result<()> {
    let mut text = String::from("iter,residual_h10,error_h10\n");
    for rec in &log.records {
        match rec.error_h10 {
            Some(err) => {
                text.push_str(&format!("{},{:.16e},{:.16e}\n", rec.iter, rec.residual_h10, err))
            }
            None => text.push_str(&format!("{},{:.16e},\n", rec.iter, rec.residual_h10)),
        }
    }
    fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::IterationRecord;

    fn tmp(name: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("fullfield-io-tests");
        fs::create_dir_all(&dir).unwrap();
        dir.join(name)
    }

    fn sample_field() -> ScalarField {
        let grid = Arc::new(Grid::new(3.25, 16).unwrap());
        let mut f = ScalarField::from_fn(&grid, |x1, x2| (x1 * 7.3).sin() * x2 + 1e-17);
        f.values_mut()[0] = -0.0;
        f.values_mut()[1] = 1e300;
        f.values_mut()[2] = 5e-324;
        f
    }

    #[test]
    fn field_roundtrip_is_bit_identical() {
        let f = sample_field();
        let path = tmp("roundtrip.ff");
        write_field(&f, &path).unwrap();
        let back = read_field(&path).unwrap();
        assert_eq!(back.grid().n(), f.grid().n());
        assert_eq!(back.grid().half_width(), f.grid().half_width());
        for (a, b) in back.values().iter().zip(f.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn truncated_payload_reports_byte_counts() {
        let f = sample_field();
        let path = tmp("truncated.ff");
        write_field(&f, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.truncate(bytes.len() - 11);
        fs::write(&path, bytes).unwrap();
        match read_field(&path) {
            Err(Error::TruncatedPayload { expected, found }) => {
                assert_eq!(expected, 8 * 16 * 16);
                assert_eq!(found, 8 * 16 * 16 - 11);
            }
            other => panic!("expected truncation error, got {other:?}"),
        }
    }

    #[test]
    fn trailing_garbage_is_a_size_mismatch() {
        let f = sample_field();
        let path = tmp("oversized.ff");
        write_field(&f, &path).unwrap();
        let mut bytes = fs::read(&path).unwrap();
        bytes.extend_from_slice(&[0u8; 16]);
        fs::write(&path, bytes).unwrap();
        assert!(matches!(read_field(&path), Err(Error::SizeMismatch { .. })));
    }

    #[test]
    fn malformed_headers_are_rejected() {
        let path = tmp("badheader.ff");
        fs::write(&path, b"FF3D 16 3.25 au\n").unwrap();
        assert!(matches!(read_field(&path), Err(Error::MalformedHeader(_))));
        fs::write(&path, b"FF2D sixteen 3.25 au\n").unwrap();
        assert!(matches!(read_field(&path), Err(Error::MalformedHeader(_))));
        fs::write(&path, b"FF2D 16 3.25\n").unwrap();
        assert!(matches!(read_field(&path), Err(Error::MalformedHeader(_))));
        fs::write(&path, vec![7u8; 40]).unwrap();
        assert!(read_field(&path).is_err());
    }

    #[test]
    fn constant_field_renders_uniform_gray() {
        let grid = Arc::new(Grid::new(2.0, 8).unwrap());
        let f = ScalarField::from_fn(&grid, |_, _| 3.0);
        let path = tmp("constant.pgm");
        write_pgm(&f, &path, None).unwrap();
        let bytes = fs::read(&path).unwrap();
        let header_end = bytes.windows(4).position(|w| w == b"255\n").unwrap() + 4;
        assert!(bytes[header_end..].iter().all(|&b| b == 128));
        assert_eq!(bytes.len() - header_end, 64);
    }

    #[test]
    fn extrema_map_to_black_and_white_pixels() {
        let grid = Arc::new(Grid::new(2.0, 8).unwrap());
        let mut f = ScalarField::zeros(&grid);
        let n = 8;
        f.values_mut()[grid.idx(2, 5)] = 4.0; // max
        f.values_mut()[grid.idx(6, 1)] = -2.0; // min
        let path = tmp("extrema.pgm");
        write_pgm(&f, &path, None).unwrap();
        let bytes = fs::read(&path).unwrap();
        let header_end = bytes.windows(4).position(|w| w == b"255\n").unwrap() + 4;
        let px = |i1: usize, i2: usize| bytes[header_end + (n - 1 - i2) * n + i1];
        assert_eq!(px(2, 5), 255);
        assert_eq!(px(6, 1), 0);
    }

    #[test]
    fn clip_saturates_out_of_range_values() {
        let grid = Arc::new(Grid::new(2.0, 8).unwrap());
        let f = ScalarField::from_fn(&grid, |x1, _| x1);
        let path = tmp("clip.pgm");
        write_pgm(&f, &path, Some((0.0, 1.0))).unwrap();
        let bytes = fs::read(&path).unwrap();
        let header_end = bytes.windows(4).position(|w| w == b"255\n").unwrap() + 4;
        let payload = &bytes[header_end..];
        assert!(payload.contains(&0));
        assert!(payload.contains(&255));
    }

    #[test]
    fn empty_log_is_header_only() {
        let path = tmp("empty.csv");
        write_log(&ConvergenceLog::default(), &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text, "iter,residual_h10,error_h10\n");
    }

    #[test]
    fn log_lines_and_exact_reparse() {
        let mut log = ConvergenceLog::default();
        for j in 0..80 {
            log.records.push(IterationRecord {
                iter: j,
                residual_h10: 0.1 / (j as f64 + 1.7),
                error_h10: if j % 2 == 0 { Some(1.0 / (j as f64 + 3.1)) } else { None },
            });
        }
        let path = tmp("log.csv");
        write_log(&log, &path).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 81);
        for (line, rec) in lines[1..].iter().zip(&log.records) {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols[0].parse::<usize>().unwrap(), rec.iter);
            assert_eq!(cols[1].parse::<f64>().unwrap(), rec.residual_h10);
            match rec.error_h10 {
                Some(e) => assert_eq!(cols[2].parse::<f64>().unwrap(), e),
                None => assert_eq!(cols[2], ""),
            }
        }
    }
}
