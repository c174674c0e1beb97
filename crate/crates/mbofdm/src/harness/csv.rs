//! BER curve CSV emission and parse-back.
//!
//! The emit format is part of the determinism contract: a rerun with the
//! same scenario and seed must produce a byte-identical file at any thread
//! count, so every number is formatted through one fixed code path.

use crate::harness::sweep::{BerCurve, BerPoint};
use crate::{Error, Result};
use std::fmt::Write as _;

pub const CSV_HEADER: &str = "label,snr_db,ber,bit_errors,bits_tested,censored";

/// Renders curves to CSV text with stable row order (label, then SNR).
pub fn curves_to_csv(curves: &[BerCurve]) -> Result<String> {
    if curves.is_empty() {
        return Err(Error::param("no curves to emit"));
    }
    let mut order: Vec<usize> = (0..curves.len()).collect();
    order.sort_by(|&a, &b| curves[a].label.cmp(&curves[b].label));
    let mut out = String::new();
    writeln!(out, "{CSV_HEADER}").unwrap();
    for &c in &order {
        let curve = &curves[c];
        for p in &curve.points {
            writeln!(
                out,
                "{},{},{:.6e},{},{},{}",
                curve.label, p.snr_db, p.ber(), p.bit_errors, p.bits, p.censored
            )
            .unwrap();
        }
    }
    Ok(out)
}

/// Writes curves to a file.
pub fn write_csv(curves: &[BerCurve], path: &std::path::Path) -> Result<()> {
    Ok(std::fs::write(path, curves_to_csv(curves)?)?)
}

/// Parses text produced by `curves_to_csv` back into curves; the round trip
/// is the format's own regression oracle.
pub fn parse_csv(text: &str) -> Result<Vec<BerCurve>> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h == CSV_HEADER => {}
        other => {
            return Err(Error::param(format!(
                "bad CSV header: {:?}",
                other.map(|(_, h)| h)
            )))
        }
    }
    let mut curves: Vec<BerCurve> = Vec::new();
    for (idx, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 6 {
            return Err(Error::param(format!(
                "line {}: expected 6 fields, got {}",
                idx + 1,
                f.len()
            )));
        }
        let bad = |e: String| Error::param(format!("line {}: {e}", idx + 1));
        let snr_db: f64 = f[1].parse().map_err(|e| bad(format!("{e}")))?;
        let ber: f64 = f[2].parse().map_err(|e| bad(format!("{e}")))?;
        let bit_errors: u64 = f[3].parse().map_err(|e| bad(format!("{e}")))?;
        let bits: u64 = f[4].parse().map_err(|e| bad(format!("{e}")))?;
        let censored: bool = f[5].parse().map_err(|e| bad(format!("{e}")))?;
        let point = BerPoint { snr_db, bit_errors, bits, censored };
        if (point.ber() - ber).abs() > 1e-6 * ber.max(1e-30) {
            return Err(Error::param(format!(
                "line {}: ber field {ber} disagrees with counts {}/{}",
                idx + 1,
                bit_errors,
                bits
            )));
        }
        match curves.last_mut() {
            Some(c) if c.label == f[0] => c.points.push(point),
            _ => curves.push(BerCurve { label: f[0].to_string(), points: vec![point] }),
        }
    }
    if curves.is_empty() {
        return Err(Error::param("CSV contains no data rows"));
    }
    Ok(curves)
}
