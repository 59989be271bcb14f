//! Plain-text snapshot container.
//!
//! ```text
//! # mpdoa snapshots v1
//! # snr_db=10
//! # noise_precision=10
//! # seed=42
//! # thetas_deg=-55.1;-12.3;25
//! M,T
//! 128,10
//! re(0,0),im(0,0),re(0,1),im(0,1),...    <- one line per row r, 2T fields
//! ```
//!
//! Values are post-IDFT observations `Y`. Metadata lines are optional.

use std::io::{BufRead, Write};

use super::SnapshotSet;
use crate::{Complex64, DoaError, Result};

const MAGIC: &str = "# mpdoa snapshots v1";

pub fn write_snapshots<W: Write>(set: &SnapshotSet, mut out: W) -> Result<()> {
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "# snr_db={}", set.snr_db)?;
    writeln!(out, "# noise_precision={}", set.noise_precision_true)?;
    writeln!(out, "# seed={}", set.seed)?;
    let thetas: Vec<String> = set.thetas.iter().map(|t| t.to_degrees().to_string()).collect();
    writeln!(out, "# thetas_deg={}", thetas.join(";"))?;
    writeln!(out, "M,T")?;
    writeln!(out, "{},{}", set.m, set.t)?;
    for r in 0..set.m {
        let mut line = String::with_capacity(set.t * 48);
        for t in 0..set.t {
            let z = set.y[t * set.m + r];
            if t > 0 {
                line.push(',');
            }
            line.push_str(&format!("{},{}", z.re, z.im));
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

fn parse_err(line: usize, msg: impl Into<String>) -> DoaError {
    DoaError::Parse { line, msg: msg.into() }
}

fn parse_f64(s: &str, line: usize, field: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| parse_err(line, format!("field {}: `{}` is not a number", field + 1, s.trim())))
}

pub fn read_snapshots<R: BufRead>(input: R) -> Result<SnapshotSet> {
    let mut snr_db = f64::NAN;
    let mut precision = f64::NAN;
    let mut seed = 0u64;
    let mut thetas = Vec::new();
    let mut dims: Option<(usize, usize)> = None;
    let mut saw_header = false;
    let mut y: Vec<Complex64> = Vec::new();
    let mut row = 0usize;

    for (idx, line) in input.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            if let Some((key, value)) = comment.trim().split_once('=') {
                let value = value.trim();
                match key.trim() {
                    "snr_db" => snr_db = parse_f64(value, lineno, 0)?,
                    "noise_precision" => precision = parse_f64(value, lineno, 0)?,
                    "seed" => {
                        seed = value
                            .parse()
                            .map_err(|_| parse_err(lineno, format!("bad seed `{value}`")))?
                    }
                    "thetas_deg" if !value.is_empty() => {
                        thetas = value
                            .split(';')
                            .enumerate()
                            .map(|(i, v)| parse_f64(v, lineno, i).map(f64::to_radians))
                            .collect::<Result<_>>()?
                    }
                    _ => {}
                }
            }
            continue;
        }
        if !saw_header {
            if text.replace(' ', "") != "M,T" {
                return Err(parse_err(lineno, format!("expected header `M,T`, found `{text}`")));
            }
            saw_header = true;
            continue;
        }
        let Some((m, t)) = dims else {
            let parts: Vec<&str> = text.split(',').collect();
            let [m, t] = parts.as_slice() else {
                return Err(parse_err(lineno, "expected `M,T` values"));
            };
            let m: usize = m.trim().parse().map_err(|_| parse_err(lineno, "bad M"))?;
            let t: usize = t.trim().parse().map_err(|_| parse_err(lineno, "bad T"))?;
            if m == 0 || t == 0 {
                return Err(parse_err(lineno, "M and T must be positive"));
            }
            dims = Some((m, t));
            y = vec![Complex64::default(); m * t];
            continue;
        };
        if row >= m {
            return Err(parse_err(lineno, format!("more than M = {m} data rows")));
        }
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 2 * t {
            return Err(parse_err(
                lineno,
                format!("expected {} fields (2T), found {}", 2 * t, fields.len()),
            ));
        }
        for col in 0..t {
            let re = parse_f64(fields[2 * col], lineno, 2 * col)?;
            let im = parse_f64(fields[2 * col + 1], lineno, 2 * col + 1)?;
            y[col * m + row] = Complex64::new(re, im);
        }
        row += 1;
    }

    let Some((m, t)) = dims else {
        return Err(parse_err(0, "missing `M,T` header"));
    };
    if row != m {
        return Err(parse_err(0, format!("expected {m} data rows, found {row}")));
    }
    Ok(SnapshotSet { m, t, y, snr_db, noise_precision_true: precision, seed, thetas })
}
