//! Trajectory CSV files, one row per sample:
//!
//! ```text
//! t,w,y,u,v,e,a1,a2,a3,a4,b0,b1,b2,b3,kc,eps
//! ```
//!
//! Floats are written in scientific notation with 17 significant digits so a
//! file parses back to the exact values. `kc` is empty for runs without
//! reference compensation.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{ConfigError, Error};
use crate::estimator::N_PARAMS;
use crate::harness::run::StepRecord;

pub const HEADER: &str = "t,w,y,u,v,e,a1,a2,a3,a4,b0,b1,b2,b3,kc,eps";
const COLUMNS: usize = 16;

fn push_float(line: &mut String, x: f64) {
    write!(line, "{x:.16e}").expect("writing to a String");
}

/// Renders records as CSV text, header included.
pub fn to_csv_string(records: &[StepRecord]) -> String {
    let mut out = String::with_capacity(64 + records.len() * 24 * COLUMNS);
    out.push_str(HEADER);
    out.push('\n');
    for r in records {
        write!(out, "{}", r.t).expect("writing to a String");
        for x in [r.w, r.y, r.u, r.v, r.e].into_iter().chain(r.theta) {
            out.push(',');
            push_float(&mut out, x);
        }
        out.push(',');
        if let Some(kc) = r.kc {
            push_float(&mut out, kc);
        }
        out.push(',');
        push_float(&mut out, r.eps);
        out.push('\n');
    }
    out
}

pub fn export_csv(records: &[StepRecord], path: &Path) -> Result<(), Error> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(to_csv_string(records).as_bytes())
        .map_err(|e| Error::io(path, e))
}

pub fn parse_csv(text: &str) -> Result<Vec<StepRecord>, ConfigError> {
    let bad = |line: usize, reason: String| ConfigError::invalid("csv", format!("line {line}: {reason}"));
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == HEADER => {}
        other => return Err(bad(1, format!("unexpected header {other:?}"))),
    }
    lines
        .enumerate()
        .map(|(i, line)| {
            let n = i + 2;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != COLUMNS {
                return Err(bad(n, format!("{} fields", fields.len())));
            }
            let num = |k: usize| -> Result<f64, ConfigError> {
                fields[k].parse::<f64>().map_err(|e| bad(n, format!("column {k}: {e}")))
            };
            let t = fields[0].parse::<usize>().map_err(|e| bad(n, format!("t: {e}")))?;
            let mut theta = [0.0; N_PARAMS];
            for (k, slot) in theta.iter_mut().enumerate() {
                *slot = num(6 + k)?;
            }
            let kc = if fields[14].is_empty() { None } else { Some(num(14)?) };
            Ok(StepRecord {
                t,
                w: num(1)?,
                y: num(2)?,
                u: num(3)?,
                v: num(4)?,
                e: num(5)?,
                theta,
                kc,
                eps: num(15)?,
            })
        })
        .collect()
}

pub fn read_csv(path: &Path) -> Result<Vec<StepRecord>, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_csv(&text)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_is_header_only() {
        assert_eq!(to_csv_string(&[]), format!("{HEADER}\n"));
    }

    #[test]
    fn row_format() {
        let r = StepRecord {
            t: 3,
            w: 1.0,
            y: 0.5,
            u: -0.25,
            v: 0.0,
            e: 1e-4,
            theta: [0.0; 8],
            kc: None,
            eps: 0.0,
        };
        let text = to_csv_string(&[r]);
        let row = text.lines().nth(1).unwrap();
        assert!(row.starts_with("3,1.0000000000000000e0,5.0000000000000000e-1,-2.5000000000000000e-1,"));
        assert!(row.contains(",,"), "blank kc column: {row}");
        assert!(text.ends_with('\n') && !text.contains('\r'));
    }

    #[test]
    fn rejects_malformed() {
        assert!(parse_csv("t,w\n").is_err());
        assert!(parse_csv(&format!("{HEADER}\n1,2,3\n")).is_err());
    }

    proptest! {
        #[test]
        fn round_trip_exact(
            vals in prop::collection::vec(-1e6..1e6f64, 15),
            t in 0usize..100_000,
            with_kc in any::<bool>(),
        ) {
            let r = StepRecord {
                t,
                w: vals[0], y: vals[1], u: vals[2], v: vals[3], e: vals[4],
                theta: std::array::from_fn(|i| vals[5 + i]),
                kc: with_kc.then_some(vals[13]),
                eps: vals[14],
            };
            let back = parse_csv(&to_csv_string(std::slice::from_ref(&r))).unwrap();
            prop_assert_eq!(back, vec![r]);
        }
    }
}
