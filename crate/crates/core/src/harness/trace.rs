//! CSV traces: one row per logged step.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const TRACE_HEADER: &str = "t,loss,grad_norm,update_norm,effective_lr,extra_evals";

/// Observables of one logged step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRecord {
    pub t: u64,
    pub loss: f64,
    pub grad_norm: f64,
    pub update_norm: f64,
    pub effective_lr: f64,
    pub extra_evals: usize,
}

impl TraceRecord {
    pub fn is_finite(&self) -> bool {
        [self.loss, self.grad_norm, self.update_norm, self.effective_lr]
            .iter()
            .all(|v| v.is_finite())
    }
}

/// Render records as CSV. Floats use 17 significant digits so a parsed trace
/// reproduces the original bits.
pub fn render(records: &[TraceRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for r in records {
        let _ = writeln!(
            out,
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{}",
            r.t, r.loss, r.grad_norm, r.update_norm, r.effective_lr, r.extra_evals
        );
    }
    out
}

/// Parse and validate a trace: header must match, `t` strictly increasing,
/// all fields finite.
pub fn parse(text: &str) -> Result<Vec<TraceRecord>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| Error::Dataset { row: 1, reason: e.to_string() })?;
    let got: Vec<&str> = header.iter().collect();
    if got.join(",") != TRACE_HEADER {
        return Err(Error::Dataset {
            row: 1,
            reason: format!("trace header `{}` is not `{TRACE_HEADER}`", got.join(",")),
        });
    }
    let mut records: Vec<TraceRecord> = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| Error::Dataset { row: line, reason: e.to_string() })?;
        let field = |j: usize| row.get(j).unwrap_or("");
        let bad = |what: &str, v: &str| Error::Dataset {
            row: line,
            reason: format!("{what}: cannot parse `{v}`"),
        };
        let float = |j: usize, name: &str| -> Result<f64> { field(j).parse().map_err(|_| bad(name, field(j))) };
        let rec = TraceRecord {
            t: field(0).parse().map_err(|_| bad("t", field(0)))?,
            loss: float(1, "loss")?,
            grad_norm: float(2, "grad_norm")?,
            update_norm: float(3, "update_norm")?,
            effective_lr: float(4, "effective_lr")?,
            extra_evals: field(5).parse().map_err(|_| bad("extra_evals", field(5)))?,
        };
        if !rec.is_finite() {
            return Err(Error::Dataset {
                row: line,
                reason: "non-finite value".into(),
            });
        }
        if records.last().is_some_and(|p| p.t >= rec.t) {
            return Err(Error::Dataset {
                row: line,
                reason: format!("t = {} does not increase", rec.t),
            });
        }
        records.push(rec);
    }
    Ok(records)
}

pub fn read(path: &Path) -> Result<Vec<TraceRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse(&text).map_err(|e| match e {
        Error::Dataset { row, reason } => Error::Dataset {
            row,
            reason: format!("{}: {reason}", path.display()),
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(t: u64, loss: f64) -> TraceRecord {
        TraceRecord {
            t,
            loss,
            grad_norm: 0.1 + loss,
            update_norm: 1.0 / 3.0,
            effective_lr: 1e-3,
            extra_evals: 2,
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let rs: Vec<_> = (1..50).map(|t| rec(t, (t as f64).sin().abs() * 1e-7 + f64::MIN_POSITIVE)).collect();
        let text = render(&rs);
        assert!(text.starts_with(TRACE_HEADER));
        let back = parse(&text).unwrap();
        assert_eq!(back.len(), rs.len());
        for (a, b) in rs.iter().zip(&back) {
            assert_eq!(a.loss.to_bits(), b.loss.to_bits());
            assert_eq!(a.grad_norm.to_bits(), b.grad_norm.to_bits());
            assert_eq!(a, b);
        }
    }

    #[test]
    fn rejects_malformed_traces() {
        let good = render(&[rec(1, 1.0), rec(2, 0.5)]);
        assert!(parse(&good.replace("extra_evals", "extras")).is_err());
        assert!(parse(&render(&[rec(2, 1.0), rec(2, 0.5)])).is_err());
        assert!(parse(&format!("{TRACE_HEADER}\n1,NaN,0,0,0,0\n")).is_err());
        assert!(matches!(
            parse(&format!("{TRACE_HEADER}\n1,1,1,1,1,0\n2,x,1,1,1,0\n")),
            Err(Error::Dataset { row: 3, .. })
        ));
    }
}
