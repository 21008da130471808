use std::path::Path;

use crate::error::{Error, Result};

/// Binary classification rows: features plus a 0/1 label.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetTable {
    features: Vec<Vec<f64>>,
    labels: Vec<f64>,
    dim: usize,
}

impl DatasetTable {
    pub fn new(rows: Vec<(Vec<f64>, u8)>) -> Result<Self> {
        let dim = rows.first().map(|r| r.0.len()).unwrap_or(0);
        if rows.is_empty() || dim == 0 {
            return Err(Error::Dataset {
                row: 0,
                reason: "dataset needs at least one row with one feature".into(),
            });
        }
        let mut features = Vec::with_capacity(rows.len());
        let mut labels = Vec::with_capacity(rows.len());
        for (i, (x, y)) in rows.into_iter().enumerate() {
            if x.len() != dim {
                return Err(Error::Dataset {
                    row: i + 1,
                    reason: format!("expected {dim} features, found {}", x.len()),
                });
            }
            if y > 1 {
                return Err(Error::Dataset {
                    row: i + 1,
                    reason: format!("label must be 0 or 1, found {y}"),
                });
            }
            features.push(x);
            labels.push(y as f64);
        }
        Ok(Self {
            features,
            labels,
            dim,
        })
    }

    /// Parse comma-separated rows. A header is accepted (and skipped) when the
    /// first record does not parse as numbers. The last column is the label.
    /// Errors name the 1-based line number.
    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        let mut dim: Option<usize> = None;
        for (i, record) in reader.records().enumerate() {
            let line = i + 1;
            let record = record.map_err(|e| Error::Dataset {
                row: line,
                reason: e.to_string(),
            })?;
            if record.iter().all(|f| f.is_empty()) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                record.iter().map(|f| f.parse::<f64>()).collect();
            let values = match parsed {
                Ok(v) => v,
                Err(_) if i == 0 => continue,
                Err(_) => {
                    let bad = record.iter().find(|f| f.parse::<f64>().is_err()).unwrap_or("");
                    return Err(Error::Dataset {
                        row: line,
                        reason: format!("`{bad}` is not a decimal number"),
                    });
                }
            };
            if values.len() < 2 {
                return Err(Error::Dataset {
                    row: line,
                    reason: "needs at least one feature and a label".into(),
                });
            }
            let d = values.len() - 1;
            match dim {
                None => dim = Some(d),
                Some(expected) if expected != d => {
                    return Err(Error::Dataset {
                        row: line,
                        reason: format!("expected {expected} features, found {d}"),
                    })
                }
                _ => {}
            }
            if let Some(bad) = values[..d].iter().find(|v| !v.is_finite()) {
                return Err(Error::Dataset {
                    row: line,
                    reason: format!("non-finite feature {bad}"),
                });
            }
            let label = match values[d] {
                y if y == 0.0 => 0u8,
                y if y == 1.0 => 1u8,
                y => {
                    return Err(Error::Dataset {
                        row: line,
                        reason: format!("label must be 0 or 1, found {y}"),
                    })
                }
            };
            rows.push((values[..d].to_vec(), label));
        }
        if rows.is_empty() {
            return Err(Error::Dataset {
                row: 0,
                reason: "no data rows".into(),
            });
        }
        Self::new(rows)
    }

    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::io(path.as_ref(), e))?;
        Self::from_csv_str(&text)
    }

    /// The 100-row synthetic dataset shipped with the crate.
    pub fn bundled() -> Self {
        Self::from_csv_str(include_str!("../../data/synthetic_logistic.csv"))
            .expect("bundled dataset parses")
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn features(&self, i: usize) -> &[f64] {
        &self.features[i]
    }

    pub fn label(&self, i: usize) -> f64 {
        self.labels[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_with_and_without_header() {
        let a = DatasetTable::from_csv_str("x1,x2,y\n1.5,2,1\n-0.5,0.25,0\n").unwrap();
        let b = DatasetTable::from_csv_str("1.5,2,1\n-0.5,0.25,0\n").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 2);
        assert_eq!(a.dim(), 2);
        assert_eq!(a.label(0), 1.0);
    }

    #[test]
    fn malformed_rows_report_line() {
        let err = DatasetTable::from_csv_str("1,2,1\n3,oops,0\n").unwrap_err();
        assert!(matches!(err, Error::Dataset { row: 2, .. }), "{err}");
        let err = DatasetTable::from_csv_str("1,2,1\n3,0\n").unwrap_err();
        assert!(matches!(err, Error::Dataset { row: 2, .. }), "{err}");
        let err = DatasetTable::from_csv_str("1,2,1\n3,4,2\n").unwrap_err();
        assert!(matches!(err, Error::Dataset { row: 2, .. }), "{err}");
        let err = DatasetTable::from_csv_str("1;2;1\n").unwrap_err();
        assert!(matches!(err, Error::Dataset { .. }), "{err}");
    }

    #[test]
    fn bundled_has_100_rows() {
        let d = DatasetTable::bundled();
        assert_eq!(d.len(), 100);
    }
}
