use std::ops::Range;
use std::sync::Arc;

use crate::error::{Error, Result};

/// How a tensor is treated by optimizers that route on shape (Muon, Adafactor,
/// Ranger21's row-wise clipping).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TensorKind {
    Matrix2d,
    Vector,
    Scalar,
}

impl TensorKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TensorKind::Matrix2d => "matrix2d",
            TensorKind::Vector => "vector",
            TensorKind::Scalar => "scalar",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub kind: TensorKind,
}

impl TensorSpec {
    pub fn new(name: impl Into<String>, shape: Vec<usize>, kind: TensorKind) -> Self {
        Self {
            name: name.into(),
            shape,
            kind,
        }
    }

    pub fn matrix(name: impl Into<String>, rows: usize, cols: usize) -> Self {
        Self::new(name, vec![rows, cols], TensorKind::Matrix2d)
    }

    pub fn vector(name: impl Into<String>, len: usize) -> Self {
        Self::new(name, vec![len], TensorKind::Vector)
    }

    pub fn scalar(name: impl Into<String>) -> Self {
        Self::new(name, vec![1], TensorKind::Scalar)
    }

    pub fn numel(&self) -> usize {
        self.shape.iter().product()
    }

    /// `(rows, cols)` for a 2-D tensor. Non-matrix tensors are viewed as a
    /// single row.
    pub fn rows_cols(&self) -> (usize, usize) {
        match (self.kind, self.shape.as_slice()) {
            (TensorKind::Matrix2d, [r, c]) => (*r, *c),
            _ => (1, self.numel()),
        }
    }
}

/// Ordered, named tensor shapes backing a flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParameterLayout {
    entries: Vec<TensorSpec>,
    offsets: Vec<usize>,
    total: usize,
}

impl ParameterLayout {
    pub fn new(entries: Vec<TensorSpec>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Layout("layout has no tensors".into()));
        }
        let mut offsets = Vec::with_capacity(entries.len());
        let mut total = 0usize;
        for (i, e) in entries.iter().enumerate() {
            if e.name.is_empty() {
                return Err(Error::Layout(format!("tensor {i} has an empty name")));
            }
            if entries[..i].iter().any(|p| p.name == e.name) {
                return Err(Error::Layout(format!("duplicate tensor name `{}`", e.name)));
            }
            if e.shape.is_empty() {
                return Err(Error::Layout(format!("tensor `{}` has an empty shape", e.name)));
            }
            if e.shape.contains(&0) {
                return Err(Error::Layout(format!(
                    "tensor `{}` has a zero dimension in {:?}",
                    e.name, e.shape
                )));
            }
            match e.kind {
                TensorKind::Matrix2d if e.shape.len() != 2 => {
                    return Err(Error::Layout(format!(
                        "tensor `{}` is matrix2d but has shape {:?}",
                        e.name, e.shape
                    )))
                }
                TensorKind::Scalar if e.numel() != 1 => {
                    return Err(Error::Layout(format!(
                        "tensor `{}` is scalar but has shape {:?}",
                        e.name, e.shape
                    )))
                }
                _ => {}
            }
            offsets.push(total);
            total += e.numel();
        }
        Ok(Self {
            entries,
            offsets,
            total,
        })
    }

    /// Single vector tensor named `w`.
    pub fn flat(len: usize) -> Result<Self> {
        Self::new(vec![TensorSpec::vector("w", len)])
    }

    pub fn len(&self) -> usize {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn entries(&self) -> &[TensorSpec] {
        &self.entries
    }

    pub fn range(&self, index: usize) -> Range<usize> {
        let start = self.offsets[index];
        start..start + self.entries[index].numel()
    }

    /// Iterate `(spec, flat range)` pairs in layout order.
    pub fn tensors(&self) -> impl Iterator<Item = (&TensorSpec, Range<usize>)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .map(move |(i, e)| (e, self.range(i)))
    }

    pub fn find(&self, name: &str) -> Option<(&TensorSpec, Range<usize>)> {
        self.tensors().find(|(e, _)| e.name == name)
    }

    /// Human-readable label of a flat coordinate, e.g. `W[1,2]` or `b[0]`.
    pub fn coordinate_name(&self, flat: usize) -> String {
        for (spec, range) in self.tensors() {
            if range.contains(&flat) {
                let local = flat - range.start;
                return match spec.kind {
                    TensorKind::Matrix2d => {
                        let (_, cols) = spec.rows_cols();
                        format!("{}[{},{}]", spec.name, local / cols, local % cols)
                    }
                    _ => format!("{}[{}]", spec.name, local),
                };
            }
        }
        format!("#{flat}")
    }
}

/// Weights `w`: a layout plus its values in layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    layout: Arc<ParameterLayout>,
    values: Vec<f64>,
}

impl ParameterSet {
    pub fn zeros(layout: Arc<ParameterLayout>) -> Self {
        let values = vec![0.0; layout.len()];
        Self { layout, values }
    }

    /// Inverse of [`ParameterSet::flatten`].
    pub fn unflatten(layout: Arc<ParameterLayout>, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.len() {
            return Err(Error::LengthMismatch {
                expected: layout.len(),
                actual: values.len(),
            });
        }
        Ok(Self { layout, values })
    }

    /// Build from named tensors given in order; each tensor's values are
    /// row-major.
    pub fn from_tensors(tensors: Vec<(TensorSpec, Vec<f64>)>) -> Result<Self> {
        let mut specs = Vec::with_capacity(tensors.len());
        let mut values = Vec::new();
        for (spec, vals) in tensors {
            if vals.len() != spec.numel() {
                return Err(Error::LengthMismatch {
                    expected: spec.numel(),
                    actual: vals.len(),
                });
            }
            values.extend(vals);
            specs.push(spec);
        }
        let layout = Arc::new(ParameterLayout::new(specs)?);
        Self::unflatten(layout, values)
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.values.clone()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn layout(&self) -> &Arc<ParameterLayout> {
        &self.layout
    }

    pub fn tensor(&self, name: &str) -> Option<&[f64]> {
        self.layout.find(name).map(|(_, r)| &self.values[r])
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::unflatten(self.layout.clone(), values)
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}

/// Loss and gradient at one point, aligned to a layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEvaluation {
    pub loss: f64,
    pub gradient: Vec<f64>,
    pub batch_id: Option<u64>,
}

impl GradientEvaluation {
    pub fn new(loss: f64, gradient: Vec<f64>) -> Self {
        Self {
            loss,
            gradient,
            batch_id: None,
        }
    }

    /// Index of the first non-finite gradient entry, if any.
    pub fn first_non_finite(&self) -> Option<usize> {
        self.gradient.iter().position(|g| !g.is_finite())
    }

    pub fn is_finite(&self) -> bool {
        self.loss.is_finite() && self.first_non_finite().is_none()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn flatten_preserves_order() {
        let p = ParameterSet::from_tensors(vec![
            (TensorSpec::matrix("A", 1, 2), vec![1.0, 2.0]),
            (TensorSpec::vector("b", 1), vec![3.0]),
        ])
        .unwrap();
        assert_eq!(p.flatten(), vec![1.0, 2.0, 3.0]);
        assert_eq!(p.tensor("b"), Some(&[3.0][..]));
    }

    #[test]
    fn rejects_bad_layouts() {
        assert!(ParameterLayout::new(vec![TensorSpec::new("x", vec![], TensorKind::Vector)]).is_err());
        assert!(ParameterLayout::new(vec![TensorSpec::vector("x", 0)]).is_err());
        assert!(ParameterLayout::new(vec![TensorSpec::vector("x", 2), TensorSpec::vector("x", 1)]).is_err());
        assert!(ParameterLayout::new(vec![TensorSpec::new("m", vec![4], TensorKind::Matrix2d)]).is_err());
        assert!(ParameterLayout::new(vec![TensorSpec::new("s", vec![2], TensorKind::Scalar)]).is_err());
        assert!(ParameterLayout::new(vec![]).is_err());
    }

    #[test]
    fn coordinate_names() {
        let l = ParameterLayout::new(vec![TensorSpec::matrix("W", 2, 3), TensorSpec::vector("b", 2)]).unwrap();
        assert_eq!(l.coordinate_name(4), "W[1,1]");
        assert_eq!(l.coordinate_name(7), "b[1]");
    }

    #[test]
    fn unflatten_checks_length() {
        let l = Arc::new(ParameterLayout::flat(3).unwrap());
        assert!(ParameterSet::unflatten(l, vec![1.0; 4]).is_err());
    }

    proptest! {
        #[test]
        fn flatten_unflatten_roundtrip(values in proptest::collection::vec(-1e6f64..1e6, 10)) {
            let layout = Arc::new(ParameterLayout::new(vec![
                TensorSpec::matrix("W", 2, 3),
                TensorSpec::vector("b", 3),
                TensorSpec::scalar("s"),
            ]).unwrap());
            let p = ParameterSet::unflatten(layout.clone(), values.clone()).unwrap();
            let back = ParameterSet::unflatten(layout, p.flatten()).unwrap();
            prop_assert_eq!(back, p);
        }
    }
}
