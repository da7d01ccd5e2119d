//! Point clouds, file formats and synthetic benchmark manifolds.

mod generate;
mod io;

pub use generate::{generate, Family, ManifoldSpec};
pub use io::{load, load_csv, read_int_column, write, CsvOptions, Format};

use crate::error::{Error, Result};

/// An `n × dim` matrix of finite reals stored row-major, with optional
/// integer class labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    n: usize,
    dim: usize,
    points: Vec<f64>,
    labels: Option<Vec<i32>>,
    name: String,
}

impl Dataset {
    /// Validates shape, finiteness and label length.
    pub fn new(
        n: usize,
        dim: usize,
        points: Vec<f64>,
        labels: Option<Vec<i32>>,
        name: impl Into<String>,
    ) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidData(format!("need at least 2 points, got {n}")));
        }
        if dim < 1 {
            return Err(Error::InvalidData("dimension must be at least 1".into()));
        }
        if points.len() != n * dim {
            return Err(Error::LengthMismatch {
                what: "buffer length vs n*dim",
                left: points.len(),
                right: n * dim,
            });
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::LengthMismatch {
                    what: "labels vs points",
                    left: l.len(),
                    right: n,
                });
            }
        }
        Ok(Self {
            n,
            dim,
            points,
            labels,
            name: name.into(),
        })
    }

    /// Builds a dataset from a contiguous row-major buffer of shape `(n, dim)`.
    pub fn from_row_major(n: usize, dim: usize, points: Vec<f64>) -> Result<Self> {
        Self::new(n, dim, points, None, "array")
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != dim) {
            return Err(Error::Format(format!(
                "row {bad} has {} columns, expected {dim}",
                rows[bad].len()
            )));
        }
        let points = rows.iter().flatten().copied().collect();
        Self::new(rows.len(), dim, points, None, "rows")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Row-major coordinates.
    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn labels(&self) -> Option<&[i32]> {
        self.labels.as_deref()
    }

    pub fn with_labels(mut self, labels: Vec<i32>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::LengthMismatch {
                what: "labels vs points",
                left: labels.len(),
                right: self.n,
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Multiplies every coordinate by `c`.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        let points = self.points.iter().map(|v| v * c).collect();
        Self::new(self.n, self.dim, points, self.labels.clone(), self.name.clone())
    }

    /// Rows reordered (or subset) by `order`.
    pub fn select(&self, order: &[usize]) -> Result<Self> {
        let mut points = Vec::with_capacity(order.len() * self.dim);
        for &i in order {
            if i >= self.n {
                return Err(crate::error::out_of_range(format!("row {i} >= {}", self.n)));
            }
            points.extend_from_slice(self.row(i));
        }
        let labels = self
            .labels
            .as_ref()
            .map(|l| order.iter().map(|&i| l[i]).collect());
        Self::new(order.len(), self.dim, points, labels, self.name.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_and_non_finite() {
        assert!(matches!(
            Dataset::from_row_major(1, 2, vec![0.0, 1.0]),
            Err(Error::InvalidData(_))
        ));
        let err = Dataset::from_row_major(2, 2, vec![0.0, 1.0, f64::NAN, 2.0]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { row: 1, col: 0 }));
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn label_length_checked() {
        let d = Dataset::from_row_major(3, 1, vec![0.0, 1.0, 2.0]).unwrap();
        assert!(d.clone().with_labels(vec![1, 2]).is_err());
        assert_eq!(d.with_labels(vec![1, 2, 3]).unwrap().labels(), Some(&[1, 2, 3][..]));
    }

    #[test]
    fn ragged_rows_rejected() {
        assert!(Dataset::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }
}
