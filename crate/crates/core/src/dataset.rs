//! Labeled point sets and their CSV representation.
//!
//! The CSV layout is a header `x_1,...,x_d,label` followed by one row per
//! point with `.`-decimal features and a 1-based integer label.

use std::collections::BTreeSet;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid_input, Error, Result};

/// `N` points of dimension `d` (one per row) with labels in `1..=L`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    points: DMatrix<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(points: DMatrix<f64>, labels: Vec<usize>) -> Result<Self> {
        if points.nrows() == 0 {
            return Err(invalid_input("dataset must contain at least one point"));
        }
        if points.ncols() == 0 {
            return Err(invalid_input("dataset points must have at least one dimension"));
        }
        if points.nrows() != labels.len() {
            return Err(invalid_input(format!("{} points but {} labels", points.nrows(), labels.len())));
        }
        if let Some(j) = labels.iter().position(|&y| y == 0) {
            return Err(invalid_input(format!("label of point {j} is 0; labels are 1-based")));
        }
        if points.iter().any(|v| !v.is_finite()) {
            return Err(invalid_input("dataset contains non-finite features"));
        }
        Ok(Self { points, labels })
    }

    pub fn from_rows(rows: &[Vec<f64>], labels: Vec<usize>) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != d) {
            return Err(invalid_input("rows have inconsistent dimension"));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::new(DMatrix::from_row_slice(rows.len(), d, &flat), labels)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    /// N×d matrix, one point per row.
    pub fn points(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn point(&self, j: usize) -> DVector<f64> {
        self.points.row(j).transpose()
    }

    /// Column-major view `X̂ ∈ R^{d×N}` (points as columns).
    pub fn columns(&self) -> DMatrix<f64> {
        self.points.transpose()
    }

    pub fn label(&self, j: usize) -> usize {
        self.labels[j]
    }

    pub fn max_label(&self) -> usize {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    pub fn label_set(&self) -> BTreeSet<usize> {
        self.labels.iter().copied().collect()
    }

    pub fn count_label(&self, y: usize) -> usize {
        self.labels.iter().filter(|&&l| l == y).count()
    }

    pub fn indices_of(&self, y: usize) -> Vec<usize> {
        (0..self.len()).filter(|&j| self.labels[j] == y).collect()
    }

    /// Subset in the given index order. Fails if `indices` is empty.
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let rows = self.points.select_rows(indices.iter());
        let labels = indices.iter().map(|&j| self.labels[j]).collect();
        Self::new(rows, labels)
    }

    /// Applies `x ↦ H x` to every point.
    pub fn mapped(&self, h: &DMatrix<f64>) -> Result<Self> {
        if h.ncols() != self.dim() {
            return Err(invalid_input(format!("map expects dimension {} but data has {}", h.ncols(), self.dim())));
        }
        Self::new(&self.points * h.transpose(), self.labels.clone())
    }

    pub fn read_csv(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path.as_ref())?;
        Self::from_csv_reader(file)
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path.as_ref())?;
        self.to_csv_writer(file)
    }

    pub fn from_csv_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
        let headers = rdr.headers().map_err(|e| Error::Parse { line: 1, message: e.to_string() })?.clone();
        let ncols = headers.len();
        if ncols < 2 || headers.get(ncols - 1).map(str::trim) != Some("label") {
            return Err(Error::Parse { line: 1, message: "header must be x_1,...,x_d,label".into() });
        }
        let d = ncols - 1;
        let mut flat = Vec::new();
        let mut labels = Vec::new();
        for record in rdr.records() {
            let record = record
                .map_err(|e| Error::Parse { line: e.position().map_or(0, |p| p.line()), message: e.to_string() })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != ncols {
                return Err(Error::Parse { line, message: format!("expected {ncols} fields, found {}", record.len()) });
            }
            for field in record.iter().take(d) {
                let v: f64 = field
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parse { line, message: format!("invalid feature value {field:?}") })?;
                if !v.is_finite() {
                    return Err(Error::Parse { line, message: "non-finite feature".into() });
                }
                flat.push(v);
            }
            let raw = record.get(d).unwrap_or_default().trim();
            let label: usize = match raw.parse() {
                Ok(l) if l >= 1 => l,
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("invalid label {raw:?}; expected an integer >= 1"),
                    })
                }
            };
            labels.push(label);
        }
        if labels.is_empty() {
            return Err(Error::Parse { line: 1, message: "no data rows".into() });
        }
        Self::new(DMatrix::from_row_slice(labels.len(), d, &flat), labels)
    }

    pub fn to_csv_writer<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = (1..=self.dim()).map(|i| format!("x_{i}")).collect();
        header.push("label".into());
        w.write_record(&header).map_err(csv_io)?;
        for j in 0..self.len() {
            let mut rec: Vec<String> = self.points.row(j).iter().map(|v| format!("{v:?}")).collect();
            rec.push(self.labels[j].to_string());
            w.write_record(&rec).map_err(csv_io)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_io(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}
