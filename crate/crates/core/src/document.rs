//! Self-describing JSON documents for models and transfer maps.
//!
//! Every document carries a `"kind"` tag (`"lgmm"`, `"lvq"` or
//! `"transfer_map"`); matrices are stored as arrays of rows. Floats are
//! printed in shortest round-trip form, so a write/read cycle is value-exact.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lgmm::LabeledGmm;
use crate::lvq::{LvqModel, Metric};
use crate::transfer::{TransferMap, TransferStatus};

type Rows = Vec<Vec<f64>>;

fn to_rows(m: &DMatrix<f64>) -> Rows {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn from_rows(rows: &Rows, what: &str) -> Result<DMatrix<f64>> {
    let r = rows.len();
    let c = rows.first().map_or(0, Vec::len);
    if r == 0 || c == 0 || rows.iter().any(|row| row.len() != c) {
        return Err(Error::Document(format!("{what} must be a non-empty rectangular array of rows")));
    }
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

fn to_vecs(vs: &[DVector<f64>]) -> Rows {
    vs.iter().map(|v| v.iter().copied().collect()).collect()
}

fn from_vecs(rows: &Rows) -> Vec<DVector<f64>> {
    rows.iter().map(|r| DVector::from_column_slice(r)).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LgmmDocument {
    pub means: Rows,
    pub precisions: Vec<Rows>,
    pub shared_precision: bool,
    pub label_cond: Rows,
    pub priors: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricLayout {
    Shared,
    Local,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LvqDocument {
    pub metric: MetricLayout,
    pub prototypes: Rows,
    pub labels: Vec<usize>,
    /// One matrix for a shared metric, one per prototype for a local one.
    pub omegas: Vec<Rows>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransferMapDocument {
    pub h: Rows,
    pub iterations: usize,
    pub status: TransferStatus,
    pub final_eq_error: Option<f64>,
    pub eq_error_trace: Vec<f64>,
    pub loglik_trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Document {
    Lgmm(LgmmDocument),
    Lvq(LvqDocument),
    TransferMap(TransferMapDocument),
}

impl Document {
    pub fn kind(&self) -> &'static str {
        match self {
            Document::Lgmm(_) => "lgmm",
            Document::Lvq(_) => "lvq",
            Document::TransferMap(_) => "transfer_map",
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents hold only finite numbers")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Document(e.to_string()))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = self.to_json();
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    fn wrong_kind(&self, want: &str) -> Error {
        Error::Document(format!("expected a '{want}' document, found '{}'", self.kind()))
    }

    pub fn into_lgmm(self) -> Result<LabeledGmm> {
        let Document::Lgmm(d) = self else { return Err(self.wrong_kind("lgmm")) };
        let precisions = d.precisions.iter().map(|p| from_rows(p, "precision")).collect::<Result<Vec<_>>>()?;
        let label_cond = from_rows(&d.label_cond, "label_cond")?;
        LabeledGmm::new(from_vecs(&d.means), precisions, d.shared_precision, label_cond, DVector::from_vec(d.priors))
    }

    pub fn into_lvq(self) -> Result<LvqModel> {
        let Document::Lvq(d) = self else { return Err(self.wrong_kind("lvq")) };
        let mut omegas = d.omegas.iter().map(|o| from_rows(o, "omega")).collect::<Result<Vec<_>>>()?;
        let metric = match d.metric {
            MetricLayout::Shared if omegas.len() == 1 => Metric::Shared(omegas.remove(0)),
            MetricLayout::Shared => return Err(Error::Document("a shared metric has exactly one omega".into())),
            MetricLayout::Local => Metric::Local(omegas),
        };
        LvqModel::new(from_vecs(&d.prototypes), d.labels, metric)
    }

    pub fn into_transfer_map(self) -> Result<TransferMap> {
        let Document::TransferMap(d) = self else { return Err(self.wrong_kind("transfer_map")) };
        let h = from_rows(&d.h, "h")?;
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::Document("transfer matrix must be finite".into()));
        }
        Ok(TransferMap {
            h,
            iterations: d.iterations,
            status: d.status,
            eq_error_trace: d.eq_error_trace,
            loglik_trace: d.loglik_trace,
        })
    }
}

impl From<&LabeledGmm> for Document {
    fn from(m: &LabeledGmm) -> Self {
        Document::Lgmm(LgmmDocument {
            means: to_vecs(m.means()),
            precisions: m.precisions().iter().map(to_rows).collect(),
            shared_precision: m.shared_precision(),
            label_cond: to_rows(m.label_cond()),
            priors: m.priors().iter().copied().collect(),
        })
    }
}

impl From<&LvqModel> for Document {
    fn from(m: &LvqModel) -> Self {
        let (metric, omegas) = match m.metric() {
            Metric::Shared(o) => (MetricLayout::Shared, vec![to_rows(o)]),
            Metric::Local(os) => (MetricLayout::Local, os.iter().map(to_rows).collect()),
        };
        Document::Lvq(LvqDocument { metric, prototypes: to_vecs(m.prototypes()), labels: m.labels().to_vec(), omegas })
    }
}

impl From<&TransferMap> for Document {
    fn from(t: &TransferMap) -> Self {
        Document::TransferMap(TransferMapDocument {
            h: to_rows(&t.h),
            iterations: t.iterations,
            status: t.status,
            final_eq_error: t.final_eq_error(),
            eq_error_trace: t.eq_error_trace.clone(),
            loglik_trace: t.loglik_trace.clone(),
        })
    }
}
