//! Report tables: one row per `N`, columns
//! `n, err_mean_<m>, err_std_<m>, time_mean_<m>, time_std_<m>, folds_<m>, failures_<m>`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{ExperimentReport, Method, ReportRow, Summary};
use crate::dataset::csv_io;
use crate::error::{Error, Result};

const FIELDS: [&str; 6] = ["err_mean", "err_std", "time_mean", "time_std", "folds", "failures"];

pub fn write_report_csv(report: &ExperimentReport, path: impl AsRef<Path>) -> Result<()> {
    report_to_csv_writer(report, File::create(path)?)
}

pub fn read_report_csv(path: impl AsRef<Path>) -> Result<ExperimentReport> {
    report_from_csv_reader(File::open(path)?)
}

pub fn report_to_csv_writer<W: Write>(report: &ExperimentReport, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["n".to_string()];
    for m in &report.methods {
        header.extend(FIELDS.iter().map(|f| format!("{f}_{m}")));
    }
    w.write_record(&header).map_err(csv_io)?;
    for row in &report.rows {
        let mut rec = vec![row.n.to_string()];
        for c in &row.cells {
            rec.extend([
                format!("{:?}", c.err_mean),
                format!("{:?}", c.err_std),
                format!("{:?}", c.time_mean),
                format!("{:?}", c.time_std),
                c.folds.to_string(),
                c.failures.to_string(),
            ]);
        }
        w.write_record(&rec).map_err(csv_io)?;
    }
    w.flush()?;
    Ok(())
}

fn parse_err(line: u64, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

pub fn report_from_csv_reader<R: Read>(reader: R) -> Result<ExperimentReport> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = r.headers().map_err(csv_io)?.clone();
    if header.get(0) != Some("n") || (header.len() - 1) % FIELDS.len() != 0 {
        return Err(parse_err(1, "expected header 'n' followed by six columns per method"));
    }
    let mut methods = Vec::new();
    for chunk in header.iter().skip(1).collect::<Vec<_>>().chunks(FIELDS.len()) {
        let name = chunk[0]
            .strip_prefix("err_mean_")
            .ok_or_else(|| parse_err(1, format!("unexpected column '{}'", chunk[0])))?;
        for (col, field) in chunk.iter().zip(FIELDS) {
            if *col != format!("{field}_{name}") {
                return Err(parse_err(1, format!("expected column '{field}_{name}', found '{col}'")));
            }
        }
        methods.push(name.parse::<Method>().map_err(|e| parse_err(1, e.to_string()))?);
    }

    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| parse_err(e.position().map_or(0, |p| p.line()), e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let float = |i: usize| -> Result<f64> {
            rec[i].trim().parse().map_err(|_| parse_err(line, format!("invalid number '{}'", &rec[i])))
        };
        let count = |i: usize| -> Result<usize> {
            rec[i].trim().parse().map_err(|_| parse_err(line, format!("invalid count '{}'", &rec[i])))
        };
        let n = count(0)?;
        let cells = (0..methods.len())
            .map(|k| {
                let b = 1 + k * FIELDS.len();
                Ok(Summary {
                    err_mean: float(b)?,
                    err_std: float(b + 1)?,
                    time_mean: float(b + 2)?,
                    time_std: float(b + 3)?,
                    folds: count(b + 4)?,
                    failures: count(b + 5)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(ReportRow { n, cells });
    }
    Ok(ExperimentReport { methods, rows, source: vec![], records: vec![] })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ExperimentReport {
        let cell = |e: f64| Summary {
            err_mean: e,
            err_std: 0.1 / 3.0,
            time_mean: 1.2345678901234567e-4,
            time_std: 0.0,
            folds: 9,
            failures: 1,
        };
        ExperimentReport {
            methods: vec![Method::Em, Method::EmLoc],
            rows: vec![
                ReportRow { n: 4, cells: vec![cell(0.1), cell(std::f64::consts::PI / 10.0)] },
                ReportRow { n: 8, cells: vec![cell(f64::MIN_POSITIVE), cell(1.0)] },
            ],
            source: vec![],
            records: vec![],
        }
    }

    fn round_trip(r: &ExperimentReport) -> ExperimentReport {
        let mut buf = Vec::new();
        report_to_csv_writer(r, &mut buf).unwrap();
        report_from_csv_reader(buf.as_slice()).unwrap()
    }

    #[test]
    fn round_trip_is_exact() {
        let r = sample();
        assert_eq!(round_trip(&r), r);
    }

    #[test]
    fn header_names_columns_per_method() {
        let mut buf = Vec::new();
        report_to_csv_writer(&sample(), &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(
            text.starts_with("n,err_mean_em,err_std_em,time_mean_em,time_std_em,folds_em,failures_em,err_mean_em_loc")
        );
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = ExperimentReport { methods: vec![Method::Naive], ..Default::default() };
        let mut buf = Vec::new();
        report_to_csv_writer(&r, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap().lines().count(), 1);
        assert_eq!(round_trip(&r), r);
    }

    #[test]
    fn nan_cells_survive() {
        let mut r = sample();
        r.rows[0].cells[0].err_mean = f64::NAN;
        let back = round_trip(&r);
        assert!(back.rows[0].cells[0].err_mean.is_nan());
    }

    #[test]
    fn malformed_value_reports_line() {
        let text =
            "n,err_mean_em,err_std_em,time_mean_em,time_std_em,folds_em,failures_em\n4,0.1,0,0,0,3,0\n8,x,0,0,0,3,0\n";
        match report_from_csv_reader(text.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        let bad_header = "n,err_mean_em,oops\n";
        assert!(matches!(report_from_csv_reader(bad_header.as_bytes()), Err(Error::Parse { line: 1, .. })));
    }
}
