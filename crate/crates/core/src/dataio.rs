//! Dataset ingestion and CSV exports. Configuration lives in [`config`],
//! the model file format in [`model_file`].

pub mod config;
pub mod model_file;

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::classify::ClassificationReport;
use crate::evolution::{ParetoPoint, RunLog};
use crate::regression::Dataset;

pub use config::{ConfigError, Settings};
pub use model_file::{load_model, read_model, save_model, write_model, ModelError};

/// The bundled student score table (14 rows).
pub const TABLE1_CSV: &str = include_str!("../data/table1.csv");

/// Columns ignored unless explicitly requested: the row counter, the
/// exam subtotal (`x1 + ... + x5`) and the letter grade.
pub const DEFAULT_EXCLUDE: [&str; 3] = ["Time", "EXAM SCORE", "GRADE"];

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error("dataset has no data rows")]
    Empty,
    #[error("column `{0}` not found")]
    MissingColumn(String),
    #[error("duplicate column `{0}`")]
    DuplicateColumn(String),
    #[error("row {row}, column {column}: `{value}` is not a number")]
    NonNumeric { row: usize, column: String, value: String },
    #[error("row {row}, column {column}: value is not finite")]
    NonFinite { row: usize, column: String },
    #[error("no predictor columns selected")]
    NoPredictors,
}

/// Which CSV columns become predictors and response.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnSelection {
    /// Response column; `None` loads predictors only.
    pub response: Option<String>,
    /// Explicit predictors. When absent, every column except the response and
    /// the excluded ones.
    pub predictors: Option<Vec<String>>,
    pub exclude: Vec<String>,
}

impl ColumnSelection {
    pub fn training(response: &str) -> Self {
        ColumnSelection {
            response: Some(response.to_string()),
            predictors: None,
            exclude: DEFAULT_EXCLUDE.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// Exactly the named columns, no response.
    pub fn only(columns: &[&str]) -> Self {
        ColumnSelection {
            response: None,
            predictors: Some(columns.iter().map(|s| s.to_string()).collect()),
            exclude: Vec::new(),
        }
    }
}

pub fn load_dataset(path: &Path, selection: &ColumnSelection) -> Result<Dataset, DataError> {
    let file = File::open(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_dataset(file, selection)
}

pub fn read_dataset<R: Read>(reader: R, selection: &ColumnSelection) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| DataError::Csv(e.to_string()))?
        .iter()
        .map(str::to_string)
        .collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(DataError::Empty);
    }
    for (i, h) in header.iter().enumerate() {
        if header[..i].contains(h) {
            return Err(DataError::DuplicateColumn(h.clone()));
        }
    }
    let position = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| DataError::MissingColumn(name.to_string()))
    };

    let response_idx = selection.response.as_deref().map(position).transpose()?;
    let predictor_idx: Vec<usize> = match &selection.predictors {
        Some(names) => names.iter().map(|n| position(n)).collect::<Result<_, _>>()?,
        None => (0..header.len())
            .filter(|&i| Some(i) != response_idx && !selection.exclude.contains(&header[i]))
            .collect(),
    };
    if predictor_idx.is_empty() {
        return Err(DataError::NoPredictors);
    }

    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); predictor_idx.len()];
    let mut response = Vec::new();
    for (r, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| DataError::Csv(e.to_string()))?;
        let row = r + 1;
        let cell = |i: usize| -> Result<f64, DataError> {
            let raw = record.get(i).unwrap_or("");
            let v: f64 = raw.parse().map_err(|_| DataError::NonNumeric {
                row,
                column: header[i].clone(),
                value: raw.to_string(),
            })?;
            if !v.is_finite() {
                return Err(DataError::NonFinite {
                    row,
                    column: header[i].clone(),
                });
            }
            Ok(v)
        };
        for (c, &i) in predictor_idx.iter().enumerate() {
            columns[c].push(cell(i)?);
        }
        if let Some(i) = response_idx {
            response.push(cell(i)?);
        }
    }
    if columns[0].is_empty() {
        return Err(DataError::Empty);
    }
    let names = predictor_idx.iter().map(|&i| header[i].clone()).collect();
    Ok(Dataset::new(
        names,
        columns,
        selection.response.clone(),
        response_idx.map(|_| response),
    ))
}

/// The bundled table with response `TOTAL` and predictors `x1..x6`.
pub fn table1() -> Dataset {
    read_dataset(TABLE1_CSV.as_bytes(), &ColumnSelection::training("TOTAL")).expect("bundled table parses")
}

fn create(path: &Path) -> Result<BufWriter<File>, io::Error> {
    File::create(path).map(BufWriter::new)
}

fn with_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>) -> io::Result<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush()
}

/// Parameter echo as `#` comment lines, then
/// `generation,best_fitness,mean_fitness,best_complexity` and one row per
/// generation.
pub fn write_convergence<W: Write>(log: &RunLog, out: &mut W) -> io::Result<()> {
    for (k, v) in &log.header {
        writeln!(out, "# {k}={v}")?;
    }
    writeln!(out, "# terminated_at={}", log.terminated_at)?;
    writeln!(out, "# termination_reason={}", log.termination_reason)?;
    writeln!(out, "generation,best_fitness,mean_fitness,best_complexity")?;
    for r in &log.records {
        writeln!(out, "{},{},{},{}", r.generation, r.best_fitness, r.mean_fitness, r.best_complexity)?;
    }
    Ok(())
}

pub fn export_convergence(log: &RunLog, path: &Path) -> io::Result<()> {
    with_file(path, |w| write_convergence(log, w))
}

pub fn write_pareto<W: Write>(points: &[ParetoPoint], out: &mut W) -> io::Result<()> {
    writeln!(out, "individual,complexity,fitness,on_front")?;
    for p in points {
        writeln!(out, "{},{},{},{}", p.individual_id, p.complexity, p.fitness, !p.dominated)?;
    }
    Ok(())
}

pub fn export_pareto(points: &[ParetoPoint], path: &Path) -> io::Result<()> {
    with_file(path, |w| write_pareto(points, w))
}

pub fn write_report<W: Write>(report: &ClassificationReport, out: &mut W) -> io::Result<()> {
    writeln!(out, "row,predicted,label,failed")?;
    for r in &report.rows {
        writeln!(out, "{},{},{},{}", r.row, r.predicted, r.label, r.failed)?;
    }
    writeln!(out, "# failure_rate_percent={}", report.failure_rate_percent)
}

pub fn export_report(report: &ClassificationReport, path: &Path) -> io::Result<()> {
    with_file(path, |w| write_report(report, w))
}

pub fn write_predictions<W: Write>(predictions: &[f64], out: &mut W) -> io::Result<()> {
    writeln!(out, "row,predicted")?;
    for (i, p) in predictions.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, p)?;
    }
    Ok(())
}

pub fn export_predictions(predictions: &[f64], path: &Path) -> io::Result<()> {
    with_file(path, |w| write_predictions(predictions, w))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{GenerationRecord, TerminationReason};

    #[test]
    fn bundled_table_shape() {
        let t = table1();
        assert_eq!(t.rows(), 14);
        assert_eq!(t.var_names(), ["x1", "x2", "x3", "x4", "x5", "x6"]);
        assert_eq!(
            t.column("x6").unwrap(),
            [16., 20., 16., 17., 16., 20., 16., 16., 20., 21., 16., 21., 16., 16.]
        );
        assert_eq!(t.response_name(), Some("TOTAL"));
    }

    #[test]
    fn header_only_is_empty() {
        let err = read_dataset("a,b,y\n".as_bytes(), &ColumnSelection::training("y")).unwrap_err();
        assert!(matches!(err, DataError::Empty));
        let err = read_dataset("".as_bytes(), &ColumnSelection::training("y")).unwrap_err();
        assert!(matches!(err, DataError::Empty));
    }

    #[test]
    fn non_numeric_cell_is_located() {
        let csv = "x1,x2,y\n1,2,3\n4,5,6\n7,abc,9\n";
        match read_dataset(csv.as_bytes(), &ColumnSelection::training("y")).unwrap_err() {
            DataError::NonNumeric { row, column, value } => {
                assert_eq!((row, column.as_str(), value.as_str()), (3, "x2", "abc"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn missing_and_non_finite_columns() {
        let err = read_dataset("x1,y\n1,2\n".as_bytes(), &ColumnSelection::training("TOTAL")).unwrap_err();
        assert!(matches!(err, DataError::MissingColumn(c) if c == "TOTAL"));
        let err = read_dataset("x1,y\nNaN,2\n".as_bytes(), &ColumnSelection::training("y")).unwrap_err();
        assert!(matches!(err, DataError::NonFinite { row: 1, .. }));
        let err = read_dataset("x1,y\ninf,2\n".as_bytes(), &ColumnSelection::training("y")).unwrap_err();
        assert!(matches!(err, DataError::NonFinite { .. }));
    }

    #[test]
    fn explicit_predictor_selection() {
        let sel = ColumnSelection {
            response: Some("TOTAL".into()),
            predictors: Some(["x1", "x2", "x3", "x4", "x5", "x6"].map(String::from).to_vec()),
            exclude: vec![],
        };
        let d = read_dataset(TABLE1_CSV.as_bytes(), &sel).unwrap();
        assert_eq!((d.rows(), d.num_vars()), (14, 6));
        let only = read_dataset(TABLE1_CSV.as_bytes(), &ColumnSelection::only(&["TOTAL"])).unwrap();
        assert!(only.response().is_err());
        assert_eq!(only.num_vars(), 1);
    }

    #[test]
    fn convergence_csv_layout() {
        let log = RunLog {
            header: vec![("seed".into(), "7".into())],
            records: vec![GenerationRecord {
                generation: 1,
                best_fitness: 0.5,
                mean_fitness: 2.25,
                best_complexity: 9,
                invalid_count: 0,
            }],
            terminated_at: 1,
            termination_reason: TerminationReason::MaxGenerations,
        };
        let mut buf = Vec::new();
        write_convergence(&log, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "# seed=7\n# terminated_at=1\n# termination_reason=MAX_GENERATIONS\n\
             generation,best_fitness,mean_fitness,best_complexity\n1,0.5,2.25,9\n"
        );
    }

    #[test]
    fn pareto_csv_single_point() {
        let p = ParetoPoint { fitness: 1.5, complexity: 3, individual_id: 0, dominated: false };
        let mut buf = Vec::new();
        write_pareto(&[p], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "individual,complexity,fitness,on_front\n0,3,1.5,true\n");
    }
}
