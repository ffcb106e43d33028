//! Tabular data model: an `n x p` predictor matrix plus one outcome.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SdaError};

/// Which slicing rule an outcome uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutcomeKind {
    Continuous,
    Categorical,
    Survival,
}

impl std::str::FromStr for OutcomeKind {
    type Err = SdaError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "continuous" => Ok(OutcomeKind::Continuous),
            "categorical" => Ok(OutcomeKind::Categorical),
            "survival" => Ok(OutcomeKind::Survival),
            other => Err(SdaError::invalid(format!("unknown outcome kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Continuous(Vec<f64>),
    Categorical(Vec<String>),
    /// Observed time (event or censoring) and event indicator in {0, 1}.
    Survival { time: Vec<f64>, event: Vec<u8> },
}

impl Outcome {
    pub fn len(&self) -> usize {
        match self {
            Outcome::Continuous(y) => y.len(),
            Outcome::Categorical(y) => y.len(),
            Outcome::Survival { time, .. } => time.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind(&self) -> OutcomeKind {
        match self {
            Outcome::Continuous(_) => OutcomeKind::Continuous,
            Outcome::Categorical(_) => OutcomeKind::Categorical,
            Outcome::Survival { .. } => OutcomeKind::Survival,
        }
    }

    /// Real-valued surrogate used for marginal correlation screening:
    /// the value itself, the sorted-label code, or the observed time.
    pub fn as_numeric(&self) -> Vec<f64> {
        match self {
            Outcome::Continuous(y) => y.clone(),
            Outcome::Categorical(labels) => {
                let mut distinct: Vec<&String> = labels.iter().collect();
                distinct.sort();
                distinct.dedup();
                labels
                    .iter()
                    .map(|l| distinct.binary_search(&l).unwrap() as f64)
                    .collect()
            }
            Outcome::Survival { time, .. } => time.clone(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            Outcome::Continuous(y) => {
                if y.iter().any(|v| !v.is_finite()) {
                    return Err(SdaError::NonFinite("outcome"));
                }
            }
            Outcome::Categorical(_) => {}
            Outcome::Survival { time, event } => {
                if time.len() != event.len() {
                    return Err(SdaError::mismatch("survival time and event lengths differ"));
                }
                for (row, (&t, &e)) in time.iter().zip(event).enumerate() {
                    if !t.is_finite() {
                        return Err(SdaError::NonFinite("survival time"));
                    }
                    if t < 0.0 {
                        return Err(SdaError::NegativeSurvivalTime { row, value: t });
                    }
                    if e > 1 {
                        return Err(SdaError::BadEventIndicator {
                            row,
                            value: e.to_string(),
                        });
                    }
                }
            }
        }
        Ok(())
    }
}

/// Names the outcome column(s) of a CSV file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutcomeSpec {
    Continuous(String),
    Categorical(String),
    Survival { time: String, event: String },
}

impl OutcomeSpec {
    /// Builds a spec from a comma-separated column list, e.g. `"time,status"`
    /// for survival outcomes.
    pub fn parse(columns: &str, kind: OutcomeKind) -> Result<Self> {
        let names: Vec<String> = columns
            .split(',')
            .map(|s| s.trim().to_string())
            .filter(|s| !s.is_empty())
            .collect();
        match (kind, names.as_slice()) {
            (OutcomeKind::Continuous, [y]) => Ok(OutcomeSpec::Continuous(y.clone())),
            (OutcomeKind::Categorical, [y]) => Ok(OutcomeSpec::Categorical(y.clone())),
            (OutcomeKind::Survival, [t, e]) => Ok(OutcomeSpec::Survival {
                time: t.clone(),
                event: e.clone(),
            }),
            (OutcomeKind::Survival, _) => Err(SdaError::IncompleteSurvivalSpec),
            _ => Err(SdaError::invalid(format!(
                "expected exactly one outcome column, got '{columns}'"
            ))),
        }
    }

    fn columns(&self) -> Vec<&str> {
        match self {
            OutcomeSpec::Continuous(c) | OutcomeSpec::Categorical(c) => vec![c.as_str()],
            OutcomeSpec::Survival { time, event } => vec![time.as_str(), event.as_str()],
        }
    }
}

/// Predictors and outcome. Immutable once built; transformations return a
/// new value.
#[derive(Debug, Clone)]
pub struct Dataset {
    x: DMatrix<f64>,
    y: Outcome,
    names: Vec<String>,
    column_means: Vec<f64>,
    column_scales: Option<Vec<f64>>,
    centered: bool,
}

impl Dataset {
    pub fn new(x: DMatrix<f64>, y: Outcome) -> Result<Self> {
        let names = (0..x.ncols()).map(|j| format!("x{}", j + 1)).collect();
        Self::with_names(x, y, names)
    }

    pub fn with_names(x: DMatrix<f64>, y: Outcome, names: Vec<String>) -> Result<Self> {
        let (n, p) = x.shape();
        if n < 2 {
            return Err(SdaError::invalid(format!("need at least 2 observations, got {n}")));
        }
        if p < 1 {
            return Err(SdaError::invalid("need at least one predictor"));
        }
        if y.len() != n {
            return Err(SdaError::mismatch(format!(
                "outcome has {} entries but the predictor matrix has {n} rows",
                y.len()
            )));
        }
        if names.len() != p {
            return Err(SdaError::mismatch("column name count differs from p"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(SdaError::NonFinite("predictor matrix"));
        }
        y.validate()?;
        Ok(Dataset {
            x,
            y,
            names,
            column_means: vec![0.0; p],
            column_scales: None,
            centered: false,
        })
    }

    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn x(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn y(&self) -> &Outcome {
        &self.y
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, j: usize) -> &[f64] {
        column(&self.x, j)
    }

    pub fn column_means(&self) -> &[f64] {
        &self.column_means
    }

    pub fn column_scales(&self) -> Option<&[f64]> {
        self.column_scales.as_deref()
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    /// Indices of predictor columns with zero sample variance. Tests on
    /// these columns fail with a degenerate variance estimate.
    pub fn constant_columns(&self) -> Vec<usize> {
        (0..self.p())
            .filter(|&j| {
                let col = self.column(j);
                col.iter().all(|&v| v == col[0])
            })
            .collect()
    }

    /// Subtracts each column's sample mean.
    pub fn center_columns(&self) -> Result<Dataset> {
        if self.centered {
            return Err(SdaError::AlreadyCentered);
        }
        let n = self.n() as f64;
        let mut x = self.x.clone();
        let mut means = Vec::with_capacity(self.p());
        for mut col in x.column_iter_mut() {
            let mean = col.iter().sum::<f64>() / n;
            col.iter_mut().for_each(|v| *v -= mean);
            means.push(mean);
        }
        Ok(Dataset {
            x,
            y: self.y.clone(),
            names: self.names.clone(),
            column_means: means,
            column_scales: None,
            centered: true,
        })
    }

    /// Rescales centered columns to unit sample variance (divisor n).
    /// Constant columns are left untouched with scale 1.
    pub fn scale_columns(&self) -> Result<Dataset> {
        if !self.centered {
            return Err(SdaError::invalid("scale_columns requires a centered dataset"));
        }
        let n = self.n() as f64;
        let mut x = self.x.clone();
        let mut scales = Vec::with_capacity(self.p());
        for mut col in x.column_iter_mut() {
            let sd = (col.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
            let s = if sd > 0.0 { sd } else { 1.0 };
            col.iter_mut().for_each(|v| *v /= s);
            scales.push(s);
        }
        Ok(Dataset {
            column_scales: Some(scales),
            x,
            ..self.clone()
        })
    }

    /// Undoes centering (and scaling): returns the matrix as originally loaded.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut x = self.x.clone();
        for (j, mut col) in x.column_iter_mut().enumerate() {
            let s = self.column_scales.as_ref().map_or(1.0, |s| s[j]);
            let m = self.column_means[j];
            col.iter_mut().for_each(|v| *v = *v * s + m);
        }
        x
    }

    /// Keeps only the given predictor columns (in the given order).
    pub fn select_columns(&self, cols: &[usize]) -> Result<Dataset> {
        if let Some(&bad) = cols.iter().find(|&&j| j >= self.p()) {
            return Err(SdaError::invalid(format!("column index {bad} out of range")));
        }
        let x = self.x.select_columns(cols);
        Ok(Dataset {
            x,
            y: self.y.clone(),
            names: cols.iter().map(|&j| self.names[j].clone()).collect(),
            column_means: cols.iter().map(|&j| self.column_means[j]).collect(),
            column_scales: self
                .column_scales
                .as_ref()
                .map(|s| cols.iter().map(|&j| s[j]).collect()),
            centered: self.centered,
        })
    }
}

/// Contiguous view of column `j` of a column-major matrix.
pub fn column(x: &DMatrix<f64>, j: usize) -> &[f64] {
    let n = x.nrows();
    &x.as_slice()[j * n..(j + 1) * n]
}

/// Reads a delimited file with a header row. Every non-outcome column is a
/// predictor and must parse as a finite real.
pub fn load_csv(path: impl AsRef<Path>, outcome: &OutcomeSpec, delimiter: u8) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| SdaError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();

    let mut outcome_idx = Vec::new();
    for name in outcome.columns() {
        match headers.iter().position(|h| h == name) {
            Some(i) => outcome_idx.push(i),
            None => return Err(SdaError::MissingOutcomeColumn(name.to_string())),
        }
    }
    let predictor_idx: Vec<usize> = (0..headers.len())
        .filter(|i| !outcome_idx.contains(i))
        .collect();
    let p = predictor_idx.len();

    let mut values: Vec<f64> = Vec::new();
    let mut y_num = Vec::new();
    let mut y_lab = Vec::new();
    let mut events = Vec::new();
    let mut n = 0usize;
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        // 1-based data rows, header excluded
        let row = r + 1;
        for &c in &predictor_idx {
            let cell = record.get(c).unwrap_or("");
            values.push(parse_finite(cell, row, &headers[c])?);
        }
        match outcome {
            OutcomeSpec::Continuous(_) => {
                let c = outcome_idx[0];
                y_num.push(parse_finite(record.get(c).unwrap_or(""), row, &headers[c])?);
            }
            OutcomeSpec::Categorical(_) => {
                y_lab.push(record.get(outcome_idx[0]).unwrap_or("").to_string());
            }
            OutcomeSpec::Survival { .. } => {
                let (tc, ec) = (outcome_idx[0], outcome_idx[1]);
                let t = parse_finite(record.get(tc).unwrap_or(""), row, &headers[tc])?;
                if t < 0.0 {
                    return Err(SdaError::NegativeSurvivalTime { row, value: t });
                }
                let raw = record.get(ec).unwrap_or("");
                let e = match raw.parse::<f64>() {
                    Ok(0.0) => 0u8,
                    Ok(1.0) => 1u8,
                    _ => {
                        return Err(SdaError::BadEventIndicator {
                            row,
                            value: raw.to_string(),
                        })
                    }
                };
                y_num.push(t);
                events.push(e);
            }
        }
        n += 1;
    }

    // values are row-major; DMatrix::from_row_slice transposes into column-major.
    let x = DMatrix::from_row_slice(n, p, &values);
    let y = match outcome {
        OutcomeSpec::Continuous(_) => Outcome::Continuous(y_num),
        OutcomeSpec::Categorical(_) => Outcome::Categorical(y_lab),
        OutcomeSpec::Survival { .. } => Outcome::Survival {
            time: y_num,
            event: events,
        },
    };
    let names = predictor_idx.iter().map(|&c| headers[c].clone()).collect();
    Dataset::with_names(x, y, names)
}

fn parse_finite(cell: &str, row: usize, column: &str) -> Result<f64> {
    match cell.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(SdaError::BadCell {
            row,
            column: column.to_string(),
            value: cell.to_string(),
        }),
    }
}

/// Writes predictors followed by the outcome column(s). Reals use the
/// shortest representation that parses back to the same bits.
pub fn write_csv(d: &Dataset, path: impl AsRef<Path>, outcome: &OutcomeSpec, delimiter: u8) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|source| SdaError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut w = BufWriter::new(file);
    let sep = (delimiter as char).to_string();
    let io = |source| SdaError::Io {
        path: path.to_path_buf(),
        source,
    };

    let mut header: Vec<&str> = d.names().iter().map(String::as_str).collect();
    header.extend(outcome.columns());
    writeln!(w, "{}", header.join(&sep)).map_err(io)?;
    for r in 0..d.n() {
        let mut cells: Vec<String> = (0..d.p()).map(|j| format!("{:?}", d.x[(r, j)])).collect();
        match d.y() {
            Outcome::Continuous(y) => cells.push(format!("{:?}", y[r])),
            Outcome::Categorical(y) => cells.push(y[r].clone()),
            Outcome::Survival { time, event } => {
                cells.push(format!("{:?}", time[r]));
                cells.push(event[r].to_string());
            }
        }
        writeln!(w, "{}", cells.join(&sep)).map_err(io)?;
    }
    w.flush().map_err(io)
}
