//! Datasets of (response, covariates) pairs and CSV ingestion.

use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Responses strictly inside (0,1) paired with a row-major covariate matrix.
///
/// The intercept is implicit; `x` holds only the `p` covariate columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    y: Vec<f64>,
    x: Vec<f64>,
    p: usize,
    names: Vec<String>,
}

fn check_response(y: &[f64]) -> Result<()> {
    let rows: Vec<usize> = y
        .iter()
        .enumerate()
        .filter(|(_, v)| !(**v > 0.0 && **v < 1.0))
        .map(|(i, _)| i + 1)
        .collect();
    if rows.is_empty() {
        Ok(())
    } else {
        Err(Error::OutOfRangeResponse { rows })
    }
}

impl Dataset {
    /// Build from a response vector and a row-major covariate buffer with `p` columns.
    pub fn from_flat(y: Vec<f64>, x: Vec<f64>, p: usize) -> Result<Self> {
        if x.len() != y.len() * p {
            return Err(Error::InvalidData(format!(
                "{} covariate values for {} rows of {} columns",
                x.len(),
                y.len(),
                p
            )));
        }
        check_response(&y)?;
        if let Some(i) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidData(format!(
                "non-finite covariate at row {}",
                i / p.max(1) + 1
            )));
        }
        let names = (1..=p).map(|j| format!("x{j}")).collect();
        Ok(Self { y, x, p, names })
    }

    pub fn from_rows(y: Vec<f64>, rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if rows.len() != y.len() {
            return Err(Error::InvalidData(format!(
                "{} responses but {} covariate rows",
                y.len(),
                rows.len()
            )));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::DimensionMismatch {
                expected: p,
                got: rows[r].len(),
            });
        }
        Self::from_flat(y, rows.concat(), p)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                got: names.len(),
            });
        }
        self.names = names;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    /// Row-major covariate buffer.
    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.p..(i + 1) * self.p]
    }

    pub fn covariate_names(&self) -> &[String] {
        &self.names
    }

    /// The rows at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Self {
        let mut x = Vec::with_capacity(idx.len() * self.p);
        for &i in idx {
            x.extend_from_slice(self.row(i));
        }
        Self {
            y: idx.iter().map(|&i| self.y[i]).collect(),
            x,
            p: self.p,
            names: self.names.clone(),
        }
    }

    /// Append one observation.
    pub fn push(&mut self, y: f64, x: &[f64]) -> Result<()> {
        if x.len() != self.p {
            return Err(Error::DimensionMismatch {
                expected: self.p,
                got: x.len(),
            });
        }
        check_response(&[y])?;
        self.y.push(y);
        self.x.extend_from_slice(x);
        Ok(())
    }

    pub fn check_covariates(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.p {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.p,
                got: x.len(),
            })
        }
    }
}

/// Linear map from a bounded interval `(a, b)` onto `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescale {
    pub lower: f64,
    pub upper: f64,
}

impl Rescale {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        if lower.is_finite() && upper.is_finite() && lower < upper {
            Ok(Self { lower, upper })
        } else {
            Err(Error::InvalidConfig(format!(
                "rescale bounds must satisfy a < b, got ({lower}, {upper})"
            )))
        }
    }

    pub fn apply(&self, v: f64) -> f64 {
        (v - self.lower) / (self.upper - self.lower)
    }

    pub fn invert(&self, u: f64) -> f64 {
        self.lower + u * (self.upper - self.lower)
    }
}

/// Parsed CSV with a `y` column and the remaining numeric columns as covariates.
pub fn load_csv(path: impl AsRef<Path>, rescale: Option<Rescale>) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_csv(file, rescale)
}

pub fn read_csv<R: Read>(reader: R, rescale: Option<Rescale>) -> Result<Dataset> {
    let table = read_table(reader, true)?;
    let y_col = table.response.ok_or(Error::MissingResponseColumn)?;
    let mut y = table.columns[y_col].clone();
    if let Some(r) = rescale {
        y.iter_mut().for_each(|v| *v = r.apply(*v));
    }
    let cov: Vec<usize> = (0..table.headers.len()).filter(|&j| j != y_col).collect();
    let n = y.len();
    let mut x = Vec::with_capacity(n * cov.len());
    for i in 0..n {
        x.extend(cov.iter().map(|&j| table.columns[j][i]));
    }
    let names = cov.iter().map(|&j| table.headers[j].clone()).collect();
    Dataset::from_flat(y, x, cov.len())?.with_names(names)
}

/// Covariate rows for prediction, with the response column when present.
#[derive(Debug, Clone)]
pub struct NewData {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub truth: Option<Vec<f64>>,
}

pub fn read_new_data<R: Read>(reader: R, rescale: Option<Rescale>) -> Result<NewData> {
    let table = read_table(reader, false)?;
    let cov: Vec<usize> = (0..table.headers.len())
        .filter(|&j| Some(j) != table.response)
        .collect();
    let n = table.columns.first().map_or(0, Vec::len);
    let rows = (0..n)
        .map(|i| cov.iter().map(|&j| table.columns[j][i]).collect())
        .collect();
    let truth = table.response.map(|j| {
        let mut t = table.columns[j].clone();
        if let Some(r) = rescale {
            t.iter_mut().for_each(|v| *v = r.apply(*v));
        }
        t
    });
    Ok(NewData {
        names: cov.iter().map(|&j| table.headers[j].clone()).collect(),
        rows,
        truth,
    })
}

struct Table {
    headers: Vec<String>,
    columns: Vec<Vec<f64>>,
    response: Option<usize>,
}

fn read_table<R: Read>(reader: R, need_response: bool) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    let response = headers.iter().position(|h| h == "y");
    if need_response && response.is_none() {
        return Err(Error::MissingResponseColumn);
    }
    let mut columns = vec![Vec::new(); headers.len()];
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            column: String::new(),
            message: e.to_string(),
        })?;
        for (j, h) in headers.iter().enumerate() {
            let cell = rec.get(j).unwrap_or("");
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row,
                column: h.clone(),
                message: if cell.is_empty() {
                    "missing value".into()
                } else {
                    format!("`{cell}` is not a number")
                },
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row,
                    column: h.clone(),
                    message: format!("`{cell}` is not finite"),
                });
            }
            columns[j].push(v);
        }
    }
    Ok(Table {
        headers,
        columns,
        response,
    })
}
