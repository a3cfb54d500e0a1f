//! Loading, validating and standardizing rectangular numeric datasets.

use std::collections::HashSet;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{PlaError, Result};
use crate::scalar::Scalar;

/// What to do with rows containing empty, non-numeric or non-finite cells.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NaPolicy {
    #[default]
    Fail,
    DropRow,
}

impl FromStr for NaPolicy {
    type Err = PlaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "fail" => Ok(NaPolicy::Fail),
            "drop-row" => Ok(NaPolicy::DropRow),
            other => Err(PlaError::Config(format!("unknown na policy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CsvOptions {
    pub delimiter: u8,
    pub has_header: bool,
    pub na_policy: NaPolicy,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            delimiter: b',',
            has_header: true,
            na_policy: NaPolicy::Fail,
        }
    }
}

/// N observations of M named variables.
///
/// Invariants: every entry finite, `N >= 2`, `M >= 2`, names unique.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataMatrix<T> {
    values: Array2<T>,
    names: Vec<String>,
}

impl<T: Scalar> DataMatrix<T> {
    pub fn new(values: Array2<T>, names: Vec<String>) -> Result<Self> {
        let (n, m) = values.dim();
        if m < 2 {
            return Err(PlaError::Dimension(format!(
                "need at least 2 variables, got {m}"
            )));
        }
        if n < 2 {
            return Err(PlaError::Dimension(format!(
                "need at least 2 observations, got {n}"
            )));
        }
        if names.len() != m {
            return Err(PlaError::Dimension(format!(
                "{} names for {m} columns",
                names.len()
            )));
        }
        let mut seen = HashSet::with_capacity(m);
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(PlaError::Parse(format!("duplicate variable name `{name}`")));
            }
        }
        if let Some(((i, j), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(PlaError::Parse(format!(
                "non-finite value at row {}, column `{}`",
                i + 1,
                names[j]
            )));
        }
        Ok(Self { values, names })
    }

    /// Columns named `X1..XM`.
    pub fn with_generated_names(values: Array2<T>) -> Result<Self> {
        let names = generated_names(values.ncols());
        Self::new(values, names)
    }

    pub fn values(&self) -> &Array2<T> {
        &self.values
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, j: usize) -> ArrayView1<'_, T> {
        self.values.column(j)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Keep the listed columns, in the given order.
    pub fn select_columns(&self, columns: &[usize]) -> Result<Self> {
        let values = self.values.select(Axis(1), columns);
        let names = columns.iter().map(|&j| self.names[j].clone()).collect();
        Self::new(values, names)
    }

    /// Scale every column by a factor (used to probe scale invariance).
    pub fn scale_columns(&self, factors: &[T]) -> Result<Self> {
        if factors.len() != self.n_cols() {
            return Err(PlaError::Dimension(format!(
                "{} factors for {} columns",
                factors.len(),
                self.n_cols()
            )));
        }
        let mut values = self.values.clone();
        for (mut col, &f) in values.axis_iter_mut(Axis(1)).zip(factors) {
            col.mapv_inplace(|x| x * f);
        }
        Self::new(values, self.names.clone())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = File::create(path)?;
        self.write_csv_to(file, b',')
    }

    pub fn write_csv_to<W: Write>(&self, writer: W, delimiter: u8) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .delimiter(delimiter)
            .from_writer(writer);
        w.write_record(&self.names).map_err(csv_err)?;
        for row in self.values.rows() {
            w.write_record(row.iter().map(|v| v.to_string()))
                .map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn generated_names(m: usize) -> Vec<String> {
    (1..=m).map(|j| format!("X{j}")).collect()
}

fn csv_err(e: csv::Error) -> PlaError {
    PlaError::Parse(e.to_string())
}

fn parse_cell<T: Scalar>(cell: &str) -> Option<T> {
    let v: f64 = cell.trim().parse().ok()?;
    if v.is_finite() {
        T::from_f64(v)
    } else {
        None
    }
}

pub fn load_csv<T: Scalar>(path: impl AsRef<Path>, options: &CsvOptions) -> Result<DataMatrix<T>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| {
        std::io::Error::new(e.kind(), format!("cannot open {}: {e}", path.display()))
    })?;
    read_csv(file, options)
}

pub fn read_csv<T: Scalar, R: Read>(reader: R, options: &CsvOptions) -> Result<DataMatrix<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(options.has_header)
        .flexible(true)
        .from_reader(reader);

    let mut names: Option<Vec<String>> = if options.has_header {
        let header = rdr.headers().map_err(csv_err)?;
        Some(header.iter().map(|s| s.trim().to_string()).collect())
    } else {
        None
    };

    let mut width = names.as_ref().map(Vec::len);
    let mut flat: Vec<T> = Vec::new();
    let mut n_rows = 0usize;
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let row_no = line + 1;
        match width {
            Some(w) if w != record.len() => {
                return Err(PlaError::Parse(format!(
                    "row {row_no} has {} fields, expected {w}",
                    record.len()
                )));
            }
            None => width = Some(record.len()),
            _ => {}
        }
        let parsed: Vec<Option<T>> = record.iter().map(parse_cell).collect();
        if let Some(col) = parsed.iter().position(Option::is_none) {
            match options.na_policy {
                NaPolicy::Fail => {
                    return Err(PlaError::Parse(format!(
                        "row {row_no}, column {}: `{}` is not a finite number",
                        col + 1,
                        &record[col]
                    )));
                }
                NaPolicy::DropRow => continue,
            }
        }
        flat.extend(parsed.into_iter().flatten());
        n_rows += 1;
    }

    let m = width.unwrap_or(0);
    let names = names.take().unwrap_or_else(|| generated_names(m));
    if m < 2 || n_rows < 2 {
        return Err(PlaError::Dimension(format!(
            "need at least 2 rows and 2 columns, got {n_rows}x{m}"
        )));
    }
    let values =
        Array2::from_shape_vec((n_rows, m), flat).map_err(|e| PlaError::Parse(e.to_string()))?;
    DataMatrix::new(values, names)
}

/// Sample mean and unbiased variance (divisor N-1), two-pass.
pub(crate) fn mean_and_variance<T: Scalar>(col: ArrayView1<'_, T>) -> (T, T) {
    let n = T::from_count(col.len());
    let mean = col.sum() / n;
    let ss: T = col.iter().map(|&x| (x - mean) * (x - mean)).sum();
    (mean, ss / (n - T::one()))
}

pub(crate) fn is_constant<T: Scalar>(col: ArrayView1<'_, T>) -> bool {
    let first = col[0];
    col.iter().all(|&x| x == first)
}

/// Center each column and scale it to unit sample variance.
pub fn standardize_columns<T: Scalar>(data: &DataMatrix<T>) -> Result<DataMatrix<T>> {
    let mut values = data.values().clone();
    for (j, mut col) in values.axis_iter_mut(Axis(1)).enumerate() {
        let (mean, var) = mean_and_variance(col.view());
        if is_constant(col.view()) || var <= T::zero() {
            return Err(PlaError::DegenerateColumn(data.names()[j].clone()));
        }
        let sd = var.sqrt();
        col.mapv_inplace(|x| (x - mean) / sd);
    }
    DataMatrix::new(values, data.names().to_vec())
}
