use std::fs::File;
use std::path::Path;

use indexmap::IndexMap;
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Continuous,
    Binary,
    Categorical,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Continuous(Vec<f64>),
    Binary(Vec<u8>),
    Categorical(Vec<u32>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Continuous(v) => v.len(),
            Column::Binary(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn column_type(&self) -> ColumnType {
        match self {
            Column::Continuous(_) => ColumnType::Continuous,
            Column::Binary(_) => ColumnType::Binary,
            Column::Categorical(_) => ColumnType::Categorical,
        }
    }

    pub fn get(&self, i: usize) -> f64 {
        match self {
            Column::Continuous(v) => v[i],
            Column::Binary(v) => v[i] as f64,
            Column::Categorical(v) => v[i] as f64,
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.get(i)).collect()
    }
}

/// Applied z-scoring: `scaled = (raw − mean) / sd`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaling {
    pub mean: f64,
    pub sd: f64,
}

/// Declared column types; columns missing from the schema are inferred
/// (binary when every value is 0 or 1, continuous otherwise).
pub type Schema = IndexMap<String, ColumnType>;

/// Column-typed table with an ordered set of named columns.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Cohort {
    columns: IndexMap<String, Column>,
    n: usize,
    scaling: IndexMap<String, Scaling>,
}

impl Cohort {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_rows(n: usize) -> Self {
        Self {
            n,
            ..Self::default()
        }
    }

    /// Add or replace a column. The first column fixes the row count of an
    /// empty cohort.
    pub fn insert(&mut self, name: impl Into<String>, column: Column) -> Result<()> {
        let name = name.into();
        if self.columns.is_empty() && self.n == 0 {
            self.n = column.len();
        }
        if column.len() != self.n {
            return Err(Error::DimensionMismatch {
                context: "cohort column length",
                expected: self.n,
                found: column.len(),
            });
        }
        if let Column::Binary(v) = &column {
            if let Some(row) = v.iter().position(|&b| b > 1) {
                return Err(Error::Cell {
                    row,
                    column: name,
                    message: format!("binary column holds {}", v[row]),
                });
            }
        }
        self.scaling.shift_remove(&name);
        self.columns.insert(name, column);
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.columns.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .get(name)
            .ok_or_else(|| Error::MissingColumn(name.to_string()))
    }

    pub fn values(&self, name: &str) -> Result<Vec<f64>> {
        Ok(self.column(name)?.to_f64())
    }

    pub fn scaling(&self) -> &IndexMap<String, Scaling> {
        &self.scaling
    }

    /// `N × columns.len()` matrix of the named columns.
    pub fn matrix<S: AsRef<str>>(&self, columns: &[S]) -> Result<DMatrix<f64>> {
        let cols = columns
            .iter()
            .map(|c| self.column(c.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(DMatrix::from_fn(self.n, cols.len(), |i, j| cols[j].get(i)))
    }

    pub fn schema(&self) -> Schema {
        self.columns
            .iter()
            .map(|(k, c)| (k.clone(), c.column_type()))
            .collect()
    }
}

fn parse_cell(raw: &str, ty: ColumnType, row: usize, column: &str) -> Result<f64> {
    let cell_err = |message: String| Error::Cell {
        row,
        column: column.to_string(),
        message,
    };
    let v: f64 = raw
        .parse()
        .map_err(|_| cell_err(format!("cannot parse `{raw}` as a number")))?;
    if !v.is_finite() {
        return Err(cell_err(format!("non-finite value `{raw}`")));
    }
    match ty {
        ColumnType::Continuous => Ok(v),
        ColumnType::Binary if v == 0.0 || v == 1.0 => Ok(v),
        ColumnType::Binary => Err(cell_err(format!("binary column holds `{raw}`"))),
        ColumnType::Categorical if v >= 0.0 && v.fract() == 0.0 && v <= u32::MAX as f64 => Ok(v),
        ColumnType::Categorical => Err(cell_err(format!("`{raw}` is not a category code"))),
    }
}

/// Read a comma-separated file with a header row.
///
/// Cell errors report the 1-based line number in the file (the header is
/// line 1).
pub fn load_csv(path: impl AsRef<Path>, schema: &Schema) -> Result<Cohort> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::Empty(format!("{} has no header", path.display())));
    }
    for name in schema.keys() {
        if !headers.contains(name) {
            return Err(Error::MissingColumn(name.clone()));
        }
    }

    let mut raw: Vec<Vec<String>> = vec![Vec::new(); headers.len()];
    for record in reader.records() {
        let record = record?;
        for (j, field) in record.iter().enumerate() {
            raw[j].push(field.to_string());
        }
    }
    let n = raw[0].len();
    if n == 0 {
        return Err(Error::Empty(format!("{} has no data rows", path.display())));
    }

    let mut cohort = Cohort::with_rows(n);
    for (name, cells) in headers.iter().zip(raw) {
        let ty = match schema.get(name) {
            Some(t) => *t,
            None => infer_type(&cells),
        };
        let values = cells
            .iter()
            .enumerate()
            .map(|(i, c)| parse_cell(c, ty, i + 2, name))
            .collect::<Result<Vec<f64>>>()?;
        let column = match ty {
            ColumnType::Continuous => Column::Continuous(values),
            ColumnType::Binary => Column::Binary(values.iter().map(|&v| v as u8).collect()),
            ColumnType::Categorical => Column::Categorical(values.iter().map(|&v| v as u32).collect()),
        };
        cohort.insert(name.clone(), column)?;
    }
    Ok(cohort)
}

fn infer_type(cells: &[String]) -> ColumnType {
    let binary = cells
        .iter()
        .all(|c| matches!(c.parse::<f64>(), Ok(v) if v == 0.0 || v == 1.0));
    if binary {
        ColumnType::Binary
    } else {
        ColumnType::Continuous
    }
}

/// Write the cohort as CSV. Continuous values use the shortest decimal
/// representation that parses back to the same `f64`.
pub fn save_cohort(cohort: &Cohort, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut writer = csv::WriterBuilder::new().from_writer(file);
    writer.write_record(cohort.columns.keys())?;
    for i in 0..cohort.n {
        let row: Vec<String> = cohort
            .columns
            .values()
            .map(|c| match c {
                Column::Continuous(v) => format!("{}", v[i]),
                Column::Binary(v) => v[i].to_string(),
                Column::Categorical(v) => v[i].to_string(),
            })
            .collect();
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

/// Z-score the named continuous columns with the sample standard deviation
/// (divisor `n − 1`). Columns that already carry a scaling record are left
/// unchanged.
pub fn standardize<S: AsRef<str>>(cohort: &Cohort, columns: &[S]) -> Result<Cohort> {
    let mut out = cohort.clone();
    for name in columns {
        let name = name.as_ref();
        if out.scaling.contains_key(name) {
            continue;
        }
        let values = match out.column(name)? {
            Column::Continuous(v) => v.clone(),
            other => {
                return Err(Error::InvalidParameter(format!(
                    "cannot standardize {:?} column `{name}`",
                    other.column_type()
                )))
            }
        };
        let n = values.len();
        if n < 2 {
            return Err(Error::ZeroVariance(name.to_string()));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let sd = var.sqrt();
        if !(sd > 0.0) || !sd.is_finite() {
            return Err(Error::ZeroVariance(name.to_string()));
        }
        let scaled = values.iter().map(|v| (v - mean) / sd).collect();
        out.columns.insert(name.to_string(), Column::Continuous(scaled));
        out.scaling.insert(name.to_string(), Scaling { mean, sd });
    }
    Ok(out)
}

/// Undo every recorded standardisation.
pub fn unstandardize(cohort: &Cohort) -> Cohort {
    let mut out = cohort.clone();
    for (name, s) in std::mem::take(&mut out.scaling) {
        if let Some(Column::Continuous(v)) = out.columns.get_mut(&name) {
            for x in v.iter_mut() {
                *x = *x * s.sd + s.mean;
            }
        }
    }
    out
}
