//! Rectangular named-column data read from CSV or assembled in code.

use std::collections::HashSet;
use std::io::Read;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum TableError {
    #[error("CSV input has no header row")]
    NoHeader,
    #[error("duplicate column name `{0}` in header")]
    DuplicateHeader(String),
    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow { row: usize, expected: usize, found: usize },
    #[error("column `{column}` row {row}: `{value}` is not a number")]
    NonNumeric { column: String, row: usize, value: String },
    #[error("column `{column}` row {row}: `{value}` is not a nonnegative integer count")]
    NotACount { column: String, row: usize, value: String },
    #[error("no column named `{0}`")]
    MissingColumn(String),
    #[error("column `{column}` has a missing value in row {row}")]
    MissingValue { column: String, row: usize },
    #[error("columns must all have {expected} rows, `{column}` has {found}")]
    LengthMismatch {
        column: String,
        expected: usize,
        found: usize,
    },
    #[error("malformed CSV: {0}")]
    Csv(String),
}

/// A column. Missing numeric cells are stored as NaN, missing text cells as `None`.
#[derive(Debug, Clone, PartialEq)]
pub enum Column {
    Numeric(Vec<f64>),
    Categorical(Vec<Option<String>>),
}

impl Column {
    pub fn len(&self) -> usize {
        match self {
            Column::Numeric(v) => v.len(),
            Column::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_numeric(&self) -> bool {
        matches!(self, Column::Numeric(_))
    }
}

impl From<Vec<f64>> for Column {
    fn from(v: Vec<f64>) -> Self {
        Column::Numeric(v)
    }
}

impl From<Vec<&str>> for Column {
    fn from(v: Vec<&str>) -> Self {
        Column::Categorical(v.into_iter().map(|s| Some(s.to_string())).collect())
    }
}

impl From<Vec<String>> for Column {
    fn from(v: Vec<String>) -> Self {
        Column::Categorical(v.into_iter().map(Some).collect())
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty() || cell == "NA"
}

/// Rows are numbered from 1 (the first data row) in every diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct TableData {
    names: Vec<String>,
    columns: Vec<Column>,
    rows: usize,
}

impl TableData {
    pub fn new<S: Into<String>>(columns: Vec<(S, Column)>) -> Result<Self, TableError> {
        let mut names = Vec::with_capacity(columns.len());
        let mut cols = Vec::with_capacity(columns.len());
        let mut seen = HashSet::new();
        let rows = columns.first().map(|(_, c)| c.len()).unwrap_or(0);
        for (name, col) in columns {
            let name = name.into();
            if !seen.insert(name.clone()) {
                return Err(TableError::DuplicateHeader(name));
            }
            if col.len() != rows {
                return Err(TableError::LengthMismatch {
                    column: name,
                    expected: rows,
                    found: col.len(),
                });
            }
            names.push(name);
            cols.push(col);
        }
        Ok(Self {
            names,
            columns: cols,
            rows,
        })
    }

    /// Comma-separated, header row first, `.` decimals. Empty cells and `NA`
    /// are missing. A column is numeric when every present cell parses as f64.
    pub fn from_csv<R: Read>(reader: R) -> Result<Self, TableError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .flexible(true)
            .from_reader(reader);
        let header: Vec<String> = rdr
            .headers()
            .map_err(|e| TableError::Csv(e.to_string()))?
            .iter()
            .map(|h| h.trim().to_string())
            .collect();
        if header.is_empty() || header.iter().all(|h| h.is_empty()) {
            return Err(TableError::NoHeader);
        }
        let mut seen = HashSet::new();
        for h in &header {
            if !seen.insert(h.as_str()) {
                return Err(TableError::DuplicateHeader(h.clone()));
            }
        }
        let width = header.len();
        let mut raw: Vec<Vec<String>> = vec![Vec::new(); width];
        for (i, record) in rdr.records().enumerate() {
            let record = record.map_err(|e| TableError::Csv(e.to_string()))?;
            if record.len() != width {
                return Err(TableError::RaggedRow {
                    row: i + 1,
                    expected: width,
                    found: record.len(),
                });
            }
            for (col, cell) in raw.iter_mut().zip(record.iter()) {
                col.push(cell.trim().to_string());
            }
        }
        let rows = raw.first().map(Vec::len).unwrap_or(0);
        let columns = raw
            .into_iter()
            .map(|cells| {
                let parsed: Option<Vec<f64>> = cells
                    .iter()
                    .map(|c| {
                        if is_missing(c) {
                            Some(f64::NAN)
                        } else {
                            c.parse::<f64>().ok()
                        }
                    })
                    .collect();
                match parsed {
                    Some(v) => Column::Numeric(v),
                    None => Column::Categorical(
                        cells
                            .into_iter()
                            .map(|c| if is_missing(&c) { None } else { Some(c) })
                            .collect(),
                    ),
                }
            })
            .collect();
        Ok(Self {
            names: header,
            columns,
            rows,
        })
    }

    pub fn from_csv_str(s: &str) -> Result<Self, TableError> {
        Self::from_csv(s.as_bytes())
    }

    pub fn nrows(&self) -> usize {
        self.rows
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn column(&self, name: &str) -> Result<&Column, TableError> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| &self.columns[i])
            .ok_or_else(|| TableError::MissingColumn(name.to_string()))
    }

    /// Numeric values with no missing cells.
    pub fn numeric(&self, name: &str) -> Result<Vec<f64>, TableError> {
        match self.column(name)? {
            Column::Numeric(v) => {
                if let Some(row) = v.iter().position(|x| x.is_nan()) {
                    return Err(TableError::MissingValue {
                        column: name.into(),
                        row: row + 1,
                    });
                }
                Ok(v.clone())
            }
            Column::Categorical(v) => {
                if let Some(row) = v.iter().position(Option::is_none) {
                    return Err(TableError::MissingValue {
                        column: name.into(),
                        row: row + 1,
                    });
                }
                let (row, value) = v
                    .iter()
                    .enumerate()
                    .find_map(|(i, c)| c.as_ref().filter(|c| c.parse::<f64>().is_err()).map(|c| (i, c.clone())))
                    .expect("categorical column has an unparsable cell");
                Err(TableError::NonNumeric {
                    column: name.into(),
                    row: row + 1,
                    value,
                })
            }
        }
    }

    /// Cell labels as text with no missing cells; numeric cells use their shortest round-trip form.
    pub fn labels(&self, name: &str) -> Result<Vec<String>, TableError> {
        match self.column(name)? {
            Column::Numeric(v) => v
                .iter()
                .enumerate()
                .map(|(i, x)| {
                    if x.is_nan() {
                        Err(TableError::MissingValue {
                            column: name.into(),
                            row: i + 1,
                        })
                    } else {
                        Ok(x.to_string())
                    }
                })
                .collect(),
            Column::Categorical(v) => v
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    c.clone().ok_or(TableError::MissingValue {
                        column: name.into(),
                        row: i + 1,
                    })
                })
                .collect(),
        }
    }

    /// Nonnegative integer counts.
    pub fn counts(&self, name: &str) -> Result<Vec<u64>, TableError> {
        let values = self.numeric(name)?;
        values
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                if x >= 0.0 && x.fract() == 0.0 && x <= u64::MAX as f64 {
                    Ok(x as u64)
                } else {
                    Err(TableError::NotACount {
                        column: name.into(),
                        row: i + 1,
                        value: x.to_string(),
                    })
                }
            })
            .collect()
    }
}
