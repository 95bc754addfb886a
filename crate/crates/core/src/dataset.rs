//! Immutable typed columnar table.
//!
//! Columns are typed once at ingestion: a column is numeric when at least 95%
//! of its non-missing cells parse as finite reals, categorical otherwise.
//! Cells that are missing tokens, or that fail to parse in a numeric column,
//! are stored as missing and counted in [`ColumnSpec::missing_count`].

use alloc::borrow::ToOwned;
use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::bucket::Bucket;
use crate::value::ScenarioValue;
use crate::{Error, Result};

/// Label used for the dedicated missing-value category in scenario sweeps.
pub const MISSING_LABEL: &str = "(missing)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Categorical,
    Numeric,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSpec {
    pub name: String,
    pub kind: ColumnKind,
    pub missing_count: usize,
}

/// Options controlling how raw text cells are typed.
#[derive(Debug, Clone, PartialEq)]
pub struct IngestOptions {
    /// Cell texts (compared after trimming) treated as missing.
    pub missing_tokens: Vec<String>,
    /// Minimum share of non-missing cells that must parse for a column to be numeric.
    pub numeric_threshold: f64,
    /// Explicit kinds that bypass inference, e.g. a timestamp declared numeric.
    pub kind_overrides: Vec<(String, ColumnKind)>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        Self {
            missing_tokens: ["", "NA", "null"].iter().map(|s| (*s).to_owned()).collect(),
            numeric_threshold: 0.95,
            kind_overrides: Vec::new(),
        }
    }
}

impl IngestOptions {
    fn is_missing(&self, cell: &str) -> bool {
        let cell = cell.trim();
        self.missing_tokens.iter().any(|t| t.trim() == cell)
    }

    fn override_for(&self, name: &str) -> Option<ColumnKind> {
        self.kind_overrides
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, k)| *k)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical {
        codes: Vec<Option<u32>>,
        /// Sorted distinct labels; `codes` index into this.
        levels: Vec<String>,
    },
}

/// One typed column.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    spec: ColumnSpec,
    data: ColumnData,
}

impl Column {
    pub fn spec(&self) -> &ColumnSpec {
        &self.spec
    }

    pub fn name(&self) -> &str {
        &self.spec.name
    }

    pub fn kind(&self) -> ColumnKind {
        self.spec.kind
    }

    pub fn len(&self) -> usize {
        match &self.data {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical { codes, .. } => codes.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Numeric cells, `None` where missing. `None` for categorical columns.
    pub fn numeric(&self) -> Option<&[Option<f64>]> {
        match &self.data {
            ColumnData::Numeric(v) => Some(v),
            ColumnData::Categorical { .. } => None,
        }
    }

    /// Sorted distinct labels of a categorical column.
    pub fn levels(&self) -> Option<&[String]> {
        match &self.data {
            ColumnData::Categorical { levels, .. } => Some(levels),
            ColumnData::Numeric(_) => None,
        }
    }

    /// Label of the cell at `row`, `None` when missing.
    pub fn cell_label(&self, row: usize) -> Option<String> {
        match &self.data {
            ColumnData::Numeric(v) => v[row].map(|x| format!("{x}")),
            ColumnData::Categorical { codes, levels } => {
                codes[row].map(|c| levels[c as usize].clone())
            }
        }
    }

    /// Distinct non-missing numeric values in ascending order.
    pub fn distinct_numbers(&self) -> Vec<f64> {
        let Some(values) = self.numeric() else {
            return Vec::new();
        };
        let mut v: Vec<f64> = values.iter().flatten().copied().collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// Number of distinct non-missing values.
    pub fn distinct_count(&self) -> usize {
        match &self.data {
            ColumnData::Numeric(_) => self.distinct_numbers().len(),
            ColumnData::Categorical { levels, .. } => levels.len(),
        }
    }

    fn select(&self, rows: &[usize]) -> Column {
        let data = match &self.data {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Categorical { codes, levels } => {
                // Re-index so `levels` only lists labels present in the selection.
                let used: BTreeSet<u32> = rows.iter().filter_map(|&r| codes[r]).collect();
                let remap: Vec<(u32, u32)> =
                    used.iter().enumerate().map(|(i, &c)| (c, i as u32)).collect();
                let new_code = |c: u32| remap.binary_search_by_key(&c, |p| p.0).map(|i| remap[i].1).ok();
                ColumnData::Categorical {
                    codes: rows.iter().map(|&r| codes[r].and_then(new_code)).collect(),
                    levels: used.iter().map(|&c| levels[c as usize].clone()).collect(),
                }
            }
        };
        let missing_count = match &data {
            ColumnData::Numeric(v) => v.iter().filter(|x| x.is_none()).count(),
            ColumnData::Categorical { codes, .. } => codes.iter().filter(|x| x.is_none()).count(),
        };
        Column {
            spec: ColumnSpec {
                missing_count,
                ..self.spec.clone()
            },
            data,
        }
    }

    /// Per-row membership in the stratum described by `value`.
    pub fn match_mask(&self, value: &ScenarioValue) -> Result<Vec<bool>> {
        let mismatch = || Error::UnknownValue {
            column: self.spec.name.clone(),
            value: value.label(),
        };
        match (&self.data, value) {
            (ColumnData::Numeric(v), ScenarioValue::Missing) => {
                Ok(v.iter().map(Option::is_none).collect())
            }
            (ColumnData::Categorical { codes, .. }, ScenarioValue::Missing) => {
                Ok(codes.iter().map(Option::is_none).collect())
            }
            (ColumnData::Categorical { codes, levels }, ScenarioValue::Category(label)) => {
                let code = levels.binary_search(label).ok().map(|i| i as u32);
                Ok(codes.iter().map(|c| code.is_some() && *c == code).collect())
            }
            (ColumnData::Numeric(v), ScenarioValue::Number(x)) => {
                Ok(v.iter().map(|c| *c == Some(*x)).collect())
            }
            (ColumnData::Numeric(v), ScenarioValue::Range(bucket)) => {
                if bucket.column != self.spec.name {
                    return Err(mismatch());
                }
                Ok(v.iter().map(|c| c.is_some_and(|x| bucket.contains(x))).collect())
            }
            _ => Err(mismatch()),
        }
    }
}

/// Immutable table of typed columns sharing a row count.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    columns: Vec<Column>,
    n_rows: usize,
}

impl Dataset {
    /// Types and indexes raw text records.
    ///
    /// Fails on empty or duplicate column names, ragged rows and when there
    /// are no data rows. Ragged-row errors carry the 1-based data row number.
    pub fn from_records<H, R, S>(header: H, rows: R, options: &IngestOptions) -> Result<Self>
    where
        H: IntoIterator,
        H::Item: AsRef<str>,
        R: IntoIterator,
        R::Item: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let names: Vec<String> = header.into_iter().map(|h| h.as_ref().trim().to_string()).collect();
        let mut seen = BTreeSet::new();
        for name in &names {
            if name.is_empty() {
                return Err(Error::InvalidColumnName("empty column name".into()));
            }
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidColumnName(format!("duplicate column `{name}`")));
            }
        }

        let mut raw: Vec<Vec<String>> = (0..names.len()).map(|_| Vec::new()).collect();
        let mut n_rows = 0;
        for (i, row) in rows.into_iter().enumerate() {
            let cells: Vec<String> = row.into_iter().map(|c| c.as_ref().to_string()).collect();
            if cells.len() != names.len() {
                return Err(Error::Ingest {
                    row: i + 1,
                    message: format!("expected {} fields, found {}", names.len(), cells.len()),
                });
            }
            for (col, cell) in raw.iter_mut().zip(cells) {
                col.push(cell);
            }
            n_rows += 1;
        }
        if n_rows == 0 {
            return Err(Error::NoRows);
        }

        let columns = names
            .into_iter()
            .zip(raw)
            .map(|(name, cells)| type_column(name, cells, options))
            .collect();
        Ok(Self { columns, n_rows })
    }

    /// Builds a dataset from already-typed columns. Mostly useful for tests and
    /// synthetic data.
    pub fn from_columns(columns: Vec<(String, TypedCells)>) -> Result<Self> {
        let n_rows = columns.first().map(|(_, c)| c.len()).unwrap_or(0);
        if n_rows == 0 {
            return Err(Error::NoRows);
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(columns.len());
        for (name, cells) in columns {
            if name.is_empty() || !seen.insert(name.clone()) {
                return Err(Error::InvalidColumnName(name));
            }
            if cells.len() != n_rows {
                return Err(Error::Ingest {
                    row: cells.len().min(n_rows) + 1,
                    message: format!("column `{name}` has {} cells, expected {n_rows}", cells.len()),
                });
            }
            out.push(match cells {
                TypedCells::Numeric(v) => {
                    if v.iter().flatten().any(|x| !x.is_finite()) {
                        return Err(Error::InvalidArgument(format!(
                            "column `{name}` contains non-finite values"
                        )));
                    }
                    Column {
                        spec: ColumnSpec {
                            name,
                            kind: ColumnKind::Numeric,
                            missing_count: v.iter().filter(|x| x.is_none()).count(),
                        },
                        data: ColumnData::Numeric(v),
                    }
                }
                TypedCells::Categorical(v) => categorical_column(name, v),
            });
        }
        Ok(Self { columns: out, n_rows })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn specs(&self) -> impl Iterator<Item = &ColumnSpec> {
        self.columns.iter().map(|c| &c.spec)
    }

    pub fn column(&self, name: &str) -> Result<&Column> {
        self.columns
            .iter()
            .find(|c| c.spec.name == name)
            .ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    /// New dataset holding the given rows (duplicates allowed) in order.
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::NoRows);
        }
        if let Some(&bad) = rows.iter().find(|&&r| r >= self.n_rows) {
            return Err(Error::InvalidArgument(format!("row index {bad} out of range")));
        }
        Ok(Self {
            columns: self.columns.iter().map(|c| c.select(rows)).collect(),
            n_rows: rows.len(),
        })
    }

    /// Header and text rows; missing cells become empty strings.
    pub fn to_records(&self) -> (Vec<String>, Vec<Vec<String>>) {
        let header = self.columns.iter().map(|c| c.spec.name.clone()).collect();
        let rows = (0..self.n_rows)
            .map(|r| {
                self.columns
                    .iter()
                    .map(|c| c.cell_label(r).unwrap_or_default())
                    .collect()
            })
            .collect();
        (header, rows)
    }

    /// Share of all rows whose `column` cell matches `value`; missing cells
    /// only match [`ScenarioValue::Missing`]. A categorical label that never
    /// occurs yields 0.
    pub fn current_fraction(&self, column: &str, value: &ScenarioValue) -> Result<f64> {
        let mask = self.column(column)?.match_mask(value)?;
        let hits = mask.iter().filter(|m| **m).count();
        Ok(hits as f64 / self.n_rows as f64)
    }

    /// Parses user text into a value of `column`'s domain.
    ///
    /// `"(missing)"` selects missing cells. On numeric columns a bucket label
    /// such as `[1.5, 3)` or `[3, 7]` selects a range, anything else must be a
    /// number.
    pub fn resolve_value(&self, column: &str, text: &str) -> Result<ScenarioValue> {
        let col = self.column(column)?;
        let text_t = text.trim();
        if text_t == MISSING_LABEL {
            return Ok(ScenarioValue::Missing);
        }
        match col.kind() {
            ColumnKind::Categorical => Ok(ScenarioValue::Category(text.to_string())),
            ColumnKind::Numeric => {
                if let Some(bucket) = Bucket::parse_label(column, text_t) {
                    return Ok(ScenarioValue::Range(bucket));
                }
                text_t
                    .parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .map(ScenarioValue::Number)
                    .ok_or_else(|| Error::UnknownValue {
                        column: column.to_string(),
                        value: text.to_string(),
                    })
            }
        }
    }
}

/// Pre-typed cell vectors accepted by [`Dataset::from_columns`].
#[derive(Debug, Clone, PartialEq)]
pub enum TypedCells {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl TypedCells {
    fn len(&self) -> usize {
        match self {
            TypedCells::Numeric(v) => v.len(),
            TypedCells::Categorical(v) => v.len(),
        }
    }
}

fn parse_finite(cell: &str) -> Option<f64> {
    cell.trim().parse::<f64>().ok().filter(|x| x.is_finite())
}

fn type_column(name: String, cells: Vec<String>, options: &IngestOptions) -> Column {
    let token_missing = cells.iter().filter(|c| options.is_missing(c)).count();
    let present = cells.len() - token_missing;
    let parsed = cells
        .iter()
        .filter(|c| !options.is_missing(c))
        .filter(|c| parse_finite(c).is_some())
        .count();

    let kind = options.override_for(&name).unwrap_or({
        if present > 0 && (parsed as f64) >= options.numeric_threshold * present as f64 {
            ColumnKind::Numeric
        } else {
            ColumnKind::Categorical
        }
    });

    match kind {
        ColumnKind::Numeric => {
            let values: Vec<Option<f64>> = cells
                .iter()
                .map(|c| if options.is_missing(c) { None } else { parse_finite(c) })
                .collect();
            let missing_count = values.iter().filter(|v| v.is_none()).count();
            Column {
                spec: ColumnSpec {
                    name,
                    kind,
                    missing_count,
                },
                data: ColumnData::Numeric(values),
            }
        }
        ColumnKind::Categorical => {
            let cells = cells
                .into_iter()
                .map(|c| if options.is_missing(&c) { None } else { Some(c) })
                .collect();
            categorical_column(name, cells)
        }
    }
}

fn categorical_column(name: String, cells: Vec<Option<String>>) -> Column {
    let levels: Vec<String> = cells
        .iter()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let codes: Vec<Option<u32>> = cells
        .iter()
        .map(|c| {
            c.as_ref()
                .map(|s| levels.binary_search(s).expect("label indexed") as u32)
        })
        .collect();
    let missing_count = codes.iter().filter(|c| c.is_none()).count();
    Column {
        spec: ColumnSpec {
            name,
            kind: ColumnKind::Categorical,
            missing_count,
        },
        data: ColumnData::Categorical { codes, levels },
    }
}
