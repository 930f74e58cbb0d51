//! Columnar, categorical-coded tables.
//!
//! Every column stores one dense `u32` code per row; [`MISSING`] marks an
//! absent cell. Numeric inputs are binned at ingestion time so every
//! estimator downstream works on finite discrete domains.

mod ingest;
mod query;
mod selection;

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use ingest::{ingest_csv, ingest_reader, IngestOptions, KindHint};
pub use query::{group_aggregate, Aggregate, ContextPredicate, GroupRow, QuerySpec, ResolvedQuery};
pub use selection::{select_context, RowSelection};

/// Sentinel code for a missing cell.
pub const MISSING: u32 = u32::MAX;

/// Default number of equal-frequency bins for numeric columns.
pub const DEFAULT_BINS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ColumnId(pub usize);

impl ColumnId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for ColumnId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ColumnKind {
    Categorical,
    BinnedNumeric,
}

/// Where a column came from: the analysed input or an attribute table
/// joined onto it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Origin {
    Input,
    Acquired { source: String },
}

#[derive(Clone, Debug)]
pub struct Column {
    name: String,
    kind: ColumnKind,
    codes: Vec<u32>,
    labels: Vec<String>,
    /// Raw values of a binned-numeric column, `NaN` where missing.
    numeric: Option<Vec<f64>>,
    missing: usize,
    origin: Origin,
}

impl Column {
    /// Builds a categorical column; codes follow the sorted order of the
    /// distinct labels.
    pub fn categorical<I, S>(name: impl Into<String>, values: I) -> Column
    where
        I: IntoIterator<Item = Option<S>>,
        S: AsRef<str>,
    {
        let mut dict: HashMap<String, u32> = HashMap::new();
        let mut first_seen: Vec<u32> = Vec::new();
        for v in values {
            match v {
                Some(s) => {
                    let next = dict.len() as u32;
                    let id = *dict.entry(s.as_ref().to_owned()).or_insert(next);
                    first_seen.push(id);
                }
                None => first_seen.push(MISSING),
            }
        }
        let (labels, remap) = sorted_dictionary(dict);
        let codes = first_seen
            .into_iter()
            .map(|c| if c == MISSING { MISSING } else { remap[c as usize] })
            .collect();
        Column::assemble(name.into(), ColumnKind::Categorical, codes, labels, None)
    }

    /// Builds a column from explicit codes; `labels[c]` names code `c`.
    pub fn from_codes(
        name: impl Into<String>,
        codes: Vec<Option<u32>>,
        labels: Vec<String>,
    ) -> Result<Column> {
        let raw = codes.into_iter().map(|c| c.unwrap_or(MISSING)).collect();
        Column::from_raw_codes(name, raw, labels)
    }

    /// Like [`Column::from_codes`] but takes [`MISSING`]-encoded codes.
    pub fn from_raw_codes(
        name: impl Into<String>,
        codes: Vec<u32>,
        labels: Vec<String>,
    ) -> Result<Column> {
        let name = name.into();
        let card = labels.len() as u32;
        if let Some(bad) = codes.iter().find(|&&c| c != MISSING && c >= card) {
            return Err(Error::InvalidData(format!(
                "column `{name}` has code {bad} but only {card} labels"
            )));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = labels.iter().find(|l| !seen.insert(l.as_str())) {
            return Err(Error::InvalidData(format!(
                "column `{name}` repeats label `{dup}`"
            )));
        }
        Ok(Column::assemble(
            name,
            ColumnKind::Categorical,
            codes,
            labels,
            None,
        ))
    }

    fn assemble(
        name: String,
        kind: ColumnKind,
        codes: Vec<u32>,
        labels: Vec<String>,
        numeric: Option<Vec<f64>>,
    ) -> Column {
        let missing = codes.iter().filter(|&&c| c == MISSING).count();
        Column {
            name,
            kind,
            codes,
            labels,
            numeric,
            missing,
            origin: Origin::Input,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ColumnKind {
        self.kind
    }

    pub fn origin(&self) -> &Origin {
        &self.origin
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn cardinality(&self) -> u32 {
        self.labels.len() as u32
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, code: u32) -> Option<&str> {
        self.labels.get(code as usize).map(String::as_str)
    }

    pub fn code_of(&self, label: &str) -> Option<u32> {
        self.labels.iter().position(|l| l == label).map(|p| p as u32)
    }

    pub fn code(&self, row: usize) -> Option<u32> {
        match self.codes[row] {
            MISSING => None,
            c => Some(c),
        }
    }

    /// Raw codes with [`MISSING`] in absent cells.
    pub fn codes(&self) -> &[u32] {
        &self.codes
    }

    pub fn is_missing(&self, row: usize) -> bool {
        self.codes[row] == MISSING
    }

    pub fn missing_mask(&self) -> Vec<bool> {
        self.codes.iter().map(|&c| c == MISSING).collect()
    }

    pub fn missing_count(&self) -> usize {
        self.missing
    }

    pub fn observed_count(&self) -> usize {
        self.codes.len() - self.missing
    }

    pub fn numeric_values(&self) -> Option<&[f64]> {
        self.numeric.as_deref()
    }

    /// Label of the cell at `row`, or `None` when missing.
    pub fn value_label(&self, row: usize) -> Option<&str> {
        self.code(row).and_then(|c| self.label(c))
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Column {
        self.name = name.into();
        self
    }

    pub fn with_origin(mut self, origin: Origin) -> Column {
        self.origin = origin;
        self
    }
}

fn sorted_dictionary(dict: HashMap<String, u32>) -> (Vec<String>, Vec<u32>) {
    let mut entries: Vec<(String, u32)> = dict.into_iter().collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    let mut remap = vec![0u32; entries.len()];
    let mut labels = Vec::with_capacity(entries.len());
    for (new, (label, old)) in entries.into_iter().enumerate() {
        remap[old as usize] = new as u32;
        labels.push(label);
    }
    (labels, remap)
}

/// Equal-frequency binning of a numeric column.
///
/// Bin `j` closes at the order statistic `ceil((j+1)·n/bins)`; a value goes
/// to the first bin whose upper edge is not below it, so ties land in the
/// lower bin and duplicate edges collapse (cardinality may end up `< bins`).
pub fn bin_numeric(name: impl Into<String>, values: &[Option<f64>], bins: usize) -> Result<Column> {
    let name = name.into();
    if bins < 2 {
        return Err(Error::InvalidConfig(format!(
            "column `{name}`: need at least 2 bins, got {bins}"
        )));
    }
    let mut sorted: Vec<f64> = values.iter().flatten().copied().collect();
    if sorted.is_empty() {
        return Err(Error::InvalidData(format!(
            "column `{name}` has no observed values to bin"
        )));
    }
    if sorted.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidData(format!(
            "column `{name}` contains non-finite values"
        )));
    }
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();

    let mut edges: Vec<f64> = Vec::with_capacity(bins);
    for j in 1..=bins {
        let rank = (j * n).div_ceil(bins);
        let edge = sorted[rank.max(1) - 1];
        if edges.last() != Some(&edge) {
            edges.push(edge);
        }
    }

    let mut lo = vec![f64::INFINITY; edges.len()];
    let mut hi = vec![f64::NEG_INFINITY; edges.len()];
    let mut codes = Vec::with_capacity(values.len());
    let mut raw = Vec::with_capacity(values.len());
    for v in values {
        match v {
            Some(x) => {
                let b = edges.partition_point(|e| e < x);
                lo[b] = lo[b].min(*x);
                hi[b] = hi[b].max(*x);
                codes.push(b as u32);
                raw.push(*x);
            }
            None => {
                codes.push(MISSING);
                raw.push(f64::NAN);
            }
        }
    }
    let labels = lo
        .iter()
        .zip(&hi)
        .map(|(a, b)| {
            if a == b {
                format!("[{a}]")
            } else {
                format!("[{a}, {b}]")
            }
        })
        .collect();
    Ok(Column::assemble(
        name,
        ColumnKind::BinnedNumeric,
        codes,
        labels,
        Some(raw),
    ))
}

/// An immutable table of coded columns.
#[derive(Clone, Debug)]
pub struct Table {
    name: String,
    columns: Vec<Column>,
    index: HashMap<String, usize>,
    rows: usize,
}

impl Table {
    pub fn new(name: impl Into<String>, columns: Vec<Column>) -> Result<Table> {
        let rows = columns.first().map_or(0, Column::len);
        let mut index = HashMap::with_capacity(columns.len());
        for (i, c) in columns.iter().enumerate() {
            if c.len() != rows {
                return Err(Error::InvalidData(format!(
                    "column `{}` has {} cells, expected {rows}",
                    c.name,
                    c.len()
                )));
            }
            if index.insert(c.name.clone(), i).is_some() {
                return Err(Error::DuplicateColumn(c.name.clone()));
            }
        }
        Ok(Table {
            name: name.into(),
            columns,
            index,
            rows,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn row_count(&self) -> usize {
        self.rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_count(&self) -> usize {
        self.columns.len()
    }

    pub fn column(&self, id: ColumnId) -> &Column {
        &self.columns[id.0]
    }

    pub fn id(&self, name: &str) -> Result<ColumnId> {
        self.index
            .get(name)
            .map(|&i| ColumnId(i))
            .ok_or_else(|| Error::UnknownColumn(name.to_owned()))
    }

    pub fn column_by_name(&self, name: &str) -> Result<&Column> {
        self.id(name).map(|id| self.column(id))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    pub fn ids(&self) -> impl Iterator<Item = ColumnId> {
        (0..self.columns.len()).map(ColumnId)
    }

    pub fn name_of(&self, id: ColumnId) -> &str {
        &self.columns[id.0].name
    }

    /// Appends columns, consuming the table.
    pub fn with_columns(self, extra: Vec<Column>) -> Result<Table> {
        let mut columns = self.columns;
        columns.extend(extra);
        Table::new(self.name, columns)
    }

    /// Writes the table as CSV using value labels; missing cells are empty.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))?;
        for row in 0..self.rows {
            w.write_record(
                self.columns
                    .iter()
                    .map(|c| c.value_label(row).unwrap_or("")),
            )?;
        }
        w.flush().map_err(|e| Error::io("<csv output>", e))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn some(v: &[f64]) -> Vec<Option<f64>> {
        v.iter().copied().map(Some).collect()
    }

    #[test]
    fn median_split() {
        let vals: Vec<f64> = (1..=10).map(f64::from).collect();
        let c = bin_numeric("x", &some(&vals), 2).unwrap();
        let codes: Vec<u32> = c.codes().to_vec();
        assert_eq!(codes, vec![0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
        assert_eq!(c.cardinality(), 2);
        assert_eq!(c.kind(), ColumnKind::BinnedNumeric);
    }

    #[test]
    fn constant_column_collapses_to_one_bin() {
        let c = bin_numeric("x", &some(&[4.0; 7]), 4).unwrap();
        assert_eq!(c.cardinality(), 1);
        assert!(c.codes().iter().all(|&x| x == 0));
    }

    #[test]
    fn nine_values_three_bins_with_missing() {
        // Oracle: sort 1..9 and cut after the 3rd and 6th order statistics.
        let mut vals: Vec<Option<f64>> = (1..=9).map(|v| Some(f64::from(v))).collect();
        vals.insert(4, None);
        let c = bin_numeric("x", &vals, 3).unwrap();
        let mut sizes = [0usize; 3];
        for row in 0..c.len() {
            if let Some(code) = c.code(row) {
                sizes[code as usize] += 1;
            }
        }
        assert_eq!(sizes, [3, 3, 3]);
        assert_eq!(c.missing_count(), 1);
        assert!(c.is_missing(4));
        assert_eq!(c.code(0), Some(0));
        assert_eq!(c.code(9), Some(2));
    }

    #[test]
    fn ties_go_to_lower_bin() {
        let c = bin_numeric("x", &some(&[1.0, 2.0, 2.0, 2.0, 3.0, 4.0]), 2).unwrap();
        // Upper edge of bin 0 is the 3rd order statistic (2.0): every 2.0 stays low.
        assert_eq!(c.codes(), &[0, 0, 0, 0, 1, 1]);
    }

    #[test]
    fn binning_errors() {
        assert!(bin_numeric("x", &[None, None], 3).is_err());
        assert!(bin_numeric("x", &some(&[1.0, 2.0]), 1).is_err());
    }

    #[test]
    fn categorical_codes_are_sorted() {
        let c = Column::categorical("c", [Some("pear"), Some("apple"), None, Some("fig")]);
        assert_eq!(c.labels(), &["apple", "fig", "pear"]);
        assert_eq!(c.code(0), Some(2));
        assert_eq!(c.code(1), Some(0));
        assert!(c.is_missing(2));
        assert_eq!(c.missing_mask(), vec![false, false, true, false]);
    }

    #[test]
    fn table_rejects_ragged_and_duplicate_columns() {
        let a = Column::categorical("a", [Some("x"), Some("y")]);
        let b = Column::categorical("b", [Some("x")]);
        assert!(Table::new("t", vec![a.clone(), b]).is_err());
        let dup = Column::categorical("a", [Some("x"), Some("y")]);
        assert!(matches!(
            Table::new("t", vec![a, dup]),
            Err(Error::DuplicateColumn(_))
        ));
    }

    #[test]
    fn from_codes_validates() {
        assert!(Column::from_codes("c", vec![Some(2)], vec!["a".into(), "b".into()]).is_err());
        assert!(Column::from_codes("c", vec![Some(0)], vec!["a".into(), "a".into()]).is_err());
        let c = Column::from_codes("c", vec![Some(1), None], vec!["a".into(), "b".into()]).unwrap();
        assert_eq!(c.value_label(0), Some("b"));
        assert_eq!(c.value_label(1), None);
    }
}
