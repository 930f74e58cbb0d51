use std::collections::HashMap;
use std::fs::File;
use std::io::Read;
use std::path::Path;

use crate::error::{Error, Result};

use super::{bin_numeric, sorted_dictionary, Column, ColumnKind, Table, DEFAULT_BINS, MISSING};

/// Per-column override of the sniffed column kind.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KindHint {
    Categorical,
    Numeric { bins: Option<usize> },
}

#[derive(Clone, Debug)]
pub struct IngestOptions {
    pub delimiter: u8,
    /// Cell values (compared case-insensitively) read as missing, in
    /// addition to the empty cell.
    pub null_tokens: Vec<String>,
    pub bins: usize,
    pub hints: HashMap<String, KindHint>,
}

impl Default for IngestOptions {
    fn default() -> Self {
        IngestOptions {
            delimiter: b',',
            null_tokens: vec!["NA".into(), "null".into()],
            bins: DEFAULT_BINS,
            hints: HashMap::new(),
        }
    }
}

impl IngestOptions {
    pub fn hint(mut self, column: impl Into<String>, hint: KindHint) -> Self {
        self.hints.insert(column.into(), hint);
        self
    }

    fn is_null(&self, cell: &str) -> bool {
        cell.is_empty() || self.null_tokens.iter().any(|t| t.eq_ignore_ascii_case(cell))
    }
}

struct ColumnBuilder {
    name: String,
    dict: HashMap<String, u32>,
    ids: Vec<u32>,
    numeric: Option<Vec<f64>>,
}

impl ColumnBuilder {
    fn new(name: String, numeric_allowed: bool) -> Self {
        ColumnBuilder {
            name,
            dict: HashMap::new(),
            ids: Vec::new(),
            numeric: numeric_allowed.then(Vec::new),
        }
    }

    fn push(&mut self, cell: Option<&str>) {
        let Some(cell) = cell else {
            self.ids.push(MISSING);
            if let Some(v) = &mut self.numeric {
                v.push(f64::NAN);
            }
            return;
        };
        let next = self.dict.len() as u32;
        let id = match self.dict.get(cell) {
            Some(&id) => id,
            None => {
                self.dict.insert(cell.to_owned(), next);
                next
            }
        };
        self.ids.push(id);
        if let Some(v) = &mut self.numeric {
            match cell.parse::<f64>() {
                Ok(x) if x.is_finite() => v.push(x),
                _ => self.numeric = None,
            }
        }
    }

    fn finish(self, hint: Option<KindHint>, default_bins: usize) -> Result<Column> {
        let observed = !self.dict.is_empty();
        let bins = match (hint, &self.numeric) {
            (Some(KindHint::Categorical), _) => None,
            (Some(KindHint::Numeric { bins }), Some(_)) => Some(bins.unwrap_or(default_bins)),
            (Some(KindHint::Numeric { .. }), None) => {
                return Err(Error::InvalidData(format!(
                    "column `{}` was declared numeric but holds non-numeric values",
                    self.name
                )))
            }
            (None, Some(_)) if observed => Some(default_bins),
            (None, _) => None,
        };
        if let (Some(bins), Some(values)) = (bins, self.numeric) {
            let values: Vec<Option<f64>> = values
                .into_iter()
                .map(|v| (!v.is_nan()).then_some(v))
                .collect();
            return bin_numeric(self.name, &values, bins);
        }
        let (labels, remap) = sorted_dictionary(self.dict);
        let codes = self
            .ids
            .into_iter()
            .map(|c| if c == MISSING { MISSING } else { remap[c as usize] })
            .collect();
        Ok(Column::assemble(
            self.name,
            ColumnKind::Categorical,
            codes,
            labels,
            None,
        ))
    }
}

/// Reads a headered CSV file into a [`Table`] named after the file stem.
pub fn ingest_csv(path: impl AsRef<Path>, options: &IngestOptions) -> Result<Table> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let name = path
        .file_stem()
        .map_or_else(|| "table".to_owned(), |s| s.to_string_lossy().into_owned());
    ingest_reader(file, name, options)
}

pub fn ingest_reader<R: Read>(reader: R, name: impl Into<String>, options: &IngestOptions) -> Result<Table> {
    let mut rdr = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr
        .headers()?
        .iter()
        .map(|h| h.trim().to_owned())
        .collect();
    let mut seen = std::collections::HashSet::new();
    for h in &headers {
        if !seen.insert(h.as_str()) {
            return Err(Error::DuplicateColumn(h.clone()));
        }
    }
    let mut builders: Vec<ColumnBuilder> = headers
        .iter()
        .map(|h| {
            let numeric = !matches!(options.hints.get(h), Some(KindHint::Categorical));
            ColumnBuilder::new(h.clone(), numeric)
        })
        .collect();

    let mut record = csv::StringRecord::new();
    let mut rows = 0usize;
    while rdr.read_record(&mut record)? {
        rows += 1;
        for (b, cell) in builders.iter_mut().zip(record.iter()) {
            let cell = cell.trim();
            b.push((!options.is_null(cell)).then_some(cell));
        }
    }
    if rows == 0 {
        return Err(Error::NoRows);
    }
    let columns = builders
        .into_iter()
        .map(|b| {
            let hint = options.hints.get(&b.name).copied();
            b.finish(hint, options.bins)
        })
        .collect::<Result<Vec<_>>>()?;
    Table::new(name, columns)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn read(text: &str, opts: &IngestOptions) -> Result<Table> {
        ingest_reader(text.as_bytes(), "t", opts)
    }

    #[test]
    fn three_rows_two_columns() {
        let t = read("a,b\nx,1\ny,2\nx,3\n", &IngestOptions::default()).unwrap();
        assert_eq!(t.row_count(), 3);
        assert_eq!(t.column_count(), 2);
        assert_eq!(t.column_by_name("a").unwrap().kind(), ColumnKind::Categorical);
    }

    #[test]
    fn empty_and_null_tokens_are_missing() {
        let t = read("a,b\n,1\nNA,2\nNuLL,3\nz,\n", &IngestOptions::default()).unwrap();
        let a = t.column_by_name("a").unwrap();
        assert_eq!(a.missing_mask(), vec![true, true, true, false]);
        assert_eq!(t.column_by_name("b").unwrap().missing_count(), 1);
    }

    #[test]
    fn numeric_column_gets_ten_quantile_bins() {
        // Oracle: 20 distinct values, 10 equal-frequency bins of 2 each in
        // sorted order (cut after every 2nd order statistic).
        let values = [
            55, 12, 91, 33, 70, 5, 48, 27, 86, 19, 62, 40, 77, 9, 95, 23, 58, 36, 81, 14,
        ];
        let mut text = String::from("salary\n");
        for v in values {
            text.push_str(&format!("{v}\n"));
        }
        let t = read(&text, &IngestOptions::default()).unwrap();
        let c = t.column_by_name("salary").unwrap();
        assert_eq!(c.kind(), ColumnKind::BinnedNumeric);
        assert_eq!(c.cardinality(), 10);
        let mut sorted = values.to_vec();
        sorted.sort();
        for (row, v) in values.iter().enumerate() {
            let rank = sorted.iter().position(|x| x == v).unwrap();
            assert_eq!(c.code(row), Some((rank / 2) as u32), "value {v}");
        }
    }

    #[test]
    fn hints_override_sniffing() {
        let opts = IngestOptions::default().hint("id", KindHint::Categorical);
        let t = read("id,v\n10,1\n9,2\n", &opts).unwrap();
        let id = t.column_by_name("id").unwrap();
        assert_eq!(id.kind(), ColumnKind::Categorical);
        // Lexicographic code order: "10" < "9".
        assert_eq!(id.labels(), &["10", "9"]);

        let opts = IngestOptions::default().hint("v", KindHint::Numeric { bins: Some(2) });
        let t = read("v\n1\n2\n3\n4\n", &opts).unwrap();
        assert_eq!(t.column_by_name("v").unwrap().cardinality(), 2);
        let opts = IngestOptions::default().hint("v", KindHint::Numeric { bins: None });
        assert!(read("v\n1\nx\n", &opts).is_err());
    }

    #[test]
    fn ingestion_errors() {
        assert!(matches!(read("a,a\n1,2\n", &IngestOptions::default()), Err(Error::DuplicateColumn(_))));
        assert!(matches!(read("a,b\n", &IngestOptions::default()), Err(Error::NoRows)));
        assert!(matches!(
            ingest_csv("/definitely/not/here.csv", &IngestOptions::default()),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn custom_delimiter_and_determinism() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        write!(f, "a;b\nq;1.5\nr;2.5\nq;NA\n").unwrap();
        let opts = IngestOptions {
            delimiter: b';',
            ..IngestOptions::default()
        };
        let t1 = ingest_csv(f.path(), &opts).unwrap();
        let t2 = ingest_csv(f.path(), &opts).unwrap();
        for (c1, c2) in t1.columns().iter().zip(t2.columns()) {
            assert_eq!(c1.codes(), c2.codes());
            assert_eq!(c1.labels(), c2.labels());
        }
        assert_eq!(t1.column_by_name("b").unwrap().missing_count(), 1);
    }
}
