//! External attributes: key-joined attribute tables, one-to-many value
//! aggregation, entity linking and knowledge-graph property extraction.

mod kg;

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{bin_numeric, Column, Origin, Table, DEFAULT_BINS};
use crate::error::{Error, Result};

pub use kg::{
    fetch_kg, parse_sparql_json, Binding, EntityDiagnostic, FetchOptions, FetchOutcome, FetchStatus,
    KgCache, SparqlClient, StaticClient, CACHE_ENV, DBPEDIA_RESOURCE,
};
#[cfg(feature = "http")]
pub use kg::HttpClient;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum Provenance {
    LocalFile { path: String },
    KgEndpoint { endpoint: String },
}

impl Provenance {
    fn describe(&self) -> String {
        match self {
            Provenance::LocalFile { path } => path.clone(),
            Provenance::KgEndpoint { endpoint } => endpoint.clone(),
        }
    }
}

/// Attribute values keyed by entity label, one row per key.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AttributeTable {
    pub key_column: String,
    pub columns: Vec<String>,
    rows: BTreeMap<String, Vec<Option<String>>>,
    pub provenance: Provenance,
    pub hop: u8,
}

impl AttributeTable {
    pub fn new(
        key_column: impl Into<String>,
        columns: Vec<String>,
        rows: Vec<(String, Vec<Option<String>>)>,
        provenance: Provenance,
        hop: u8,
    ) -> Result<AttributeTable> {
        let mut map = BTreeMap::new();
        for (key, values) in rows {
            if values.len() != columns.len() {
                return Err(Error::InvalidData(format!(
                    "attribute row `{key}` has {} values for {} columns",
                    values.len(),
                    columns.len()
                )));
            }
            if map.insert(key.clone(), values).is_some() {
                return Err(Error::InvalidData(format!(
                    "attribute key `{key}` appears twice; aggregate first"
                )));
            }
        }
        let mut seen = HashSet::new();
        if let Some(dup) = columns.iter().find(|c| !seen.insert(c.as_str())) {
            return Err(Error::DuplicateColumn(dup.clone()));
        }
        Ok(AttributeTable {
            key_column: key_column.into(),
            columns,
            rows: map,
            provenance,
            hop,
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn get(&self, key: &str, column: &str) -> Option<&str> {
        let c = self.columns.iter().position(|x| x == column)?;
        self.rows.get(key)?[c].as_deref()
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.rows.keys().map(String::as_str)
    }

    /// Reads a headered CSV whose first column is the key. Empty cells are
    /// missing.
    pub fn read_csv(path: impl AsRef<Path>, delimiter: u8) -> Result<AttributeTable> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::ReaderBuilder::new().delimiter(delimiter).from_reader(file);
        let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_owned()).collect();
        let Some((key, columns)) = headers.split_first() else {
            return Err(Error::InvalidData(format!("{} has no header", path.display())));
        };
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let mut cells = rec.iter().map(|c| c.trim());
            let k = cells.next().unwrap_or_default().to_owned();
            let values = cells
                .map(|c| (!c.is_empty()).then(|| c.to_owned()))
                .collect();
            rows.push((k, values));
        }
        AttributeTable::new(
            key.clone(),
            columns.to_vec(),
            rows,
            Provenance::LocalFile {
                path: path.display().to_string(),
            },
            1,
        )
    }

    /// Writes the table as CSV: key first, empty cell for missing.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(std::iter::once(&self.key_column).chain(&self.columns))?;
        for (k, values) in &self.rows {
            w.write_record(
                std::iter::once(k.as_str()).chain(values.iter().map(|v| v.as_deref().unwrap_or(""))),
            )?;
        }
        w.flush().map_err(|e| Error::io("<attribute table>", e))?;
        Ok(())
    }
}

fn free_name(taken: &HashSet<String>, name: &str) -> String {
    if !taken.contains(name) {
        return name.to_owned();
    }
    let mut candidate = format!("{name}__ext");
    let mut n = 2;
    while taken.contains(&candidate) {
        candidate = format!("{name}__ext{n}");
        n += 1;
    }
    candidate
}

/// Column from string cells: binned numeric when every observed cell
/// parses as a finite number, categorical otherwise.
fn sniff_column(name: String, cells: &[Option<&str>], bins: usize) -> Result<Column> {
    let numeric: Option<Vec<Option<f64>>> = cells
        .iter()
        .map(|c| match c {
            None => Some(None),
            Some(s) => s.parse::<f64>().ok().filter(|v| v.is_finite()).map(Some),
        })
        .collect();
    match numeric {
        Some(values) if values.iter().any(Option::is_some) => bin_numeric(name, &values, bins),
        _ => Ok(Column::categorical(name, cells.iter().copied())),
    }
}

/// Left-joins `attrs` onto `base` through the labels of column `on`.
/// Attribute names already present get a `__ext` suffix.
pub fn join_attributes(base: Table, attrs: &AttributeTable, on: &str) -> Result<Table> {
    join_attributes_with(base, attrs, on, DEFAULT_BINS)
}

pub fn join_attributes_with(base: Table, attrs: &AttributeTable, on: &str, bins: usize) -> Result<Table> {
    let key = base.column_by_name(on)?;
    let mut taken: HashSet<String> = base.columns().iter().map(|c| c.name().to_owned()).collect();
    let row_keys: Vec<Option<&Vec<Option<String>>>> = (0..base.row_count())
        .map(|i| key.value_label(i).and_then(|k| attrs.rows.get(k)))
        .collect();
    let source = attrs.provenance.describe();
    let mut extra = Vec::with_capacity(attrs.columns.len());
    for (j, name) in attrs.columns.iter().enumerate() {
        let cells: Vec<Option<&str>> = row_keys
            .iter()
            .map(|r| r.and_then(|vals| vals[j].as_deref()))
            .collect();
        let fresh = free_name(&taken, name);
        taken.insert(fresh.clone());
        let col = sniff_column(fresh, &cells, bins)?.with_origin(Origin::Acquired {
            source: source.clone(),
        });
        extra.push(col);
    }
    base.with_columns(extra)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AggTag {
    Mean,
    Sum,
    Max,
    Min,
    First,
    Count,
}

/// Aggregation tag per attribute, with an optional fallback.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct AggSpec {
    pub tags: BTreeMap<String, AggTag>,
    pub default: Option<AggTag>,
}

impl AggSpec {
    pub fn uniform(tag: AggTag) -> AggSpec {
        AggSpec {
            tags: BTreeMap::new(),
            default: Some(tag),
        }
    }

    pub fn with(mut self, attr: impl Into<String>, tag: AggTag) -> AggSpec {
        self.tags.insert(attr.into(), tag);
        self
    }

    pub fn tag(&self, attr: &str) -> Option<AggTag> {
        self.tags.get(attr).copied().or(self.default)
    }
}

/// One extracted `(entity, attribute, value)` fact.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RawTriple {
    pub key: String,
    pub attribute: String,
    pub value: String,
}

impl RawTriple {
    pub fn new(key: impl Into<String>, attribute: impl Into<String>, value: impl Into<String>) -> Self {
        RawTriple {
            key: key.into(),
            attribute: attribute.into(),
            value: value.into(),
        }
    }
}

/// Shortest decimal rendering, without a fractional part for integers.
fn format_number(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e15 {
        format!("{v:.0}")
    } else {
        format!("{v}")
    }
}

fn aggregate(tag: AggTag, attr: &str, values: &[&str]) -> Result<String> {
    let numbers = || -> Result<Vec<f64>> {
        let mut v = values
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .ok()
                    .filter(|x| x.is_finite())
                    .ok_or_else(|| Error::InvalidData(format!(
                        "attribute `{attr}`: `{s}` is not a number"
                    )))
            })
            .collect::<Result<Vec<f64>>>()?;
        v.sort_by(f64::total_cmp);
        Ok(v)
    };
    Ok(match tag {
        AggTag::First => values[0].to_owned(),
        AggTag::Count => values.len().to_string(),
        AggTag::Sum => format_number(numbers()?.iter().sum()),
        AggTag::Mean => {
            let v = numbers()?;
            format_number(v.iter().sum::<f64>() / v.len() as f64)
        }
        AggTag::Max => format_number(*numbers()?.last().expect("non-empty group")),
        AggTag::Min => format_number(numbers()?[0]),
    })
}

/// Collapses facts to one value per key and attribute. Keys and attributes
/// come out sorted; `first` keeps the earliest value in `raw`.
pub fn aggregate_multivalue(
    raw: &[RawTriple],
    spec: &AggSpec,
    key_column: &str,
    provenance: Provenance,
    hop: u8,
) -> Result<AttributeTable> {
    let mut grouped: BTreeMap<&str, BTreeMap<&str, Vec<&str>>> = BTreeMap::new();
    for t in raw {
        grouped
            .entry(t.key.as_str())
            .or_default()
            .entry(t.attribute.as_str())
            .or_default()
            .push(t.value.as_str());
    }
    let columns: Vec<String> = raw
        .iter()
        .map(|t| t.attribute.clone())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    for c in &columns {
        if spec.tag(c).is_none() {
            return Err(Error::InvalidConfig(format!(
                "no aggregation given for attribute `{c}`"
            )));
        }
    }
    let rows = grouped
        .into_iter()
        .map(|(key, attrs)| {
            let values = columns
                .iter()
                .map(|c| match attrs.get(c.as_str()) {
                    Some(vals) => aggregate(spec.tag(c).expect("checked"), c, vals).map(Some),
                    None => Ok(None),
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((key.to_owned(), values))
        })
        .collect::<Result<Vec<_>>>()?;
    AttributeTable::new(key_column, columns, rows, provenance, hop)
}

/// Table labels resolved to knowledge-graph entity identifiers.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkMap {
    pub links: BTreeMap<String, String>,
    pub unmatched: Vec<String>,
}

impl LinkMap {
    /// Links each label through `aliases` first, then by appending it to
    /// `prefix` with spaces as underscores. Labels matched by neither are
    /// recorded as unmatched.
    pub fn build<'s>(
        labels: impl IntoIterator<Item = &'s str>,
        aliases: &BTreeMap<String, String>,
        prefix: Option<&str>,
    ) -> LinkMap {
        let mut map = LinkMap::default();
        let mut unmatched = std::collections::BTreeSet::new();
        for label in labels {
            if let Some(iri) = aliases.get(label) {
                map.links.insert(label.to_owned(), iri.clone());
            } else if let Some(p) = prefix {
                map.links
                    .insert(label.to_owned(), format!("{p}{}", label.replace(' ', "_")));
            } else {
                unmatched.insert(label.to_owned());
            }
        }
        map.unmatched = unmatched.into_iter().collect();
        map
    }

    /// Reads a two-column `label,iri` alias CSV with a header row.
    pub fn read_aliases(path: impl AsRef<Path>) -> Result<BTreeMap<String, String>> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut rdr = csv::Reader::from_reader(file);
        let mut out = BTreeMap::new();
        for rec in rdr.records() {
            let rec = rec?;
            match (rec.get(0), rec.get(1)) {
                (Some(l), Some(i)) if !i.trim().is_empty() => {
                    out.insert(l.trim().to_owned(), i.trim().to_owned());
                }
                _ => {
                    return Err(Error::InvalidData(format!(
                        "{}: alias rows need a label and an IRI",
                        path.display()
                    )))
                }
            }
        }
        Ok(out)
    }
}
