use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{select_context, ColumnId, RowSelection, Table, MISSING};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregate {
    #[default]
    Avg,
    Sum,
    Count,
    Max,
    Min,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextPredicate {
    pub attr: String,
    pub value: String,
}

/// `SELECT T, agg(O) FROM table WHERE C GROUP BY T`, as a JSON document.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuerySpec {
    pub outcome: String,
    pub exposure: String,
    #[serde(default)]
    pub aggregate: Aggregate,
    #[serde(default)]
    pub context: Vec<ContextPredicate>,
}

impl QuerySpec {
    pub fn new(outcome: impl Into<String>, exposure: impl Into<String>) -> QuerySpec {
        QuerySpec {
            outcome: outcome.into(),
            exposure: exposure.into(),
            aggregate: Aggregate::Avg,
            context: Vec::new(),
        }
    }

    pub fn with_context(mut self, attr: impl Into<String>, value: impl Into<String>) -> QuerySpec {
        self.context.push(ContextPredicate {
            attr: attr.into(),
            value: value.into(),
        });
        self
    }

    pub fn from_json(text: &str) -> Result<QuerySpec> {
        Ok(serde_json::from_str(text)?)
    }

    /// Checks the query against `table` and resolves names and labels to
    /// column ids and codes.
    pub fn resolve(&self, table: &Table) -> Result<ResolvedQuery> {
        if self.outcome == self.exposure {
            return Err(Error::InvalidQuery(format!(
                "outcome and exposure are both `{}`",
                self.outcome
            )));
        }
        let outcome = table.id(&self.outcome)?;
        let exposure = table.id(&self.exposure)?;
        let mut context = Vec::with_capacity(self.context.len());
        for p in &self.context {
            if p.attr == self.outcome || p.attr == self.exposure {
                return Err(Error::InvalidQuery(format!(
                    "`{}` cannot appear in the context",
                    p.attr
                )));
            }
            let id = table.id(&p.attr)?;
            let code = table
                .column(id)
                .code_of(&p.value)
                .ok_or_else(|| Error::UnknownValue {
                    column: p.attr.clone(),
                    value: p.value.clone(),
                })?;
            context.push((id, code));
        }
        Ok(ResolvedQuery {
            outcome,
            exposure,
            context,
            aggregate: self.aggregate,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResolvedQuery {
    pub outcome: ColumnId,
    pub exposure: ColumnId,
    pub context: Vec<(ColumnId, u32)>,
    pub aggregate: Aggregate,
}

impl ResolvedQuery {
    pub fn context_columns(&self) -> impl Iterator<Item = ColumnId> + '_ {
        self.context.iter().map(|&(c, _)| c)
    }

    /// Whether `col` is the outcome, the exposure, or a context column.
    pub fn mentions(&self, col: ColumnId) -> bool {
        col == self.outcome || col == self.exposure || self.context_columns().any(|c| c == col)
    }

    /// Rows satisfying the context with both outcome and exposure present.
    pub fn rows(&self, table: &Table) -> Result<RowSelection> {
        self.rows_with(table, &self.context)
    }

    /// Like [`ResolvedQuery::rows`] for an arbitrary context.
    pub fn rows_with(&self, table: &Table, context: &[(ColumnId, u32)]) -> Result<RowSelection> {
        let sel = select_context(table, context)?
            .without_missing(table.column(self.outcome).codes())
            .without_missing(table.column(self.exposure).codes());
        Ok(sel)
    }
}

/// One output row of the aggregate query.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub exposure: String,
    /// `None` when the group has no observed outcome.
    pub value: Option<f64>,
    pub rows: usize,
}

/// Evaluates the aggregate query for display. Numeric outcomes aggregate
/// their raw values; categorical outcomes aggregate codes.
pub fn group_aggregate(table: &Table, query: &ResolvedQuery) -> Result<Vec<GroupRow>> {
    let sel = select_context(table, &query.context)?;
    let exposure = table.column(query.exposure);
    let outcome = table.column(query.outcome);
    let groups = exposure.cardinality() as usize;
    let mut rows = vec![0usize; groups];
    let mut observed = vec![0usize; groups];
    let mut sum = vec![0.0f64; groups];
    let mut max = vec![f64::NEG_INFINITY; groups];
    let mut min = vec![f64::INFINITY; groups];
    let raw = outcome.numeric_values();
    let mut any = false;
    for i in sel.iter() {
        let g = exposure.codes()[i];
        if g == MISSING {
            continue;
        }
        let g = g as usize;
        any = true;
        rows[g] += 1;
        let oc = outcome.codes()[i];
        if oc == MISSING {
            continue;
        }
        let v = raw.map_or(f64::from(oc), |r| r[i]);
        observed[g] += 1;
        sum[g] += v;
        max[g] = max[g].max(v);
        min[g] = min[g].min(v);
    }
    if !any {
        return Err(Error::EmptySelection("no rows match the query context".into()));
    }
    let out = (0..groups)
        .filter(|&g| rows[g] > 0)
        .map(|g| {
            let value = match query.aggregate {
                Aggregate::Count => Some(observed[g] as f64),
                _ if observed[g] == 0 => None,
                Aggregate::Avg => Some(sum[g] / observed[g] as f64),
                Aggregate::Sum => Some(sum[g]),
                Aggregate::Max => Some(max[g]),
                Aggregate::Min => Some(min[g]),
            };
            GroupRow {
                exposure: exposure.labels()[g].clone(),
                value,
                rows: rows[g],
            }
        })
        .collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Column;

    fn table(groups: &[&str], outcome: Vec<Option<u32>>) -> Table {
        let g = Column::categorical("g", groups.iter().map(|s| Some(*s)));
        let labels = (0..5).map(|i| i.to_string()).collect();
        let o = Column::from_codes("o", outcome, labels).unwrap();
        Table::new("t", vec![g, o]).unwrap()
    }

    #[test]
    fn count_per_group() {
        let t = table(
            &["g1", "g1", "g1", "g2", "g2", "g2", "g2"],
            vec![Some(0); 7],
        );
        let mut q = QuerySpec::new("o", "g");
        q.aggregate = Aggregate::Count;
        let rows = group_aggregate(&t, &q.resolve(&t).unwrap()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!((rows[0].exposure.as_str(), rows[0].value), ("g1", Some(3.0)));
        assert_eq!((rows[1].exposure.as_str(), rows[1].value), ("g2", Some(4.0)));
    }

    #[test]
    fn avg_of_codes() {
        let t = table(&["a", "a"], vec![Some(1), Some(3)]);
        let q = QuerySpec::new("o", "g").resolve(&t).unwrap();
        let rows = group_aggregate(&t, &q).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].value, Some(2.0));
    }

    #[test]
    fn numeric_outcome_uses_raw_values() {
        let g = Column::categorical("g", [Some("a"), Some("a"), Some("b")]);
        let o = crate::dataset::bin_numeric("o", &[Some(10.0), Some(30.0), Some(5.0)], 2).unwrap();
        let t = Table::new("t", vec![g, o]).unwrap();
        let mut q = QuerySpec::new("o", "g");
        q.aggregate = Aggregate::Max;
        let rows = group_aggregate(&t, &q.resolve(&t).unwrap()).unwrap();
        assert_eq!(rows[0].value, Some(30.0));
        assert_eq!(rows[1].value, Some(5.0));
    }

    #[test]
    fn query_validation() {
        let t = table(&["a", "b"], vec![Some(1), Some(3)]);
        assert!(QuerySpec::new("o", "o").resolve(&t).is_err());
        assert!(QuerySpec::new("o", "nope").resolve(&t).is_err());
        assert!(QuerySpec::new("o", "g").with_context("g", "a").resolve(&t).is_err());
        let q = QuerySpec::new("o", "g").with_context("o", "1");
        assert!(q.resolve(&t).is_err());
        let t2 = Table::new(
            "t",
            vec![
                Column::categorical("g", [Some("a"), Some("b")]),
                Column::categorical("o", [Some("1"), Some("2")]),
                Column::categorical("c", [Some("x"), Some("y")]),
            ],
        )
        .unwrap();
        assert!(matches!(
            QuerySpec::new("o", "g").with_context("c", "zz").resolve(&t2),
            Err(Error::UnknownValue { .. })
        ));
        let r = QuerySpec::new("o", "g").with_context("c", "y").resolve(&t2).unwrap();
        assert_eq!(r.rows(&t2).unwrap().selected_count(), 1);
    }

    #[test]
    fn json_round_trip() {
        let text = r#"{"outcome":"Salary","exposure":"Country","aggregate":"avg",
                       "context":[{"attr":"Continent","value":"Europe"}]}"#;
        let q = QuerySpec::from_json(text).unwrap();
        assert_eq!(q.context[0].attr, "Continent");
        assert_eq!(q.aggregate, Aggregate::Avg);
        let back: QuerySpec = serde_json::from_str(&serde_json::to_string(&q).unwrap()).unwrap();
        assert_eq!(back, q);
    }

    #[test]
    fn empty_context_match_is_error() {
        let g = Column::categorical("g", [Some("a"), Some("b")]);
        let o = Column::categorical("o", [Some("1"), Some("2")]);
        let c = Column::categorical("c", [Some("x"), None]);
        let t = Table::new("t", vec![g, o, c]).unwrap();
        let q = QuerySpec::new("o", "g").with_context("c", "x").resolve(&t).unwrap();
        assert_eq!(group_aggregate(&t, &q).unwrap().len(), 1);
        let none = ResolvedQuery {
            context: vec![(t.id("c").unwrap(), 0), (t.id("g").unwrap(), 1)],
            ..q
        };
        assert!(group_aggregate(&t, &none).is_err());
    }
}
