//! Top-k largest context refinements that an explanation leaves
//! unexplained.
//!
//! Refinements extend the query context with `attr = value` predicates.
//! They form a lattice that is walked best-first from the query context,
//! largest groups first, generating each node once through a
//! set-enumeration order over the refinable columns.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::dataset::{select_context, ColumnId, ContextPredicate, ResolvedQuery, RowSelection, Table, MISSING};
use crate::error::{Error, Result};
use crate::estimator::Scope;

pub const DEFAULT_MIN_SIZE: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SubgroupConfig {
    pub k: usize,
    /// Score threshold in bits; `None` means a tenth of `Î(O;T|C)`.
    pub tau: Option<f64>,
    /// Columns that may appear in new predicates, in enumeration order.
    pub refinable: Vec<String>,
    pub min_size: usize,
}

impl Default for SubgroupConfig {
    fn default() -> Self {
        SubgroupConfig {
            k: 5,
            tau: None,
            refinable: Vec::new(),
            min_size: DEFAULT_MIN_SIZE,
        }
    }
}

/// A context refinement: the query context plus `predicates`.
#[derive(Clone, Debug)]
pub struct Refinement {
    /// Added predicates, in refinable-column order.
    pub predicates: Vec<(ColumnId, u32)>,
    pub size: usize,
    pub score: Option<f64>,
    /// Position in the refinable list of the last predicate's column.
    pub frontier_index: Option<usize>,
    rows: RowSelection,
}

impl Refinement {
    pub fn rows(&self) -> &RowSelection {
        &self.rows
    }

    /// Whether every predicate of `self` also appears in `other`.
    pub fn is_ancestor_of(&self, other: &Refinement) -> bool {
        self.predicates.len() < other.predicates.len()
            && self.predicates.iter().all(|p| other.predicates.contains(p))
    }

    /// Total order used for the traversal and the output: larger groups
    /// first, then fewer predicates, then predicates lexicographically.
    pub fn order(&self, other: &Refinement) -> Ordering {
        other
            .size
            .cmp(&self.size)
            .then(self.predicates.len().cmp(&other.predicates.len()))
            .then_with(|| self.predicates.cmp(&other.predicates))
    }

    pub fn describe(&self, table: &Table) -> Subgroup {
        Subgroup {
            predicates: self
                .predicates
                .iter()
                .map(|&(c, v)| ContextPredicate {
                    attr: table.name_of(c).to_owned(),
                    value: table.column(c).label(v).unwrap_or_default().to_owned(),
                })
                .collect(),
            size: self.size,
            score: self.score.unwrap_or(f64::NAN),
        }
    }
}

/// Serializable form of a refinement.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subgroup {
    pub predicates: Vec<ContextPredicate>,
    pub size: usize,
    pub score: f64,
}

/// The refinement lattice of a query over an ordered list of columns.
pub struct Lattice<'a> {
    table: &'a Table,
    refinable: Vec<ColumnId>,
    min_size: usize,
    root_rows: RowSelection,
}

impl<'a> Lattice<'a> {
    pub fn new(
        table: &'a Table,
        query: &ResolvedQuery,
        refinable: &[ColumnId],
        min_size: usize,
    ) -> Result<Lattice<'a>> {
        if refinable.is_empty() {
            return Err(Error::InvalidConfig("no refinable columns".into()));
        }
        for (i, &c) in refinable.iter().enumerate() {
            if c.0 >= table.column_count() {
                return Err(Error::UnknownColumn(c.to_string()));
            }
            if query.mentions(c) {
                return Err(Error::InvalidConfig(format!(
                    "refinable column `{}` is part of the query",
                    table.name_of(c)
                )));
            }
            if refinable[..i].contains(&c) {
                return Err(Error::InvalidConfig(format!(
                    "refinable column `{}` is listed twice",
                    table.name_of(c)
                )));
            }
        }
        Ok(Lattice {
            table,
            refinable: refinable.to_vec(),
            min_size,
            root_rows: select_context(table, &query.context)?,
        })
    }

    pub fn root(&self) -> Refinement {
        Refinement {
            predicates: Vec::new(),
            size: self.root_rows.selected_count(),
            score: None,
            frontier_index: None,
            rows: self.root_rows.clone(),
        }
    }

    /// One child per later refinable column and value observed in `node`
    /// with at least `min_size` rows.
    pub fn children(&self, node: &Refinement) -> Vec<Refinement> {
        let start = node.frontier_index.map_or(0, |f| f + 1);
        let mut out = Vec::new();
        for (ord, &col) in self.refinable.iter().enumerate().skip(start) {
            let column = self.table.column(col);
            let codes = column.codes();
            let mut counts = vec![0usize; column.cardinality() as usize];
            for i in node.rows.iter() {
                if codes[i] != MISSING {
                    counts[codes[i] as usize] += 1;
                }
            }
            for (code, &count) in counts.iter().enumerate() {
                if count == 0 || count < self.min_size {
                    continue;
                }
                let code = code as u32;
                let rows = node
                    .rows
                    .intersect(&RowSelection::from_fn(codes.len(), |i| codes[i] == code));
                let mut predicates = node.predicates.clone();
                predicates.push((col, code));
                out.push(Refinement {
                    predicates,
                    size: count,
                    score: None,
                    frontier_index: Some(ord),
                    rows,
                });
            }
        }
        out
    }
}

struct ByOrder(Refinement);

impl PartialEq for ByOrder {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for ByOrder {}
impl PartialOrd for ByOrder {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ByOrder {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap pops the greatest element: reverse the traversal order.
        other.0.order(&self.0)
    }
}

/// Best-first search with a caller-supplied scorer. Returns the accepted
/// refinements in traversal order and the sizes of all popped nodes.
pub fn search<F>(lattice: &Lattice<'_>, k: usize, tau: f64, mut score: F) -> Result<(Vec<Refinement>, Vec<usize>)>
where
    F: FnMut(&Refinement) -> Result<f64>,
{
    let mut heap: BinaryHeap<ByOrder> = lattice.children(&lattice.root()).into_iter().map(ByOrder).collect();
    let mut accepted: Vec<Refinement> = Vec::new();
    let mut popped = Vec::new();
    while accepted.len() < k {
        let Some(ByOrder(mut node)) = heap.pop() else {
            break;
        };
        popped.push(node.size);
        let s = score(&node)?;
        node.score = Some(s);
        if s > tau {
            if !accepted.iter().any(|a| a.is_ancestor_of(&node)) {
                accepted.push(node);
            }
        } else {
            heap.extend(lattice.children(&node).into_iter().map(ByOrder));
        }
    }
    Ok((accepted, popped))
}

/// `Î(O;T|C′,𝐄)` on the refinement's rows.
pub fn explanation_score(
    table: &Table,
    query: &ResolvedQuery,
    explanation: &[ColumnId],
    node: &Refinement,
) -> Result<f64> {
    let rows = node
        .rows
        .without_missing(table.column(query.outcome).codes())
        .without_missing(table.column(query.exposure).codes());
    match Scope::new(table, &rows).cmi(query.outcome, query.exposure, explanation) {
        Ok(v) => Ok(v),
        Err(Error::EmptySelection(_)) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// The `k` largest refinements whose explanation score exceeds the
/// threshold, none an ancestor of another.
pub fn top_k_unexplained(
    table: &Table,
    query: &ResolvedQuery,
    explanation: &[ColumnId],
    config: &SubgroupConfig,
) -> Result<Vec<Refinement>> {
    if config.k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let tau = match config.tau {
        Some(t) if t.is_nan() || t < 0.0 => {
            return Err(Error::InvalidConfig(format!("tau must be non-negative, got {t}")))
        }
        Some(t) => t,
        None => {
            let rows = query.rows(table)?;
            0.1 * Scope::new(table, &rows).cmi(query.outcome, query.exposure, &[])?
        }
    };
    let refinable = config
        .refinable
        .iter()
        .map(|r| table.id(r))
        .collect::<Result<Vec<_>>>()?;
    let lattice = Lattice::new(table, query, &refinable, config.min_size)?;
    let (found, _) = search(&lattice, config.k, tau, |n| explanation_score(table, query, explanation, n))?;
    Ok(found)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::QuerySpec;
    use crate::synth::coded_column;

    fn binary_table(cols: usize, n: usize) -> (Table, ResolvedQuery, Vec<ColumnId>) {
        let mut columns = vec![
            coded_column("O", (0..n).map(|i| (i % 2) as u32).collect(), 2),
            coded_column("T", (0..n).map(|i| (i / 2 % 2) as u32).collect(), 2),
        ];
        for c in 0..cols {
            let stride = 4 << c;
            columns.push(coded_column(
                format!("R{c}"),
                (0..n).map(|i| (i / stride % 2) as u32).collect(),
                2,
            ));
        }
        let t = Table::new("b", columns).unwrap();
        let q = QuerySpec::new("O", "T").resolve(&t).unwrap();
        let r = (2..2 + cols).map(ColumnId).collect();
        (t, q, r)
    }

    #[test]
    fn child_counts() {
        let (t, q, r) = binary_table(2, 64);
        let l = Lattice::new(&t, &q, &r, 1).unwrap();
        assert_eq!(l.children(&l.root()).len(), 4);
        let last = l
            .children(&l.root())
            .into_iter()
            .find(|c| c.frontier_index == Some(1))
            .unwrap();
        assert!(l.children(&last).is_empty());
    }

    #[test]
    fn exhaustive_traversal_visits_26_nodes_once() {
        let (t, q, r) = binary_table(3, 64);
        let l = Lattice::new(&t, &q, &r, 1).unwrap();
        let mut seen = std::collections::HashSet::new();
        let (found, popped) = search(&l, 1, f64::INFINITY, |n| {
            assert!(seen.insert(n.predicates.clone()), "scored twice");
            Ok(0.0)
        })
        .unwrap();
        assert!(found.is_empty());
        assert_eq!(popped.len(), 26);
        assert!(popped.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn min_size_prunes_children() {
        let (t, q, r) = binary_table(2, 64);
        let l = Lattice::new(&t, &q, &r, 33).unwrap();
        assert!(l.children(&l.root()).is_empty());
    }

    #[test]
    fn validation() {
        let (t, q, r) = binary_table(2, 16);
        assert!(Lattice::new(&t, &q, &[], 1).is_err());
        assert!(Lattice::new(&t, &q, &[q.outcome], 1).is_err());
        assert!(Lattice::new(&t, &q, &[r[0], r[0]], 1).is_err());
        let cfg = SubgroupConfig {
            k: 0,
            refinable: vec!["R0".into()],
            ..SubgroupConfig::default()
        };
        assert!(top_k_unexplained(&t, &q, &[], &cfg).is_err());
        let cfg = SubgroupConfig {
            tau: Some(-1.0),
            refinable: vec!["R0".into()],
            ..SubgroupConfig::default()
        };
        assert!(top_k_unexplained(&t, &q, &[], &cfg).is_err());
    }

    #[test]
    fn infinite_tau_returns_nothing() {
        let (t, q, _) = binary_table(3, 256);
        let cfg = SubgroupConfig {
            tau: Some(f64::INFINITY),
            refinable: vec!["R0".into(), "R1".into(), "R2".into()],
            min_size: 1,
            ..SubgroupConfig::default()
        };
        assert!(top_k_unexplained(&t, &q, &[], &cfg).unwrap().is_empty());
    }
}
