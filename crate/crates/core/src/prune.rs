//! Candidate pruning before the explanation search.
//!
//! Offline rules look at one column in isolation; online rules look at a
//! column together with the query's outcome and exposure on the query rows.

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnId, ResolvedQuery, Table};
use crate::error::{Error, Result};
use crate::estimator::{CiTestConfig, Joint, Scope};
use crate::par_map;

pub use crate::estimator::conditional_entropy;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PruneRule {
    #[serde(rename = "constant")]
    Constant,
    #[serde(rename = "too-missing")]
    TooMissing,
    #[serde(rename = "high-entropy")]
    HighEntropy,
    #[serde(rename = "logical-dep-T")]
    LogicalDepT,
    #[serde(rename = "logical-dep-O")]
    LogicalDepO,
    #[serde(rename = "low-relevance")]
    LowRelevance,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dropped {
    pub column: String,
    pub rule: PruneRule,
    /// The statistic that triggered the rule.
    pub value: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PruneReport {
    pub dropped: Vec<Dropped>,
    pub kept: Vec<String>,
}

impl PruneReport {
    pub fn kept_ids(&self, table: &Table) -> Result<Vec<ColumnId>> {
        self.kept.iter().map(|k| table.id(k)).collect()
    }

    pub fn rule_of(&self, column: &str) -> Option<PruneRule> {
        self.dropped.iter().find(|d| d.column == column).map(|d| d.rule)
    }

    /// Appends another report's findings.
    pub fn merge(&mut self, later: PruneReport) {
        self.dropped.extend(later.dropped);
        self.kept = later.kept;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PruneConfig {
    pub max_missing_frac: f64,
    pub high_entropy_frac: f64,
    /// Conditional-entropy bound (bits) for the logical-dependency rule.
    pub fd_epsilon: f64,
    pub ci: CiTestConfig,
}

impl Default for PruneConfig {
    fn default() -> Self {
        PruneConfig {
            max_missing_frac: 0.9,
            high_entropy_frac: 0.9,
            fd_epsilon: 0.05,
            ci: CiTestConfig::default(),
        }
    }
}

impl PruneConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("max_missing_frac", self.max_missing_frac),
            ("high_entropy_frac", self.high_entropy_frac),
        ] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::InvalidConfig(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        if !(self.fd_epsilon >= 0.0 && self.fd_epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "fd_epsilon must be non-negative, got {}",
                self.fd_epsilon
            )));
        }
        self.ci.validate()
    }
}

fn partition(table: &Table, candidates: &[ColumnId], verdicts: Vec<Option<(PruneRule, f64)>>) -> PruneReport {
    let mut report = PruneReport::default();
    for (&c, v) in candidates.iter().zip(verdicts) {
        let name = table.name_of(c).to_owned();
        match v {
            Some((rule, value)) => report.dropped.push(Dropped {
                column: name,
                rule,
                value,
            }),
            None => report.kept.push(name),
        }
    }
    report
}

fn check_candidates(table: &Table, candidates: &[ColumnId]) -> Result<()> {
    if let Some(bad) = candidates.iter().find(|c| c.0 >= table.column_count()) {
        return Err(Error::UnknownColumn(bad.to_string()));
    }
    Ok(())
}

/// Drops constant, mostly-missing and near-unique columns.
pub fn prune_offline(table: &Table, candidates: &[ColumnId], config: &PruneConfig) -> Result<PruneReport> {
    config.validate()?;
    check_candidates(table, candidates)?;
    let verdicts = candidates
        .iter()
        .map(|&c| {
            let col = table.column(c);
            let n = col.len().max(1) as f64;
            let missing = col.missing_count() as f64 / n;
            let observed = col.observed_count();
            if missing > config.max_missing_frac || observed == 0 {
                Some((PruneRule::TooMissing, missing))
            } else if col.cardinality() <= 1 {
                Some((PruneRule::Constant, f64::from(col.cardinality())))
            } else if f64::from(col.cardinality()) > config.high_entropy_frac * observed as f64 {
                Some((PruneRule::HighEntropy, f64::from(col.cardinality()) / observed as f64))
            } else {
                None
            }
        })
        .collect();
    Ok(partition(table, candidates, verdicts))
}

/// Drops candidates that are logically equivalent to the exposure or the
/// outcome, or that carry no information about the outcome with or without
/// the exposure.
pub fn prune_online(
    table: &Table,
    candidates: &[ColumnId],
    query: &ResolvedQuery,
    config: &PruneConfig,
) -> Result<PruneReport> {
    config.validate()?;
    check_candidates(table, candidates)?;
    if let Some(&c) = candidates.iter().find(|&&c| query.mentions(c)) {
        return Err(Error::InvalidQuery(format!(
            "candidate `{}` is part of the query",
            table.name_of(c)
        )));
    }
    let rows = query.rows(table)?;
    if rows.is_empty() {
        return Err(Error::EmptySelection("no rows match the query context".into()));
    }
    let scope = Scope::new(table, &rows);
    let (o, t) = (query.outcome, query.exposure);
    let verdicts = par_map(candidates, |&e| -> Result<Option<(PruneRule, f64)>> {
        let joint = match scope.joint(&[o, t, e]) {
            Ok(j) => j,
            // A candidate never observed on the query rows explains nothing.
            Err(Error::EmptySelection(_)) => return Ok(Some((PruneRule::LowRelevance, 0.0))),
            Err(err) => return Err(err),
        };
        online_rule(&scope, &joint, o, t, e, config)
    });
    let verdicts = verdicts.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(partition(table, candidates, verdicts))
}

fn online_rule(
    scope: &Scope<'_>,
    joint: &Joint,
    o: ColumnId,
    t: ColumnId,
    e: ColumnId,
    config: &PruneConfig,
) -> Result<Option<(PruneRule, f64)>> {
    // Factor positions in `joint`: 0 = O, 1 = T, 2 = E.
    let fd = |x: usize| {
        let a = joint.conditional_entropy(x, &[2]);
        let b = joint.conditional_entropy(2, &[x]);
        (a <= config.fd_epsilon && b <= config.fd_epsilon).then_some(a.max(b))
    };
    if let Some(v) = fd(1) {
        return Ok(Some((PruneRule::LogicalDepT, v)));
    }
    if let Some(v) = fd(0) {
        return Ok(Some((PruneRule::LogicalDepO, v)));
    }
    let (marginal, given_t) = if config.ci.permutations == 0 {
        (joint.cmi(0, 2, &[]), joint.cmi(0, 2, &[1]))
    } else {
        let a = scope.ci_test(o, e, &[], &config.ci)?;
        if !a.independent() {
            return Ok(None);
        }
        (0.0, if scope.ci_test(o, e, &[t], &config.ci)?.independent() { 0.0 } else { f64::INFINITY })
    };
    if marginal <= config.ci.epsilon && given_t <= config.ci.epsilon {
        return Ok(Some((PruneRule::LowRelevance, marginal.max(given_t))));
    }
    Ok(None)
}
