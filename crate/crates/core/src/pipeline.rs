//! End-to-end explanation run: query resolution, pruning and the greedy
//! search, with per-stage timings.

use web_time::Instant;

use serde::{Deserialize, Serialize};

use crate::dataset::{group_aggregate, ColumnId, GroupRow, QuerySpec, Table};
use crate::error::{Error, Result};
use crate::mcimr::{run_mcimr, Explanation, McimrConfig};
use crate::prune::{prune_offline, prune_online, PruneConfig, PruneReport};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: f64,
}

/// Wall-clock time per stage, in execution order.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub stages: Vec<StageTiming>,
}

impl Profile {
    pub fn time<T>(&mut self, stage: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.stages.push(StageTiming {
            stage: stage.to_owned(),
            millis: start.elapsed().as_secs_f64() * 1e3,
        });
        out
    }

    pub fn total_millis(&self) -> f64 {
        self.stages.iter().map(|s| s.millis).sum()
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainConfig {
    pub prune: PruneConfig,
    pub mcimr: McimrConfig,
    /// Restricts the candidate pool; every unmentioned column otherwise.
    pub candidates: Option<Vec<String>>,
}

impl ExplainConfig {
    pub fn validate(&self) -> Result<()> {
        self.prune.validate()?;
        self.mcimr.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExplainReport {
    pub query: QuerySpec,
    pub groups: Vec<GroupRow>,
    pub prune: PruneReport,
    pub explanation: Explanation,
    pub explainability_before: f64,
    pub explainability_after: f64,
}

/// Runs pruning and the greedy search for `query`.
pub fn explain(
    table: &Table,
    query: &QuerySpec,
    config: &ExplainConfig,
    profile: &mut Profile,
) -> Result<ExplainReport> {
    config.validate()?;
    let resolved = query.resolve(table)?;
    let candidates: Vec<ColumnId> = match &config.candidates {
        Some(names) => names.iter().map(|n| table.id(n)).collect::<Result<_>>()?,
        None => table.ids().filter(|&c| !resolved.mentions(c)).collect(),
    };
    if let Some(&c) = candidates.iter().find(|&&c| resolved.mentions(c)) {
        return Err(Error::InvalidConfig(format!(
            "candidate `{}` is part of the query",
            table.name_of(c)
        )));
    }
    let groups = profile.time("aggregate", || group_aggregate(table, &resolved))?;
    let mut report = profile.time("prune-offline", || prune_offline(table, &candidates, &config.prune))?;
    let kept = report.kept_ids(table)?;
    let online = profile.time("prune-online", || prune_online(table, &kept, &resolved, &config.prune))?;
    report.merge(online);
    let pool = report.kept_ids(table)?;
    let explanation = profile.time("mcimr", || run_mcimr(table, &resolved, &pool, &config.mcimr))?;
    Ok(ExplainReport {
        query: query.clone(),
        groups,
        prune: report,
        explainability_before: explanation.baseline,
        explainability_after: explanation.explainability,
        explanation,
    })
}
