//! Greedy explanation search.
//!
//! Each step picks the candidate minimising
//! `Î(O;T|C,E) + (1/|𝐄|)·Σ_{Eᵢ∈𝐄} Î(E;Eᵢ)` and accepts it only if the
//! outcome still depends on it given the attributes chosen so far.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnId, Origin, ResolvedQuery, RowSelection, Table, MISSING};
use crate::error::{Error, Result};
use crate::estimator::{CiOutcome, CiTestConfig, Scope};
use crate::missing::{
    default_predictors, fit_ipw, recoverable_cmi, recoverable_pairwise, RecoverabilityReport,
    WeightSummary, WeightVector,
};
use crate::par_map;
use crate::prune::{prune_offline, PruneConfig};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightPolicy {
    /// Weight an estimate only when its complete-case version is not
    /// recoverable.
    #[default]
    Auto,
    /// Always use complete cases.
    CompleteCase,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct McimrConfig {
    pub k: usize,
    pub ci: CiTestConfig,
    pub weights: WeightPolicy,
    /// IPW predictors; by default every input column that survives the
    /// offline rules, minus the query columns.
    pub ipw_predictors: Option<Vec<String>>,
}

impl Default for McimrConfig {
    fn default() -> Self {
        McimrConfig {
            k: 5,
            ci: CiTestConfig::default(),
            weights: WeightPolicy::Auto,
            ipw_predictors: None,
        }
    }
}

impl McimrConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        self.ci.validate()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStep {
    pub chosen: String,
    pub criterion: f64,
    /// `Î(O;T|C,E)` of the chosen attribute alone.
    pub cmi: f64,
    pub redundancy: f64,
    pub candidates_examined: usize,
    /// `Î(O;T|C,𝐄)` after accepting the attribute.
    pub explainability: f64,
    pub ci: CiOutcome,
}

/// The best remaining candidate that failed the dependence check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopRecord {
    pub candidate: String,
    pub criterion: f64,
    pub candidates_examined: usize,
    pub ci: CiOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttrResponsibility {
    pub attr: String,
    /// `Î(O;T|C,𝐄∖{E})`.
    pub without: f64,
    /// `None` when the normalising sum is not positive.
    pub responsibility: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Responsibilities {
    pub values: Vec<AttrResponsibility>,
    pub denominator: f64,
    pub note: Option<String>,
}

impl Responsibilities {
    pub fn get(&self, attr: &str) -> Option<f64> {
        self.values
            .iter()
            .find(|v| v.attr == attr)
            .and_then(|v| v.responsibility)
    }
}

/// `(I_wo(Eᵢ) − I_full) / Σⱼ (I_wo(Eⱼ) − I_full)` for every attribute.
pub fn responsibility(leave_one_out: &[(String, f64)], full: f64) -> Responsibilities {
    let denominator: f64 = leave_one_out.iter().map(|(_, w)| w - full).sum();
    let defined = denominator > 0.0 && denominator.is_finite();
    Responsibilities {
        values: leave_one_out
            .iter()
            .map(|(a, w)| AttrResponsibility {
                attr: a.clone(),
                without: *w,
                responsibility: defined.then(|| (w - full) / denominator),
            })
            .collect(),
        denominator,
        note: (!defined && !leave_one_out.is_empty()).then(|| {
            format!("responsibilities undefined: contributions sum to {denominator}")
        }),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MissingDiagnostics {
    pub recoverability: Vec<RecoverabilityReport>,
    pub weights: BTreeMap<String, WeightSummary>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Explanation {
    pub selected: Vec<String>,
    /// `Î(O;T|C,𝐄)`.
    pub explainability: f64,
    /// `Î(O;T|C)`.
    pub baseline: f64,
    pub responsibilities: Responsibilities,
    pub trace: Vec<TraceStep>,
    pub stop: Option<StopRecord>,
    /// Attributes whose estimates used inverse probability weights.
    pub weighted_attrs: Vec<String>,
    pub missing: MissingDiagnostics,
}

impl Explanation {
    pub fn candidates_examined(&self) -> usize {
        self.trace.iter().map(|s| s.candidates_examined).sum::<usize>()
            + self.stop.as_ref().map_or(0, |s| s.candidates_examined)
    }
}

/// Estimation context shared by every step of a run: the query rows and the
/// per-attribute weighting decisions.
pub struct Search<'a> {
    table: &'a Table,
    query: &'a ResolvedQuery,
    rows: RowSelection,
    config: McimrConfig,
    candidates: Vec<ColumnId>,
    /// IPW fits of candidates with missing cells on the query rows.
    ipw: HashMap<ColumnId, WeightVector>,
    /// Candidates whose `Î(O;T|C,E)` is weighted.
    weighted: Vec<ColumnId>,
    pairwise: std::sync::Mutex<Vec<RecoverabilityReport>>,
    recoverability: Vec<RecoverabilityReport>,
}

impl<'a> Search<'a> {
    pub fn new(
        table: &'a Table,
        query: &'a ResolvedQuery,
        candidates: &[ColumnId],
        config: &McimrConfig,
    ) -> Result<Search<'a>> {
        config.validate()?;
        if let Some(bad) = candidates.iter().find(|c| c.0 >= table.column_count()) {
            return Err(Error::UnknownColumn(bad.to_string()));
        }
        let rows = query.rows(table)?;
        if rows.is_empty() {
            return Err(Error::EmptySelection("no rows match the query context".into()));
        }
        let mut cands: Vec<ColumnId> = Vec::new();
        for &c in candidates {
            if !query.mentions(c) && !cands.contains(&c) {
                cands.push(c);
            }
        }
        let mut search = Search {
            table,
            query,
            rows,
            config: config.clone(),
            candidates: cands,
            ipw: HashMap::new(),
            weighted: Vec::new(),
            pairwise: std::sync::Mutex::new(Vec::new()),
            recoverability: Vec::new(),
        };
        if config.weights == WeightPolicy::Auto {
            search.prepare_weights()?;
        }
        Ok(search)
    }

    fn prepare_weights(&mut self) -> Result<()> {
        let with_missing: Vec<ColumnId> = self
            .candidates
            .iter()
            .copied()
            .filter(|&c| {
                let codes = self.table.column(c).codes();
                self.rows.iter().any(|i| codes[i] == MISSING)
            })
            .collect();
        if with_missing.is_empty() {
            return Ok(());
        }
        let pool = self.predictor_pool()?;
        for c in with_missing {
            if self.rows.iter().all(|i| self.table.column(c).codes()[i] == MISSING) {
                continue;
            }
            let report = recoverable_cmi(self.table, self.query, c, &self.config.ci)?;
            let predictors = default_predictors(self.table, self.query, c, &pool);
            match fit_ipw(self.table, c, &predictors, &self.rows) {
                Ok(w) => {
                    if !report.recoverable {
                        self.weighted.push(c);
                    }
                    self.ipw.insert(c, w);
                }
                // Without a usable fit the complete cases are all we have.
                Err(Error::Missingness { .. }) => {}
                Err(e) => return Err(e),
            }
            self.recoverability.push(report);
        }
        Ok(())
    }

    fn predictor_pool(&self) -> Result<Vec<ColumnId>> {
        match &self.config.ipw_predictors {
            Some(names) => names.iter().map(|n| self.table.id(n)).collect(),
            None => {
                let inputs: Vec<ColumnId> = self
                    .table
                    .ids()
                    .filter(|&c| matches!(self.table.column(c).origin(), Origin::Input))
                    .filter(|&c| !self.query.mentions(c))
                    .collect();
                let report = prune_offline(self.table, &inputs, &PruneConfig::default())?;
                report.kept_ids(self.table)
            }
        }
    }

    pub fn rows(&self) -> &RowSelection {
        &self.rows
    }

    pub fn candidates(&self) -> &[ColumnId] {
        &self.candidates
    }

    fn name(&self, c: ColumnId) -> &str {
        self.table.name_of(c)
    }

    /// Product weights for an estimate over `set`, or `None` when no member
    /// is weighted.
    fn weights_for(&self, set: &[ColumnId]) -> Option<Vec<f64>> {
        let mut out: Option<Vec<f64>> = None;
        for c in set.iter().filter(|c| self.weighted.contains(c)) {
            let w = self.ipw[c].as_slice();
            out = Some(match out {
                None => w.to_vec(),
                Some(acc) => acc.iter().zip(w).map(|(a, b)| a * b).collect(),
            });
        }
        out
    }

    fn scope<'s>(&'s self, weights: Option<&'s [f64]>) -> Scope<'s> {
        Scope::new(self.table, &self.rows).weighted(weights)
    }

    /// `Î(O;T|C,set)`.
    pub fn explainability(&self, set: &[ColumnId]) -> Result<f64> {
        let w = self.weights_for(set);
        self.scope(w.as_deref())
            .cmi(self.query.outcome, self.query.exposure, set)
    }

    /// `Î(a;b)` on the query rows, weighted when the complete-case estimate
    /// is not recoverable.
    pub fn redundancy(&self, a: ColumnId, b: ColumnId) -> Result<f64> {
        if a == b {
            return self.scope(self.weights_for(&[a]).as_deref()).entropy(&[a]);
        }
        let weights = match (self.ipw.get(&a), self.ipw.get(&b)) {
            (None, None) => None,
            (wa, wb) => {
                let report =
                    recoverable_pairwise(self.table, &self.rows, a, b, &self.config.ci)?;
                let recoverable = report.recoverable;
                self.pairwise.lock().expect("pairwise log").push(report);
                if recoverable {
                    None
                } else {
                    let unit_a;
                    let unit_b;
                    let wa = match wa {
                        Some(w) => w,
                        None => {
                            unit_a = WeightVector::unit(self.table, a);
                            &unit_a
                        }
                    };
                    let wb = match wb {
                        Some(w) => w,
                        None => {
                            unit_b = WeightVector::unit(self.table, b);
                            &unit_b
                        }
                    };
                    Some(wa.product(wb))
                }
            }
        };
        self.scope(weights.as_deref()).mi(a, b)
    }

    fn dependence(&self, e: ColumnId, given: &[ColumnId]) -> Result<CiOutcome> {
        let mut set = given.to_vec();
        set.push(e);
        let w = self.weights_for(&set);
        self.scope(w.as_deref())
            .ci_test(self.query.outcome, e, given, &self.config.ci)
    }

    /// Mean CMI and mean pairwise redundancy (diagonal included) of `subset`.
    pub fn criterion_components(&self, subset: &[ColumnId]) -> Result<(f64, f64)> {
        if subset.is_empty() {
            return Err(Error::InvalidQuery("criterion of an empty subset".into()));
        }
        let k = subset.len() as f64;
        let mut ci = 0.0;
        for &e in subset {
            ci += self.explainability(&[e])?;
        }
        let mut rd = 0.0;
        for &a in subset {
            for &b in subset {
                rd += self.redundancy(a, b)?;
            }
        }
        Ok((ci / k, rd / (k * k)))
    }

    /// Best next attribute given `selected`, without caching.
    pub fn next_best(&self, selected: &[ColumnId]) -> Result<(ColumnId, f64)> {
        let remaining: Vec<ColumnId> = self
            .candidates
            .iter()
            .copied()
            .filter(|c| !selected.contains(c))
            .collect();
        if remaining.is_empty() {
            return Err(Error::InvalidQuery("no candidates left to choose from".into()));
        }
        let scores = par_map(&remaining, |&e| -> Result<f64> {
            let v1 = self.explainability(&[e])?;
            let mut v2 = 0.0;
            for &s in selected {
                v2 += self.redundancy(e, s)?;
            }
            Ok(if selected.is_empty() {
                v1
            } else {
                v1 + v2 / selected.len() as f64
            })
        });
        let scored: Vec<(ColumnId, f64)> = remaining
            .into_iter()
            .zip(scores)
            .map(|(c, s)| s.map(|s| (c, s)))
            .collect::<Result<_>>()?;
        Ok(self.argmin(&scored))
    }

    fn argmin(&self, scored: &[(ColumnId, f64)]) -> (ColumnId, f64) {
        *scored
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1).then_with(|| self.name(a.0).cmp(self.name(b.0))))
            .expect("non-empty candidate list")
    }

    /// Runs the greedy search.
    pub fn run(&self) -> Result<Explanation> {
        let (o, t) = (self.query.outcome, self.query.exposure);
        let baseline = self.scope(None).cmi(o, t, &[])?;
        let n = self.candidates.len();
        let v1: Vec<f64> = par_map(&self.candidates, |&e| self.explainability(&[e]))
            .into_iter()
            .collect::<Result<_>>()?;
        let mut red = vec![0.0f64; n];
        let mut taken = vec![false; n];
        let mut selected: Vec<ColumnId> = Vec::new();
        let mut trace = Vec::new();
        let mut stop = None;
        let mut current = baseline;

        for _ in 0..self.config.k {
            let scored: Vec<(ColumnId, f64)> = (0..n)
                .filter(|&i| !taken[i])
                .map(|i| {
                    let crit = if selected.is_empty() {
                        v1[i]
                    } else {
                        v1[i] + red[i] / selected.len() as f64
                    };
                    (self.candidates[i], crit)
                })
                .collect();
            if scored.is_empty() {
                break;
            }
            let (best, criterion) = self.argmin(&scored);
            let idx = self.candidates.iter().position(|&c| c == best).expect("known candidate");
            let ci = self.dependence(best, &selected)?;
            if ci.independent() {
                stop = Some(StopRecord {
                    candidate: self.name(best).to_owned(),
                    criterion,
                    candidates_examined: scored.len(),
                    ci,
                });
                break;
            }
            taken[idx] = true;
            selected.push(best);
            current = self.explainability(&selected)?;
            trace.push(TraceStep {
                chosen: self.name(best).to_owned(),
                criterion,
                cmi: v1[idx],
                redundancy: if selected.len() > 1 {
                    red[idx] / (selected.len() - 1) as f64
                } else {
                    0.0
                },
                candidates_examined: scored.len(),
                explainability: current,
                ci,
            });
            if selected.len() < self.config.k {
                let open: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
                let add = par_map(&open, |&i| self.redundancy(self.candidates[i], best));
                for (i, r) in open.into_iter().zip(add) {
                    red[i] += r?;
                }
            }
        }

        let leave_one_out = selected
            .iter()
            .map(|&e| {
                let rest: Vec<ColumnId> = selected.iter().copied().filter(|&s| s != e).collect();
                Ok((self.name(e).to_owned(), self.explainability(&rest)?))
            })
            .collect::<Result<Vec<_>>>()?;
        let mut recoverability = self.recoverability.clone();
        let mut pairwise = self.pairwise.lock().expect("pairwise log").clone();
        pairwise.sort_by(|a, b| a.target.cmp(&b.target));
        pairwise.dedup_by(|a, b| a.target == b.target);
        recoverability.extend(pairwise);
        Ok(Explanation {
            selected: selected.iter().map(|&c| self.name(c).to_owned()).collect(),
            explainability: current,
            baseline,
            responsibilities: responsibility(&leave_one_out, current),
            trace,
            stop,
            weighted_attrs: self.weighted.iter().map(|&c| self.name(c).to_owned()).collect(),
            missing: MissingDiagnostics {
                recoverability,
                weights: self
                    .ipw
                    .iter()
                    .map(|(&c, w)| (self.name(c).to_owned(), w.summary()))
                    .collect(),
            },
        })
    }
}

/// Greedy explanation of `query` over `candidates`.
pub fn run_mcimr(
    table: &Table,
    query: &ResolvedQuery,
    candidates: &[ColumnId],
    config: &McimrConfig,
) -> Result<Explanation> {
    Search::new(table, query, candidates, config)?.run()
}

/// Best next attribute and its criterion value given `selected`.
pub fn next_best_att(
    table: &Table,
    query: &ResolvedQuery,
    selected: &[ColumnId],
    candidates: &[ColumnId],
    config: &McimrConfig,
) -> Result<(ColumnId, f64)> {
    let mut pool = candidates.to_vec();
    pool.extend(selected.iter().filter(|s| !candidates.contains(s)));
    Search::new(table, query, &pool, config)?.next_best(selected)
}

/// Mean CMI and mean pairwise redundancy of `subset`.
pub fn criterion_components(
    table: &Table,
    query: &ResolvedQuery,
    subset: &[ColumnId],
    config: &McimrConfig,
) -> Result<(f64, f64)> {
    Search::new(table, query, subset, config)?.criterion_components(subset)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{Column, QuerySpec};
    use crate::synth::{coded_column, Planted};

    fn names(v: &[(&str, f64)]) -> Vec<(String, f64)> {
        v.iter().map(|&(a, x)| (a.to_owned(), x)).collect()
    }

    #[test]
    fn responsibility_worked_examples() {
        let r = responsibility(&names(&[("E1", 1.51), ("E2", 1.3)]), 0.03);
        assert!((r.get("E1").unwrap() - 0.54).abs() < 0.005);
        assert!((r.get("E2").unwrap() - 0.46).abs() < 0.005);
        let r = responsibility(&names(&[("E1", 2.7), ("E5", 1.3)]), 1.5);
        assert!((r.get("E1").unwrap() - 1.2).abs() < 1e-9);
        assert!((r.get("E5").unwrap() + 0.2).abs() < 1e-9);
        let r = responsibility(&names(&[("E", 0.8)]), 0.1);
        assert_eq!(r.get("E"), Some(1.0));
        let r = responsibility(&names(&[("A", 0.5), ("B", 0.2)]), 0.6);
        assert!(r.get("A").is_none() && r.note.is_some());
    }

    fn planted(seed: u64) -> (Table, ResolvedQuery, Vec<ColumnId>) {
        let t = Planted {
            seed,
            ..Planted::default()
        }
        .table();
        let q = QuerySpec::new("O", "T").resolve(&t).unwrap();
        let c = t.ids().filter(|&c| !q.mentions(c)).collect();
        (t, q, c)
    }

    #[test]
    fn recovers_planted_confounders() {
        let (t, q, c) = planted(1);
        let e = run_mcimr(&t, &q, &c, &McimrConfig::default()).unwrap();
        let mut sel = e.selected.clone();
        sel.sort();
        assert_eq!(sel, vec!["Z1", "Z2"]);
        assert!(e.explainability < 0.1 * e.baseline, "{e:?}");
        assert!(e.stop.is_some());
        assert!(e.candidates_examined() <= 5 * c.len());
        for w in e.trace.windows(2) {
            assert!(w[1].explainability <= w[0].explainability);
        }
        let total: f64 = e.responsibilities.values.iter().filter_map(|v| v.responsibility).sum();
        assert!((total - 1.0).abs() < 1e-9);
        let again = run_mcimr(&t, &q, &c, &McimrConfig::default()).unwrap();
        assert_eq!(e, again);
    }

    #[test]
    fn empty_pool_and_k_one() {
        let (t, q, c) = planted(2);
        let e = run_mcimr(&t, &q, &[], &McimrConfig::default()).unwrap();
        assert!(e.selected.is_empty());
        assert_eq!(e.explainability, e.baseline);

        let cfg = McimrConfig {
            k: 1,
            ..McimrConfig::default()
        };
        let e = run_mcimr(&t, &q, &c, &cfg).unwrap();
        let s = Search::new(&t, &q, &c, &cfg).unwrap();
        let best = c
            .iter()
            .map(|&x| (s.explainability(&[x]).unwrap(), t.name_of(x)))
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(b.1)))
            .unwrap();
        assert_eq!(e.selected, vec![best.1]);
        assert!(McimrConfig { k: 0, ..McimrConfig::default() }.validate().is_err());
    }

    #[test]
    fn next_best_examples() {
        let (t, q, _) = planted(3);
        let z1 = t.id("Z1").unwrap();
        let d1 = t.id("D1").unwrap();
        let cfg = McimrConfig::default();
        assert_eq!(next_best_att(&t, &q, &[], &[d1, z1], &cfg).unwrap().0, z1);

        // Duplicate of an already selected attribute pays Ĥ(E) redundancy.
        let dup = Column::from_raw_codes(
            "Z1copy",
            t.column(z1).codes().to_vec(),
            t.column(z1).labels().to_vec(),
        )
        .unwrap();
        let t = t.with_columns(vec![dup]).unwrap();
        let q = QuerySpec::new("O", "T").resolve(&t).unwrap();
        let (z1, z2, copy) = (t.id("Z1").unwrap(), t.id("Z2").unwrap(), t.id("Z1copy").unwrap());
        let (best, _) = next_best_att(&t, &q, &[z1], &[copy, z2], &cfg).unwrap();
        assert_eq!(best, z2);

        // Exact tie between identical contents: smaller name wins.
        let (best, _) = next_best_att(&t, &q, &[], &[copy, z1], &cfg).unwrap();
        assert_eq!(best, z1);
    }

    #[test]
    fn criterion_component_identities() {
        let (t, q, _) = planted(4);
        let z1 = t.id("Z1").unwrap();
        let cfg = McimrConfig::default();
        let rows = q.rows(&t).unwrap();
        let scope = Scope::new(&t, &rows);
        let (ci, rd) = criterion_components(&t, &q, &[z1], &cfg).unwrap();
        assert_eq!(ci, scope.cmi(q.outcome, q.exposure, &[z1]).unwrap());
        assert_eq!(rd, scope.entropy(&[z1]).unwrap());

        let dup = coded_column("Zc", t.column(z1).codes().to_vec(), 3);
        let t = t.with_columns(vec![dup]).unwrap();
        let q = QuerySpec::new("O", "T").resolve(&t).unwrap();
        let (z1, zc) = (t.id("Z1").unwrap(), t.id("Zc").unwrap());
        let (_, rd) = criterion_components(&t, &q, &[z1, zc], &cfg).unwrap();
        let h = Scope::new(&t, &rows).entropy(&[z1]).unwrap();
        assert!((rd - h).abs() < 1e-12);

        let (d1, d2) = (t.id("D1").unwrap(), t.id("D2").unwrap());
        let (_, rd) = criterion_components(&t, &q, &[d1, d2], &cfg).unwrap();
        let scope = Scope::new(&t, &rows);
        let expected = (scope.entropy(&[d1]).unwrap() + scope.entropy(&[d2]).unwrap()) / 4.0;
        assert!((rd - expected).abs() < 0.01);
        assert!(criterion_components(&t, &q, &[], &cfg).is_err());
    }

    #[test]
    fn relabelling_codes_keeps_selection() {
        let (t, q, c) = planted(5);
        let base = run_mcimr(&t, &q, &c, &McimrConfig::default()).unwrap();
        let cols = t
            .columns()
            .iter()
            .map(|col| {
                if col.name() == "O" || col.name() == "T" {
                    return col.clone();
                }
                let card = col.cardinality();
                let codes = col.codes().iter().map(|&x| (x * 2 + 1) % card).collect();
                coded_column(col.name(), codes, card)
            })
            .collect();
        let t2 = Table::new("r", cols).unwrap();
        let q2 = QuerySpec::new("O", "T").resolve(&t2).unwrap();
        let other = run_mcimr(&t2, &q2, &c, &McimrConfig::default()).unwrap();
        assert_eq!(base.selected, other.selected);
        assert_eq!(base.explainability, other.explainability);
    }

    #[test]
    fn missing_confounder_is_weighted() {
        let (t, _) = crate::synth::missing_on_covariate(5000, 0.5, 11);
        let q = QuerySpec::new("O", "T").resolve(&t).unwrap();
        let e = t.id("E").unwrap();
        let x = t.id("X").unwrap();
        let ex = run_mcimr(&t, &q, &[e, x], &McimrConfig::default()).unwrap();
        assert_eq!(ex.weighted_attrs, vec!["E"]);
        assert!(ex.missing.weights.contains_key("E"));
        let cc = McimrConfig {
            weights: WeightPolicy::CompleteCase,
            ..McimrConfig::default()
        };
        let ex = run_mcimr(&t, &q, &[e, x], &cc).unwrap();
        assert!(ex.weighted_attrs.is_empty());
    }
}
