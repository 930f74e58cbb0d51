//! Missing data in candidate attributes: recoverability checks for
//! complete-case estimates and inverse probability weights when they fail.

mod logistic;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnId, Origin, ResolvedQuery, RowSelection, Table, MISSING};
use crate::error::{Error, Result};
use crate::estimator::{CiOutcome, CiTestConfig, Scope, Var};

pub use logistic::{FitOptions, LogisticFit};

/// Lower and upper clip bounds for fitted observation probabilities.
pub const PROB_CLIP: (f64, f64) = (0.01, 0.99);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IpwDiagnostics {
    pub predictors: Vec<String>,
    pub fit: Option<LogisticFit>,
    /// Observation rate of the target over the fitted rows.
    pub observed_rate: f64,
    /// Rows whose fitted probability hit a clip bound.
    pub clipped: usize,
    /// Rows left out of the fit because a predictor was missing.
    pub dropped_rows: usize,
}

/// Per-row inverse probability weights for one target column.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub target: String,
    weights: Vec<f64>,
    pub diagnostics: IpwDiagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightSummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
    pub present: usize,
}

impl WeightVector {
    /// Unit weights on present rows, zero on missing rows.
    pub fn unit(table: &Table, target: ColumnId) -> WeightVector {
        let col = table.column(target);
        WeightVector {
            target: col.name().to_owned(),
            weights: col
                .codes()
                .iter()
                .map(|&c| if c == MISSING { 0.0 } else { 1.0 })
                .collect(),
            diagnostics: IpwDiagnostics {
                predictors: Vec::new(),
                fit: None,
                observed_rate: col.observed_count() as f64 / col.len().max(1) as f64,
                clipped: 0,
                dropped_rows: 0,
            },
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.weights
    }

    /// Row-wise product with another weight vector.
    pub fn product(&self, other: &WeightVector) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| a * b)
            .collect()
    }

    pub fn summary(&self) -> WeightSummary {
        let present: Vec<f64> = self.weights.iter().copied().filter(|&w| w > 0.0).collect();
        let (min, max) = present
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &w| (lo.min(w), hi.max(w)));
        WeightSummary {
            min: if present.is_empty() { 0.0 } else { min },
            max: if present.is_empty() { 0.0 } else { max },
            mean: present.iter().sum::<f64>() / present.len().max(1) as f64,
            present: present.len(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RecoverabilityKind {
    CmiQuery,
    PairwiseMi,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiRecord {
    pub condition: String,
    pub outcome: CiOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecoverabilityReport {
    pub target: String,
    pub kind: RecoverabilityKind,
    pub tests: Vec<CiRecord>,
    pub recoverable: bool,
}

impl RecoverabilityReport {
    fn new(target: String, kind: RecoverabilityKind, tests: Vec<CiRecord>) -> Self {
        let recoverable = tests.iter().all(|t| t.outcome.independent());
        RecoverabilityReport {
            target,
            kind,
            tests,
            recoverable,
        }
    }
}

/// 0/1 observation indicator of `codes`.
fn indicator(codes: &[u32]) -> Vec<u32> {
    codes.iter().map(|&c| u32::from(c != MISSING)).collect()
}

fn count_missing(codes: &[u32], rows: &RowSelection) -> (usize, usize) {
    let missing = rows.iter().filter(|&i| codes[i] == MISSING).count();
    (missing, rows.selected_count() - missing)
}

/// Whether the complete-case estimate of `I(O;T|C,e)` can be trusted.
///
/// The indicator `R_e` is tested against the outcome, unconditionally and
/// given the exposure, on the query rows. Conditioning on `e` itself is not
/// possible since `e` is unobserved exactly where `R_e = 0`.
pub fn recoverable_cmi(
    table: &Table,
    query: &ResolvedQuery,
    e: ColumnId,
    config: &CiTestConfig,
) -> Result<RecoverabilityReport> {
    let rows = query.rows(table)?;
    let col = table.column(e);
    let (missing, present) = count_missing(col.codes(), &rows);
    if missing == 0 {
        return Ok(RecoverabilityReport::new(
            col.name().to_owned(),
            RecoverabilityKind::CmiQuery,
            Vec::new(),
        ));
    }
    if present == 0 {
        return Err(Error::Missingness {
            column: col.name().to_owned(),
            reason: "no observed cells in the query rows".into(),
        });
    }
    let r = indicator(col.codes());
    let rv = Var::new(&r, 2);
    let scope = Scope::new(table, &rows);
    let o = scope.var(query.outcome);
    let t = scope.var(query.exposure);
    let (oname, tname) = (table.name_of(query.outcome), table.name_of(query.exposure));
    let rname = format!("R[{}]", col.name());
    let tests = vec![
        CiRecord {
            condition: format!("{oname} ⊥ {rname}"),
            outcome: scope.ci_test_vars(o, rv, &[], config)?,
        },
        CiRecord {
            condition: format!("{oname} ⊥ {rname} | {tname}"),
            outcome: scope.ci_test_vars(o, rv, &[t], config)?,
        },
    ];
    Ok(RecoverabilityReport::new(
        col.name().to_owned(),
        RecoverabilityKind::CmiQuery,
        tests,
    ))
}

/// Whether the complete-case estimate of `I(e_i;e_j)` can be trusted.
///
/// With `R` the joint observation indicator of both columns, each column is
/// tested against `R` unconditionally and given the other column.
pub fn recoverable_pairwise(
    table: &Table,
    rows: &RowSelection,
    e_i: ColumnId,
    e_j: ColumnId,
    config: &CiTestConfig,
) -> Result<RecoverabilityReport> {
    let (ci, cj) = (table.column(e_i), table.column(e_j));
    let target = format!("{},{}", ci.name(), cj.name());
    let joint: Vec<u32> = ci
        .codes()
        .iter()
        .zip(cj.codes())
        .map(|(&a, &b)| u32::from(a != MISSING && b != MISSING))
        .collect();
    let both = rows.iter().filter(|&i| joint[i] == 1).count();
    if both == rows.selected_count() {
        return Ok(RecoverabilityReport::new(target, RecoverabilityKind::PairwiseMi, Vec::new()));
    }
    if both == 0 {
        return Err(Error::Missingness {
            column: target,
            reason: "the two columns are never observed together".into(),
        });
    }
    let scope = Scope::new(table, rows);
    let r = Var::new(&joint, 2);
    let (vi, vj) = (scope.var(e_i), scope.var(e_j));
    let mut tests = Vec::with_capacity(4);
    for (a, b, an, bn) in [(vi, vj, ci.name(), cj.name()), (vj, vi, cj.name(), ci.name())] {
        tests.push(CiRecord {
            condition: format!("{an} ⊥ R[{target}]"),
            outcome: scope.ci_test_vars(a, r, &[], config)?,
        });
        tests.push(CiRecord {
            condition: format!("{an} ⊥ R[{target}] | {bn}"),
            outcome: scope.ci_test_vars(a, r, &[b], config)?,
        });
    }
    Ok(RecoverabilityReport::new(target, RecoverabilityKind::PairwiseMi, tests))
}

/// Default IPW predictors: input columns other than the query's outcome,
/// exposure and context columns and the target itself.
pub fn default_predictors(
    table: &Table,
    query: &ResolvedQuery,
    target: ColumnId,
    allowed: &[ColumnId],
) -> Vec<ColumnId> {
    allowed
        .iter()
        .copied()
        .filter(|&c| c != target && !query.mentions(c))
        .filter(|&c| matches!(table.column(c).origin(), Origin::Input))
        .collect()
}

/// Fits `P(R_target = 1 | predictors)` on `selection` and returns weights
/// `P(R=1) / P(R=1 | x)` on present rows and 0 on missing rows.
///
/// Present rows with a missing predictor are left out of the fit and get
/// weight 1. A target without missing cells on `selection` gets unit
/// weights.
pub fn fit_ipw(
    table: &Table,
    target: ColumnId,
    predictors: &[ColumnId],
    selection: &RowSelection,
) -> Result<WeightVector> {
    fit_ipw_with(table, target, predictors, selection, &FitOptions::default())
}

pub fn fit_ipw_with(
    table: &Table,
    target: ColumnId,
    predictors: &[ColumnId],
    selection: &RowSelection,
    options: &FitOptions,
) -> Result<WeightVector> {
    let tcol = table.column(target);
    if predictors.contains(&target) {
        return Err(Error::Missingness {
            column: tcol.name().to_owned(),
            reason: "the target cannot predict its own missingness".into(),
        });
    }
    let (missing, present) = count_missing(tcol.codes(), selection);
    if missing == 0 {
        return Ok(WeightVector::unit(table, target));
    }
    if present == 0 {
        return Err(Error::Missingness {
            column: tcol.name().to_owned(),
            reason: "no observed cells to weight".into(),
        });
    }

    let pcols: Vec<&[u32]> = predictors.iter().map(|&p| table.column(p).codes()).collect();
    let design = logistic::Design {
        cards: predictors.iter().map(|&p| table.column(p).cardinality()).collect(),
    };
    let pattern_of = |i: usize| -> Option<Vec<u32>> {
        pcols
            .iter()
            .map(|c| (c[i] != MISSING).then_some(c[i]))
            .collect()
    };

    let mut groups: BTreeMap<Vec<u32>, (f64, f64)> = BTreeMap::new();
    let mut dropped = 0usize;
    for i in selection.iter() {
        match pattern_of(i) {
            Some(p) => {
                let g = groups.entry(p).or_insert((0.0, 0.0));
                g.0 += 1.0;
                if tcol.codes()[i] != MISSING {
                    g.1 += 1.0;
                }
            }
            None => dropped += 1,
        }
    }
    let trials: f64 = groups.values().map(|g| g.0).sum();
    let successes: f64 = groups.values().map(|g| g.1).sum();
    if successes == 0.0 || successes == trials {
        return Err(Error::Missingness {
            column: tcol.name().to_owned(),
            reason: "the observation indicator is constant on rows with complete predictors"
                .into(),
        });
    }
    let rate = successes / trials;
    let flat: Vec<(Vec<u32>, f64, f64)> = groups.into_iter().map(|(p, (n, s))| (p, n, s)).collect();
    let fit = logistic::fit(&design, &flat, options);

    let mut scratch = Vec::new();
    let mut clipped = 0usize;
    let weights = tcol
        .codes()
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            if c == MISSING {
                return 0.0;
            }
            match pattern_of(i) {
                Some(p) => {
                    let raw = logistic::predict(&design, &fit, &p, &mut scratch);
                    let prob = raw.clamp(PROB_CLIP.0, PROB_CLIP.1);
                    if prob != raw && selection.contains(i) {
                        clipped += 1;
                    }
                    rate / prob
                }
                None => 1.0,
            }
        })
        .collect();
    Ok(WeightVector {
        target: tcol.name().to_owned(),
        weights,
        diagnostics: IpwDiagnostics {
            predictors: predictors.iter().map(|&p| table.name_of(p).to_owned()).collect(),
            fit: Some(fit),
            observed_rate: rate,
            clipped,
            dropped_rows: dropped,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::QuerySpec;
    use crate::synth::coded_column;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn two_stratum_weights_match_analytic_values() {
        let t = crate::synth::two_stratum(5000, 3);
        let all = RowSelection::all(5000);
        let w = fit_ipw(&t, ColumnId(1), &[ColumnId(0)], &all).unwrap();
        let x = t.column(ColumnId(0)).codes();
        for (i, &wi) in w.as_slice().iter().enumerate() {
            if t.column(ColumnId(1)).is_missing(i) {
                assert_eq!(wi, 0.0);
            } else if x[i] == 0 {
                assert!((wi - 0.6 / 0.9).abs() < 0.1, "{wi}");
            } else {
                assert!((wi - 2.0).abs() < 0.1, "{wi}");
            }
        }
        // Weighted mass of the complete cases matches their count.
        let mass: f64 = w.as_slice().iter().sum();
        let present = t.column(ColumnId(1)).observed_count() as f64;
        assert!((mass - present).abs() / present < 0.05);
    }

    #[test]
    fn mcar_weights_are_near_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x: Vec<u32> = (0..5000).map(|_| rng.gen_range(0..3)).collect();
        let e: Vec<u32> = (0..5000)
            .map(|_| if rng.gen_bool(0.5) { 1 } else { MISSING })
            .collect();
        let t = Table::new("m", vec![coded_column("X", x, 3), coded_column("E", e, 2)]).unwrap();
        let w = fit_ipw(&t, ColumnId(1), &[ColumnId(0)], &RowSelection::all(5000)).unwrap();
        let s = w.summary();
        assert!(s.min >= 0.9 && s.max <= 1.1, "{s:?}");
    }

    #[test]
    fn fully_observed_target_gets_unit_weights() {
        let t = Table::new(
            "f",
            vec![coded_column("X", vec![0, 1, 0], 2), coded_column("E", vec![1, 1, 0], 2)],
        )
        .unwrap();
        let w = fit_ipw(&t, ColumnId(1), &[ColumnId(0)], &RowSelection::all(3)).unwrap();
        assert_eq!(w.as_slice(), &[1.0, 1.0, 1.0]);
        assert!(w.diagnostics.fit.is_none());
    }

    #[test]
    fn predictor_gaps_are_dropped_and_counted() {
        let t = Table::new(
            "g",
            vec![
                coded_column("X", vec![0, MISSING, 1, 0, 1, 1], 2),
                coded_column("E", vec![1, 0, MISSING, 0, 1, MISSING], 2),
            ],
        )
        .unwrap();
        let w = fit_ipw(&t, ColumnId(1), &[ColumnId(0)], &RowSelection::all(6)).unwrap();
        assert_eq!(w.diagnostics.dropped_rows, 1);
        assert_eq!(w.as_slice()[1], 1.0);
        assert_eq!(w.as_slice()[2], 0.0);
        assert!(fit_ipw(&t, ColumnId(1), &[ColumnId(1)], &RowSelection::all(6)).is_err());
    }

    fn query_table(missing: impl Fn(u32, &mut ChaCha8Rng) -> bool) -> (Table, ResolvedQuery) {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (mut o, mut t, mut e) = (Vec::new(), Vec::new(), Vec::new());
        for _ in 0..2000 {
            let ei: u32 = rng.gen_range(0..3);
            let ti = if rng.gen_bool(0.7) { ei } else { rng.gen_range(0..3) };
            let oi = if rng.gen_bool(0.7) { ei } else { rng.gen_range(0..3) };
            o.push(oi);
            t.push(ti);
            e.push(if missing(oi, &mut rng) { MISSING } else { ei });
        }
        let table = Table::new(
            "q",
            vec![coded_column("O", o, 3), coded_column("T", t, 3), coded_column("E", e, 3)],
        )
        .unwrap();
        let q = QuerySpec::new("O", "T").resolve(&table).unwrap();
        (table, q)
    }

    #[test]
    fn recoverability_of_cmi() {
        let cfg = CiTestConfig::default();
        let (t, q) = query_table(|_, _| false);
        let r = recoverable_cmi(&t, &q, ColumnId(2), &cfg).unwrap();
        assert!(r.recoverable && r.tests.is_empty());

        let (t, q) = query_table(|_, rng| rng.gen_bool(0.5));
        let r = recoverable_cmi(&t, &q, ColumnId(2), &cfg).unwrap();
        assert!(r.recoverable, "{r:?}");
        assert_eq!(r.tests.len(), 2);

        let (t, q) = query_table(|o, rng| rng.gen_bool(if o == 0 { 0.8 } else { 0.1 }));
        let r = recoverable_cmi(&t, &q, ColumnId(2), &cfg).unwrap();
        assert!(!r.recoverable, "{r:?}");

        let (t, q) = query_table(|_, _| true);
        assert!(recoverable_cmi(&t, &q, ColumnId(2), &cfg).is_err());
    }

    #[test]
    fn recoverability_of_pairwise_mi() {
        let cfg = CiTestConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut a = Vec::new();
        let mut b = Vec::new();
        let mut a_mcar = Vec::new();
        let mut a_self = Vec::new();
        for _ in 0..3000 {
            let ai: u32 = rng.gen_range(0..3);
            let bi = if rng.gen_bool(0.8) { ai } else { rng.gen_range(0..3) };
            a.push(ai);
            b.push(bi);
            a_mcar.push(if rng.gen_bool(0.3) { MISSING } else { ai });
            a_self.push(if ai == 0 && rng.gen_bool(0.8) { MISSING } else { ai });
        }
        let t = Table::new(
            "p",
            vec![
                coded_column("A", a, 3),
                coded_column("B", b, 3),
                coded_column("Amcar", a_mcar, 3),
                coded_column("Aself", a_self, 3),
            ],
        )
        .unwrap();
        let all = RowSelection::all(3000);
        let full = recoverable_pairwise(&t, &all, ColumnId(0), ColumnId(1), &cfg).unwrap();
        assert!(full.recoverable && full.tests.is_empty());
        let mcar = recoverable_pairwise(&t, &all, ColumnId(2), ColumnId(1), &cfg).unwrap();
        assert!(mcar.recoverable, "{mcar:?}");
        let selfm = recoverable_pairwise(&t, &all, ColumnId(3), ColumnId(1), &cfg).unwrap();
        assert!(!selfm.recoverable, "{selfm:?}");
    }
}
