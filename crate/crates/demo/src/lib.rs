//! Browser bindings for the confounder explanation library.
//!
//! Every entry point takes a JSON parameter object and returns a JSON
//! string; errors come back as `{"error": "..."}` so the page never has to
//! catch exceptions.

use confex_core::dataset::Column;
use confex_core::estimator::{build_freq, entropy_mm};
use confex_core::mcimr::McimrConfig;
use confex_core::pipeline::{explain, ExplainConfig, Profile};
use confex_core::subgroups::{top_k_unexplained, Subgroup, SubgroupConfig};
use confex_core::synth::{coded_column, uniform_codes, Planted};
use confex_core::{ColumnId, QuerySpec, RowSelection, Table};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

const MAX_ROWS: usize = 200_000;

fn parse<P: DeserializeOwned>(params: &str) -> Result<P, String> {
    let text = if params.trim().is_empty() { "{}" } else { params };
    serde_json::from_str(text).map_err(|e| format!("bad parameters: {e}"))
}

fn respond<T: Serialize>(result: Result<T, String>) -> String {
    let value = match result {
        Ok(v) => serde_json::to_value(v).map_err(|e| e.to_string()),
        Err(e) => Err(e),
    };
    match value {
        Ok(v) => v.to_string(),
        Err(e) => serde_json::json!({ "error": e }).to_string(),
    }
}

fn check_rows(n: usize) -> Result<(), String> {
    if n == 0 || n > MAX_ROWS {
        return Err(format!("n must be between 1 and {MAX_ROWS}, got {n}"));
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct ExploreParams {
    pub n: usize,
    pub strength: f64,
    pub direct: f64,
    pub missing: f64,
    pub distractors: usize,
    pub k: usize,
    pub seed: u64,
}

impl Default for ExploreParams {
    fn default() -> Self {
        ExploreParams {
            n: 5000,
            strength: 0.85,
            direct: 0.0,
            missing: 0.0,
            distractors: 6,
            k: 3,
            seed: 1,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AttrShare {
    pub attr: String,
    pub responsibility: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct Dropped {
    pub column: String,
    pub rule: String,
}

#[derive(Debug, Serialize)]
pub struct ExploreResult {
    pub rows: usize,
    pub groups: Vec<(String, Option<f64>, usize)>,
    pub selected: Vec<String>,
    pub responsibilities: Vec<AttrShare>,
    pub before: f64,
    pub after: f64,
    pub dropped: Vec<Dropped>,
    pub kept: Vec<String>,
    pub weighted: Vec<String>,
    pub millis: f64,
}

fn planted(p: &ExploreParams) -> Result<Table, String> {
    check_rows(p.n)?;
    for (name, v) in [("strength", p.strength), ("direct", p.direct), ("missing", p.missing)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(format!("{name} must lie in [0, 1], got {v}"));
        }
    }
    Ok(Planted {
        n: p.n,
        distractors: p.distractors.min(30),
        strength: p.strength,
        direct: p.direct,
        missing: p.missing,
        seed: p.seed,
    }
    .table())
}

/// Generates a table with two planted confounders and explains the
/// exposure-outcome correlation.
pub fn explore_json(params: &str) -> Result<ExploreResult, String> {
    let p: ExploreParams = parse(params)?;
    let table = planted(&p)?;
    let config = ExplainConfig {
        mcimr: McimrConfig {
            k: p.k,
            ..Default::default()
        },
        ..Default::default()
    };
    let mut profile = Profile::default();
    let report = explain(&table, &QuerySpec::new("O", "T"), &config, &mut profile).map_err(|e| e.to_string())?;
    let ex = &report.explanation;
    Ok(ExploreResult {
        rows: table.row_count(),
        groups: report
            .groups
            .iter()
            .map(|g| (g.exposure.clone(), g.value, g.rows))
            .collect(),
        selected: ex.selected.clone(),
        responsibilities: ex
            .responsibilities
            .values
            .iter()
            .map(|r| AttrShare {
                attr: r.attr.clone(),
                responsibility: r.responsibility,
            })
            .collect(),
        before: report.explainability_before,
        after: report.explainability_after,
        dropped: report
            .prune
            .dropped
            .iter()
            .map(|d| Dropped {
                column: d.column.clone(),
                rule: serde_json::to_value(d.rule)
                    .ok()
                    .and_then(|v| v.as_str().map(str::to_owned))
                    .unwrap_or_default(),
            })
            .collect(),
        kept: report.prune.kept.clone(),
        weighted: ex.weighted_attrs.clone(),
        millis: profile.total_millis(),
    })
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct BiasParams {
    pub symbols: u32,
    pub sizes: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for BiasParams {
    fn default() -> Self {
        BiasParams {
            symbols: 16,
            sizes: vec![8, 16, 32, 64, 128, 256, 512, 1024],
            trials: 200,
            seed: 1,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct BiasPoint {
    pub n: usize,
    pub plugin: f64,
    pub miller_madow: f64,
}

#[derive(Debug, Serialize)]
pub struct BiasCurve {
    pub true_entropy: f64,
    pub points: Vec<BiasPoint>,
}

/// Mean plug-in and Miller-Madow entropy of uniform samples against the
/// true entropy, per sample size.
pub fn bias_curve_json(params: &str) -> Result<BiasCurve, String> {
    let p: BiasParams = parse(params)?;
    if !(2..=1024).contains(&p.symbols) {
        return Err(format!("symbols must be between 2 and 1024, got {}", p.symbols));
    }
    if p.trials == 0 || p.trials > 10_000 || p.sizes.len() > 64 {
        return Err("trials must be in 1..=10000 and at most 64 sizes".into());
    }
    let mut points = Vec::with_capacity(p.sizes.len());
    for (i, &n) in p.sizes.iter().enumerate() {
        check_rows(n)?;
        let (mut plug, mut mm) = (0.0, 0.0);
        for t in 0..p.trials {
            let seed = p.seed ^ ((i as u64) << 32) ^ t as u64;
            let codes = uniform_codes(n, p.symbols, seed);
            let table = Table::new("sample", vec![coded_column("X", codes, p.symbols)]).map_err(|e| e.to_string())?;
            let freq = build_freq(&table, &[ColumnId(0)], &RowSelection::all(n), None).map_err(|e| e.to_string())?;
            plug += freq.entropy_plugin();
            mm += entropy_mm(&freq);
        }
        let trials = p.trials as f64;
        points.push(BiasPoint {
            n,
            plugin: plug / trials,
            miller_madow: mm / trials,
        });
    }
    Ok(BiasCurve {
        true_entropy: f64::from(p.symbols).log2(),
        points,
    })
}

#[derive(Debug, Deserialize)]
#[serde(default)]
pub struct SubgroupParams {
    pub n: usize,
    pub regions: u32,
    /// Region in which the outcome copies the exposure.
    pub rogue: u32,
    pub k: usize,
    pub tau: Option<f64>,
    pub min_size: usize,
    pub seed: u64,
}

impl Default for SubgroupParams {
    fn default() -> Self {
        SubgroupParams {
            n: 8000,
            regions: 4,
            rogue: 3,
            k: 3,
            tau: None,
            min_size: 50,
            seed: 1,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SubgroupResult {
    pub selected: Vec<String>,
    pub subgroups: Vec<Subgroup>,
}

/// Planted fixture with `Region` and `Shift` columns in which one region
/// breaks the confounding story; finds the subgroups left unexplained.
fn stratified(p: &SubgroupParams) -> Result<Table, String> {
    check_rows(p.n)?;
    if !(2..=26).contains(&p.regions) || p.rogue >= p.regions {
        return Err("regions must be in 2..=26 and rogue below regions".into());
    }
    let base = Planted {
        n: p.n,
        distractors: 2,
        seed: p.seed,
        ..Default::default()
    }
    .table();
    let region: Vec<u32> = (0..p.n).map(|r| (r as u32 * 7 + r as u32 / 5) % p.regions).collect();
    let shift: Vec<u32> = (0..p.n).map(|r| (r as u32 / 3) % 2).collect();
    let t = base.column_by_name("T").map_err(|e| e.to_string())?.codes();
    let mut cols: Vec<Column> = Vec::new();
    for c in base.columns() {
        if c.name() == "O" {
            let codes = c
                .codes()
                .iter()
                .zip(t)
                .zip(&region)
                .map(|((&o, &t), &g)| if g == p.rogue { t } else { o })
                .collect();
            cols.push(coded_column("O", codes, c.cardinality()));
        } else {
            cols.push(c.clone());
        }
    }
    let labels = (0..p.regions).map(|i| char::from(b'A' + i as u8).to_string()).collect();
    cols.push(Column::from_raw_codes("Region", region, labels).map_err(|e| e.to_string())?);
    cols.push(
        Column::from_raw_codes("Shift", shift, vec!["day".into(), "night".into()]).map_err(|e| e.to_string())?,
    );
    Table::new("stratified", cols).map_err(|e| e.to_string())
}

pub fn subgroups_json(params: &str) -> Result<SubgroupResult, String> {
    let p: SubgroupParams = parse(params)?;
    let table = stratified(&p)?;
    let query = QuerySpec::new("O", "T");
    let config = ExplainConfig {
        candidates: Some(vec!["Z1".into(), "Z2".into(), "D1".into(), "D2".into()]),
        ..Default::default()
    };
    let report = explain(&table, &query, &config, &mut Profile::default()).map_err(|e| e.to_string())?;
    let selected: Vec<ColumnId> = report
        .explanation
        .selected
        .iter()
        .map(|s| table.id(s))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let resolved = query.resolve(&table).map_err(|e| e.to_string())?;
    let found = top_k_unexplained(
        &table,
        &resolved,
        &selected,
        &SubgroupConfig {
            k: p.k,
            tau: p.tau,
            refinable: vec!["Region".into(), "Shift".into()],
            min_size: p.min_size,
        },
    )
    .map_err(|e| e.to_string())?;
    Ok(SubgroupResult {
        selected: report.explanation.selected.clone(),
        subgroups: found.iter().map(|r| r.describe(&table)).collect(),
    })
}

#[wasm_bindgen]
pub fn explore(params: &str) -> String {
    respond(explore_json(params))
}

#[wasm_bindgen]
pub fn bias_curve(params: &str) -> String {
    respond(bias_curve_json(params))
}

#[wasm_bindgen]
pub fn subgroups(params: &str) -> String {
    respond(subgroups_json(params))
}
