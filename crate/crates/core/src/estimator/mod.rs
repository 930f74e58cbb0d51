//! Miller-Madow entropy, mutual information and conditional mutual
//! information over coded columns, plus a conditional-independence test.
//!
//! All quantities are in bits. Every estimate is computed from one joint
//! tabulation over the rows where all involved variables are present, so
//! the entropy terms of a CMI share the same support.

mod joint;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnId, RowSelection, Table, MISSING};
use crate::error::{Error, Result};

pub use joint::{mm_correction, Joint, Var};

/// Sparse joint counts (or weight sums) over a column set.
#[derive(Clone, Debug, PartialEq)]
pub struct FrequencyTable {
    pub columns: Vec<ColumnId>,
    /// Non-empty cells sorted by value tuple.
    pub cells: Vec<(Vec<u32>, f64)>,
    pub total: f64,
    pub distinct: usize,
    pub effective_n: f64,
}

impl FrequencyTable {
    pub fn get(&self, tuple: &[u32]) -> f64 {
        self.cells
            .binary_search_by(|(t, _)| t.as_slice().cmp(tuple))
            .map_or(0.0, |i| self.cells[i].1)
    }

    /// Plug-in (maximum likelihood) entropy in bits.
    pub fn entropy_plugin(&self) -> f64 {
        let mut counts: Vec<f64> = self.cells.iter().map(|&(_, c)| c).collect();
        joint::plugin_entropy(&mut counts, self.total)
    }
}

fn check_weights(table: &Table, weights: Option<&[f64]>) -> Result<()> {
    if let Some(w) = weights {
        if w.len() != table.row_count() {
            return Err(Error::InvalidData(format!(
                "weight vector has {} entries for {} rows",
                w.len(),
                table.row_count()
            )));
        }
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidData("weights must be finite and non-negative".into()));
        }
    }
    Ok(())
}

fn vars<'t>(table: &'t Table, cols: &[ColumnId]) -> Result<Vec<Var<'t>>> {
    cols.iter()
        .map(|&c| {
            if c.0 >= table.column_count() {
                return Err(Error::UnknownColumn(c.to_string()));
            }
            let col = table.column(c);
            Ok(Var::new(col.codes(), col.cardinality()))
        })
        .collect()
}

pub fn build_freq(
    table: &Table,
    cols: &[ColumnId],
    selection: &RowSelection,
    weights: Option<&[f64]>,
) -> Result<FrequencyTable> {
    if cols.is_empty() {
        return Err(Error::InvalidQuery("frequency table needs at least one column".into()));
    }
    check_weights(table, weights)?;
    let j = Joint::tabulate(&vars(table, cols)?, selection.iter(), weights)?;
    let mut cells = j.tuples();
    cells.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(FrequencyTable {
        columns: cols.to_vec(),
        distinct: cells.len(),
        cells,
        total: j.total(),
        effective_n: j.effective_n(),
    })
}

/// Miller-Madow entropy of a frequency table, clamped at zero.
pub fn entropy_mm(freq: &FrequencyTable) -> f64 {
    (freq.entropy_plugin() + mm_correction(freq.distinct, freq.effective_n)).max(0.0)
}

/// Estimation scope: a table, the rows to use and optional row weights.
#[derive(Clone, Copy, Debug)]
pub struct Scope<'a> {
    pub table: &'a Table,
    pub rows: &'a RowSelection,
    pub weights: Option<&'a [f64]>,
}

impl<'a> Scope<'a> {
    pub fn new(table: &'a Table, rows: &'a RowSelection) -> Scope<'a> {
        Scope {
            table,
            rows,
            weights: None,
        }
    }

    pub fn weighted(self, weights: Option<&'a [f64]>) -> Scope<'a> {
        Scope { weights, ..self }
    }

    pub fn var(&self, col: ColumnId) -> Var<'a> {
        let c = self.table.column(col);
        Var::new(c.codes(), c.cardinality())
    }

    /// Tabulates `cols` over the scope's rows.
    pub fn joint(&self, cols: &[ColumnId]) -> Result<Joint> {
        check_weights(self.table, self.weights)?;
        Joint::tabulate(&vars(self.table, cols)?, self.rows.iter(), self.weights)
    }

    /// Tabulates arbitrary coded variables over the scope's rows.
    pub fn joint_vars(&self, vars: &[Var<'_>]) -> Result<Joint> {
        check_weights(self.table, self.weights)?;
        Joint::tabulate(vars, self.rows.iter(), self.weights)
    }

    pub fn entropy(&self, cols: &[ColumnId]) -> Result<f64> {
        let j = self.joint(cols)?;
        let all: Vec<usize> = (0..cols.len()).collect();
        Ok(j.entropy(&all))
    }

    pub fn cmi(&self, x: ColumnId, y: ColumnId, z: &[ColumnId]) -> Result<f64> {
        check_roles(x, y, z)?;
        let mut cols = vec![x, y];
        cols.extend_from_slice(z);
        let zpos: Vec<usize> = (2..cols.len()).collect();
        Ok(self.joint(&cols)?.cmi(0, 1, &zpos))
    }

    pub fn mi(&self, x: ColumnId, y: ColumnId) -> Result<f64> {
        self.cmi(x, y, &[])
    }

    pub fn conditional_entropy(&self, x: ColumnId, given: &[ColumnId]) -> Result<f64> {
        if given.contains(&x) {
            return Err(Error::InvalidQuery(format!(
                "{} appears in its own conditioning set",
                self.table.name_of(x)
            )));
        }
        let mut cols = given.to_vec();
        cols.push(x);
        let gpos: Vec<usize> = (0..given.len()).collect();
        Ok(self.joint(&cols)?.conditional_entropy(given.len(), &gpos))
    }

    pub fn ci_test(
        &self,
        x: ColumnId,
        y: ColumnId,
        z: &[ColumnId],
        config: &CiTestConfig,
    ) -> Result<CiOutcome> {
        check_roles(x, y, z)?;
        let zv: Vec<Var<'_>> = z.iter().map(|&c| self.var(c)).collect();
        self.ci_test_vars(self.var(x), self.var(y), &zv, config)
    }

    /// [`Scope::ci_test`] on arbitrary coded variables.
    pub fn ci_test_vars(
        &self,
        x: Var<'_>,
        y: Var<'_>,
        z: &[Var<'_>],
        config: &CiTestConfig,
    ) -> Result<CiOutcome> {
        config.validate()?;
        check_weights(self.table, self.weights)?;
        ci_test_rows(x, y, z, self.rows.iter(), self.weights, config)
    }
}

fn check_roles(x: ColumnId, y: ColumnId, z: &[ColumnId]) -> Result<()> {
    if x == y {
        return Err(Error::InvalidQuery(format!("x and y are both column {x}")));
    }
    if z.contains(&x) || z.contains(&y) {
        return Err(Error::InvalidQuery(
            "x and y must not appear in the conditioning set".into(),
        ));
    }
    Ok(())
}

pub fn entropy(
    table: &Table,
    cols: &[ColumnId],
    selection: &RowSelection,
    weights: Option<&[f64]>,
) -> Result<f64> {
    Scope::new(table, selection).weighted(weights).entropy(cols)
}

pub fn cmi(
    table: &Table,
    x: ColumnId,
    y: ColumnId,
    z: &[ColumnId],
    selection: &RowSelection,
    weights: Option<&[f64]>,
) -> Result<f64> {
    Scope::new(table, selection).weighted(weights).cmi(x, y, z)
}

pub fn conditional_entropy(
    table: &Table,
    x: ColumnId,
    given: &[ColumnId],
    selection: &RowSelection,
    weights: Option<&[f64]>,
) -> Result<f64> {
    Scope::new(table, selection)
        .weighted(weights)
        .conditional_entropy(x, given)
}

pub fn ci_test(
    table: &Table,
    x: ColumnId,
    y: ColumnId,
    z: &[ColumnId],
    selection: &RowSelection,
    weights: Option<&[f64]>,
    config: &CiTestConfig,
) -> Result<CiOutcome> {
    Scope::new(table, selection)
        .weighted(weights)
        .ci_test(x, y, z, config)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CiTestConfig {
    /// CMI (bits) at or below which variables are independent.
    pub epsilon: f64,
    /// Stratified permutations; 0 disables the permutation test.
    pub permutations: usize,
    pub alpha: f64,
    pub seed: u64,
}

impl Default for CiTestConfig {
    fn default() -> Self {
        CiTestConfig {
            epsilon: 0.01,
            permutations: 0,
            alpha: 0.05,
            seed: 0,
        }
    }
}

impl CiTestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "epsilon must be a finite non-negative number, got {}",
                self.epsilon
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Independent,
    Dependent,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CiOutcome {
    pub verdict: Verdict,
    pub cmi: f64,
    /// Permutation p-value, when the permutation test ran.
    pub p_value: Option<f64>,
}

impl CiOutcome {
    pub fn independent(&self) -> bool {
        self.verdict == Verdict::Independent
    }
}

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn ci_test_rows<I>(
    x: Var<'_>,
    y: Var<'_>,
    z: &[Var<'_>],
    rows: I,
    weights: Option<&[f64]>,
    config: &CiTestConfig,
) -> Result<CiOutcome>
where
    I: Iterator<Item = usize>,
{
    let mut all = vec![x, y];
    all.extend_from_slice(z);
    let present: Vec<usize> = rows
        .filter(|&i| all.iter().all(|v| v.codes[i] != MISSING))
        .collect();
    let zpos: Vec<usize> = (2..all.len()).collect();
    let observed = Joint::tabulate(&all, present.iter().copied(), weights)?.cmi(0, 1, &zpos);
    if observed <= config.epsilon {
        return Ok(CiOutcome {
            verdict: Verdict::Independent,
            cmi: observed,
            p_value: None,
        });
    }
    if config.permutations == 0 {
        return Ok(CiOutcome {
            verdict: Verdict::Dependent,
            cmi: observed,
            p_value: None,
        });
    }

    // Compact copies over the present rows, z collapsed to stratum ids.
    let xs: Vec<u32> = present.iter().map(|&i| x.codes[i]).collect();
    let ys: Vec<u32> = present.iter().map(|&i| y.codes[i]).collect();
    let ws: Option<Vec<f64>> = weights.map(|w| present.iter().map(|&i| w[i]).collect());
    let mut stratum_of = std::collections::HashMap::new();
    let mut strata: Vec<Vec<usize>> = Vec::new();
    let mut zs = Vec::with_capacity(present.len());
    for (pos, &i) in present.iter().enumerate() {
        let key: Vec<u32> = z.iter().map(|v| v.codes[i]).collect();
        let next = strata.len();
        let s = *stratum_of.entry(key).or_insert(next);
        if s == next {
            strata.push(Vec::new());
        }
        strata[s].push(pos);
        zs.push(s as u32);
    }
    let zcard = strata.len() as u32;

    let run = |p: usize| -> Result<bool> {
        let mut rng = ChaCha8Rng::seed_from_u64(splitmix(config.seed ^ splitmix(p as u64)));
        let mut perm = xs.clone();
        let mut buf = Vec::new();
        for members in &strata {
            buf.clear();
            buf.extend(members.iter().map(|&m| xs[m]));
            buf.shuffle(&mut rng);
            for (&m, &v) in members.iter().zip(&buf) {
                perm[m] = v;
            }
        }
        let vars = [
            Var::new(&perm, x.card),
            Var::new(&ys, y.card),
            Var::new(&zs, zcard),
        ];
        let j = Joint::tabulate(&vars, 0..perm.len(), ws.as_deref())?;
        Ok(j.cmi(0, 1, &[2]) + 1e-12 >= observed)
    };

    #[cfg(feature = "parallel")]
    let hits: Vec<bool> = {
        use rayon::prelude::*;
        (0..config.permutations)
            .into_par_iter()
            .map(run)
            .collect::<Result<_>>()?
    };
    #[cfg(not(feature = "parallel"))]
    let hits: Vec<bool> = (0..config.permutations).map(run).collect::<Result<_>>()?;

    let p = hits.iter().filter(|&&h| h).count() as f64 / config.permutations as f64;
    Ok(CiOutcome {
        verdict: if p > config.alpha {
            Verdict::Independent
        } else {
            Verdict::Dependent
        },
        cmi: observed,
        p_value: Some(p),
    })
}
