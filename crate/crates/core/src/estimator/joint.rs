//! Joint tabulation of coded variables over a row set.

use std::collections::HashMap;
use std::f64::consts::LN_2;

use crate::dataset::MISSING;
use crate::error::{Error, Result};

/// Largest joint domain tabulated into a dense array.
const DENSE_LIMIT: u128 = 1 << 20;

/// A coded variable: per-row codes ([`MISSING`] = absent) and domain size.
#[derive(Clone, Copy, Debug)]
pub struct Var<'a> {
    pub codes: &'a [u32],
    pub card: u32,
}

impl<'a> Var<'a> {
    pub fn new(codes: &'a [u32], card: u32) -> Var<'a> {
        Var { codes, card }
    }
}

#[derive(Debug)]
enum Cells {
    Dense(Vec<f64>),
    /// Sorted by key, zero cells absent.
    Sparse(Vec<(u64, f64)>),
}

/// Joint weighted counts of several variables over the rows where all of
/// them are present.
#[derive(Debug)]
pub struct Joint {
    cards: Vec<u64>,
    strides: Vec<u64>,
    cells: Cells,
    total: f64,
    sum_sq: f64,
    weighted: bool,
    rows: usize,
}

/// Miller-Madow bias term in bits.
pub fn mm_correction(distinct: usize, effective_n: f64) -> f64 {
    if distinct <= 1 || effective_n <= 0.0 {
        0.0
    } else {
        (distinct - 1) as f64 / (2.0 * effective_n * LN_2)
    }
}

/// Plug-in entropy (bits) of a multiset of positive counts. Counts are
/// summed in sorted order so the result depends only on the multiset.
pub(crate) fn plugin_entropy(counts: &mut [f64], total: f64) -> f64 {
    if total <= 0.0 {
        return 0.0;
    }
    counts.sort_unstable_by(f64::total_cmp);
    let s: f64 = counts.iter().map(|&c| c * c.log2()).sum();
    (total.log2() - s / total).max(0.0)
}

impl Joint {
    /// Tabulates `vars` over `rows`, skipping rows where any variable is
    /// missing. `weights`, when given, is indexed by row.
    pub fn tabulate<I>(vars: &[Var<'_>], rows: I, weights: Option<&[f64]>) -> Result<Joint>
    where
        I: Iterator<Item = usize>,
    {
        let cards: Vec<u64> = vars.iter().map(|v| u64::from(v.card)).collect();
        let mut strides = Vec::with_capacity(cards.len());
        let mut product: u128 = 1;
        for &c in &cards {
            strides.push(product.min(u128::from(u64::MAX)) as u64);
            product = product.saturating_mul(u128::from(c.max(1)));
        }
        if product > u128::from(u64::MAX) {
            return Err(Error::DomainTooLarge(vars.len()));
        }

        let mut sum_sq = 0.0;
        let mut n = 0usize;
        let cells = if product <= DENSE_LIMIT {
            let mut dense = vec![0.0f64; product as usize];
            match weights {
                None => for_each_present(vars, &strides, rows, |key, _| {
                    dense[key as usize] += 1.0;
                    n += 1;
                }),
                Some(w) => for_each_present(vars, &strides, rows, |key, row| {
                    let wi = w[row];
                    dense[key as usize] += wi;
                    sum_sq += wi * wi;
                    n += 1;
                }),
            }
            Cells::Dense(dense)
        } else {
            let mut map: HashMap<u64, f64> = HashMap::new();
            for_each_present(vars, &strides, rows, |key, row| {
                let wi = weights.map_or(1.0, |w| w[row]);
                *map.entry(key).or_insert(0.0) += wi;
                sum_sq += wi * wi;
                n += 1;
            });
            let mut v: Vec<(u64, f64)> = map.into_iter().filter(|&(_, c)| c > 0.0).collect();
            v.sort_unstable_by_key(|&(k, _)| k);
            Cells::Sparse(v)
        };
        if n == 0 {
            return Err(Error::EmptySelection(
                "every selected row misses one of the variables".into(),
            ));
        }
        let mut counts: Vec<f64> = match &cells {
            Cells::Dense(d) => d.iter().copied().filter(|&x| x > 0.0).collect(),
            Cells::Sparse(s) => s.iter().map(|&(_, x)| x).collect(),
        };
        counts.sort_unstable_by(f64::total_cmp);
        let total = counts.iter().sum();
        if weights.is_none() {
            sum_sq = n as f64;
        }
        Ok(Joint {
            cards,
            strides,
            cells,
            total,
            sum_sq,
            weighted: weights.is_some(),
            rows: n,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn total(&self) -> f64 {
        self.total
    }

    /// Kish effective sample size; equals the row count when unweighted.
    pub fn effective_n(&self) -> f64 {
        if self.sum_sq > 0.0 {
            self.total * self.total / self.sum_sq
        } else {
            0.0
        }
    }

    /// Positive cell counts of the marginal over factor positions `subset`
    /// (in any order), unsorted.
    pub fn marginal_counts(&self, subset: &[usize]) -> Vec<f64> {
        if subset.is_empty() {
            return vec![self.total];
        }
        let mut sorted: Vec<usize> = subset.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() == self.cards.len() {
            return self.cells().collect();
        }
        let mut sub_strides = Vec::with_capacity(sorted.len());
        let mut sub_size: u64 = 1;
        for &p in &sorted {
            sub_strides.push(sub_size);
            sub_size = sub_size.saturating_mul(self.cards[p].max(1));
        }
        let project = |key: u64| -> u64 {
            sorted
                .iter()
                .zip(&sub_strides)
                .map(|(&p, &s)| ((key / self.strides[p]) % self.cards[p]) * s)
                .sum()
        };
        if self.weighted {
            // Sum each marginal cell's contributions in value order so the
            // result does not depend on the factor layout.
            let mut pairs = Vec::new();
            self.for_each_cell(|key, c| pairs.push((project(key), c)));
            pairs.sort_unstable_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
            return pairs
                .chunk_by(|a, b| a.0 == b.0)
                .map(|g| g.iter().map(|&(_, c)| c).sum::<f64>())
                .filter(|&c| c > 0.0)
                .collect();
        }
        if u128::from(sub_size) <= DENSE_LIMIT {
            let mut out = vec![0.0f64; sub_size as usize];
            self.for_each_cell(|key, c| out[project(key) as usize] += c);
            out.into_iter().filter(|&c| c > 0.0).collect()
        } else {
            let mut out: HashMap<u64, f64> = HashMap::new();
            self.for_each_cell(|key, c| *out.entry(project(key)).or_insert(0.0) += c);
            out.into_values().filter(|&c| c > 0.0).collect()
        }
    }

    fn cells(&self) -> impl Iterator<Item = f64> + '_ {
        let (dense, sparse) = match &self.cells {
            Cells::Dense(d) => (Some(d.iter().copied().filter(|&c| c > 0.0)), None),
            Cells::Sparse(s) => (None, Some(s.iter().map(|&(_, c)| c))),
        };
        dense
            .into_iter()
            .flatten()
            .chain(sparse.into_iter().flatten())
    }

    fn for_each_cell(&self, mut f: impl FnMut(u64, f64)) {
        match &self.cells {
            Cells::Dense(d) => {
                for (k, &c) in d.iter().enumerate() {
                    if c > 0.0 {
                        f(k as u64, c);
                    }
                }
            }
            Cells::Sparse(s) => {
                for &(k, c) in s {
                    f(k, c);
                }
            }
        }
    }

    /// Tuples (in factor order) and counts of the non-empty cells.
    pub fn tuples(&self) -> Vec<(Vec<u32>, f64)> {
        let mut out = Vec::new();
        self.for_each_cell(|key, c| {
            let tuple = self
                .cards
                .iter()
                .zip(&self.strides)
                .map(|(&card, &s)| ((key / s) % card) as u32)
                .collect();
            out.push((tuple, c));
        });
        out
    }

    /// Plug-in entropy of the marginal over `subset`, in bits.
    pub fn plugin_entropy(&self, subset: &[usize]) -> f64 {
        let mut counts = self.marginal_counts(subset);
        plugin_entropy(&mut counts, self.total)
    }

    /// Miller-Madow entropy of the marginal over `subset`, in bits.
    pub fn entropy(&self, subset: &[usize]) -> f64 {
        let mut counts = self.marginal_counts(subset);
        let m = counts.len();
        let h = plugin_entropy(&mut counts, self.total) + mm_correction(m, self.effective_n());
        h.max(0.0)
    }

    /// `Ĥ(x,z) + Ĥ(y,z) − Ĥ(x,y,z) − Ĥ(z)`, clamped at zero. Arguments are
    /// factor positions.
    pub fn cmi(&self, x: usize, y: usize, z: &[usize]) -> f64 {
        let with = |extra: &[usize]| -> Vec<usize> {
            let mut v = z.to_vec();
            v.extend_from_slice(extra);
            v
        };
        let h_xz = self.entropy(&with(&[x]));
        let h_yz = self.entropy(&with(&[y]));
        let h_xyz = self.entropy(&with(&[x, y]));
        let h_z = self.entropy(z);
        ((h_xz + h_yz) - (h_xyz + h_z)).max(0.0)
    }

    /// `Ĥ(x | given)` clamped at zero.
    pub fn conditional_entropy(&self, x: usize, given: &[usize]) -> f64 {
        let mut all = given.to_vec();
        all.push(x);
        (self.entropy(&all) - self.entropy(given)).max(0.0)
    }

    /// Miller-Madow correction of the full joint table.
    pub fn full_correction(&self) -> f64 {
        mm_correction(self.cells().count(), self.effective_n())
    }
}

fn for_each_present<I, F>(vars: &[Var<'_>], strides: &[u64], rows: I, mut f: F)
where
    I: Iterator<Item = usize>,
    F: FnMut(u64, usize),
{
    match vars {
        [a] => {
            for i in rows {
                let ca = a.codes[i];
                if ca != MISSING {
                    f(u64::from(ca), i);
                }
            }
        }
        [a, b] => {
            let sb = strides[1];
            for i in rows {
                let (ca, cb) = (a.codes[i], b.codes[i]);
                if ca != MISSING && cb != MISSING {
                    f(u64::from(ca) + u64::from(cb) * sb, i);
                }
            }
        }
        [a, b, c] => {
            let (sb, sc) = (strides[1], strides[2]);
            for i in rows {
                let (ca, cb, cc) = (a.codes[i], b.codes[i], c.codes[i]);
                if ca != MISSING && cb != MISSING && cc != MISSING {
                    f(u64::from(ca) + u64::from(cb) * sb + u64::from(cc) * sc, i);
                }
            }
        }
        _ => {
            'rows: for i in rows {
                let mut key = 0u64;
                for (v, &s) in vars.iter().zip(strides) {
                    let c = v.codes[i];
                    if c == MISSING {
                        continue 'rows;
                    }
                    key += u64::from(c) * s;
                }
                f(key, i);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dense_and_marginals() {
        let a = [0, 0, 1, 1, MISSING];
        let b = [0, 1, 0, 0, 1];
        let j = Joint::tabulate(&[Var::new(&a, 2), Var::new(&b, 2)], 0..5, None).unwrap();
        assert_eq!(j.rows(), 4);
        let mut m = j.marginal_counts(&[0]);
        m.sort_by(f64::total_cmp);
        assert_eq!(m, vec![2.0, 2.0]);
        let mut m = j.marginal_counts(&[1]);
        m.sort_by(f64::total_cmp);
        assert_eq!(m, vec![1.0, 3.0]);
        assert_eq!(j.marginal_counts(&[]), vec![4.0]);
        let mut tuples = j.tuples();
        tuples.sort_by(|x, y| x.0.cmp(&y.0));
        assert_eq!(
            tuples,
            vec![(vec![0, 0], 1.0), (vec![0, 1], 1.0), (vec![1, 0], 2.0)]
        );
    }

    #[test]
    fn sparse_path_agrees_with_dense() {
        // 3 variables with 200 levels each exceed the dense limit.
        let n = 500;
        let a: Vec<u32> = (0..n).map(|i| (i * 7 % 200) as u32).collect();
        let b: Vec<u32> = (0..n).map(|i| (i * 13 % 200) as u32).collect();
        let c: Vec<u32> = (0..n).map(|i| (i % 3) as u32).collect();
        let big = Joint::tabulate(
            &[Var::new(&a, 200), Var::new(&b, 200), Var::new(&c, 200)],
            0..n,
            None,
        )
        .unwrap();
        assert!(matches!(big.cells, Cells::Sparse(_)));
        let small = Joint::tabulate(
            &[Var::new(&a, 200), Var::new(&b, 200), Var::new(&c, 3)],
            0..n,
            None,
        )
        .unwrap();
        assert!(matches!(small.cells, Cells::Dense(_)));
        for subset in [&[0usize][..], &[1], &[2], &[0, 2], &[1, 2], &[0, 1, 2]] {
            assert_eq!(big.entropy(subset), small.entropy(subset), "{subset:?}");
        }
    }

    #[test]
    fn domain_overflow_is_reported() {
        let a = [0u32];
        let vars = vec![Var::new(&a, u32::MAX - 1); 3];
        assert!(matches!(
            Joint::tabulate(&vars, 0..1, None),
            Err(Error::DomainTooLarge(3))
        ));
    }

    #[test]
    fn empty_rows_error() {
        let a = [MISSING, MISSING];
        assert!(Joint::tabulate(&[Var::new(&a, 2)], 0..2, None).is_err());
    }
}
