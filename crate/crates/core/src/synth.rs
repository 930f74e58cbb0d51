//! Seeded synthetic tables with known structure, used by tests, benchmarks
//! and the browser demo.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Column, Table, MISSING};
use crate::error::Result;

/// Builds a column whose labels are the decimal codes `0..card`.
pub fn coded_column(name: impl Into<String>, codes: Vec<u32>, card: u32) -> Column {
    let labels = (0..card).map(|c| c.to_string()).collect();
    Column::from_raw_codes(name, codes, labels).expect("codes are below the cardinality")
}

/// Expands explicit cell counts into a table, one row per unit of count.
pub fn from_counts(
    name: &str,
    columns: &[(&str, u32)],
    cells: &[(Vec<u32>, usize)],
) -> Result<Table> {
    let mut codes: Vec<Vec<u32>> = vec![Vec::new(); columns.len()];
    for (tuple, count) in cells {
        for _ in 0..*count {
            for (c, &v) in codes.iter_mut().zip(tuple) {
                c.push(v);
            }
        }
    }
    let cols = columns
        .iter()
        .zip(codes)
        .map(|(&(n, card), c)| coded_column(n, c, card))
        .collect();
    Table::new(name, cols)
}

/// Two hidden confounders `Z1`, `Z2` drive both the exposure `T` and the
/// outcome `O`; `D1..Dk` are independent distractors.
#[derive(Clone, Debug)]
pub struct Planted {
    pub n: usize,
    pub distractors: usize,
    /// Probability that `T` and `O` follow the confounders rather than noise.
    pub strength: f64,
    /// Probability that `O` copies `T` directly.
    pub direct: f64,
    /// Fraction of `Z2` cells removed completely at random.
    pub missing: f64,
    pub seed: u64,
}

impl Default for Planted {
    fn default() -> Self {
        Planted {
            n: 5000,
            distractors: 6,
            strength: 0.85,
            direct: 0.0,
            missing: 0.0,
            seed: 0,
        }
    }
}

impl Planted {
    pub fn table(&self) -> Table {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let n = self.n;
        let mut z1 = Vec::with_capacity(n);
        let mut z2 = Vec::with_capacity(n);
        let mut t = Vec::with_capacity(n);
        let mut o = Vec::with_capacity(n);
        for _ in 0..n {
            let a: u32 = rng.gen_range(0..3);
            let b: u32 = rng.gen_range(0..3);
            let ti = if rng.gen_bool(self.strength) {
                a + b
            } else {
                rng.gen_range(0..5)
            };
            let u: f64 = rng.gen();
            let oi = if u < self.direct {
                ti
            } else if u < self.direct + (1.0 - self.direct) * self.strength {
                a + b
            } else {
                rng.gen_range(0..5)
            };
            z1.push(a);
            z2.push(b);
            t.push(ti);
            o.push(oi);
        }
        if self.missing > 0.0 {
            for v in z2.iter_mut() {
                if rng.gen_bool(self.missing.min(1.0)) {
                    *v = MISSING;
                }
            }
        }
        let mut cols = vec![
            coded_column("O", o, 5),
            coded_column("T", t, 5),
            coded_column("Z1", z1, 3),
            coded_column("Z2", z2, 3),
        ];
        for d in 0..self.distractors {
            let card = 2 + (d % 3) as u32;
            let codes = (0..n).map(|_| rng.gen_range(0..card)).collect();
            cols.push(coded_column(format!("D{}", d + 1), codes, card));
        }
        Table::new("planted", cols).expect("generated columns are consistent")
    }
}

/// Markov chain `X → Y → Z` over 4 symbols, each link copying its parent
/// with probability `keep`.
pub fn markov_chain(n: usize, keep: f64, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let step = |parent: u32, rng: &mut ChaCha8Rng| {
        if rng.gen_bool(keep) {
            parent
        } else {
            rng.gen_range(0..4)
        }
    };
    let (mut x, mut y, mut z) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..n {
        let xi = rng.gen_range(0..4);
        let yi = step(xi, &mut rng);
        let zi = step(yi, &mut rng);
        x.push(xi);
        y.push(yi);
        z.push(zi);
    }
    Table::new(
        "chain",
        vec![
            coded_column("X", x, 4),
            coded_column("Y", y, 4),
            coded_column("Z", z, 4),
        ],
    )
    .expect("generated columns are consistent")
}

/// `n` draws from a uniform source over `symbols` values.
pub fn uniform_codes(n: usize, symbols: u32, seed: u64) -> Vec<u32> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.gen_range(0..symbols)).collect()
}

/// Confounder `E` of `O` and `T` whose cells go missing depending on an
/// observed covariate `X`, which also modulates how strongly `O` follows
/// `T`. Cells of `E` are observed with probability `1 - rate + d` when
/// `X = 0` and `1 - rate - d` when `X = 1`, so the overall missing rate is
/// `rate`.
///
/// Returns the table with missing cells in `E` and the complete `E` codes.
pub fn missing_on_covariate(n: usize, rate: f64, seed: u64) -> (Table, Vec<u32>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = 0.3f64.min(0.9 * rate).min(0.9 * (1.0 - rate));
    let p_obs = [1.0 - rate + d, 1.0 - rate - d];
    let mut x = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    let mut e_obs = Vec::with_capacity(n);
    let mut t = Vec::with_capacity(n);
    let mut o = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: u32 = rng.gen_range(0..2);
        let ei: u32 = if rng.gen_bool(0.7) { xi * 2 } else { rng.gen_range(0..3) };
        let ti = if rng.gen_bool(0.7) { ei } else { rng.gen_range(0..3) };
        let u: f64 = rng.gen();
        let oi = if u < 0.5 {
            ei
        } else if xi == 1 && u < 0.9 {
            ti
        } else {
            rng.gen_range(0..3)
        };
        let observed = rng.gen_bool(p_obs[xi as usize].clamp(0.0, 1.0));
        x.push(xi);
        e.push(ei);
        e_obs.push(if observed { ei } else { MISSING });
        t.push(ti);
        o.push(oi);
    }
    let table = Table::new(
        "mar",
        vec![
            coded_column("O", o, 3),
            coded_column("T", t, 3),
            coded_column("E", e_obs, 3),
            coded_column("X", x, 2),
        ],
    )
    .expect("generated columns are consistent");
    (table, e)
}

/// `E` is observed with probability 0.9 when `X = 0` and 0.3 when `X = 1`,
/// uniformly over 3 values when observed.
pub fn two_stratum(n: usize, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    for _ in 0..n {
        let xi: u32 = rng.gen_range(0..2);
        let p = if xi == 0 { 0.9 } else { 0.3 };
        x.push(xi);
        e.push(if rng.gen_bool(p) { rng.gen_range(0..3) } else { MISSING });
    }
    Table::new("strata", vec![coded_column("X", x, 2), coded_column("E", e, 3)])
        .expect("generated columns are consistent")
}

/// A large table for timing runs: `O`, `T`, two confounders and
/// `candidates` noisy proxies of them.
pub fn wide(n: usize, candidates: usize, seed: u64) -> Table {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut z1 = Vec::with_capacity(n);
    let mut z2 = Vec::with_capacity(n);
    let mut t = Vec::with_capacity(n);
    let mut o = Vec::with_capacity(n);
    for _ in 0..n {
        let a: u32 = rng.gen_range(0..3);
        let b: u32 = rng.gen_range(0..3);
        t.push(if rng.gen_bool(0.85) { a + b } else { rng.gen_range(0..5) });
        o.push(if rng.gen_bool(0.85) { a + b } else { rng.gen_range(0..5) });
        z1.push(a);
        z2.push(b);
    }
    let mut cols = vec![coded_column("O", o, 5), coded_column("T", t, 5)];
    for c in 0..candidates {
        let source = if c % 2 == 0 { &z1 } else { &z2 };
        let keep = 0.3 + 0.6 * (c as f64 / candidates.max(1) as f64);
        let card = 3 + (c % 4) as u32;
        let codes = source
            .iter()
            .map(|&z| {
                if rng.gen_bool(keep) {
                    z
                } else {
                    rng.gen_range(0..card)
                }
            })
            .collect();
        cols.push(coded_column(format!("P{c:03}"), codes, card));
    }
    cols.push(coded_column("Z1", z1, 3));
    cols.push(coded_column("Z2", z2, 3));
    Table::new("wide", cols).expect("generated columns are consistent")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn planted_is_deterministic() {
        let a = Planted::default().table();
        let b = Planted::default().table();
        assert_eq!(a.row_count(), 5000);
        assert_eq!(a.column_count(), 10);
        for (x, y) in a.columns().iter().zip(b.columns()) {
            assert_eq!(x.codes(), y.codes());
        }
    }

    #[test]
    fn from_counts_expands() {
        let t = from_counts("c", &[("a", 2), ("b", 3)], &[(vec![0, 2], 3), (vec![1, 0], 1)]).unwrap();
        assert_eq!(t.row_count(), 4);
        assert_eq!(t.column_by_name("b").unwrap().codes(), &[2, 2, 2, 0]);
    }

    #[test]
    fn missing_rate_matches() {
        let (t, full) = missing_on_covariate(20_000, 0.5, 1);
        let e = t.column_by_name("E").unwrap();
        let rate = e.missing_count() as f64 / 20_000.0;
        assert!((rate - 0.5).abs() < 0.02, "{rate}");
        assert_eq!(full.len(), 20_000);
    }
}
