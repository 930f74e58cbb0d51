use crate::error::{Error, Result};

use super::{ColumnId, Table, MISSING};

/// A set of row indices stored as a bitmask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RowSelection {
    words: Vec<u64>,
    len: usize,
    count: usize,
}

impl RowSelection {
    pub fn all(len: usize) -> RowSelection {
        let mut words = vec![u64::MAX; len.div_ceil(64)];
        if len % 64 != 0 {
            if let Some(last) = words.last_mut() {
                *last = (1u64 << (len % 64)) - 1;
            }
        }
        RowSelection {
            words,
            len,
            count: len,
        }
    }

    pub fn none(len: usize) -> RowSelection {
        RowSelection {
            words: vec![0; len.div_ceil(64)],
            len,
            count: 0,
        }
    }

    pub fn from_fn(len: usize, mut keep: impl FnMut(usize) -> bool) -> RowSelection {
        let mut sel = RowSelection::none(len);
        for i in 0..len {
            if keep(i) {
                sel.words[i / 64] |= 1 << (i % 64);
                sel.count += 1;
            }
        }
        sel
    }

    pub fn from_indices(len: usize, rows: impl IntoIterator<Item = usize>) -> RowSelection {
        let mut sel = RowSelection::none(len);
        for i in rows {
            let bit = 1u64 << (i % 64);
            if sel.words[i / 64] & bit == 0 {
                sel.words[i / 64] |= bit;
                sel.count += 1;
            }
        }
        sel
    }

    /// Number of rows in the underlying table.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn selected_count(&self) -> usize {
        self.count
    }

    pub fn contains(&self, row: usize) -> bool {
        row < self.len && self.words[row / 64] & (1 << (row % 64)) != 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(w, &word)| {
            let mut bits = word;
            std::iter::from_fn(move || {
                if bits == 0 {
                    None
                } else {
                    let tz = bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    Some(w * 64 + tz)
                }
            })
        })
    }

    pub fn intersect(&self, other: &RowSelection) -> RowSelection {
        assert_eq!(self.len, other.len, "selections over different tables");
        let words: Vec<u64> = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & b)
            .collect();
        let count = words.iter().map(|w| w.count_ones() as usize).sum();
        RowSelection {
            words,
            len: self.len,
            count,
        }
    }

    /// Drops rows whose code in `codes` is missing.
    pub fn without_missing(&self, codes: &[u32]) -> RowSelection {
        debug_assert_eq!(codes.len(), self.len);
        let mut out = self.clone();
        for i in self.iter() {
            if codes[i] == MISSING {
                out.words[i / 64] &= !(1 << (i % 64));
                out.count -= 1;
            }
        }
        out
    }
}

/// Rows matching every `(column, code)` equality predicate. Rows missing a
/// value in any predicate column never match.
pub fn select_context(table: &Table, context: &[(ColumnId, u32)]) -> Result<RowSelection> {
    let mut sel = RowSelection::all(table.row_count());
    for &(id, code) in context {
        if id.0 >= table.column_count() {
            return Err(Error::UnknownColumn(id.to_string()));
        }
        let col = table.column(id);
        if code >= col.cardinality() {
            return Err(Error::UnknownValue {
                column: col.name().to_owned(),
                value: format!("code {code}"),
            });
        }
        let codes = col.codes();
        let matching = RowSelection::from_fn(table.row_count(), |i| codes[i] == code);
        sel = sel.intersect(&matching);
    }
    Ok(sel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Column;

    fn fixture() -> Table {
        let continent = Column::categorical(
            "Continent",
            [Some("Europe"), Some("Asia"), Some("Europe"), None, Some("Africa")],
        );
        let lang = Column::categorical("Lang", [Some("en"), Some("en"), Some("fr"), Some("en"), Some("en")]);
        Table::new("t", vec![continent, lang]).unwrap()
    }

    #[test]
    fn empty_context_selects_everything() {
        let t = fixture();
        let s = select_context(&t, &[]).unwrap();
        assert_eq!(s.selected_count(), 5);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn single_predicate_counts() {
        let t = fixture();
        let c = t.id("Continent").unwrap();
        let europe = t.column(c).code_of("Europe").unwrap();
        let s = select_context(&t, &[(c, europe)]).unwrap();
        assert_eq!(s.selected_count(), 2);
    }

    #[test]
    fn conjunction_is_intersection() {
        let t = fixture();
        let c = t.id("Continent").unwrap();
        let l = t.id("Lang").unwrap();
        let europe = (c, t.column(c).code_of("Europe").unwrap());
        let en = (l, t.column(l).code_of("en").unwrap());
        let both = select_context(&t, &[europe, en]).unwrap();
        let a = select_context(&t, &[europe]).unwrap();
        let b = select_context(&t, &[en]).unwrap();
        assert_eq!(both, a.intersect(&b));
        assert_eq!(both.iter().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn bad_value_code_is_rejected() {
        let t = fixture();
        let c = t.id("Continent").unwrap();
        assert!(select_context(&t, &[(c, 99)]).is_err());
        assert!(select_context(&t, &[(ColumnId(7), 0)]).is_err());
    }

    #[test]
    fn bitmask_edges() {
        for len in [0, 1, 63, 64, 65, 130] {
            let all = RowSelection::all(len);
            assert_eq!(all.iter().count(), len);
            assert_eq!(all.selected_count(), len);
        }
        let s = RowSelection::from_indices(70, [69, 3, 3, 64]);
        assert_eq!(s.selected_count(), 3);
        assert_eq!(s.iter().collect::<Vec<_>>(), vec![3, 64, 69]);
        assert!(s.contains(64) && !s.contains(65) && !s.contains(500));
    }
}
