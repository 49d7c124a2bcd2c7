//! Set-valued dissimilarities between boolean-attribute objects.
//!
//! The distance between two objects is the set of attributes on which they
//! are *not* both present. Thresholding its cardinality at a level gives a
//! graph on the objects whose maximal cliques are the (possibly
//! overlapping) clusters at that level.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest object count accepted by [`clusters_at_level`]; objects are held
/// as bits of a `u64`.
pub const MAX_OBJECTS: usize = 64;

/// Subset of attribute indices (0-based), ascending.
pub type AttributeSet = BTreeSet<usize>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BooleanTable {
    labels: Vec<String>,
    n_attributes: usize,
    rows: Vec<Vec<bool>>,
}

impl BooleanTable {
    pub fn new(labels: Vec<String>, rows: Vec<Vec<bool>>) -> Result<Self> {
        if labels.len() != rows.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} rows",
                labels.len(),
                rows.len()
            )));
        }
        let n_attributes = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != n_attributes) {
            return Err(Error::InvalidMatrix(format!(
                "row {i} has {} attributes, expected {n_attributes}",
                rows[i].len()
            )));
        }
        Ok(Self {
            labels,
            n_attributes,
            rows,
        })
    }

    /// Builds a table from 0/1 integers, rejecting any other value.
    pub fn from_bits(labels: Vec<String>, rows: &[Vec<u8>]) -> Result<Self> {
        let mut out = Vec::with_capacity(rows.len());
        for (i, r) in rows.iter().enumerate() {
            let mut row = Vec::with_capacity(r.len());
            for (j, &v) in r.iter().enumerate() {
                row.push(match v {
                    0 => false,
                    1 => true,
                    _ => {
                        return Err(Error::OutOfRange {
                            what: "boolean entry",
                            detail: format!("row {i}, column {j}: {v}"),
                        })
                    }
                });
            }
            out.push(row);
        }
        Self::new(labels, out)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_objects(&self) -> usize {
        self.rows.len()
    }

    pub fn n_attributes(&self) -> usize {
        self.n_attributes
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.rows[i]
    }
}

/// Attributes `j` for which `a[j]` and `b[j]` are not both 1. An object's
/// distance to itself is therefore the set of its absent attributes.
pub fn set_distance(a: &[bool], b: &[bool]) -> Result<AttributeSet> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "rows of {} and {} attributes",
            a.len(),
            b.len()
        )));
    }
    Ok(a
        .iter()
        .zip(b)
        .enumerate()
        .filter(|(_, (x, y))| !(**x && **y))
        .map(|(j, _)| j)
        .collect())
}

/// All maximal object sets in which every pair's set distance has at most
/// `level` attributes. Clusters may overlap. Each cluster is listed in
/// ascending object order and clusters are sorted lexicographically.
pub fn clusters_at_level(t: &BooleanTable, level: usize) -> Result<Vec<Vec<usize>>> {
    if level > t.n_attributes() {
        return Err(Error::OutOfRange {
            what: "level",
            detail: format!("{level} exceeds the attribute count {}", t.n_attributes()),
        });
    }
    let n = t.n_objects();
    if n > MAX_OBJECTS {
        return Err(Error::OutOfRange {
            what: "object count",
            detail: format!("{n} objects; clique enumeration is limited to {MAX_OBJECTS}"),
        });
    }
    let mut adj = vec![0u64; n];
    for i in 0..n {
        for j in i + 1..n {
            if set_distance(t.row(i), t.row(j))?.len() <= level {
                adj[i] |= 1 << j;
                adj[j] |= 1 << i;
            }
        }
    }
    let all = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let mut found = Vec::new();
    bron_kerbosch(&adj, 0, all, 0, &mut found);
    let mut clusters: Vec<Vec<usize>> = found.into_iter().map(bits_to_vec).collect();
    clusters.sort();
    Ok(clusters)
}

/// Bron-Kerbosch with pivoting over bitmask vertex sets.
fn bron_kerbosch(adj: &[u64], r: u64, mut p: u64, mut x: u64, out: &mut Vec<u64>) {
    if p == 0 {
        if x == 0 {
            out.push(r);
        }
        return;
    }
    let pivot = (p | x).trailing_zeros() as usize;
    let mut candidates = p & !adj[pivot];
    while candidates != 0 {
        let v = candidates.trailing_zeros() as usize;
        let bit = 1u64 << v;
        bron_kerbosch(adj, r | bit, p & adj[v], x & adj[v], out);
        p &= !bit;
        x |= bit;
        candidates &= !bit;
    }
}

fn bits_to_vec(mut b: u64) -> Vec<usize> {
    let mut v = Vec::with_capacity(b.count_ones() as usize);
    while b != 0 {
        v.push(b.trailing_zeros() as usize);
        b &= b - 1;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_of_full_rows_is_empty() {
        let ones = [true, true, true];
        assert!(set_distance(&ones, &ones).unwrap().is_empty());
        assert!(set_distance(&ones, &ones[..2]).is_err());
    }

    #[test]
    fn rejects_non_boolean_and_bad_level() {
        assert!(BooleanTable::from_bits(vec!["a".into()], &[vec![2]]).is_err());
        let t = BooleanTable::from_bits(vec!["a".into()], &[vec![1, 0]]).unwrap();
        assert!(clusters_at_level(&t, 3).is_err());
        assert_eq!(clusters_at_level(&t, 0).unwrap(), vec![vec![0]]);
    }

    #[test]
    fn handles_full_word() {
        let labels = (0..64).map(|i| i.to_string()).collect();
        let t = BooleanTable::from_bits(labels, &vec![vec![1u8]; 64]).unwrap();
        assert_eq!(clusters_at_level(&t, 0).unwrap(), vec![(0..64).collect::<Vec<_>>()]);
        let labels = (0..65).map(|i| i.to_string()).collect();
        let t = BooleanTable::from_bits(labels, &vec![vec![1u8]; 65]).unwrap();
        assert!(clusters_at_level(&t, 0).is_err());
    }
}
