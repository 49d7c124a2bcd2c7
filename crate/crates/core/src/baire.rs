//! Baire (longest common prefix) clustering.
//!
//! Rows are normalized by column sums, mapped to a scalar by a seeded
//! random projection, rescaled into `[0, 1)` and expanded into digit
//! strings of a fixed precision. Objects sharing the first `k` digits form
//! the blocks of the level-`k` partition. One sort of the digit strings
//! gives every level, so the whole hierarchy costs `O(n log n)` plus work
//! linear in the number of stored entries.

use std::cmp::Ordering;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::ObservationMatrix;
use crate::rng::{chacha, SplitMix64};

/// Digits of a number in `[0, 1)` after the radix point.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct DigitString {
    digits: Vec<u8>,
    base: u32,
}

impl DigitString {
    pub fn new(digits: Vec<u8>, base: u32) -> Result<Self> {
        check_base(base)?;
        if let Some(&d) = digits.iter().find(|&&d| u32::from(d) >= base) {
            return Err(Error::OutOfRange {
                what: "digit",
                detail: format!("{d} is not a base-{base} digit"),
            });
        }
        Ok(Self { digits, base })
    }

    /// Expands `value` to `precision` digits in `base`.
    ///
    /// Base 10 uses decimal formatting at `precision` places, which rounds
    /// the exact binary value half-to-even; other bases round
    /// `value * base^precision` half-to-even. A value that would round up to
    /// 1 is clamped to the largest digit string.
    pub fn from_value(value: f64, precision: usize, base: u32) -> Result<Self> {
        check_base(base)?;
        if !(0.0..1.0).contains(&value) {
            return Err(Error::OutOfRange {
                what: "value",
                detail: format!("{value} is outside [0, 1)"),
            });
        }
        if precision == 0 {
            return Err(Error::OutOfRange {
                what: "precision",
                detail: "precision must be at least 1".into(),
            });
        }
        let mut digits = Vec::with_capacity(precision);
        if base == 10 {
            let s = format!("{value:.precision$}");
            if s.starts_with('1') {
                digits.resize(precision, 9);
            } else {
                digits.extend(s[2..].bytes().map(|b| b - b'0'));
            }
        } else {
            let scale = (base as f64).powi(precision as i32);
            if scale > (1u64 << 53) as f64 {
                return Err(Error::OutOfRange {
                    what: "precision",
                    detail: format!("{precision} base-{base} digits exceed f64 resolution"),
                });
            }
            let top = scale as u64 - 1;
            let mut q = ((value * scale).round_ties_even() as u64).min(top);
            digits.resize(precision, 0);
            for slot in digits.iter_mut().rev() {
                *slot = (q % base as u64) as u8;
                q /= base as u64;
            }
        }
        Ok(Self { digits, base })
    }

    pub fn digits(&self) -> &[u8] {
        &self.digits
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn len(&self) -> usize {
        self.digits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.digits.is_empty()
    }

    pub fn common_prefix(&self, other: &DigitString) -> usize {
        common_prefix(&self.digits, &other.digits)
    }
}

fn check_base(base: u32) -> Result<()> {
    if !(2..=36).contains(&base) {
        return Err(Error::OutOfRange {
            what: "base",
            detail: format!("{base} (supported: 2..=36)"),
        });
    }
    Ok(())
}

fn common_prefix(a: &[u8], b: &[u8]) -> usize {
    a.iter().zip(b).take_while(|(x, y)| x == y).count()
}

/// `1` when the first digits differ, otherwise `2^-l` with `l` the length
/// of the longest common prefix. Identical strings of length `K` are at
/// `2^-K`.
pub fn baire_distance(x: &DigitString, y: &DigitString) -> Result<f64> {
    if x.base != y.base || x.len() != y.len() {
        return Err(Error::IncompatibleStrings(format!(
            "lengths {} and {}, bases {} and {}",
            x.len(),
            y.len(),
            x.base,
            y.base
        )));
    }
    Ok(0.5f64.powi(x.common_prefix(y) as i32))
}

/// Compressed sparse row matrix of nonnegative attribute values.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    n_cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl SparseMatrix {
    /// Builds from per-row `(column, value)` lists; zero values are dropped
    /// and columns within a row are sorted.
    pub fn from_rows(n_cols: usize, rows: Vec<Vec<(usize, f64)>>) -> Result<Self> {
        if rows.is_empty() || n_cols == 0 {
            return Err(Error::InvalidMatrix("sparse matrix must be non-empty".into()));
        }
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        let mut values = Vec::new();
        indptr.push(0);
        for (i, mut row) in rows.into_iter().enumerate() {
            row.sort_by_key(|e| e.0);
            for w in row.windows(2) {
                if w[0].0 == w[1].0 {
                    return Err(Error::InvalidMatrix(format!(
                        "row {i} repeats column {}",
                        w[0].0
                    )));
                }
            }
            for (j, v) in row {
                if j >= n_cols {
                    return Err(Error::InvalidMatrix(format!(
                        "row {i} references column {j} of {n_cols}"
                    )));
                }
                if !v.is_finite() {
                    return Err(Error::InvalidMatrix(format!("row {i}, column {j}: {v}")));
                }
                if v != 0.0 {
                    indices.push(j);
                    values.push(v);
                }
            }
            indptr.push(indices.len());
        }
        Ok(Self {
            n_cols,
            indptr,
            indices,
            values,
        })
    }

    pub fn from_dense(m: &ObservationMatrix) -> Self {
        let rows = m
            .rows()
            .map(|r| r.iter().copied().enumerate().filter(|e| e.1 != 0.0).collect())
            .collect();
        Self::from_rows(m.n_cols(), rows).expect("dense matrix converts")
    }

    /// Random 0/1 matrix where each entry is 1 with probability
    /// `occupancy`.
    pub fn random_binary(n_rows: usize, n_cols: usize, occupancy: f64, seed: u64) -> Self {
        let mut rng = chacha(seed);
        let rows = (0..n_rows)
            .map(|_| {
                (0..n_cols)
                    .filter(|_| rng.random_bool(occupancy))
                    .map(|j| (j, 1.0))
                    .collect()
            })
            .collect();
        Self::from_rows(n_cols, rows).expect("generated rows are valid")
    }

    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.indptr[i], self.indptr[i + 1]);
        (&self.indices[a..b], &self.values[a..b])
    }

    pub fn to_dense(&self) -> ObservationMatrix {
        let mut data = vec![0.0; self.n_rows() * self.n_cols];
        for i in 0..self.n_rows() {
            let (idx, val) = self.row(i);
            for (&j, &v) in idx.iter().zip(val) {
                data[i * self.n_cols + j] = v;
            }
        }
        ObservationMatrix::new(self.n_rows(), self.n_cols, data).expect("dense copy is valid")
    }
}

/// Row-oriented access shared by dense and sparse inputs.
pub trait AttributeRows: Sync {
    fn n_rows(&self) -> usize;
    fn n_cols(&self) -> usize;
    /// `sum_j w[j] * x[i][j]`.
    fn dot(&self, i: usize, w: &[f64]) -> f64;
    fn rows_equal(&self, i: usize, k: usize) -> bool;
    fn column_sums(&self) -> Vec<f64>;
    fn has_negative(&self) -> Option<(usize, usize)>;
    fn scale_columns(&self, factors: &[f64]) -> Self
    where
        Self: Sized;
}

impl AttributeRows for ObservationMatrix {
    fn n_rows(&self) -> usize {
        ObservationMatrix::n_rows(self)
    }

    fn n_cols(&self) -> usize {
        ObservationMatrix::n_cols(self)
    }

    fn dot(&self, i: usize, w: &[f64]) -> f64 {
        self.row(i).iter().zip(w).map(|(x, w)| x * w).sum()
    }

    fn rows_equal(&self, i: usize, k: usize) -> bool {
        self.row(i) == self.row(k)
    }

    fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; ObservationMatrix::n_cols(self)];
        for row in self.rows() {
            s.iter_mut().zip(row).for_each(|(a, b)| *a += b);
        }
        s
    }

    fn has_negative(&self) -> Option<(usize, usize)> {
        let c = ObservationMatrix::n_cols(self);
        self.as_slice().iter().position(|&v| v < 0.0).map(|p| (p / c, p % c))
    }

    fn scale_columns(&self, f: &[f64]) -> Self {
        let c = ObservationMatrix::n_cols(self);
        let data = self
            .as_slice()
            .iter()
            .enumerate()
            .map(|(p, v)| v * f[p % c])
            .collect();
        ObservationMatrix::new(ObservationMatrix::n_rows(self), c, data).expect("same shape")
    }
}

impl AttributeRows for SparseMatrix {
    fn n_rows(&self) -> usize {
        SparseMatrix::n_rows(self)
    }

    fn n_cols(&self) -> usize {
        self.n_cols
    }

    fn dot(&self, i: usize, w: &[f64]) -> f64 {
        let (idx, val) = self.row(i);
        idx.iter().zip(val).map(|(&j, v)| w[j] * v).sum()
    }

    fn rows_equal(&self, i: usize, k: usize) -> bool {
        self.row(i) == self.row(k)
    }

    fn column_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.n_cols];
        for (&j, &v) in self.indices.iter().zip(&self.values) {
            s[j] += v;
        }
        s
    }

    fn has_negative(&self) -> Option<(usize, usize)> {
        let p = self.values.iter().position(|&v| v < 0.0)?;
        let row = self.indptr.partition_point(|&s| s <= p) - 1;
        Some((row, self.indices[p]))
    }

    fn scale_columns(&self, f: &[f64]) -> Self {
        let mut out = self.clone();
        for (v, &j) in out.values.iter_mut().zip(&self.indices) {
            *v *= f[j];
        }
        out
    }
}

/// Divides every entry by its column sum.
pub fn normalize_columns<M: AttributeRows>(m: &M) -> Result<M> {
    if let Some((i, j)) = m.has_negative() {
        return Err(Error::InvalidMatrix(format!(
            "negative value at row {i}, column {j}; presence/absence data must be nonnegative"
        )));
    }
    let sums = m.column_sums();
    if let Some(column) = sums.iter().position(|&s| s <= 0.0) {
        return Err(Error::DegenerateColumn { column });
    }
    let factors: Vec<f64> = sums.iter().map(|s| 1.0 / s).collect();
    Ok(m.scale_columns(&factors))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightScheme {
    /// `w_j ~ U(0, 1)` from the seeded SplitMix64 stream.
    #[default]
    Uniform,
    /// `w_j = j` for `j = 1..=|J|`.
    Ascending,
    /// `w_j = |J| + 1 - j`.
    Descending,
}

pub fn projection_weights(n_cols: usize, seed: u64, scheme: WeightScheme) -> Vec<f64> {
    match scheme {
        WeightScheme::Uniform => {
            let mut g = SplitMix64::new(seed);
            (0..n_cols).map(|_| g.next_open01()).collect()
        }
        WeightScheme::Ascending => (1..=n_cols).map(|j| j as f64).collect(),
        WeightScheme::Descending => (1..=n_cols).rev().map(|j| j as f64).collect(),
    }
}

/// Projects every row onto the seeded uniform weight vector and rescales
/// into `[0, 1)`.
pub fn project<M: AttributeRows>(m: &M, seed: u64) -> Result<Vec<f64>> {
    project_with(m, seed, WeightScheme::Uniform)
}

/// [`project`] with an explicit weight scheme.
///
/// Raw projections `p` are mapped to `(p - min) / ((max - min) (1 + 2^-32))`;
/// a collection with a single distinct projection maps to zeros.
pub fn project_with<M: AttributeRows>(m: &M, seed: u64, scheme: WeightScheme) -> Result<Vec<f64>> {
    use rayon::prelude::*;

    if m.n_rows() == 0 || m.n_cols() == 0 {
        return Err(Error::InvalidMatrix("cannot project an empty matrix".into()));
    }
    let w = projection_weights(m.n_cols(), seed, scheme);
    let raw: Vec<f64> = (0..m.n_rows()).into_par_iter().map(|i| m.dot(i, &w)).collect();
    Ok(rescale_unit(&raw))
}

pub fn rescale_unit(raw: &[f64]) -> Vec<f64> {
    let (lo, hi) = raw
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    if span <= 0.0 {
        return vec![0.0; raw.len()];
    }
    let denom = span * (1.0 + 2f64.powi(-32));
    raw.iter().map(|&v| (v - lo) / denom).collect()
}

/// Nested partitions `P_1 ⊒ P_2 ⊒ ... ⊒ P_K` by shared digit prefixes.
#[derive(Debug, Clone, Serialize)]
pub struct BaireHierarchy {
    precision: usize,
    base: u32,
    /// Object indices sorted by digit string, ties by index.
    order: Vec<usize>,
    /// `prefix[p]` = common prefix length of `order[p - 1]` and `order[p]`;
    /// `prefix[0] = 0`.
    prefix: Vec<usize>,
    #[serde(skip)]
    strings: Vec<DigitString>,
}

impl BaireHierarchy {
    pub fn precision(&self) -> usize {
        self.precision
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn n_objects(&self) -> usize {
        self.order.len()
    }

    pub fn digit_string(&self, i: usize) -> &DigitString {
        &self.strings[i]
    }

    fn check_level(&self, level: usize) {
        assert!(
            (1..=self.precision).contains(&level),
            "level {level} outside 1..={}",
            self.precision
        );
    }

    /// Blocks of `P_level` as ranges of the sorted order.
    fn block_ranges(&self, level: usize) -> impl Iterator<Item = std::ops::Range<usize>> + '_ {
        self.check_level(level);
        let n = self.order.len();
        let mut starts = (0..n).filter(move |&p| p == 0 || self.prefix[p] < level).peekable();
        std::iter::from_fn(move || {
            let s = starts.next()?;
            let e = starts.peek().copied().unwrap_or(n);
            Some(s..e)
        })
    }

    /// Blocks of `P_level`, each sorted ascending, ordered by digit prefix.
    pub fn partition(&self, level: usize) -> Vec<Vec<usize>> {
        self.block_ranges(level)
            .map(|r| {
                let mut b = self.order[r].to_vec();
                b.sort_unstable();
                b
            })
            .collect()
    }

    pub fn n_clusters(&self, level: usize) -> usize {
        self.check_level(level);
        1 + self.prefix.iter().skip(1).filter(|&&l| l < level).count()
    }

    /// Block index of every object at `level`.
    pub fn labels(&self, level: usize) -> Vec<usize> {
        let mut labels = vec![0; self.order.len()];
        for (b, r) in self.block_ranges(level).enumerate() {
            for &i in &self.order[r] {
                labels[i] = b;
            }
        }
        labels
    }

    /// Deepest level at which `a` and `b` share a block (0 if none).
    pub fn shared_depth(&self, a: usize, b: usize) -> usize {
        self.strings[a].common_prefix(&self.strings[b])
    }
}

/// Groups `values` (each in `[0, 1)`) by shared digit prefixes.
pub fn baire_hierarchy(values: &[f64], precision: usize, base: u32) -> Result<BaireHierarchy> {
    let strings = values
        .iter()
        .map(|&v| DigitString::from_value(v, precision, base))
        .collect::<Result<Vec<_>>>()?;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| match strings[a].digits.cmp(&strings[b].digits) {
        Ordering::Equal => a.cmp(&b),
        o => o,
    });
    let mut prefix = vec![0; order.len()];
    for p in 1..order.len() {
        prefix[p] = strings[order[p - 1]].common_prefix(&strings[order[p]]);
    }
    Ok(BaireHierarchy {
        precision,
        base,
        order,
        prefix,
        strings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct LevelReport {
    pub level: usize,
    pub n_clusters: usize,
    /// Blocks holding at least two rows that are not identical.
    pub mixed_blocks: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BaireClustering {
    pub hierarchy: BaireHierarchy,
    pub projections: Vec<f64>,
    pub report: Vec<LevelReport>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BaireParams {
    pub seed: u64,
    pub precision: usize,
    pub base: u32,
    pub weights: WeightScheme,
}

impl Default for BaireParams {
    fn default() -> Self {
        Self {
            seed: 42,
            precision: 4,
            base: 10,
            weights: WeightScheme::Uniform,
        }
    }
}

/// Normalize, project, build the prefix hierarchy and report the number of
/// blocks at each level, deepest first.
pub fn baire_cluster<M: AttributeRows>(m: &M, params: BaireParams) -> Result<BaireClustering> {
    let normalized = normalize_columns(m)?;
    let projections = project_with(&normalized, params.seed, params.weights)?;
    let hierarchy = baire_hierarchy(&projections, params.precision, params.base)?;
    let report = (1..=params.precision)
        .rev()
        .map(|level| {
            let mut n_clusters = 0;
            let mut mixed_blocks = 0;
            for r in hierarchy.block_ranges(level) {
                n_clusters += 1;
                let block = &hierarchy.order[r];
                if block[1..].iter().any(|&i| !normalized.rows_equal(block[0], i)) {
                    mixed_blocks += 1;
                }
            }
            LevelReport {
                level,
                n_clusters,
                mixed_blocks,
            }
        })
        .collect();
    Ok(BaireClustering {
        hierarchy,
        projections,
        report,
    })
}
