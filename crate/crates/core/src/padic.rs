//! Signed p-adic codes of dendrogram terminals.
//!
//! Terminal `i` of a tree with `n` terminals is coded as
//! `x_i = sum_j c_ij p^j` over levels `j = 1..n-1`, where `c_ij` is `+1` if
//! the terminal descends through the left branch of the rank-`j` node, `-1`
//! through the right branch and `0` if the node is not on its path to the
//! root. The left branch is the child holding the smaller terminal index.
//! The rows `c_i` form the characteristic matrix `C`, and `x = C p`.

use std::collections::HashMap;

use num_bigint::BigInt;
use serde::Serialize;

use crate::dendrogram::{Dendrogram, Node, NodeRef};
use crate::error::{Error, Result};

/// Coefficients of one terminal at levels `1..=len`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct PadicCode {
    coeffs: Vec<i8>,
    p: u32,
}

impl PadicCode {
    pub fn new(coeffs: Vec<i8>, p: u32) -> Result<Self> {
        check_p(p)?;
        check_coeffs(&coeffs)?;
        Ok(Self { coeffs, p })
    }

    pub fn coeffs(&self) -> &[i8] {
        &self.coeffs
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    /// Coefficient at `level` (1-based).
    pub fn at(&self, level: usize) -> i8 {
        self.coeffs[level - 1]
    }

    /// Levels carrying a nonzero coefficient.
    pub fn levels(&self) -> Vec<usize> {
        (1..=self.coeffs.len()).filter(|&j| self.at(j) != 0).collect()
    }

    pub fn decimal(&self) -> BigInt {
        decimal_value(&self.coeffs, self.p)
    }
}

fn check_p(p: u32) -> Result<()> {
    if p < 2 {
        return Err(Error::OutOfRange {
            what: "base p",
            detail: format!("p = {p}, must be at least 2"),
        });
    }
    Ok(())
}

fn check_coeffs(c: &[i8]) -> Result<()> {
    match c.iter().find(|v| !(-1..=1).contains(*v)) {
        Some(v) => Err(Error::OutOfRange {
            what: "coefficient",
            detail: format!("{v} is not in {{-1, 0, +1}}"),
        }),
        None => Ok(()),
    }
}

/// `sum_j c_j p^j` for `j = 1..=len`, in arbitrary precision.
pub fn decimal_value(coeffs: &[i8], p: u32) -> BigInt {
    let base = BigInt::from(p);
    let mut power = base.clone();
    let mut acc = BigInt::from(0);
    for &c in coeffs {
        match c {
            1 => acc += &power,
            -1 => acc -= &power,
            _ => {}
        }
        power *= &base;
    }
    acc
}

/// `n x L` matrix of branch codes; row `i` is terminal `i`, column `j - 1`
/// is level `j`. A freshly encoded tree has `L = n - 1`; every dilation
/// removes one level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CharacteristicMatrix {
    labels: Vec<String>,
    n_levels: usize,
    entries: Vec<i8>,
}

impl CharacteristicMatrix {
    pub fn new(labels: Vec<String>, rows: Vec<Vec<i8>>) -> Result<Self> {
        if labels.len() != rows.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} code rows",
                labels.len(),
                rows.len()
            )));
        }
        if rows.is_empty() {
            return Err(Error::InvalidMatrix("no code rows".into()));
        }
        let n_levels = rows[0].len();
        let mut entries = Vec::with_capacity(rows.len() * n_levels);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n_levels {
                return Err(Error::InvalidMatrix(format!(
                    "code row {i} has {} levels, expected {n_levels}",
                    row.len()
                )));
            }
            check_coeffs(row)?;
            entries.extend_from_slice(row);
        }
        Ok(Self {
            labels,
            n_levels,
            entries,
        })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_levels(&self) -> usize {
        self.n_levels
    }

    pub fn row(&self, i: usize) -> &[i8] {
        &self.entries[i * self.n_levels..(i + 1) * self.n_levels]
    }

    pub fn get(&self, i: usize, level: usize) -> i8 {
        self.entries[i * self.n_levels + level - 1]
    }

    pub fn rows(&self) -> Vec<Vec<i8>> {
        (0..self.n_rows()).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn code(&self, i: usize, p: u32) -> Result<PadicCode> {
        PadicCode::new(self.row(i).to_vec(), p)
    }

    /// Terminals with a nonzero coefficient at `level`, ascending.
    pub fn members(&self, level: usize) -> Vec<usize> {
        (0..self.n_rows()).filter(|&i| self.get(i, level) != 0).collect()
    }

    /// Column membership sets for every level, bottom first.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        (1..=self.n_levels).map(|j| self.members(j)).collect()
    }

    /// Negates the signs at one level, exchanging the roles of the two
    /// branches of that node.
    pub fn flip_level(&self, level: usize) -> Self {
        let mut out = self.clone();
        for i in 0..out.n_rows() {
            out.entries[i * self.n_levels + level - 1] *= -1;
        }
        out
    }

    /// `x = C p`.
    pub fn decimals(&self, p: u32) -> Result<Vec<BigInt>> {
        check_p(p)?;
        Ok((0..self.n_rows())
            .map(|i| decimal_value(self.row(i), p))
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Encoding {
    pub matrix: CharacteristicMatrix,
    pub p: u32,
    pub decimals: Vec<BigInt>,
}

/// Codes every terminal of `h` in base `p`. Codes are unique for `p >= 3`;
/// `p = 2` is accepted but may collide.
pub fn encode(h: &Dendrogram, p: u32) -> Result<Encoding> {
    check_p(p)?;
    let h = h.canonicalized();
    let n = h.n_terminals();
    let levels = n - 1;
    let mut rows = vec![vec![0i8; levels]; n];
    for node in h.nodes() {
        for (child, sign) in [(node.left, 1i8), (node.right, -1i8)] {
            for i in h.members_of(child) {
                rows[i][node.rank - 1] = sign;
            }
        }
    }
    let matrix = CharacteristicMatrix::new(h.terminals().to_vec(), rows)?;
    let decimals = matrix.decimals(p)?;
    Ok(Encoding {
        matrix,
        p,
        decimals,
    })
}

/// Rebuilds the tree from its characteristic matrix; node heights are set
/// to ranks.
pub fn decode(c: &CharacteristicMatrix) -> Result<Dendrogram> {
    let n = c.n_rows();
    if c.n_levels() + 1 != n {
        return Err(Error::NotADendrogram(format!(
            "{n} terminals need {} levels, matrix has {}",
            n.saturating_sub(1),
            c.n_levels()
        )));
    }
    // Sorted member lists of nodes that do not yet have a parent.
    let mut open: HashMap<Vec<usize>, usize> = HashMap::new();
    let mut attached = vec![false; n];
    let mut nodes = Vec::with_capacity(n.saturating_sub(1));
    for level in 1..=c.n_levels() {
        let plus: Vec<usize> = (0..n).filter(|&i| c.get(i, level) == 1).collect();
        let minus: Vec<usize> = (0..n).filter(|&i| c.get(i, level) == -1).collect();
        let mut child = |side: &[usize], sign: &str| -> Result<NodeRef> {
            if side.is_empty() {
                return Err(Error::NotADendrogram(format!(
                    "level {level} has no {sign} branch"
                )));
            }
            if let [i] = side {
                if !attached[*i] {
                    attached[*i] = true;
                    return Ok(NodeRef::Terminal(*i));
                }
            }
            match open.remove(side) {
                Some(rank) => Ok(NodeRef::Node(rank)),
                None => Err(Error::NotADendrogram(format!(
                    "level {level}: {sign} branch {side:?} is neither a new terminal nor a cluster from a lower level"
                ))),
            }
        };
        let left = child(&plus, "+1")?;
        let right = child(&minus, "-1")?;
        let mut members = [plus, minus].concat();
        members.sort_unstable();
        open.insert(members, level);
        nodes.push(Node {
            rank: level,
            height: level as f64,
            left,
            right,
        });
    }
    if n > 1 && open.len() != 1 {
        return Err(Error::NotADendrogram(format!(
            "{} clusters remain without a parent",
            open.len()
        )));
    }
    Dendrogram::new(c.labels().to_vec(), nodes).map_err(|e| Error::NotADendrogram(e.to_string()))
}

/// `p^-r` where `r` is the highest level at which the codes differ; 0 for
/// identical codes.
pub fn padic_distance(a: &PadicCode, b: &PadicCode) -> Result<f64> {
    if a.p != b.p || a.coeffs.len() != b.coeffs.len() {
        return Err(Error::DimensionMismatch(format!(
            "codes of length {} (p = {}) and {} (p = {})",
            a.coeffs.len(),
            a.p,
            b.coeffs.len(),
            b.p
        )));
    }
    Ok(match differing_level(&a.coeffs, &b.coeffs) {
        Some(r) => (a.p as f64).powi(-(r as i32)),
        None => 0.0,
    })
}

/// Highest 1-based level where the coefficient vectors differ.
pub fn differing_level(a: &[i8], b: &[i8]) -> Option<usize> {
    a.iter().zip(b).rposition(|(x, y)| x != y).map(|k| k + 1)
}

/// Multiplication by `1/p`: each coefficient moves down one level and the
/// level-1 coefficient is discarded, so the tree loses its bottom merge.
pub fn dilate(c: &CharacteristicMatrix) -> Result<CharacteristicMatrix> {
    if c.n_levels() == 0 {
        return Err(Error::Exhausted);
    }
    let rows = (0..c.n_rows()).map(|i| c.row(i)[1..].to_vec()).collect();
    CharacteristicMatrix::new(c.labels().to_vec(), rows)
}
