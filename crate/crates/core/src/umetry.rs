//! Empirical ultrametricity by triangle sampling.
//!
//! In an ultrametric space every triangle is isosceles with a small base or
//! equilateral, i.e. its two largest sides are equal. The proportion of
//! sampled triangles with that property measures how close a point cloud is
//! to being ultrametric.
//!
//! Side equality is judged either relative to the longest side
//! ([`Tolerance::Relative`]) or through the angles opposite the sides
//! ([`Tolerance::Angle`]). Both are scale invariant. Equal sides face equal
//! angles, so the two tests agree as the tolerance goes to zero, but at a
//! given tolerance the angle test is much stricter for thin triangles.

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{euclidean, DistanceMatrix, ObservationMatrix};
use crate::rng::chacha;

pub const DEFAULT_RELATIVE_TOL: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "lowercase")]
pub enum Tolerance {
    /// Sides `y <= z` are equal when `z - y <= tol * z`.
    Relative(f64),
    /// Sides are equal when their opposite angles differ by at most this
    /// many degrees.
    Angle(f64),
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::Relative(DEFAULT_RELATIVE_TOL)
    }
}

impl Tolerance {
    fn value(self) -> f64 {
        match self {
            Tolerance::Relative(t) | Tolerance::Angle(t) => t,
        }
    }
}

impl fmt::Display for Tolerance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tolerance::Relative(t) => write!(f, "relative:{t}"),
            Tolerance::Angle(t) => write!(f, "angle:{t}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TriangleKind {
    Equilateral,
    IsoscelesSmallBase,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triangle {
    pub kind: TriangleKind,
    /// The two largest sides are equal.
    pub ultrametric: bool,
}

/// Classifies the triangle with sides `a`, `b`, `c`.
pub fn classify_triangle(a: f64, b: f64, c: f64, tol: Tolerance) -> Result<Triangle> {
    if !(a > 0.0 && b > 0.0 && c > 0.0) {
        return Err(Error::OutOfRange {
            what: "triangle side",
            detail: format!("sides ({a}, {b}, {c}) must be positive"),
        });
    }
    let t = tol.value();
    if !(t >= 0.0) {
        return Err(Error::OutOfRange {
            what: "tolerance",
            detail: format!("{t} must be nonnegative"),
        });
    }
    let mut s = [a, b, c];
    s.sort_by(f64::total_cmp);
    let [x, y, z] = s;
    let (um, all_equal) = match tol {
        Tolerance::Relative(t) => (z - y <= t * z, x >= y * (1.0 - t)),
        Tolerance::Angle(t) => {
            let [ax, ay, az] = [angle(x, y, z), angle(y, x, z), angle(z, x, y)];
            (az - ay <= t, ay - ax <= t)
        }
    };
    let kind = match (um, all_equal) {
        (true, true) => TriangleKind::Equilateral,
        (true, false) => TriangleKind::IsoscelesSmallBase,
        _ => TriangleKind::Other,
    };
    Ok(Triangle {
        kind,
        ultrametric: um,
    })
}

/// Angle in degrees opposite side `a`.
fn angle(a: f64, b: f64, c: f64) -> f64 {
    let cos = (b * b + c * c - a * a) / (2.0 * b * c);
    cos.clamp(-1.0, 1.0).acos().to_degrees()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriangleReport {
    pub n_sampled: usize,
    pub isosceles_small_base: f64,
    pub equilateral: f64,
    pub ultrametric: f64,
    pub tolerance: Tolerance,
}

/// Samples `n_triangles` triplets of distinct points (independently across
/// triangles) and classifies their Euclidean triangles.
pub fn ultrametricity(
    points: &ObservationMatrix,
    n_triangles: usize,
    seed: u64,
    tol: Tolerance,
) -> Result<TriangleReport> {
    measure(points.n_rows(), n_triangles, seed, tol, |i, j| {
        euclidean(points.row(i), points.row(j))
    })
}

/// As [`ultrametricity`], with distances read from a matrix.
pub fn ultrametricity_of_distances(
    d: &DistanceMatrix,
    n_triangles: usize,
    seed: u64,
    tol: Tolerance,
) -> Result<TriangleReport> {
    measure(d.n(), n_triangles, seed, tol, |i, j| d.get(i, j))
}

fn measure<F>(n: usize, n_triangles: usize, seed: u64, tol: Tolerance, dist: F) -> Result<TriangleReport>
where
    F: Fn(usize, usize) -> f64 + Sync,
{
    if n < 3 {
        return Err(Error::TooFewObjects { needed: 3, got: n });
    }
    if n_triangles == 0 {
        return Err(Error::OutOfRange {
            what: "triangle count",
            detail: "at least one triangle is required".into(),
        });
    }
    let triplets = sample_triplets(n, n_triangles, seed);
    let classes = triplets
        .par_iter()
        .map(|&[i, j, k]| {
            let (a, b, c) = (dist(i, j), dist(j, k), dist(i, k));
            if a == 0.0 || b == 0.0 || c == 0.0 {
                // Coincident points: all sides equal up to scale only if all
                // vanish; a zero side with two equal others is a degenerate
                // isosceles triangle with an empty base.
                let mut s = [a, b, c];
                s.sort_by(f64::total_cmp);
                let kind = if s[2] == 0.0 {
                    TriangleKind::Equilateral
                } else if s[1] == s[2] {
                    TriangleKind::IsoscelesSmallBase
                } else {
                    TriangleKind::Other
                };
                return Ok(Triangle {
                    kind,
                    ultrametric: kind != TriangleKind::Other,
                });
            }
            classify_triangle(a, b, c, tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let frac = |pred: &dyn Fn(&Triangle) -> bool| {
        classes.iter().filter(|t| pred(t)).count() as f64 / n_triangles as f64
    };
    Ok(TriangleReport {
        n_sampled: n_triangles,
        isosceles_small_base: frac(&|t| t.kind == TriangleKind::IsoscelesSmallBase),
        equilateral: frac(&|t| t.kind == TriangleKind::Equilateral),
        ultrametric: frac(&|t| t.ultrametric),
        tolerance: tol,
    })
}

/// Triplets of distinct indices drawn up front so that results do not
/// depend on the thread count.
pub fn sample_triplets(n: usize, count: usize, seed: u64) -> Vec<[usize; 3]> {
    let mut rng = chacha(seed);
    (0..count)
        .map(|_| {
            let v = sample(&mut rng, n, 3);
            [v.index(0), v.index(1), v.index(2)]
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CloudKind {
    /// Uniform on `[0, 1]^dim`.
    Uniform,
    /// Uniform over the vertices `{0, 1}^dim`.
    Hypercube,
    /// Standard normal in every coordinate.
    Gaussian,
}

impl CloudKind {
    pub const ALL: [CloudKind; 3] = [CloudKind::Uniform, CloudKind::Hypercube, CloudKind::Gaussian];
}

impl fmt::Display for CloudKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CloudKind::Uniform => "uniform",
            CloudKind::Hypercube => "hypercube",
            CloudKind::Gaussian => "gaussian",
        })
    }
}

impl FromStr for CloudKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(CloudKind::Uniform),
            "hypercube" => Ok(CloudKind::Hypercube),
            "gaussian" => Ok(CloudKind::Gaussian),
            other => Err(Error::Parse(format!(
                "unknown cloud kind '{other}' (expected uniform, hypercube or gaussian)"
            ))),
        }
    }
}

/// `n` seeded points in `dim` dimensions, generated row by row.
pub fn generate_cloud(kind: CloudKind, n: usize, dim: usize, seed: u64) -> Result<ObservationMatrix> {
    if n == 0 || dim == 0 {
        return Err(Error::OutOfRange {
            what: "cloud size",
            detail: format!("n = {n}, dim = {dim}; both must be positive"),
        });
    }
    let mut rng = chacha(seed);
    let len = n * dim;
    let data: Vec<f64> = match kind {
        CloudKind::Uniform => (0..len).map(|_| rng.random::<f64>()).collect(),
        CloudKind::Hypercube => (0..len).map(|_| f64::from(u8::from(rng.random::<bool>()))).collect(),
        CloudKind::Gaussian => (0..len).map(|_| StandardNormal.sample(&mut rng)).collect(),
    };
    ObservationMatrix::new(n, dim, data)
}
