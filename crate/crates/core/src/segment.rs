//! Segmentation of a 1-D signal through window embeddings.
//!
//! The pipeline embeds overlapping windows of the signal as points, looks
//! at the histogram of their pairwise distances (fitting 1-D Gaussian
//! mixtures and picking the component count by BIC), optionally maps the
//! points to a few principal coordinates, and finally cuts a
//! contiguity-constrained complete-link hierarchy into segments.
//!
//! Window starts and sample indices are 0-based throughout.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agglomerate::{constrained_cluster, cut};
use crate::dendrogram::Dendrogram;
use crate::error::{Error, Result};
use crate::matrix::{DistanceMatrix, ObservationMatrix};
use crate::rng::{chacha, SplitMix64};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub window: usize,
    pub first: usize,
    pub step: usize,
    /// Last window start, inclusive.
    pub last: usize,
}

impl EmbeddingSpec {
    pub fn new(window: usize, first: usize, step: usize, last: usize) -> Result<Self> {
        if window == 0 || step == 0 || first > last {
            return Err(Error::OutOfRange {
                what: "embedding",
                detail: format!(
                    "window {window}, starts {first}..={last} step {step}: window and step must be positive and first <= last"
                ),
            });
        }
        Ok(Self {
            window,
            first,
            step,
            last,
        })
    }

    /// Windows starting every `step` samples from 0 for as long as they fit.
    pub fn tiling(signal_len: usize, window: usize, step: usize) -> Result<Self> {
        if window == 0 || window > signal_len {
            return Err(Error::OutOfRange {
                what: "window",
                detail: format!("window {window} does not fit a signal of {signal_len} samples"),
            });
        }
        let step = step.max(1);
        let last = (signal_len - window) / step * step;
        Self::new(window, 0, step, last)
    }

    pub fn starts(&self) -> Vec<usize> {
        (self.first..=self.last).step_by(self.step).collect()
    }

    pub fn n_windows(&self) -> usize {
        (self.last - self.first) / self.step + 1
    }
}

/// One row per window, in start order.
pub fn embed(signal: &[f64], spec: &EmbeddingSpec) -> Result<ObservationMatrix> {
    let starts = spec.starts();
    if let Some(&s) = starts.iter().find(|&&s| s + spec.window > signal.len()) {
        return Err(Error::OutOfRange {
            what: "window start",
            detail: format!(
                "window at start {s} ends at sample {} beyond the signal end {}",
                s + spec.window - 1,
                signal.len().saturating_sub(1)
            ),
        });
    }
    let mut data = Vec::with_capacity(starts.len() * spec.window);
    for s in &starts {
        data.extend_from_slice(&signal[*s..*s + spec.window]);
    }
    ObservationMatrix::new(starts.len(), spec.window, data)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceHistogram {
    /// All `n(n-1)/2` pairwise Euclidean distances in condensed order.
    pub distances: Vec<f64>,
    /// `bins + 1` equally spaced edges from the smallest to the largest
    /// distance.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

pub fn distance_histogram(m: &ObservationMatrix, bins: usize) -> Result<DistanceHistogram> {
    if m.n_rows() < 2 {
        return Err(Error::TooFewObjects {
            needed: 2,
            got: m.n_rows(),
        });
    }
    if bins == 0 {
        return Err(Error::OutOfRange {
            what: "bin count",
            detail: "at least one bin is required".into(),
        });
    }
    let distances = m.condensed_distances();
    let (lo, hi) = distances
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &d| (a.min(d), b.max(d)));
    let width = (hi - lo) / bins as f64;
    let edges = (0..=bins)
        .map(|b| if b == bins { hi } else { lo + width * b as f64 })
        .collect();
    let mut counts = vec![0; bins];
    for &d in &distances {
        let b = if width > 0.0 {
            (((d - lo) / width) as usize).min(bins - 1)
        } else {
            0
        };
        counts[b] += 1;
    }
    Ok(DistanceHistogram {
        distances,
        edges,
        counts,
    })
}

/// Expectation-maximization settings for [`gmm_bic_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub restarts: usize,
    /// Stop when the log-likelihood gains less than this, relative to its
    /// magnitude.
    pub tol: f64,
    pub max_iter: usize,
    /// Variance floor as a fraction of the data variance.
    pub variance_floor: f64,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            tol: 1e-8,
            max_iter: 500,
            variance_floor: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureFit {
    pub k: usize,
    pub means: Vec<f64>,
    pub sds: Vec<f64>,
    pub weights: Vec<f64>,
    pub loglik: f64,
    /// `2 loglik - (3k - 1) ln N`; larger is better.
    pub bic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureSelection {
    /// Fits for `k = 1..=k_max`.
    pub fits: Vec<MixtureFit>,
    pub best_k: usize,
}

impl MixtureSelection {
    pub fn best(&self) -> &MixtureFit {
        &self.fits[self.best_k - 1]
    }
}

pub fn gmm_bic(values: &[f64], k_max: usize, seed: u64) -> Result<MixtureSelection> {
    gmm_bic_with(values, k_max, seed, EmConfig::default())
}

/// Fits 1-D Gaussian mixtures with `1..=k_max` components and selects the
/// count with the largest BIC. Components are reported in increasing mean
/// order.
pub fn gmm_bic_with(values: &[f64], k_max: usize, seed: u64, cfg: EmConfig) -> Result<MixtureSelection> {
    if k_max == 0 {
        return Err(Error::OutOfRange {
            what: "k_max",
            detail: "at least one component is required".into(),
        });
    }
    let n = values.len();
    if n < 2 {
        return Err(Error::TooFewObjects { needed: 2, got: n });
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
    if !(var > 0.0) {
        return Err(Error::Degenerate("all values are equal".into()));
    }
    let floor = cfg.variance_floor * var;
    // Fitting centred data keeps the moment sums well conditioned; the mean
    // is added back to the component means afterwards.
    let centred: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let fits = (1..=k_max)
        .map(|k| {
            let best = (0..cfg.restarts.max(1))
                .into_par_iter()
                .map(|r| {
                    let stream = SplitMix64::at(seed, (k as u64) << 32 | r as u64);
                    em(&centred, k, stream, floor, &cfg)
                })
                .collect::<Vec<_>>()
                .into_iter()
                .reduce(|a, b| if b.loglik > a.loglik { b } else { a })
                .expect("at least one restart");
            MixtureFit {
                means: best.means.iter().map(|m| m + mean).collect(),
                ..best
            }
        })
        .collect::<Vec<_>>();
    let best_k = fits
        .iter()
        .enumerate()
        .fold(0, |best, (i, f)| if f.bic > fits[best].bic { i } else { best })
        + 1;
    Ok(MixtureSelection { fits, best_k })
}

fn em(x: &[f64], k: usize, seed: u64, floor: f64, cfg: &EmConfig) -> MixtureFit {
    let n = x.len();
    let mut means = kmeanspp(x, k, seed);
    means.sort_by(f64::total_cmp);
    // Hard assignment to the seeds gives starting weights and variances.
    let mut weights = vec![0.0; k];
    let mut vars = vec![0.0; k];
    for &v in x {
        let c = nearest(&means, v);
        weights[c] += 1.0;
        vars[c] += (v - means[c]).powi(2);
    }
    for c in 0..k {
        vars[c] = if weights[c] > 0.0 { vars[c] / weights[c] } else { 0.0 }.max(floor);
        weights[c] = weights[c].max(1.0) / n as f64;
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);

    let mut resp = vec![0.0; n * k];
    let mut loglik = f64::NEG_INFINITY;
    let mut acc = vec![[0.0f64; 3]; k];
    for _ in 0..cfg.max_iter {
        let ll = e_step(x, &means, &vars, &weights, &mut resp);
        let done = ll - loglik <= cfg.tol * ll.abs().max(1.0);
        loglik = ll;
        if done {
            break;
        }
        // One pass for the zeroth, first and second moments.
        acc.iter_mut().for_each(|a| *a = [0.0; 3]);
        for (i, &v) in x.iter().enumerate() {
            for (a, &r) in acc.iter_mut().zip(&resp[i * k..(i + 1) * k]) {
                a[0] += r;
                a[1] += r * v;
                a[2] += r * v * v;
            }
        }
        for (c, [nk, sx, sxx]) in acc.iter().copied().enumerate() {
            if nk < 1e-12 {
                continue;
            }
            let mu = sx / nk;
            means[c] = mu;
            vars[c] = (sxx / nk - mu * mu).max(floor);
            weights[c] = nk / n as f64;
        }
    }
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| means[a].total_cmp(&means[b]));
    let params = (3 * k - 1) as f64;
    MixtureFit {
        k,
        means: order.iter().map(|&c| means[c]).collect(),
        sds: order.iter().map(|&c| vars[c].sqrt()).collect(),
        weights: order.iter().map(|&c| weights[c]).collect(),
        loglik,
        bic: 2.0 * loglik - params * (n as f64).ln(),
    }
}

/// Fills `resp` with posterior memberships and returns the log-likelihood.
fn e_step(x: &[f64], means: &[f64], vars: &[f64], weights: &[f64], resp: &mut [f64]) -> f64 {
    const LN_2PI: f64 = 1.837_877_066_409_345_5;
    let k = means.len();
    let consts: Vec<f64> = (0..k)
        .map(|c| weights[c].ln() - 0.5 * (LN_2PI + vars[c].ln()))
        .collect();
    let mut ll = 0.0;
    for (i, &v) in x.iter().enumerate() {
        let row = &mut resp[i * k..(i + 1) * k];
        let mut top = f64::NEG_INFINITY;
        for c in 0..k {
            row[c] = consts[c] - 0.5 * (v - means[c]).powi(2) / vars[c];
            top = top.max(row[c]);
        }
        let mut s = 0.0;
        for r in row.iter_mut() {
            *r = (*r - top).exp();
            s += *r;
        }
        row.iter_mut().for_each(|r| *r /= s);
        ll += top + s.ln();
    }
    ll
}

fn kmeanspp(x: &[f64], k: usize, seed: u64) -> Vec<f64> {
    let mut rng = chacha(seed);
    let mut centers = vec![x[rng.random_range(0..x.len())]];
    let mut d2: Vec<f64> = x.iter().map(|v| (v - centers[0]).powi(2)).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut pick = x.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if u < w {
                    pick = i;
                    break;
                }
                u -= w;
            }
            x[pick]
        } else {
            x[rng.random_range(0..x.len())]
        };
        centers.push(next);
        for (d, v) in d2.iter_mut().zip(x) {
            *d = d.min((v - next).powi(2));
        }
    }
    centers
}

fn nearest(centers: &[f64], v: f64) -> usize {
    (0..centers.len())
        .min_by(|&a, &b| (v - centers[a]).abs().total_cmp(&(v - centers[b]).abs()))
        .unwrap_or(0)
}

/// Largest number of distinct distance-histogram peaks `c` clusters can
/// produce: one within each cluster and one for each pair.
pub fn max_peaks(clusters: usize) -> usize {
    clusters * (clusters + 1) / 2
}

/// Smallest cluster count able to explain `peaks` histogram peaks.
pub fn clusters_for_peaks(peaks: usize) -> usize {
    (1..).find(|&c| max_peaks(c) >= peaks).unwrap_or(1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcoaResult {
    pub coordinates: ObservationMatrix,
    /// Share of the positive eigenvalue mass carried by each axis.
    pub variance_fractions: Vec<f64>,
    /// The `k` leading eigenvalues of the centred matrix.
    pub eigenvalues: Vec<f64>,
    /// Sum of the magnitudes of the negative eigenvalues, 0 for Euclidean
    /// input.
    pub negative_mass: f64,
    /// Set when the input has no positive eigenvalue (all distances zero);
    /// coordinates and fractions are then all zero.
    pub degenerate: bool,
}

/// Classical (Torgerson) scaling into `k` dimensions.
pub fn pcoa(d: &DistanceMatrix, k: usize) -> Result<PcoaResult> {
    let n = d.n();
    if k == 0 || k + 1 > n {
        return Err(Error::OutOfRange {
            what: "dimension",
            detail: format!("k = {k} for {n} points; need 1 <= k <= n - 1"),
        });
    }
    let sq = DMatrix::from_fn(n, n, |i, j| d.get(i, j).powi(2));
    let row_means: Vec<f64> = (0..n).map(|i| sq.row(i).mean()).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let b = DMatrix::from_fn(n, n, |i, j| -0.5 * (sq[(i, j)] - row_means[i] - row_means[j] + grand));
    let eig = SymmetricEigen::new(b);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let top = order.first().map_or(0.0, |&i| eig.eigenvalues[i].abs());
    let cutoff = 1e-12 * top.max(f64::MIN_POSITIVE);
    let positive: f64 = eig.eigenvalues.iter().filter(|&&l| l > cutoff).sum();
    let negative_mass = -eig.eigenvalues.iter().filter(|&&l| l < -cutoff).sum::<f64>();
    let degenerate = !(positive > 0.0);
    let mut coords = vec![0.0; n * k];
    let mut fractions = vec![0.0; k];
    let mut eigenvalues = vec![0.0; k];
    for (axis, &e) in order.iter().take(k).enumerate() {
        let lambda = eig.eigenvalues[e];
        eigenvalues[axis] = lambda;
        if degenerate || lambda <= cutoff {
            continue;
        }
        fractions[axis] = lambda / positive;
        let v = eig.eigenvectors.column(e);
        // Fix the sign so that the largest-magnitude component is positive.
        let lead = (0..n).max_by(|&a, &b| v[a].abs().total_cmp(&v[b].abs())).unwrap_or(0);
        let sign = if v[lead] < 0.0 { -1.0 } else { 1.0 };
        let scale = sign * lambda.sqrt();
        for i in 0..n {
            coords[i * k + axis] = v[i] * scale;
        }
    }
    Ok(PcoaResult {
        coordinates: ObservationMatrix::new(n, k, coords)?,
        variance_fractions: fractions,
        eigenvalues,
        negative_mass,
        degenerate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub window_first: usize,
    pub window_last: usize,
    pub sample_first: usize,
    pub sample_last: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentOptions {
    /// Cluster principal coordinates instead of the raw windows.
    pub use_pcoa: bool,
    pub pcoa_dims: usize,
}

impl Default for SegmentOptions {
    fn default() -> Self {
        Self {
            use_pcoa: true,
            pcoa_dims: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segmentation {
    pub segments: Vec<Segment>,
    pub tree: Dendrogram,
    pub pcoa: Option<PcoaResult>,
}

/// Embeds the signal, clusters the windows under the contiguity constraint
/// and cuts the hierarchy into `n_segments` segments. Each segment's sample
/// range runs from its first window start up to the sample before the next
/// segment's first window start; the last segment runs to the end of its
/// last window.
pub fn segment_signal(
    signal: &[f64],
    spec: &EmbeddingSpec,
    n_segments: usize,
    opts: SegmentOptions,
) -> Result<Segmentation> {
    let windows = embed(signal, spec)?;
    let n = windows.n_rows();
    if n_segments == 0 || n_segments > n {
        return Err(Error::OutOfRange {
            what: "segment count",
            detail: format!("{n_segments} segments for {n} windows"),
        });
    }
    let (input, pc) = if opts.use_pcoa {
        let dims = opts.pcoa_dims.min(n.saturating_sub(1)).max(1);
        let pc = pcoa(&windows.euclidean_distances(), dims)?;
        (pc.coordinates.clone(), Some(pc))
    } else {
        (windows, None)
    };
    let tree = constrained_cluster(&input)?;
    let blocks = cut(&tree, n_segments)?;
    let starts = spec.starts();
    let segments = blocks
        .iter()
        .enumerate()
        .map(|(b, block)| {
            let (wf, wl) = (block[0], block[block.len() - 1]);
            let sample_last = match blocks.get(b + 1) {
                Some(next) => starts[next[0]] - 1,
                None => starts[wl] + spec.window - 1,
            };
            Segment {
                window_first: wf,
                window_last: wl,
                sample_first: starts[wf],
                sample_last,
            }
        })
        .collect();
    Ok(Segmentation {
        segments,
        tree,
        pcoa: pc,
    })
}
