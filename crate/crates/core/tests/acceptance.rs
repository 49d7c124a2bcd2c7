//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure. Runs as a plain binary so the report is always printed.

mod common;

use std::time::{Duration, Instant};

use common::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use ultrametric::agglomerate::{cluster_observations, constrained_cluster, cut, Criterion};
use ultrametric::baire::{baire_cluster, baire_distance, baire_hierarchy, BaireParams, DigitString, SparseMatrix};
use ultrametric::dendrogram::Dendrogram;
use ultrametric::glattice::{clusters_at_level, set_distance, BooleanTable};
use ultrametric::haar::{forward, inverse};
use ultrametric::matrix::{DistanceMatrix, ObservationMatrix};
use ultrametric::padic::{decode, dilate, encode, padic_distance};
use ultrametric::rng::chacha;
use ultrametric::segment::{gmm_bic, pcoa, segment_signal, EmbeddingSpec, SegmentOptions};
use ultrametric::ultra::{cophenetic, verify_ultrametric};
use ultrametric::umetry::{generate_cloud, ultrametricity, CloudKind, Tolerance};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn within(limit: Duration, t: Duration) -> bool {
    t <= limit
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let data = ObservationMatrix::from_rows(&IRIS7).unwrap();
    let published = DistanceMatrix::from_rows(&IRIS7_ULTRAMETRIC).unwrap();
    let seq = cophenetic(&constrained_cluster(&data).unwrap());
    let err = seq.max_abs_diff(&published);
    let plain = cophenetic(&cluster_observations(&data, Criterion::Complete).unwrap());
    let plain_err = plain.max_abs_diff(&published);
    let t = t0.elapsed();
    outcome(
        err <= 1e-6 && within(Duration::from_secs(1), t),
        format!(
            "sequence-constrained complete link max |diff| = {err:.2e} (tol 1e-6); unconstrained complete link max |diff| = {plain_err:.4} (informational); {t:.2?}"
        ),
    )
}

fn criterion_2() -> Outcome {
    let t0 = Instant::now();
    let data = ObservationMatrix::from_rows(&IRIS8).unwrap();
    let w = forward(&iris8_tree(), &data).unwrap();
    let table = w.table();
    let coef_err = IRIS8_HAAR
        .iter()
        .enumerate()
        .flat_map(|(k, row)| row.iter().enumerate().map(move |(c, v)| (k, c, *v)))
        .map(|(k, c, v)| (table[k][c] - v).abs())
        .fold(0.0, f64::max);
    let back = inverse(&w);
    let recon_err = back
        .as_slice()
        .iter()
        .zip(data.as_slice())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let x2_err = w
        .smooth()
        .iter()
        .zip(w.detail(7))
        .zip([5.4, 3.9, 1.7, 0.4])
        .map(|((s, d), x)| (s + d - x).abs())
        .fold(0.0, f64::max);
    let t = t0.elapsed();
    outcome(
        coef_err <= 1e-6 && recon_err <= 1e-10 && x2_err <= 1e-10 && within(Duration::from_secs(1), t),
        format!(
            "32 coefficients max |diff| = {coef_err:.2e} (tol 1e-6); reconstruction {recon_err:.2e} (tol 1e-10); s7 + d7 {x2_err:.2e} (tol 1e-10); {t:.2?}"
        ),
    )
}

fn criterion_3() -> Outcome {
    let t0 = Instant::now();
    let tree = ranked_tree();
    let e = encode(&tree, 3).unwrap();
    let want: Vec<Vec<i8>> = RANKED_TREE_CODES.iter().map(|r| r.to_vec()).collect();
    let matrix_ok = e.matrix.rows() == want;
    let decode_ok = decode(&e.matrix).map(|h| h == tree).unwrap_or(false);
    let mut dist_ok = true;
    for p in [2u32, 3, 5, 7] {
        let e = encode(&tree, p).unwrap();
        let c = |i: usize| e.matrix.code(i, p).unwrap();
        let d = |a, b| padic_distance(&c(a), &c(b)).unwrap();
        let pf = p as f64;
        dist_ok &= d(0, 1) == pf.powi(-1) && d(0, 4) == pf.powi(-5) && d(4, 7) == pf.powi(-7);
    }
    let dilated = dilate(&encode(&tree, 2).unwrap().matrix).unwrap();
    let levels = dilated.code(0, 2).unwrap().levels();
    let t = t0.elapsed();
    outcome(
        matrix_ok && decode_ok && dist_ok && levels == [1, 4, 6] && within(Duration::from_secs(1), t),
        format!(
            "matrix {matrix_ok}, decode {decode_ok}, distances p^-1/p^-5/p^-7 {dist_ok}, dilated x1 levels {levels:?}; {t:.2?}"
        ),
    )
}

fn criterion_4() -> Outcome {
    let s = |v: f64| DigitString::from_value(v, 3, 10).unwrap();
    let a = baire_distance(&s(0.478), &s(0.472)).unwrap();
    let b = baire_distance(&s(0.478), &s(0.478)).unwrap();
    outcome(a == 0.25 && b == 0.125, format!("d(0.478, 0.472) = {a}; identical |K|=3 -> {b}"))
}

fn criterion_5() -> Outcome {
    let t0 = Instant::now();
    const DIMS: [usize; 4] = [20, 200, 2000, 20000];
    let targets = [
        (CloudKind::Uniform, [0.13, 0.36, 0.84, 0.94]),
        (CloudKind::Hypercube, [0.16, 0.36, 0.87, 0.96]),
        (CloudKind::Gaussian, [0.13, 0.36, 0.80, 0.98]),
    ];
    let tol = Tolerance::Angle(2.0);
    let mut pass = true;
    let mut worst: f64 = 0.0;
    let mut lines = Vec::new();
    for (kind, want) in targets {
        let mut row = [0.0; 4];
        for (di, &dim) in DIMS.iter().enumerate() {
            for seed in 0..10u64 {
                let cloud = generate_cloud(kind, 100, dim, seed).unwrap();
                row[di] += ultrametricity(&cloud, 300, 1000 + seed, tol).unwrap().ultrametric / 10.0;
            }
            let dev = (row[di] - want[di]).abs();
            worst = worst.max(dev);
            pass &= dev <= 0.07;
        }
        let monotone = row.windows(2).all(|w| w[0] <= w[1]);
        pass &= monotone;
        lines.push(format!(
            "{kind} {:.3}/{:.3}/{:.3}/{:.3}{}",
            row[0],
            row[1],
            row[2],
            row[3],
            if monotone { "" } else { " (not monotone)" }
        ));
    }
    let t = t0.elapsed();
    pass &= within(Duration::from_secs(120), t);
    outcome(
        pass,
        format!("UM at dims 20/200/2000/20000 with {tol} tolerance: {}; worst |diff| = {worst:.3} (tol 0.07); {t:.2?}", lines.join(", ")),
    )
}

fn criterion_6() -> Outcome {
    let rows: Vec<Vec<u8>> = ATTRIBUTE_TABLE.iter().map(|r| r.to_vec()).collect();
    let t = BooleanTable::from_bits(ATTRIBUTE_LABELS.iter().map(|s| s.to_string()).collect(), &rows).unwrap();
    let ab: Vec<usize> = set_distance(t.row(0), t.row(1)).unwrap().into_iter().collect();
    let ac: Vec<usize> = set_distance(t.row(0), t.row(2)).unwrap().into_iter().collect();
    let l2 = clusters_at_level(&t, 2).unwrap();
    let l3 = clusters_at_level(&t, 3).unwrap();
    let name = |cs: &[Vec<usize>]| {
        cs.iter()
            .map(|c| c.iter().map(|&i| ATTRIBUTE_LABELS[i]).collect::<Vec<_>>().join(""))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outcome(
        ab == [0, 1] && ac == [1] && l2 == [vec![0, 1, 2, 4], vec![0, 2, 3]] && l3 == [vec![0, 1, 2, 3, 4]],
        format!("d(a,b) = {ab:?}, d(a,c) = {ac:?}; level 2: {}; level 3: {}", name(&l2), name(&l3)),
    )
}

fn criterion_7() -> Outcome {
    let t0 = Instant::now();
    let time = |n: usize| {
        let m = SparseMatrix::random_binary(n, 1000, 0.08, 7);
        // Best of three to damp scheduler noise.
        (0..3)
            .map(|_| {
                let s = Instant::now();
                let r = baire_cluster(&m, BaireParams::default()).unwrap();
                std::hint::black_box(r);
                s.elapsed()
            })
            .min()
            .unwrap()
    };
    let small = time(10_000);
    let large = time(100_000);
    let ratio = large.as_secs_f64() / small.as_secs_f64();
    let t = t0.elapsed();
    outcome(
        ratio <= 15.0 && within(Duration::from_secs(300), t),
        format!("n=1e4: {small:.2?}, n=1e5: {large:.2?}, ratio {ratio:.2} (limit 15); {t:.2?}"),
    )
}

fn planted_signal(seed: u64) -> Vec<f64> {
    let mut rng = chacha(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    (0..90_000)
        .map(|i| if (30_000..60_000).contains(&i) { 5.0 } else { 0.0 } + noise.sample(&mut rng))
        .collect()
}

fn criterion_8() -> Outcome {
    let t0 = Instant::now();
    let mut seg_hits = 0;
    for seed in 0..10 {
        let signal = planted_signal(seed);
        let spec = EmbeddingSpec::tiling(signal.len(), 1000, 1000).unwrap();
        let s = segment_signal(&signal, &spec, 3, SegmentOptions::default()).unwrap();
        let starts: Vec<usize> = s.segments.iter().map(|x| x.sample_first).collect();
        let ok = starts.len() == 3
            && starts[1].abs_diff(30_000) <= 1000
            && starts[2].abs_diff(60_000) <= 1000;
        seg_hits += usize::from(ok);
    }
    let mut gmm_hits = 0;
    let mut single_hits = 0;
    for seed in 0..10u64 {
        let mut rng = chacha(100 + seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let three: Vec<f64> = (0..3000)
            .map(|_| 10.0 * rng.random_range(0..3) as f64 + noise.sample(&mut rng))
            .collect();
        gmm_hits += usize::from(gmm_bic(&three, 4, seed).unwrap().best_k == 3);
        let one: Vec<f64> = (0..2000).map(|_| noise.sample(&mut rng)).collect();
        single_hits += usize::from(gmm_bic(&one, 4, seed).unwrap().best_k == 1);
    }
    let mut pcoa_err: f64 = 0.0;
    for seed in 0..10u64 {
        let mut rng = chacha(200 + seed);
        let pts: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| rng.random::<f64>() * 100.0).collect()).collect();
        let d = pairwise(&pts);
        let r = pcoa(&DistanceMatrix::from_rows(&d).unwrap(), 3).unwrap();
        let got: Vec<Vec<f64>> = r.coordinates.rows().map(<[f64]>::to_vec).collect();
        let back = pairwise(&got);
        for i in 0..30 {
            for j in 0..30 {
                pcoa_err = pcoa_err.max((back[i][j] - d[i][j]).abs());
            }
        }
    }
    let t = t0.elapsed();
    outcome(
        seg_hits >= 9 && gmm_hits >= 9 && single_hits >= 9 && pcoa_err <= 1e-8 && within(Duration::from_secs(60), t),
        format!(
            "segment boundaries within 1 window in {seg_hits}/10; BIC picks 3 planted components in {gmm_hits}/10 and 1 in {single_hits}/10; pcoa max |diff| = {pcoa_err:.2e} (tol 1e-8); {t:.2?}"
        ),
    )
}

fn criterion_9() -> Outcome {
    let t0 = Instant::now();
    let mut notes = Vec::new();

    // (a) cophenetic matrices are ultrametric.
    let a = (0..500u64).all(|s| {
        let h = Dendrogram::random(2 + (s as usize % 30), &mut chacha(s));
        verify_ultrametric(cophenetic(&h).as_distance(), 0.0).is_ultrametric()
            && ultrametric_violation(&cophenetic_oracle(&h), 0.0).is_none()
    });
    notes.push(format!("a {a}"));

    // (b) branch-code round trip.
    let b = (0..200u64).all(|s| {
        let h = Dendrogram::random(2 + (s as usize % 63), &mut chacha(1_000 + s));
        decode(&encode(&h, 3).unwrap().matrix).unwrap() == h.canonicalized().with_rank_heights()
    });
    notes.push(format!("b {b}"));

    // (c) NN-chain against stepwise agglomeration.
    let pairs = [
        (Criterion::Single, Linkage::Single),
        (Criterion::Complete, Linkage::Complete),
        (Criterion::Average, Linkage::Average),
        (Criterion::Ward, Linkage::Ward),
    ];
    let mut c = true;
    for (crit, link) in pairs {
        for s in 0..100u64 {
            let mut rng = chacha(2_000 + s);
            let n = rng.random_range(2..=12);
            let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..3).map(|_| rng.random::<f64>()).collect()).collect();
            let h = cluster_observations(&ObservationMatrix::from_rows(&pts).unwrap(), crit).unwrap();
            let got = cophenetic(&h);
            let want = naive_agglomeration(&pts, link);
            c &= (0..n).all(|i| (0..n).all(|j| (got.get(i, j) - want[i][j]).abs() < 1e-9));
        }
    }
    notes.push(format!("c {c}"));

    // (d) prefix partitions refine level by level.
    let d = (0..100u64).all(|s| {
        let mut rng = chacha(3_000 + s);
        let n = rng.random_range(1..200);
        let v: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let h = baire_hierarchy(&v, 6, 10).unwrap();
        (1..6).all(|k| {
            let coarse = h.labels(k);
            let fine = h.labels(k + 1);
            (0..n).all(|i| (0..n).all(|j| fine[i] != fine[j] || coarse[i] == coarse[j]))
        })
    });
    notes.push(format!("d {d}"));

    // (e) swapping children negates that node's detail only.
    let e = (0..100u64).all(|s| {
        let mut rng = chacha(4_000 + s);
        let n = rng.random_range(2..=24);
        let h = Dendrogram::random(n, &mut rng);
        let data = ObservationMatrix::new(n, 3, (0..3 * n).map(|_| rng.random::<f64>()).collect()).unwrap();
        let rank = rng.random_range(1..n);
        let w = forward(&h, &data).unwrap();
        let ws = forward(&h.swap_children(rank), &data).unwrap();
        let details_ok = (1..n).all(|r| {
            let sign = if r == rank { -1.0 } else { 1.0 };
            w.detail(r).iter().zip(ws.detail(r)).all(|(x, y)| *x == sign * y)
        });
        details_ok && w.smooth() == ws.smooth() && inverse(&ws) == inverse(&w) && ws.sign_map()[rank - 1] == h.node(rank).right
    });
    notes.push(format!("e {e}"));

    // (f) constrained clustering: monotone heights, contiguous cuts.
    let f = (0..100u64).all(|s| {
        let mut rng = chacha(5_000 + s);
        let n = rng.random_range(2..40);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..2).map(|_| rng.random::<f64>()).collect()).collect();
        let h = constrained_cluster(&ObservationMatrix::from_rows(&pts).unwrap()).unwrap();
        !h.has_inversions()
            && (1..=n).all(|k| {
                cut(&h, k)
                    .unwrap()
                    .iter()
                    .all(|b| b.windows(2).all(|w| w[1] == w[0] + 1))
            })
    });
    notes.push(format!("f {f}"));

    let t = t0.elapsed();
    outcome(a && b && c && d && e && f, format!("{}; {t:.2?}", notes.join(", ")))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("1 published ultrametric matrix", criterion_1),
        ("2 dendrogram Haar coefficients", criterion_2),
        ("3 branch-code matrix, distances, dilation", criterion_3),
        ("4 Baire worked example", criterion_4),
        ("5 ultrametricity versus dimension", criterion_5),
        ("6 attribute-set lattice clusters", criterion_6),
        ("7 Baire scaling", criterion_7),
        ("8 segmentation pipeline", criterion_8),
        ("9 property suites", criterion_9),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {name}: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
