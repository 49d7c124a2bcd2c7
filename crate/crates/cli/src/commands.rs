use std::path::Path;
use std::time::Instant;

use serde_json::{json, Value};
use ultrametric::agglomerate::cluster_condensed;
use ultrametric::baire::{baire_cluster, BaireParams};
use ultrametric::glattice::{clusters_at_level, set_distance, BooleanTable};
use ultrametric::haar::{self, WaveletDecomposition};
use ultrametric::padic::{self, CharacteristicMatrix};
use ultrametric::segment::{
    clusters_for_peaks, distance_histogram, embed, gmm_bic, pcoa, segment_signal, EmbeddingSpec, SegmentOptions,
};
use ultrametric::umetry::{generate_cloud, ultrametricity, CloudKind, Tolerance};
use ultrametric::{cluster_observations, constrained_cluster, cophenetic, Criterion, Dendrogram, ObservationMatrix};

use crate::error::{CliError, CliResult};
use crate::io::{csv_document, emit, json_document, num, read_tree, relabel, tree_json, Metadata, Table};
use crate::{
    BaireArgs, BenchArgs, Cli, ClusterArgs, Command, GlatticeArgs, HaarCommand, HaarDataArgs, HaarInverseArgs,
    PadicCommand, SegmentArgs, UmetryArgs,
};

pub fn dispatch(cli: &Cli) -> CliResult<()> {
    let ts = !cli.no_timestamp;
    match &cli.command {
        Command::Cluster(a) => cluster(a, ts),
        Command::Baire(a) => baire(a, ts),
        Command::Padic(c) => padic_cmd(c, ts),
        Command::Glattice(a) => glattice(a, ts),
        Command::Haar(c) => haar_cmd(c, ts),
        Command::Umetry(a) => umetry(a, ts),
        Command::Segment(a) => segment(a, ts),
        Command::Bench(a) => bench(a, ts),
    }
}

fn path_str(p: &Path) -> String {
    p.display().to_string()
}

fn cluster(a: &ClusterArgs, ts: bool) -> CliResult<()> {
    let t = Table::read(&a.input, a.id_column)?;
    let m = t.matrix()?;
    let tree = if a.constrained {
        relabel(&constrained_cluster(&m)?, t.labels.clone())?
    } else {
        cluster_condensed(m.n_rows(), m.condensed_distances(), a.criterion, t.labels.clone())?
    };
    let criterion = if a.constrained {
        Criterion::Complete
    } else {
        a.criterion
    };
    let meta = Metadata::new("cluster", ts)
        .param("input", path_str(&a.input))
        .param("criterion", criterion.to_string())
        .param("constrained", a.constrained);
    if let Some(path) = &a.cophenetic {
        let u = cophenetic(&tree);
        let d = u.as_distance();
        let header: Vec<String> = std::iter::once("terminal".to_owned())
            .chain(tree.terminals().iter().cloned())
            .collect();
        let rows: Vec<Vec<String>> = (0..d.n())
            .map(|i| {
                std::iter::once(tree.terminals()[i].clone())
                    .chain(d.row(i).iter().map(|&v| num(v)))
                    .collect()
            })
            .collect();
        emit(Some(path), &csv_document(&meta, &header, &rows)?)?;
    }
    emit(a.output.as_deref(), &json_document(&meta, tree_json(&tree)?))
}

fn baire(a: &BaireArgs, ts: bool) -> CliResult<()> {
    let t = Table::read(&a.input, a.id_column)?;
    let m = t.matrix()?;
    let params = BaireParams {
        seed: a.seed,
        precision: a.precision.into(),
        base: a.base,
        weights: a.weights,
    };
    let c = baire_cluster(&m, params)?;
    let weights = serde_json::to_value(a.weights).unwrap_or(Value::Null);
    let meta = Metadata::new("baire", ts)
        .seed(a.seed)
        .param("input", path_str(&a.input))
        .param("precision", a.precision)
        .param("base", a.base)
        .param("weights", weights);
    if let Some(path) = &a.report {
        let rows: Vec<Vec<String>> = c
            .report
            .iter()
            .map(|r| vec![r.level.to_string(), r.n_clusters.to_string()])
            .collect();
        let header = ["level".to_owned(), "n_clusters".to_owned()];
        emit(Some(path), &csv_document(&meta, &header, &rows)?)?;
    }
    let h = &c.hierarchy;
    let levels: Vec<Value> = (1..=h.precision())
        .map(|level| {
            let clusters: Vec<Vec<&str>> = h
                .partition(level)
                .iter()
                .map(|b| b.iter().map(|&i| t.labels[i].as_str()).collect())
                .collect();
            json!({"level": level, "n_clusters": clusters.len(), "clusters": clusters})
        })
        .collect();
    let body = json!({
        "precision": h.precision(),
        "base": h.base(),
        "terminals": t.labels,
        "projections": c.projections,
        "levels": levels,
    });
    emit(a.output.as_deref(), &json_document(&meta, body))
}

fn padic_cmd(c: &PadicCommand, ts: bool) -> CliResult<()> {
    match c {
        PadicCommand::Encode(a) => {
            let tree = read_tree(&a.tree)?;
            let enc = padic::encode(&tree, a.p)?;
            let meta = Metadata::new("padic encode", ts)
                .param("tree", path_str(&a.tree))
                .param("p", a.p);
            emit(a.output.as_deref(), &codes_csv(&meta, &enc.matrix, a.p)?)
        }
        PadicCommand::Decode(a) => {
            let cm = read_codes(&a.codes)?;
            let tree = padic::decode(&cm)?;
            let meta = Metadata::new("padic decode", ts).param("codes", path_str(&a.codes));
            emit(a.output.as_deref(), &json_document(&meta, tree_json(&tree)?))
        }
        PadicCommand::Distance(a) => {
            let cm = read_codes(&a.codes)?;
            let codes = (0..cm.n_rows())
                .map(|i| cm.code(i, a.p))
                .collect::<ultrametric::Result<Vec<_>>>()?;
            let find = |label: &str| {
                cm.labels()
                    .iter()
                    .position(|l| l == label)
                    .ok_or_else(|| CliError::Usage(format!("no terminal labelled {label:?} in {}", a.codes.display())))
            };
            let pairs: Vec<(usize, usize)> = match (&a.a, &a.b) {
                (Some(x), Some(y)) => vec![(find(x)?, find(y)?)],
                _ => (0..codes.len())
                    .flat_map(|i| (i + 1..codes.len()).map(move |j| (i, j)))
                    .collect(),
            };
            let rows = pairs
                .iter()
                .map(|&(i, j)| {
                    let r = padic::differing_level(cm.row(i), cm.row(j)).map_or(String::new(), |r| r.to_string());
                    let d = padic::padic_distance(&codes[i], &codes[j])?;
                    Ok(vec![cm.labels()[i].clone(), cm.labels()[j].clone(), r, num(d)])
                })
                .collect::<CliResult<Vec<_>>>()?;
            let meta = Metadata::new("padic distance", ts)
                .param("codes", path_str(&a.codes))
                .param("p", a.p);
            let header = ["a", "b", "r", "distance"].map(String::from);
            emit(a.output.as_deref(), &csv_document(&meta, &header, &rows)?)
        }
        PadicCommand::Dilate(a) => {
            let mut cm = read_codes(&a.codes)?;
            for _ in 0..a.times {
                cm = padic::dilate(&cm)?;
            }
            let meta = Metadata::new("padic dilate", ts)
                .param("codes", path_str(&a.codes))
                .param("p", a.p)
                .param("times", a.times);
            emit(a.output.as_deref(), &codes_csv(&meta, &cm, a.p)?)
        }
    }
}

/// Columns `terminal, c_1..c_L, decimal`.
fn codes_csv(meta: &Metadata, cm: &CharacteristicMatrix, p: u32) -> CliResult<String> {
    let decimals = cm.decimals(p)?;
    let header: Vec<String> = std::iter::once("terminal".to_owned())
        .chain((1..=cm.n_levels()).map(|j| format!("c_{j}")))
        .chain(std::iter::once("decimal".to_owned()))
        .collect();
    let rows: Vec<Vec<String>> = (0..cm.n_rows())
        .map(|i| {
            std::iter::once(cm.labels()[i].clone())
                .chain(cm.row(i).iter().map(|c| c.to_string()))
                .chain(std::iter::once(decimals[i].to_string()))
                .collect()
        })
        .collect();
    csv_document(meta, &header, &rows)
}

fn read_codes(path: &Path) -> CliResult<CharacteristicMatrix> {
    let t = Table::read(path, true)?;
    let levels: Vec<&str> = t
        .columns
        .iter()
        .map(String::as_str)
        .filter(|c| *c != "decimal")
        .collect();
    if let Some((j, bad)) = levels
        .iter()
        .enumerate()
        .find(|(j, c)| **c != format!("c_{}", j + 1))
    {
        return Err(CliError::Input(format!(
            "{}: column {} is {bad:?}, expected \"c_{}\"",
            path.display(),
            j + 2,
            j + 1
        )));
    }
    let rows = t.select(&levels)?.coefficients()?;
    Ok(CharacteristicMatrix::new(t.labels, rows)?)
}

fn glattice(a: &GlatticeArgs, ts: bool) -> CliResult<()> {
    let t = Table::read(&a.input, a.id_column)?;
    let table = BooleanTable::from_bits(t.labels.clone(), &t.bits()?)?;
    let clusters = clusters_at_level(&table, a.level)?;
    let n = table.n_objects();
    let mut distances = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let d = set_distance(table.row(i), table.row(j))?;
            let names: Vec<&str> = d.iter().map(|&k| t.columns[k].as_str()).collect();
            distances.push(json!({"a": t.labels[i], "b": t.labels[j], "attributes": names}));
        }
    }
    let named: Vec<Vec<&str>> = clusters
        .iter()
        .map(|c| c.iter().map(|&i| t.labels[i].as_str()).collect())
        .collect();
    let meta = Metadata::new("glattice", ts)
        .param("input", path_str(&a.input))
        .param("level", a.level);
    let body = json!({
        "level": a.level,
        "attributes": t.columns,
        "clusters": named,
        "distances": distances,
    });
    emit(a.output.as_deref(), &json_document(&meta, body))
}

/// Data rows in terminal order, matched by label when the table has ids.
fn aligned_data(tree: &Dendrogram, a: &HaarDataArgs) -> CliResult<(Table, ObservationMatrix)> {
    let t = Table::read(&a.data, a.id_column)?;
    let values = t.numbers()?;
    if values.len() != tree.n_terminals() {
        return Err(CliError::Input(format!(
            "{}: {} data rows for a tree with {} terminals",
            a.data.display(),
            values.len(),
            tree.n_terminals()
        )));
    }
    let rows = if a.id_column {
        tree.terminals()
            .iter()
            .map(|label| {
                t.labels
                    .iter()
                    .position(|l| l == label)
                    .map(|r| values[r].clone())
                    .ok_or_else(|| CliError::Input(format!("{}: no row for terminal {label:?}", a.data.display())))
            })
            .collect::<CliResult<Vec<_>>>()?
    } else {
        values
    };
    let m = ObservationMatrix::from_rows(&rows)?;
    Ok((t, m))
}

fn data_csv(meta: &Metadata, tree: &Dendrogram, columns: &[String], m: &ObservationMatrix) -> CliResult<String> {
    let header: Vec<String> = std::iter::once("terminal".to_owned()).chain(columns.iter().cloned()).collect();
    let rows: Vec<Vec<String>> = (0..m.n_rows())
        .map(|i| {
            std::iter::once(tree.terminals()[i].clone())
                .chain(m.row(i).iter().map(|&v| num(v)))
                .collect()
        })
        .collect();
    csv_document(meta, &header, &rows)
}

fn haar_cmd(c: &HaarCommand, ts: bool) -> CliResult<()> {
    match c {
        HaarCommand::Forward(a) => {
            let tree = read_tree(&a.tree)?;
            let (t, m) = aligned_data(&tree, a)?;
            let w = haar::forward(&tree, &m)?;
            let header: Vec<String> = std::iter::once("attribute".to_owned())
                .chain(w.table_header())
                .collect();
            let rows: Vec<Vec<String>> = w
                .table()
                .iter()
                .zip(&t.columns)
                .map(|(vals, name)| std::iter::once(name.clone()).chain(vals.iter().map(|&v| num(v))).collect())
                .collect();
            let meta = Metadata::new("haar forward", ts)
                .param("tree", path_str(&a.tree))
                .param("data", path_str(&a.data));
            emit(a.output.as_deref(), &csv_document(&meta, &header, &rows)?)
        }
        HaarCommand::Inverse(a) => {
            let tree = read_tree(&a.tree)?;
            let w = read_coeffs(&tree, a)?;
            let t = Table::read(&a.coeffs, true)?;
            let meta = Metadata::new("haar inverse", ts)
                .param("tree", path_str(&a.tree))
                .param("coeffs", path_str(&a.coeffs));
            emit(a.output.as_deref(), &data_csv(&meta, &tree, &t.labels, &haar::inverse(&w))?)
        }
        HaarCommand::Regress(a) => {
            let tree = read_tree(&a.data.tree)?;
            let (t, m) = aligned_data(&tree, &a.data)?;
            let w = haar::forward(&tree, &m)?;
            let out = haar::regress(&w, a.threshold)?;
            let meta = Metadata::new("haar regress", ts)
                .param("tree", path_str(&a.data.tree))
                .param("data", path_str(&a.data.data))
                .param("threshold", a.threshold);
            emit(a.data.output.as_deref(), &data_csv(&meta, &tree, &t.columns, &out)?)
        }
    }
}

fn read_coeffs(tree: &Dendrogram, a: &HaarInverseArgs) -> CliResult<WaveletDecomposition> {
    let t = Table::read(&a.coeffs, true)?;
    let top = tree.n_terminals().saturating_sub(1);
    let expected: Vec<String> = std::iter::once(format!("s{top}"))
        .chain((1..=top).rev().map(|r| format!("d{r}")))
        .collect();
    if t.columns != expected {
        return Err(CliError::Input(format!(
            "{}: columns {:?} do not match a tree with {} terminals (expected {:?})",
            a.coeffs.display(),
            t.columns,
            tree.n_terminals(),
            expected
        )));
    }
    let table = t.numbers()?;
    let smooth: Vec<f64> = table.iter().map(|r| r[0]).collect();
    let details: Vec<Vec<f64>> = (1..=top)
        .map(|rank| table.iter().map(|r| r[1 + top - rank]).collect())
        .collect();
    Ok(WaveletDecomposition::new(tree.clone(), smooth, details)?)
}

fn umetry(a: &UmetryArgs, ts: bool) -> CliResult<()> {
    let tol = match a.angle {
        Some(deg) => Tolerance::Angle(deg),
        None => Tolerance::Relative(a.tol),
    };
    let mut meta = Metadata::new("umetry", ts)
        .seed(a.seed)
        .param("triangles", a.triangles)
        .param("tolerance", tol.to_string());
    let points = match (&a.input, a.kind) {
        (Some(path), _) => {
            meta = meta.param("input", path_str(path));
            Table::read(path, a.id_column)?.matrix()?
        }
        (None, Some(kind)) => {
            meta = meta.param("kind", kind.to_string());
            generate_cloud(kind, a.n, a.dim, a.seed)?
        }
        (None, None) => return Err(CliError::Usage("one of --kind or --input is required".into())),
    };
    let r = ultrametricity(&points, a.triangles, a.seed, tol)?;
    let header = ["points", "dim", "isosceles", "equilateral", "um"].map(String::from);
    let row = vec![
        points.n_rows().to_string(),
        points.n_cols().to_string(),
        num(r.isosceles_small_base),
        num(r.equilateral),
        num(r.ultrametric),
    ];
    emit(a.output.as_deref(), &csv_document(&meta, &header, &[row])?)
}

fn segment(a: &SegmentArgs, ts: bool) -> CliResult<()> {
    let t = Table::read(&a.signal, false)?;
    let column = a.column.clone().unwrap_or_else(|| t.columns[0].clone());
    let signal: Vec<f64> = t.select(&[&column])?.numbers()?.into_iter().map(|r| r[0]).collect();
    let step = a.step.unwrap_or(a.window);
    if step == 0 {
        return Err(CliError::Usage("--step must be positive".into()));
    }
    let spec = EmbeddingSpec::tiling(signal.len(), a.window, step)?;
    let windows = embed(&signal, &spec)?;
    let hist = distance_histogram(&windows, a.bins)?;
    let mixture = match gmm_bic(&hist.distances, a.k_max, a.seed) {
        Ok(m) => Some(m),
        Err(ultrametric::Error::Degenerate(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let peaks = mixture.as_ref().map_or(1, |m| m.best_k);
    let n_segments = a.segments.unwrap_or_else(|| clusters_for_peaks(peaks)).min(spec.n_windows());
    let opts = SegmentOptions {
        use_pcoa: !a.no_pcoa,
        pcoa_dims: a.pcoa_dims,
    };
    let seg = segment_signal(&signal, &spec, n_segments, opts)?;
    let meta = Metadata::new("segment", ts)
        .seed(a.seed)
        .param("signal", path_str(&a.signal))
        .param("column", column)
        .param("window", a.window)
        .param("step", step)
        .param("segments", n_segments)
        .param("bins", a.bins)
        .param("k_max", a.k_max)
        .param("pcoa", !a.no_pcoa)
        .param("pcoa_dims", a.pcoa_dims);

    if let Some(path) = &a.emit_histogram {
        let header = ["lower", "upper", "count"].map(String::from);
        let rows: Vec<Vec<String>> = hist
            .counts
            .iter()
            .enumerate()
            .map(|(b, c)| vec![num(hist.edges[b]), num(hist.edges[b + 1]), c.to_string()])
            .collect();
        emit(Some(path), &csv_document(&meta, &header, &rows)?)?;
    }
    if let Some(path) = &a.emit_pcoa {
        let pc = match &seg.pcoa {
            Some(pc) => pc.clone(),
            None => pcoa(&windows.euclidean_distances(), a.pcoa_dims.clamp(1, spec.n_windows()))?,
        };
        let k = pc.coordinates.n_cols();
        let header: Vec<String> = ["window", "start"]
            .map(String::from)
            .into_iter()
            .chain((1..=k).map(|j| format!("pc{j}")))
            .collect();
        let starts = spec.starts();
        let rows: Vec<Vec<String>> = (0..pc.coordinates.n_rows())
            .map(|i| {
                [i.to_string(), starts[i].to_string()]
                    .into_iter()
                    .chain(pc.coordinates.row(i).iter().map(|&v| num(v)))
                    .collect()
            })
            .collect();
        let fractions: Vec<String> = pc.variance_fractions.iter().map(|&v| num(v)).collect();
        let pmeta = meta.clone().param("variance_fractions", fractions.join(" "));
        emit(Some(path), &csv_document(&pmeta, &header, &rows)?)?;
    }
    let body = json!({
        "n_windows": spec.n_windows(),
        "segments": seg.segments,
        "mixture": mixture,
    });
    emit(a.output.as_deref(), &json_document(&meta, body))
}

fn bench(a: &BenchArgs, ts: bool) -> CliResult<()> {
    let mut rows = Vec::new();
    for &n in &a.sizes {
        let cloud = generate_cloud(CloudKind::Uniform, n, a.dim, a.seed)?;
        let t0 = Instant::now();
        baire_cluster(
            &cloud,
            BaireParams {
                seed: a.seed,
                ..BaireParams::default()
            },
        )?;
        let baire_s = t0.elapsed().as_secs_f64();
        let pairwise = if n <= a.pairwise_max {
            let t0 = Instant::now();
            cluster_observations(&cloud, Criterion::Complete)?;
            num(t0.elapsed().as_secs_f64())
        } else {
            String::new()
        };
        rows.push(vec![n.to_string(), num(baire_s), pairwise]);
    }
    let sizes: Vec<String> = a.sizes.iter().map(usize::to_string).collect();
    let meta = Metadata::new("bench", ts)
        .seed(a.seed)
        .param("sizes", sizes.join(","))
        .param("dim", a.dim)
        .param("pairwise_max", a.pairwise_max)
        .param("pairwise_criterion", "complete");
    let header = ["n", "baire_seconds", "pairwise_seconds"].map(String::from);
    emit(a.output.as_deref(), &csv_document(&meta, &header, &rows)?)
}
