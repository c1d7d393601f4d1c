//! Acceptance criteria. Each test prints one `PASS`/`FAIL` line, written
//! straight to stdout so it shows up without `--nocapture`.

mod common;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use ndarray::{array, Array2};
use rand::Rng as _;

use techscape::analyze::{distance_deciles, nber_shift, nmf, Binning};
use techscape::bundle::Bundle;
use techscape::corpus::{
    ingest, neighborhoods, normalize_weights, DirectionPolicy, DomainCatalog, DomainEntry, DomainGraph,
    NberSubcategory, SparseRows,
};
use techscape::graphembed::{
    batch_loss_and_grad, forward, run_plan, unsupervised_loss, ComputationPlan, Example, SageConfig, SageModel,
    SamplingMode,
};
use techscape::io::{read_model, LabelledTable};
use techscape::landscape::PeakInfo;
use techscape::pipeline::files;
use techscape::project::{joint_probabilities, kl_divergence, kl_gradient, trustworthiness, tsne, TsneConfig};
use techscape::textembed::{tokenize, train_doc_vectors, SemanticFeatures, TextConfig};
use techscape::{seeded_rng, synth};

use common::*;

fn report(criterion: &str, ok: bool, detail: impl AsRef<str>) {
    let line = format!(
        "{} {criterion}: {}\n",
        if ok { "PASS" } else { "FAIL" },
        detail.as_ref()
    );
    let _ = std::io::stdout().lock().write_all(line.as_bytes());
    assert!(ok, "{criterion}: {}", detail.as_ref());
}

fn small_fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/small")
}

fn sage_config(depth: usize, hidden: usize, output: usize) -> SageConfig {
    SageConfig {
        depth,
        sample_sizes: vec![3; depth],
        hidden_dim: hidden,
        output_dim: output,
        ..SageConfig::default()
    }
}

// ---------------------------------------------------------------- end to end

struct EndToEnd {
    _root: tempfile::TempDir,
    data: PathBuf,
    outs: [PathBuf; 2],
    elapsed: [Duration; 2],
}

fn techscape(args: &[&str]) {
    let status = Command::new(env!("CARGO_BIN_EXE_techscape"))
        .args(args)
        .env("RUST_LOG", "warn")
        .status()
        .expect("spawn techscape");
    assert!(status.success(), "techscape {args:?} exited with {status}");
}

/// Synthesizes the 2,000-patent / 50-domain corpus once and runs the full
/// pipeline on it twice, into separate directories.
fn end_to_end() -> &'static EndToEnd {
    static RUN: OnceLock<EndToEnd> = OnceLock::new();
    RUN.get_or_init(|| {
        let root = tempfile::tempdir().unwrap();
        let data = root.path().join("data");
        let s = |p: &Path| p.to_str().unwrap().to_string();
        techscape(&["synth", &s(&data), "--n-patents", "2000", "--n-domains", "50"]);
        let mut elapsed = [Duration::ZERO; 2];
        let outs = [root.path().join("run-a"), root.path().join("run-b")];
        for (out, t) in outs.iter().zip(&mut elapsed) {
            let start = Instant::now();
            techscape(&[
                "--deterministic",
                "--patents",
                &s(&data.join("patents.jsonl")),
                "--citations",
                &s(&data.join("citations.csv")),
                "--domains",
                &s(&data.join("domains.csv")),
                "--out-dir",
                &s(out),
                "run",
                "all",
            ]);
            *t = start.elapsed();
        }
        EndToEnd {
            _root: root,
            data,
            outs,
            elapsed,
        }
    })
}

#[test]
fn end_to_end_determinism_and_scale() {
    let e2e = end_to_end();
    let mut names: Vec<String> = std::fs::read_dir(&e2e.outs[0])
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    let differing: Vec<&String> = names
        .iter()
        .filter(|n| std::fs::read(e2e.outs[0].join(n)).ok() != std::fs::read(e2e.outs[1].join(n)).ok())
        .collect();
    let bundle = std::fs::read(e2e.outs[0].join(files::BUNDLE)).unwrap();
    let slowest = e2e.elapsed[0].max(e2e.elapsed[1]);
    let ok = differing.is_empty() && !bundle.is_empty() && slowest < Duration::from_secs(300);
    report(
        "end-to-end determinism",
        ok,
        format!(
            "{} artifacts, {} differ, bundle {} bytes, runs {:.1?} / {:.1?} (limit 5 min)",
            names.len(),
            differing.len(),
            bundle.len(),
            e2e.elapsed[0],
            e2e.elapsed[1]
        ),
    );
}

// ---------------------------------------------------------------- weights

#[test]
fn weight_matrix_rows_are_stochastic() {
    let mut rng = seeded_rng(2024);
    let mut worst = 0.0f64;
    let mut flagged_ok = true;
    for _ in 0..100 {
        let n = rng.random_range(1..25);
        let rows: Vec<Vec<(usize, u64)>> = (0..n)
            .map(|_| {
                if rng.random_bool(0.2) {
                    return Vec::new();
                }
                (0..n)
                    .filter_map(|j| rng.random_bool(0.4).then(|| (j, rng.random_range(0..1000u64))))
                    .collect()
            })
            .collect();
        let counts = SparseRows::new(rows, n);
        let (w, empty) = normalize_weights(&counts);
        for i in 0..n {
            let total: u64 = counts.row(i).iter().map(|e| e.1).sum();
            let sum: f64 = w.row(i).iter().map(|e| e.1).sum();
            if total > 0 {
                worst = worst.max((sum - 1.0).abs());
            }
            flagged_ok &= empty[i] == (total == 0) && (total > 0 || w.row(i).is_empty());
        }
    }

    let ing = ingest(
        &small_fixture().join("patents.jsonl"),
        &small_fixture().join("citations.csv"),
        &small_fixture().join("domains.csv"),
    )
    .unwrap();
    let g = DomainGraph::build(&ing.corpus, &ing.catalog, &ing.citations, Default::default()).unwrap();
    let counts = g.counts.to_dense();
    let weights = g.weights.to_dense();
    let hand_counts = vec![vec![2u64, 3, 1], vec![2, 1, 1], vec![0, 0, 1]];
    let hand_weights = vec![
        vec![2.0 / 6.0, 3.0 / 6.0, 1.0 / 6.0],
        vec![2.0 / 4.0, 1.0 / 4.0, 1.0 / 4.0],
        vec![0.0, 0.0, 1.0],
    ];
    let hand_ok = counts == hand_counts && weights == hand_weights && ing.dangling == 1;
    report(
        "weight-matrix correctness",
        worst <= 1e-9 && flagged_ok && hand_ok,
        format!("100 trials, max |row sum - 1| = {worst:.1e}, zero rows flagged: {flagged_ok}, hand fixture exact: {hand_ok}"),
    );
}

// ---------------------------------------------------------------- forward pass

#[test]
fn forward_pass_matches_oracle() {
    let mut worst = 0.0f64;
    let mut cases = 0;
    for (i, fx) in small_graphs().iter().enumerate() {
        let nb = fx.neighborhoods();
        let feats = random_features(&fx.graph.nodes, 3, 40 + i as u64);
        for cfg in [sage_config(1, 4, 4), sage_config(2, 5, 4)] {
            let model = SageModel::init(3, &cfg, &mut seeded_rng(70 + i as u64));
            let lib = forward(&nb, &feats, &model, &cfg, SamplingMode::Full, 0).unwrap();
            let want = oracle_forward(&rows(&feats), &nb, &model.layers);
            for (v, w) in want.iter().enumerate() {
                for (a, b) in lib.row(v).iter().zip(w) {
                    worst = worst.max((a - b).abs());
                }
            }
            cases += 1;
        }
    }

    let g = DomainGraph::from_edges(1, &[(0, 0)]);
    let nb = neighborhoods(&g, DirectionPolicy::Undirected);
    let feats = SemanticFeatures {
        codes: g.nodes.clone(),
        vectors: array![[1.0, 0.0]],
    };
    let model = SageModel {
        layers: vec![array![[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]]],
    };
    let cfg = sage_config(1, 2, 2);
    let z = forward(&nb, &feats, &model, &cfg, SamplingMode::Full, 0).unwrap();
    let hand = [0.825411, 0.564531];
    let hand_err = z
        .row(0)
        .iter()
        .zip(hand)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    report(
        "forward pass vs oracle",
        worst <= 1e-6 && hand_err <= 1e-5,
        format!(
            "{cases} graph/depth cases, max |diff| = {worst:.1e}; single node = [{:.6}, {:.6}] (err {hand_err:.1e})",
            z.row(0)[0],
            z.row(0)[1]
        ),
    );
}

fn layer_norm_error(
    nb: &techscape::corpus::Neighborhoods,
    feats: &SemanticFeatures,
    model: &SageModel,
    cfg: &SageConfig,
    mode: SamplingMode,
) -> (f64, usize) {
    let all: Vec<usize> = (0..nb.len()).collect();
    let plan = ComputationPlan::build(&all, nb, cfg, mode, &mut seeded_rng(cfg.seed));
    let trace = run_plan(&plan, feats, model).unwrap();
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (k, layer) in trace.h.iter().enumerate().skip(1) {
        for (h, &pre) in layer.iter().zip(&trace.norms()[k - 1]) {
            if pre > 0.0 {
                let n = h.iter().map(|x| x * x).sum::<f64>().sqrt();
                worst = worst.max((n - 1.0).abs());
                checked += 1;
            }
        }
    }
    (worst, checked)
}

#[test]
fn every_layer_is_unit_norm() {
    let mut worst = 0.0f64;
    let mut checked = 0;
    for (i, fx) in small_graphs().iter().enumerate() {
        let nb = fx.neighborhoods();
        let feats = random_features(&fx.graph.nodes, 3, i as u64);
        for cfg in [sage_config(1, 4, 4), sage_config(2, 5, 4)] {
            let model = SageModel::init(3, &cfg, &mut seeded_rng(i as u64));
            for mode in [SamplingMode::Full, SamplingMode::Resample, SamplingMode::Frozen] {
                let (w, c) = layer_norm_error(&nb, &feats, &model, &cfg, mode);
                worst = worst.max(w);
                checked += c;
            }
        }
    }

    let e2e = end_to_end();
    let out = &e2e.outs[0];
    let ing = ingest(
        &e2e.data.join("patents.jsonl"),
        &e2e.data.join("citations.csv"),
        &e2e.data.join("domains.csv"),
    )
    .unwrap();
    let g = DomainGraph::build(&ing.corpus, &ing.catalog, &ing.citations, Default::default()).unwrap();
    let nb = neighborhoods(&g, DirectionPolicy::Undirected);
    let table = LabelledTable::read(&out.join(files::DOMAIN_FEATURES)).unwrap();
    let feats = SemanticFeatures {
        codes: table.labels,
        vectors: table.values,
    };
    let model = read_model(&out.join(files::MODEL)).unwrap();
    let (w, c) = layer_norm_error(
        &nb,
        &feats,
        &model,
        &SageConfig::default(),
        SageConfig::default().sampling,
    );
    worst = worst.max(w);
    checked += c;
    let emb = LabelledTable::read(&out.join(files::EMBEDDINGS)).unwrap();
    for row in emb.values.rows() {
        let n = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        worst = worst.max((n - 1.0).abs());
        checked += 1;
    }
    report(
        "per-layer normalization",
        worst <= 1e-6,
        format!("{checked} layer outputs on fixtures and the synthetic run, max |norm - 1| = {worst:.1e}"),
    );
}

// ---------------------------------------------------------------- gradients

fn sage_fd_error() -> f64 {
    let fx = DomainGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)]);
    let nb = neighborhoods(&fx, DirectionPolicy::Undirected);
    let feats = random_features(&fx.nodes, 3, 11);
    let cfg = sage_config(2, 4, 3);
    let model = SageModel::init(3, &cfg, &mut seeded_rng(12));
    let all = [0, 1, 2, 3];
    let plan = ComputationPlan::build(&all, &nb, &cfg, SamplingMode::Full, &mut seeded_rng(0));
    let batch = [
        Example {
            u: 0,
            v: 1,
            negatives: vec![2, 3],
        },
        Example {
            u: 2,
            v: 3,
            negatives: vec![0],
        },
        Example {
            u: 1,
            v: 2,
            negatives: vec![3, 3],
        },
    ];
    let (_, grads) = batch_loss_and_grad(&plan, &feats, &model, &batch).unwrap();
    let h = 1e-5;
    let mut worst = 0.0f64;
    for k in 0..model.layers.len() {
        let mut numeric = Array2::zeros(model.layers[k].raw_dim());
        for idx in ndarray::indices_of(&model.layers[k]) {
            let mut plus = model.clone();
            plus.layers[k][idx] += h;
            let mut minus = model.clone();
            minus.layers[k][idx] -= h;
            let lp = batch_loss_and_grad(&plan, &feats, &plus, &batch).unwrap().0;
            let lm = batch_loss_and_grad(&plan, &feats, &minus, &batch).unwrap().0;
            numeric[idx] = (lp - lm) / (2.0 * h);
        }
        let a: Vec<f64> = grads[k].iter().copied().collect();
        let b: Vec<f64> = numeric.iter().copied().collect();
        worst = worst.max(rel_err(&a, &b));
    }
    worst
}

fn tsne_fd_error() -> f64 {
    let mut rng = seeded_rng(3);
    let points: Vec<Vec<f64>> = (0..10)
        .map(|_| (0..5).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let p = joint_probabilities(&points, 3.0);
    let y: Vec<[f64; 2]> = (0..10)
        .map(|_| [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)])
        .collect();
    let analytic: Vec<f64> = kl_gradient(&p, &y).into_iter().flatten().collect();
    let h = 1e-6;
    let mut numeric = Vec::with_capacity(20);
    for i in 0..10 {
        for d in 0..2 {
            let mut plus = y.clone();
            plus[i][d] += h;
            let mut minus = y.clone();
            minus[i][d] -= h;
            numeric.push((kl_divergence(&p, &plus) - kl_divergence(&p, &minus)) / (2.0 * h));
        }
    }
    rel_err(&analytic, &numeric)
}

#[test]
fn loss_and_gradient_checks() {
    let e1 = [1.0, 0.0];
    let e2 = [0.0, 1.0];
    let aligned = unsupervised_loss(&e1, &e1, &[]);
    let orthogonal = unsupervised_loss(&e1, &e2, &[]);
    let with_negative = unsupervised_loss(&e1, &e2, &[&e2]);
    let closed = (1.0 + (-1.0f64).exp()).ln();
    let ln2 = 2.0f64.ln();
    let closed_ok = (aligned - closed).abs() <= 1e-9
        && (aligned - 0.313262).abs() <= 1e-6
        && (orthogonal - ln2).abs() <= 1e-9
        && (with_negative - 2.0 * ln2).abs() <= 1e-9;
    let sage = sage_fd_error();
    let kl = tsne_fd_error();
    report(
        "loss and gradient checks",
        closed_ok && sage <= 1e-4 && kl <= 1e-4,
        format!(
            "-log sigma(1) = {aligned:.9}, orthogonal = {orthogonal:.9}; finite-difference rel. error W^k {sage:.1e}, t-SNE {kl:.1e}"
        ),
    );
}

// ---------------------------------------------------------------- efficacy

#[test]
fn two_block_link_prediction_efficacy() {
    let start = Instant::now();
    let lp = two_block_link_prediction(60, 0.3, 0.02, 0, &SageConfig::default());
    let elapsed = start.elapsed();
    let ok = lp.auc >= 0.85 && lp.intra_cosine > lp.inter_cosine && elapsed < Duration::from_secs(60);
    report(
        "two-block link prediction",
        ok,
        format!(
            "AUC {:.3} (need 0.85; block-membership scorer reaches {:.3}), cosine intra {:.3} > inter {:.3}, {elapsed:.1?}",
            lp.auc, lp.block_bound, lp.intra_cosine, lp.inter_cosine
        ),
    );
}

#[test]
fn two_vocabulary_text_purity() {
    let start = Instant::now();
    let (texts, labels) = synth::two_vocab_corpus(200, 50, 50, 0);
    let docs: Vec<Vec<String>> = texts.iter().map(|t| tokenize(t)).collect();
    // 100 word types at 1% frequency each: the default 1e-4 subsampling
    // threshold would drop nine tokens in ten.
    let cfg = TextConfig {
        sample: 0.0,
        ..TextConfig::default()
    };
    let model = train_doc_vectors(&docs, &cfg).unwrap();
    let vectors: Vec<Vec<f64>> = model.doc_vectors.rows().into_iter().map(|r| r.to_vec()).collect();
    let purity = nn_purity(&vectors, &labels);
    let elapsed = start.elapsed();
    report(
        "text feature purity",
        purity >= 0.9 && elapsed < Duration::from_secs(60),
        format!("nearest-neighbor purity {purity:.3} on 200 documents, {elapsed:.1?}"),
    );
}

#[test]
fn tsne_quality() {
    let (points, _) = synth::gaussian_clusters(3, 50, 32, 10.0, 0);
    let codes: Vec<String> = (0..points.len()).map(|i| format!("P{i:03}")).collect();
    let cfg = TsneConfig {
        seed: 0,
        ..TsneConfig::default()
    };
    let out = tsne(&codes, &points, &cfg).unwrap();
    let low: Vec<Vec<f64>> = out.coords.iter().map(|c| c.to_vec()).collect();
    let trust = trustworthiness(&points, &low, 10);
    let worst_rise = (cfg.exaggeration_iters.max(1)..out.kl_trace.len())
        .map(|i| out.kl_trace[i] - out.kl_trace[i - 1])
        .fold(f64::NEG_INFINITY, f64::max);
    report(
        "t-SNE quality",
        trust >= 0.95 && worst_rise <= 1e-6,
        format!(
            "trustworthiness(10) {trust:.4}, largest KL step after exaggeration {worst_rise:+.1e}, final KL {:.4}",
            out.kl
        ),
    );
}

// ---------------------------------------------------------------- analyses

#[test]
fn decile_shape() {
    let e2e = end_to_end();
    let out = &e2e.outs[0];
    let emb = LabelledTable::read(&out.join(files::EMBEDDINGS)).unwrap();
    let peak: PeakInfo = techscape::io::read_json(&out.join(files::PEAK)).unwrap();
    let d: Vec<f64> = emb
        .values
        .rows()
        .into_iter()
        .map(|r| {
            r.iter()
                .zip(&peak.centroid)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt()
        })
        .collect();
    let falling: Vec<f64> = d.iter().map(|x| 40.0 - x).collect();
    let means = distance_deciles(&emb.labels, &d, &falling, peak.m).unwrap().means();
    let strictly_decreasing = means.windows(2).all(|w| w[0] > w[1]);
    let flat = distance_deciles(&emb.labels, &d, &vec![7.25; d.len()], peak.m)
        .unwrap()
        .means();
    let all_equal = flat.iter().all(|&m| m == flat[0]);
    report(
        "decile shape",
        strictly_decreasing && all_equal,
        format!(
            "r = 40 - d over {} domains: means {:.3} .. {:.3}, strictly decreasing {strictly_decreasing}; constant rates equal {all_equal}",
            d.len(),
            means[0],
            means[means.len() - 1]
        ),
    );
}

#[test]
fn nber_shift_structure() {
    let e2e = end_to_end();
    let text = std::fs::read_to_string(e2e.outs[0].join(files::BUNDLE)).unwrap();
    let bundle: Bundle = serde_json::from_str(&text).unwrap();
    let mut worst = 0.0f64;
    for (b, bin) in bundle.nber_bins.iter().enumerate() {
        if !bin.empty {
            let sum: f64 = bundle.nber_shift.iter().map(|r| r.values[b]).sum();
            worst = worst.max((sum - 1.0).abs());
        }
    }

    // near: 11, 11, 22; far: 11, 22, 22, 22
    let subs = [11, 11, 22, 11, 22, 22, 22];
    let codes: Vec<String> = (0..subs.len()).map(|i| format!("D{i}")).collect();
    let catalog = DomainCatalog::from_entries(codes.iter().zip(subs).map(|(c, s)| DomainEntry {
        code: c.clone(),
        improvement_rate: 1.0,
        subcategory: NberSubcategory::parse(&s.to_string()).unwrap(),
    }))
    .unwrap();
    let d = [0.1, 0.2, 0.3, 0.7, 0.8, 0.9, 1.0];
    let m = nber_shift(&catalog, &codes, &d, 2, Binning::EqualWidth).unwrap();
    let row = |code: u8| m.subcategories.iter().position(|s| s.code() == code).unwrap();
    let mut hand_ok = m.counts[row(11)] == [2, 1] && m.counts[row(22)] == [1, 3];
    hand_ok &= m.values[row(11)] == [2.0 / 3.0, 1.0 / 4.0] && m.values[row(22)] == [1.0 / 3.0, 3.0 / 4.0];
    hand_ok &= m.counts.iter().map(|r| r[0] + r[1]).sum::<u64>() == 7;
    let eq = nber_shift(&catalog, &codes, &d, 2, Binning::EqualCount).unwrap();
    hand_ok &= eq.counts[row(11)] == [3, 0] && eq.counts[row(22)] == [1, 3];
    report(
        "NBER shift structure",
        worst <= 1e-9 && hand_ok,
        format!(
            "{} bins on the synthetic run, max |column sum - 1| = {worst:.1e}; 2-bin hand tally exact: {hand_ok}",
            bundle.nber_bins.len()
        ),
    );
}

#[test]
fn nmf_recovery_and_monotone_trace() {
    let u = [1.0, 2.0, 0.5, 3.0, 1.5, 0.25];
    let v = [0.4, 1.0, 2.0, 0.1, 3.0];
    let rank1 = Array2::from_shape_fn((6, 5), |(i, j)| u[i] * v[j]);
    let fit = nmf(&rank1, 1, 500, 0).unwrap();
    let recon = fit.w.dot(&fit.h);
    let rank1_err = (&rank1 - &recon).iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut worst_rise = f64::NEG_INFINITY;
    for seed in 0..5u64 {
        let mut rng = seeded_rng(seed);
        let m = Array2::from_shape_fn((20, 50), |_| rng.random_range(0.0..1.0));
        let fit = nmf(&m, 5, 500, seed).unwrap();
        for w in fit.errors.windows(2) {
            worst_rise = worst_rise.max(w[1] - w[0]);
        }
    }
    report(
        "NMF",
        rank1_err < 1e-6 && worst_rise <= 1e-10,
        format!(
            "rank-1 reconstruction error {rank1_err:.1e}; largest error rise over 500 iterations {worst_rise:+.1e}"
        ),
    );
}
