//! Synthetic inputs: planted-partition graphs, two-vocabulary corpora,
//! Gaussian clusters, and a complete patent/citation/domain fixture.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};

use crate::corpus::{NberSubcategory, PatentRecord};
use crate::{seeded_rng, Error, Result};

/// Undirected planted-partition graph with two equal blocks. Returns the edge
/// list (`a < b`) and each node's block label.
pub fn two_block_graph(n: usize, p_in: f64, p_out: f64, seed: u64) -> (Vec<(usize, usize)>, Vec<usize>) {
    let mut rng = seeded_rng(seed);
    let labels: Vec<usize> = (0..n).map(|i| usize::from(i >= n / 2)).collect();
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            let p = if labels[a] == labels[b] { p_in } else { p_out };
            if rng.random::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    (edges, labels)
}

/// Documents drawn from one of two disjoint vocabularies. Returns
/// `(documents, labels)`.
pub fn two_vocab_corpus(
    docs: usize,
    words_per_doc: usize,
    vocab_per_side: usize,
    seed: u64,
) -> (Vec<String>, Vec<usize>) {
    let mut rng = seeded_rng(seed);
    (0..docs)
        .map(|i| {
            let label = i % 2;
            let prefix = if label == 0 { "alpha" } else { "omega" };
            let text = (0..words_per_doc)
                .map(|_| format!("{prefix}{}", rng.random_range(0..vocab_per_side)))
                .collect::<Vec<_>>()
                .join(" ");
            (text, label)
        })
        .unzip()
}

/// `clusters × per_cluster` points in `dim` dimensions; cluster centers lie
/// `separation` apart along distinct axes, unit-variance noise.
pub fn gaussian_clusters(
    clusters: usize,
    per_cluster: usize,
    dim: usize,
    separation: f64,
    seed: u64,
) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = seeded_rng(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let mut points = Vec::with_capacity(clusters * per_cluster);
    let mut labels = Vec::with_capacity(clusters * per_cluster);
    for c in 0..clusters {
        for _ in 0..per_cluster {
            let mut p: Vec<f64> = (0..dim).map(|_| normal.sample(&mut rng)).collect();
            p[c % dim] += separation;
            points.push(p);
            labels.push(c);
        }
    }
    (points, labels)
}

#[derive(Clone, Debug)]
pub struct FixtureSpec {
    pub patents: usize,
    pub domains: usize,
    /// Citations per patent (mean).
    pub citations_per_patent: usize,
    pub seed: u64,
}

impl Default for FixtureSpec {
    fn default() -> Self {
        FixtureSpec {
            patents: 2000,
            domains: 50,
            citations_per_patent: 6,
            seed: 7,
        }
    }
}

const THEMES: [(&str, &[&str]); 5] = [
    (
        "22",
        &[
            "network", "packet", "server", "client", "protocol", "routing", "address", "message", "software", "data",
        ],
    ),
    (
        "46",
        &[
            "semiconductor",
            "transistor",
            "wafer",
            "gate",
            "voltage",
            "circuit",
            "layer",
            "substrate",
            "diode",
            "dopant",
        ],
    ),
    (
        "53",
        &[
            "engine",
            "piston",
            "cylinder",
            "crankshaft",
            "fuel",
            "valve",
            "combustion",
            "exhaust",
            "turbine",
            "gear",
        ],
    ),
    (
        "31",
        &[
            "compound",
            "drug",
            "receptor",
            "dose",
            "tablet",
            "inhibitor",
            "therapy",
            "patient",
            "protein",
            "formulation",
        ],
    ),
    (
        "65",
        &[
            "chair", "table", "drawer", "cabinet", "hinge", "shelf", "frame", "cushion", "panel", "bracket",
        ],
    ),
];

const FILLER: [&str; 12] = [
    "method",
    "system",
    "device",
    "apparatus",
    "first",
    "second",
    "unit",
    "means",
    "portion",
    "member",
    "provided",
    "configured",
];

/// Writes `patents.jsonl`, `citations.csv` and `domains.csv` into `dir`.
///
/// Domains are split across five themes; the first theme is the fast one, and
/// its domains cite each other densely so they form the landscape's peak.
pub fn write_fixture(dir: &Path, spec: &FixtureSpec) -> Result<()> {
    if spec.domains < THEMES.len() || spec.patents < spec.domains {
        return Err(Error::Invalid(
            "fixture needs at least 5 domains and one patent per domain".into(),
        ));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut rng = seeded_rng(spec.seed);
    let theme_of = |d: usize| d % THEMES.len();

    let mut domains = String::from("code,improvement_rate,nber_subcategory\n");
    let mut codes = Vec::with_capacity(spec.domains);
    for d in 0..spec.domains {
        let theme = theme_of(d);
        let code = format!("{:03}T{:02}", 700 + d, theme);
        let rate = if theme == 0 {
            20.0 + 15.0 * rng.random::<f64>()
        } else {
            2.0 + 8.0 * rng.random::<f64>()
        };
        let sub = NberSubcategory::parse(THEMES[theme].0)?;
        writeln!(domains, "{code},{rate:.4},{}", sub.code()).unwrap();
        codes.push(code);
    }

    let mut patents = Vec::with_capacity(spec.patents);
    let mut by_theme: Vec<Vec<usize>> = vec![Vec::new(); THEMES.len()];
    let mut by_domain: Vec<Vec<usize>> = vec![Vec::new(); spec.domains];
    for p in 0..spec.patents {
        // first pass guarantees every domain a patent
        let d = if p < spec.domains {
            p
        } else {
            rng.random_range(0..spec.domains)
        };
        let theme = theme_of(d);
        let words = THEMES[theme].1;
        let mut text = |len: usize| {
            (0..len)
                .map(|_| {
                    if rng.random::<f64>() < 0.7 {
                        words[rng.random_range(0..words.len())]
                    } else {
                        FILLER[rng.random_range(0..FILLER.len())]
                    }
                })
                .collect::<Vec<_>>()
                .join(" ")
        };
        let title = text(6);
        let abstract_text = text(40);
        by_theme[theme].push(p);
        by_domain[d].push(p);
        patents.push(PatentRecord {
            id: format!("P{p:06}"),
            title,
            abstract_text,
            year: 1976 + rng.random_range(0..40),
            domain: codes[d].clone(),
        });
    }

    let mut jsonl = String::new();
    for p in &patents {
        jsonl.push_str(&serde_json::to_string(p)?);
        jsonl.push('\n');
    }

    let mut citations = String::from("citing_id,cited_id\n");
    for (p, rec) in patents.iter().enumerate() {
        let d = codes.iter().position(|c| *c == rec.domain).unwrap();
        for _ in 0..spec.citations_per_patent {
            // mostly within the theme; otherwise to an adjacent domain, which
            // belongs to a neighboring theme
            let pool = if rng.random::<f64>() < 0.85 {
                &by_theme[theme_of(d)]
            } else {
                let step = if rng.random::<bool>() { 1 } else { spec.domains - 1 };
                &by_domain[(d + step) % spec.domains]
            };
            let q = pool[rng.random_range(0..pool.len())];
            if q != p {
                writeln!(citations, "{},{}", rec.id, patents[q].id).unwrap();
            }
        }
    }

    for (name, body) in [
        ("patents.jsonl", jsonl),
        ("citations.csv", citations),
        ("domains.csv", domains),
    ] {
        let path = dir.join(name);
        fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
