//! Distance-decile rate profile, NBER subcategory shift matrix and NMF topics
//! of the peak domains.

use std::collections::BTreeMap;

use ndarray::Array2;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::{DomainCatalog, NberSubcategory};
use crate::graphembed::EmbeddingSpace;
use crate::landscape::PeakInfo;
use crate::math::dist;
use crate::project::Projection2D;
use crate::textembed::Vocabulary;
use crate::{seeded_rng, Error, Result};

/// Space in which distances to the peak centroid are measured.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum DistanceSpace {
    #[default]
    #[serde(rename = "32d")]
    Embedding,
    #[serde(rename = "2d")]
    Plane,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Binning {
    #[default]
    EqualCount,
    EqualWidth,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnalysisConfig {
    pub space: DistanceSpace,
    pub shift_bins: usize,
    pub binning: Binning,
    pub topics: usize,
    pub nmf_iterations: usize,
    pub top_terms: usize,
    pub seed: u64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        AnalysisConfig {
            space: DistanceSpace::Embedding,
            shift_bins: 10,
            binning: Binning::EqualCount,
            topics: 5,
            nmf_iterations: 500,
            top_terms: 10,
            seed: 1,
        }
    }
}

/// Euclidean distance from every domain to the peak centroid in `space`.
pub fn peak_distances(
    embeddings: &EmbeddingSpace,
    projection: &Projection2D,
    peak: &PeakInfo,
    space: DistanceSpace,
) -> Vec<f64> {
    match space {
        DistanceSpace::Embedding => (0..embeddings.len())
            .map(|i| dist(embeddings.row(i), &peak.centroid))
            .collect(),
        DistanceSpace::Plane => projection.coords.iter().map(|c| dist(c, &peak.centroid_2d)).collect(),
    }
}

/// Sizes of `groups` equal-count groups over `n` items, remainder first.
pub fn group_sizes(n: usize, groups: usize) -> Vec<usize> {
    let (base, rem) = (n / groups, n % groups);
    (0..groups).map(|g| base + usize::from(g < rem)).collect()
}

/// Indices ordered by (distance, code).
fn order_by_distance(codes: &[String], distances: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..codes.len()).collect();
    idx.sort_by(|&a, &b| {
        distances[a]
            .total_cmp(&distances[b])
            .then_with(|| codes[a].cmp(&codes[b]))
    });
    idx
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceGroup {
    pub decile: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub count: usize,
    pub mean_rate: f64,
    pub members: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileReport {
    pub m: usize,
    pub groups: Vec<DistanceGroup>,
}

impl QuantileReport {
    pub fn means(&self) -> Vec<f64> {
        self.groups.iter().map(|g| g.mean_rate).collect()
    }
}

/// Splits domains into ten equal-count groups by distance to the peak and
/// reports the mean rate of each.
pub fn distance_deciles(codes: &[String], distances: &[f64], rates: &[f64], m: usize) -> Result<QuantileReport> {
    let n = codes.len();
    if distances.len() != n || rates.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: distances.len().min(rates.len()),
        });
    }
    if n < 10 {
        return Err(Error::Invalid(format!("deciles need at least 10 domains, got {n}")));
    }
    let order = order_by_distance(codes, distances);
    let mut groups = Vec::with_capacity(10);
    let mut start = 0;
    for (g, size) in group_sizes(n, 10).into_iter().enumerate() {
        let members = &order[start..start + size];
        start += size;
        groups.push(DistanceGroup {
            decile: g + 1,
            d_min: distances[members[0]],
            d_max: distances[members[size - 1]],
            count: size,
            mean_rate: members.iter().map(|&i| rates[i]).sum::<f64>() / size as f64,
            members: members.iter().map(|&i| codes[i].clone()).collect(),
        });
    }
    Ok(QuantileReport { m, groups })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftBin {
    pub d_min: f64,
    pub d_max: f64,
    pub count: usize,
    pub empty: bool,
}

/// Subcategory × distance-bin composition, each column summing to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftMatrix {
    pub binning: Binning,
    pub subcategories: Vec<NberSubcategory>,
    pub bins: Vec<ShiftBin>,
    pub counts: Vec<Vec<u64>>,
    pub values: Vec<Vec<f64>>,
}

impl ShiftMatrix {
    pub fn column_sum(&self, b: usize) -> f64 {
        self.values.iter().map(|row| row[b]).sum()
    }
}

fn bin_assignment(codes: &[String], distances: &[f64], bins: usize, binning: Binning) -> Vec<usize> {
    let n = codes.len();
    let mut assign = vec![0; n];
    match binning {
        Binning::EqualCount => {
            let order = order_by_distance(codes, distances);
            let mut start = 0;
            for (b, size) in group_sizes(n, bins).into_iter().enumerate() {
                for &i in &order[start..start + size] {
                    assign[i] = b;
                }
                start += size;
            }
        }
        Binning::EqualWidth => {
            let lo = distances.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let width = (hi - lo) / bins as f64;
            for (a, &d) in assign.iter_mut().zip(distances) {
                *a = if width > 0.0 {
                    (((d - lo) / width) as usize).min(bins - 1)
                } else {
                    0
                };
            }
        }
    }
    assign
}

/// Counts domains per (subcategory, distance bin) and normalizes each column.
/// Empty columns stay zero and are flagged.
pub fn nber_shift(
    catalog: &DomainCatalog,
    codes: &[String],
    distances: &[f64],
    bins: usize,
    binning: Binning,
) -> Result<ShiftMatrix> {
    if distances.len() != codes.len() {
        return Err(Error::DimensionMismatch {
            expected: codes.len(),
            found: distances.len(),
        });
    }
    if bins < 2 {
        return Err(Error::Config(format!("shift matrix needs at least 2 bins, got {bins}")));
    }
    let missing: Vec<String> = codes.iter().filter(|c| !catalog.contains(c)).cloned().collect();
    if !missing.is_empty() {
        return Err(Error::UnknownDomains(missing));
    }
    let subcategories: Vec<NberSubcategory> = NberSubcategory::all().collect();
    let assign = bin_assignment(codes, distances, bins, binning);
    let mut counts = vec![vec![0u64; bins]; subcategories.len()];
    let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY, 0usize); bins];
    for (i, code) in codes.iter().enumerate() {
        let row = catalog.get(code).unwrap().subcategory.index();
        let b = assign[i];
        counts[row][b] += 1;
        let r = &mut ranges[b];
        r.0 = r.0.min(distances[i]);
        r.1 = r.1.max(distances[i]);
        r.2 += 1;
    }
    let mut values = vec![vec![0.0; bins]; subcategories.len()];
    for b in 0..bins {
        let total: u64 = counts.iter().map(|row| row[b]).sum();
        if total > 0 {
            for (vrow, crow) in values.iter_mut().zip(&counts) {
                vrow[b] = crow[b] as f64 / total as f64;
            }
        }
    }
    let bins = ranges
        .into_iter()
        .map(|(lo, hi, count)| ShiftBin {
            d_min: if count > 0 { lo } else { 0.0 },
            d_max: if count > 0 { hi } else { 0.0 },
            count,
            empty: count == 0,
        })
        .collect();
    Ok(ShiftMatrix {
        binning,
        subcategories,
        bins,
        counts,
        values,
    })
}

/// TF-IDF over the vocabulary terms present in `docs`. Returns the matrix
/// (documents × terms, rows L2-normalized) and the column terms.
pub fn tfidf(docs: &[Vec<String>], vocab: &Vocabulary) -> (Array2<f64>, Vec<String>) {
    let encoded: Vec<Vec<usize>> = docs.iter().map(|d| vocab.encode(d)).collect();
    let mut columns: BTreeMap<usize, usize> = BTreeMap::new();
    for doc in &encoded {
        for &w in doc {
            columns.insert(w, 0);
        }
    }
    for (c, slot) in columns.values_mut().enumerate() {
        *slot = c;
    }
    let terms: Vec<String> = columns.keys().map(|&w| vocab.word(w).to_string()).collect();
    let mut m = Array2::zeros((docs.len(), terms.len()));
    let mut df = vec![0usize; terms.len()];
    for (r, doc) in encoded.iter().enumerate() {
        for &w in doc {
            m[[r, columns[&w]]] += 1.0;
        }
        for (c, &v) in m.row(r).iter().enumerate() {
            if v > 0.0 {
                df[c] += 1;
            }
        }
    }
    let n = docs.len() as f64;
    let idf: Vec<f64> = df.iter().map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0).collect();
    for mut row in m.rows_mut() {
        for (v, w) in row.iter_mut().zip(&idf) {
            *v *= w;
        }
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm > 0.0 {
            row.mapv_inplace(|v| v / norm);
        }
    }
    (m, terms)
}

#[derive(Clone, Debug)]
pub struct Nmf {
    pub w: Array2<f64>,
    pub h: Array2<f64>,
    /// Frobenius error ‖V − WH‖ at initialization and after each iteration.
    pub errors: Vec<f64>,
}

fn frobenius(v: &Array2<f64>, w: &Array2<f64>, h: &Array2<f64>) -> f64 {
    let r = v - &w.dot(h);
    r.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Lee–Seung multiplicative updates for `V ≈ WH` under Frobenius loss.
pub fn nmf(v: &Array2<f64>, k: usize, iterations: usize, seed: u64) -> Result<Nmf> {
    let (rows, cols) = v.dim();
    if k == 0 || k > rows.min(cols) {
        return Err(Error::Invalid(format!(
            "rank {k} exceeds matrix dimensions {rows}×{cols}"
        )));
    }
    if v.iter().any(|&x| !(x >= 0.0) || !x.is_finite()) {
        return Err(Error::Invalid("NMF input must be finite and nonnegative".into()));
    }
    const EPS: f64 = 1e-300;
    let mut rng = seeded_rng(seed);
    let scale = (v.mean().unwrap_or(0.0) / k as f64).sqrt().max(1e-8);
    let mut w = Array2::from_shape_fn((rows, k), |_| rng.random::<f64>() * scale + 1e-3 * scale);
    let mut h = Array2::from_shape_fn((k, cols), |_| rng.random::<f64>() * scale + 1e-3 * scale);
    let mut errors = Vec::with_capacity(iterations + 1);
    errors.push(frobenius(v, &w, &h));
    for _ in 0..iterations {
        let num = w.t().dot(v);
        let den = w.t().dot(&w).dot(&h);
        h.zip_mut_with(&num, |x, &n| *x *= n);
        h.zip_mut_with(&den, |x, &d| *x /= d + EPS);
        let num = v.dot(&h.t());
        let den = w.dot(&h.dot(&h.t()));
        w.zip_mut_with(&num, |x, &n| *x *= n);
        w.zip_mut_with(&den, |x, &d| *x /= d + EPS);
        errors.push(frobenius(v, &w, &h));
    }
    Ok(Nmf { w, h, errors })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Topic {
    pub terms: Vec<(String, f64)>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicSet {
    pub k: usize,
    pub documents: Vec<String>,
    pub terms: Vec<String>,
    pub topics: Vec<Topic>,
    pub error_trace: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub h: Vec<Vec<f64>>,
}

/// NMF topics over the TF-IDF matrix of `docs`; `ids` label the rows.
pub fn nmf_topics(
    ids: &[String],
    docs: &[Vec<String>],
    vocab: &Vocabulary,
    k: usize,
    iterations: usize,
    top_terms: usize,
    seed: u64,
) -> Result<TopicSet> {
    if docs.len() < k {
        return Err(Error::Invalid(format!(
            "{} documents is fewer than {k} topics",
            docs.len()
        )));
    }
    let (v, terms) = tfidf(docs, vocab);
    let fit = nmf(&v, k, iterations, seed)?;
    let topics = fit
        .h
        .rows()
        .into_iter()
        .map(|row| {
            let mut idx: Vec<usize> = (0..terms.len()).collect();
            idx.sort_by(|&a, &b| row[b].total_cmp(&row[a]).then_with(|| terms[a].cmp(&terms[b])));
            Topic {
                terms: idx
                    .into_iter()
                    .take(top_terms)
                    .map(|c| (terms[c].clone(), row[c]))
                    .collect(),
            }
        })
        .collect();
    let to_rows = |m: &Array2<f64>| m.rows().into_iter().map(|r| r.to_vec()).collect();
    Ok(TopicSet {
        k,
        documents: ids.to_vec(),
        terms,
        topics,
        error_trace: fit.errors,
        w: to_rows(&fit.w),
        h: to_rows(&fit.h),
    })
}
