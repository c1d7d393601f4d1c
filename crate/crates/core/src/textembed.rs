//! Document vectors (distributed bag of words with negative sampling) and
//! per-domain semantic features.

use std::collections::{BTreeMap, HashMap};

use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::math::{axpy, dot, sigmoid};
use crate::{par, seeded_rng, Error, Result, Rng};

/// Lowercases, splits on non-alphanumeric characters, and drops pure numbers
/// and tokens shorter than two characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| t.chars().count() >= 2 && !t.chars().all(|c| c.is_numeric()))
        .map(str::to_lowercase)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TextConfig {
    pub dim: usize,
    pub epochs: usize,
    pub negatives: usize,
    pub lr: f64,
    /// Floor for the linearly decayed learning rate, as a fraction of `lr`.
    pub min_lr_fraction: f64,
    pub min_count: u64,
    /// Frequent-word subsampling threshold; 0 disables.
    pub sample: f64,
    pub seed: u64,
    /// Single-worker SGD in a fixed order. When false, documents are processed
    /// in parallel batches against a word-vector snapshot.
    pub deterministic: bool,
    pub batch_docs: usize,
}

impl Default for TextConfig {
    fn default() -> Self {
        TextConfig {
            dim: 64,
            epochs: 10,
            negatives: 5,
            lr: 0.025,
            min_lr_fraction: 1e-4,
            min_count: 5,
            sample: 1e-4,
            seed: 1,
            deterministic: true,
            batch_docs: 256,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    index: HashMap<String, usize>,
    words: Vec<String>,
    counts: Vec<u64>,
    pub min_count: u64,
    pub sample: f64,
}

impl Vocabulary {
    /// Words ordered by descending frequency, then alphabetically.
    pub fn build<'a, I>(docs: I, min_count: u64, sample: f64) -> Self
    where
        I: IntoIterator<Item = &'a [String]>,
    {
        let mut freq: HashMap<&str, u64> = HashMap::new();
        for doc in docs {
            for t in doc {
                *freq.entry(t.as_str()).or_insert(0) += 1;
            }
        }
        let mut kept: Vec<(&str, u64)> = freq.into_iter().filter(|e| e.1 >= min_count).collect();
        kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
        let words: Vec<String> = kept.iter().map(|e| e.0.to_string()).collect();
        let counts = kept.iter().map(|e| e.1).collect();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocabulary {
            index,
            words,
            counts,
            min_count,
            sample,
        }
    }

    /// Rebuilds a vocabulary from stored `(word, count)` entries, keeping their order.
    pub fn from_entries(entries: Vec<(String, u64)>, min_count: u64, sample: f64) -> Self {
        let (words, counts): (Vec<String>, Vec<u64>) = entries.into_iter().unzip();
        let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
        Vocabulary {
            index,
            words,
            counts,
            min_count,
            sample,
        }
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn count(&self, i: usize) -> u64 {
        self.counts[i]
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<usize> {
        tokens.iter().filter_map(|t| self.get(t)).collect()
    }

    /// Probability of keeping one occurrence of word `i` under subsampling.
    pub fn keep_probability(&self, i: usize) -> f64 {
        if self.sample <= 0.0 {
            return 1.0;
        }
        let f = self.counts[i] as f64;
        let threshold = self.sample * self.total() as f64;
        (((f / threshold).sqrt() + 1.0) * threshold / f).min(1.0)
    }

    fn negative_table(&self) -> WeightedIndex<f64> {
        WeightedIndex::new(self.counts.iter().map(|&c| (c as f64).powf(0.75)))
            .expect("non-empty vocabulary with positive counts")
    }
}

/// Negative-sampling loss for one (doc, word) pair:
/// `-log σ(d·u_pos) - Σ log σ(-d·u_neg)`.
pub fn pair_loss(doc: &[f64], pos: &[f64], negs: &[&[f64]]) -> f64 {
    let clamp = |p: f64| p.max(1e-12).ln();
    -clamp(sigmoid(dot(doc, pos))) - negs.iter().map(|n| clamp(sigmoid(-dot(doc, n)))).sum::<f64>()
}

/// Gradient of [`pair_loss`] with respect to the doc vector, the positive
/// output vector and each negative output vector.
pub fn pair_loss_grad(doc: &[f64], pos: &[f64], negs: &[&[f64]]) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let gp = sigmoid(dot(doc, pos)) - 1.0;
    let mut g_doc: Vec<f64> = pos.iter().map(|x| gp * x).collect();
    let g_pos = doc.iter().map(|x| gp * x).collect();
    let g_negs = negs
        .iter()
        .map(|n| {
            let gn = sigmoid(dot(doc, n));
            axpy(gn, n, &mut g_doc);
            doc.iter().map(|x| gn * x).collect()
        })
        .collect();
    (g_doc, g_pos, g_negs)
}

/// Trained document model.
#[derive(Clone, Debug)]
pub struct DocModel {
    pub vocab: Vocabulary,
    /// One row per input document.
    pub doc_vectors: Array2<f64>,
    /// Output (context) word vectors, one row per vocabulary entry.
    pub word_vectors: Array2<f64>,
    /// Mean per-pair loss for each epoch.
    pub epoch_losses: Vec<f64>,
    config: TextConfig,
}

/// Output-vector storage seen by one SGD worker.
trait OutputRows {
    fn read(&self, i: usize, buf: &mut [f64]);
    fn add(&mut self, i: usize, alpha: f64, x: &[f64]);
}

struct Shared<'a> {
    data: &'a mut [f64],
    dim: usize,
}

impl OutputRows for Shared<'_> {
    fn read(&self, i: usize, buf: &mut [f64]) {
        buf.copy_from_slice(&self.data[i * self.dim..(i + 1) * self.dim]);
    }
    fn add(&mut self, i: usize, alpha: f64, x: &[f64]) {
        axpy(alpha, x, &mut self.data[i * self.dim..(i + 1) * self.dim]);
    }
}

/// Snapshot plus worker-local deltas, merged after the batch.
struct Local<'a> {
    base: &'a [f64],
    dim: usize,
    delta: BTreeMap<usize, Vec<f64>>,
}

impl OutputRows for Local<'_> {
    fn read(&self, i: usize, buf: &mut [f64]) {
        buf.copy_from_slice(&self.base[i * self.dim..(i + 1) * self.dim]);
        if let Some(d) = self.delta.get(&i) {
            axpy(1.0, d, buf);
        }
    }
    fn add(&mut self, i: usize, alpha: f64, x: &[f64]) {
        let d = self.delta.entry(i).or_insert_with(|| vec![0.0; self.dim]);
        axpy(alpha, x, d);
    }
}

struct Sgd<'a> {
    negatives: usize,
    table: &'a WeightedIndex<f64>,
}

impl Sgd<'_> {
    /// One positive word plus sampled negatives; updates `doc` and the touched
    /// output rows. Returns the pair loss before the update.
    fn step<O: OutputRows>(&self, rng: &mut Rng, lr: f64, doc: &mut [f64], word: usize, out: &mut O) -> f64 {
        let dim = doc.len();
        let mut neu1e = vec![0.0; dim];
        let mut u = vec![0.0; dim];
        let mut loss = 0.0;
        for k in 0..=self.negatives {
            let (target, label) = if k == 0 {
                (word, 1.0)
            } else {
                let t = self.table.sample(rng);
                if t == word {
                    continue;
                }
                (t, 0.0)
            };
            out.read(target, &mut u);
            let s = sigmoid(dot(doc, &u));
            loss -= if label > 0.0 { s } else { 1.0 - s }.max(1e-12).ln();
            let g = (label - s) * lr;
            axpy(g, &u, &mut neu1e);
            out.add(target, g, doc);
        }
        axpy(1.0, &neu1e, doc);
        loss
    }

    /// Runs every (subsampled) token of one document.
    fn document<O: OutputRows>(
        &self,
        rng: &mut Rng,
        lr: f64,
        doc: &mut [f64],
        words: &[usize],
        keep: &[f64],
        out: &mut O,
    ) -> (f64, usize) {
        let mut loss = 0.0;
        let mut pairs = 0;
        for &w in words {
            if keep[w] < 1.0 && rng.random::<f64>() >= keep[w] {
                continue;
            }
            loss += self.step(rng, lr, doc, w, out);
            pairs += 1;
        }
        (loss, pairs)
    }
}

fn init_rows(rng: &mut Rng, rows: usize, dim: usize) -> Vec<f64> {
    let half = 0.5 / dim as f64;
    (0..rows * dim).map(|_| rng.random_range(-half..half)).collect()
}

/// Trains document and output word vectors on tokenized documents.
pub fn train_doc_vectors(docs: &[Vec<String>], config: &TextConfig) -> Result<DocModel> {
    if config.dim == 0 || config.epochs == 0 {
        return Err(Error::Config("textembed dim and epochs must be positive".into()));
    }
    let vocab = Vocabulary::build(docs.iter().map(Vec::as_slice), config.min_count, config.sample);
    if vocab.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let encoded: Vec<Vec<usize>> = docs.iter().map(|d| vocab.encode(d)).collect();
    if encoded.iter().all(Vec::is_empty) {
        return Err(Error::EmptyDocuments);
    }
    let keep: Vec<f64> = (0..vocab.len()).map(|i| vocab.keep_probability(i)).collect();
    let table = vocab.negative_table();
    let sgd = Sgd {
        negatives: config.negatives,
        table: &table,
    };

    let dim = config.dim;
    let n = docs.len();
    let mut rng = seeded_rng(config.seed);
    let mut doc_vecs = init_rows(&mut rng, n, dim);
    // Output vectors start at zero, as in word2vec.
    let mut word_vecs = vec![0.0; vocab.len() * dim];

    let total_steps = (config.epochs * n) as f64;
    let lr_at = |done: usize| {
        let frac = 1.0 - done as f64 / total_steps;
        config.lr * frac.max(config.min_lr_fraction)
    };

    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut loss = 0.0;
        let mut pairs = 0usize;
        if config.deterministic {
            let mut out = Shared {
                data: &mut word_vecs,
                dim,
            };
            for (step, &d) in order.iter().enumerate() {
                let lr = lr_at(epoch * n + step);
                let doc = &mut doc_vecs[d * dim..(d + 1) * dim];
                let (l, p) = sgd.document(&mut rng, lr, doc, &encoded[d], &keep, &mut out);
                loss += l;
                pairs += p;
            }
        } else {
            let batch = config.batch_docs.max(1);
            for (b, chunk) in order.chunks(batch).enumerate() {
                let lr = lr_at(epoch * n + b * batch);
                let seeds: Vec<u64> = chunk.iter().map(|_| rng.random()).collect();
                let base = &word_vecs;
                let doc_ref = &doc_vecs;
                let results = par::map_range(chunk.len(), |k| {
                    let d = chunk[k];
                    let mut local_rng = seeded_rng(seeds[k]);
                    let mut doc = doc_ref[d * dim..(d + 1) * dim].to_vec();
                    let mut out = Local {
                        base,
                        dim,
                        delta: BTreeMap::new(),
                    };
                    let (l, p) = sgd.document(&mut local_rng, lr, &mut doc, &encoded[d], &keep, &mut out);
                    (doc, out.delta, l, p)
                });
                for (k, (doc, delta, l, p)) in results.into_iter().enumerate() {
                    let d = chunk[k];
                    doc_vecs[d * dim..(d + 1) * dim].copy_from_slice(&doc);
                    for (w, dv) in delta {
                        axpy(1.0, &dv, &mut word_vecs[w * dim..(w + 1) * dim]);
                    }
                    loss += l;
                    pairs += p;
                }
            }
        }
        let mean = if pairs == 0 { 0.0 } else { loss / pairs as f64 };
        if !mean.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch,
                batch: 0,
                lr: config.lr,
            });
        }
        log::debug!("textembed epoch {epoch}: loss {mean:.6}");
        epoch_losses.push(mean);
    }

    Ok(DocModel {
        doc_vectors: Array2::from_shape_vec((n, dim), doc_vecs).expect("shape"),
        word_vectors: Array2::from_shape_vec((vocab.len(), dim), word_vecs).expect("shape"),
        vocab,
        epoch_losses,
        config: config.clone(),
    })
}

impl DocModel {
    pub fn dim(&self) -> usize {
        self.doc_vectors.ncols()
    }

    pub fn config(&self) -> &TextConfig {
        &self.config
    }

    /// Vector for an unseen document: trains a fresh doc vector against the
    /// frozen output vectors.
    pub fn infer(&self, tokens: &[String], epochs: usize, seed: u64) -> Vec<f64> {
        let dim = self.dim();
        let words = self.vocab.encode(tokens);
        let keep: Vec<f64> = (0..self.vocab.len()).map(|i| self.vocab.keep_probability(i)).collect();
        let table = self.vocab.negative_table();
        let sgd = Sgd {
            negatives: self.config.negatives,
            table: &table,
        };
        let mut rng = seeded_rng(seed);
        let mut doc = init_rows(&mut rng, 1, dim);
        let base = self.word_vectors.as_slice().expect("standard layout");
        for e in 0..epochs {
            let lr = self.config.lr * (1.0 - e as f64 / epochs as f64).max(self.config.min_lr_fraction);
            // discard output updates: the model stays frozen
            let mut out = Local {
                base,
                dim,
                delta: BTreeMap::new(),
            };
            sgd.document(&mut rng, lr, &mut doc, &words, &keep, &mut out);
        }
        doc
    }
}

/// Per-domain input features `x_v`, aligned to `codes`.
#[derive(Clone, Debug, PartialEq)]
pub struct SemanticFeatures {
    pub codes: Vec<String>,
    pub vectors: Array2<f64>,
}

impl SemanticFeatures {
    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.vectors.row(i).to_slice().expect("standard layout")
    }
}

/// Averages member-patent vectors into one vector per domain.
/// `assignment[p]` is the index into `codes` of patent `p`'s domain.
pub fn domain_features(
    patent_vectors: &Array2<f64>,
    assignment: &[usize],
    codes: &[String],
) -> Result<SemanticFeatures> {
    if assignment.len() != patent_vectors.nrows() {
        return Err(Error::DimensionMismatch {
            expected: patent_vectors.nrows(),
            found: assignment.len(),
        });
    }
    let dim = patent_vectors.ncols();
    let mut sums = Array2::<f64>::zeros((codes.len(), dim));
    let mut counts = vec![0usize; codes.len()];
    for (p, &d) in assignment.iter().enumerate() {
        let mut row = sums.row_mut(d);
        row += &patent_vectors.row(p);
        counts[d] += 1;
    }
    for (d, &c) in counts.iter().enumerate() {
        if c == 0 {
            return Err(Error::EmptyDomain(codes[d].clone()));
        }
        sums.row_mut(d).mapv_inplace(|x| x / c as f64);
    }
    Ok(SemanticFeatures {
        codes: codes.to_vec(),
        vectors: sums,
    })
}
