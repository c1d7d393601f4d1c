//! GraphSAGE domain embeddings: the mean-aggregator forward pass and
//! unsupervised training by link prediction over random-walk co-occurrences.
//!
//! For every layer `k = 1..K` and node `v`:
//!
//! ```text
//! h_N(v)^k = mean { h_u^{k-1} : u ∈ sample(N(v)) }
//! h_v^k    = σ(W^k · [h_v^{k-1} ; h_N(v)^k])
//! h_v^k    = h_v^k / ‖h_v^k‖₂
//! ```
//!
//! with `h^0 = x` (semantic features) and `z_v = h_v^K`.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array2;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::{index, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::corpus::{DomainGraph, Neighborhoods};
use crate::math::{dot, norm, sigmoid};
use crate::textembed::SemanticFeatures;
use crate::{par, seeded_rng, Error, Result, Rng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Sigmoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplingMode {
    /// Fresh neighbor samples on every forward pass.
    Resample,
    /// Each (node, layer) always gets the same sample for a given seed.
    Frozen,
    /// Every neighbor exactly once; no sampling.
    Full,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Optimizer {
    Sgd,
    Adam,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SageConfig {
    pub depth: usize,
    pub sample_sizes: Vec<usize>,
    pub hidden_dim: usize,
    pub output_dim: usize,
    pub activation: Activation,
    pub aggregator: Aggregator,
    /// Negatives per positive pair.
    pub negatives: usize,
    /// Nodes per walk, start included.
    pub walk_length: usize,
    pub walks_per_node: usize,
    pub window: usize,
    /// Draw neighbors proportionally to edge weight instead of uniformly.
    pub weighted_sampling: bool,
    pub weighted_walks: bool,
    pub sampling: SamplingMode,
    pub optimizer: Optimizer,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for SageConfig {
    fn default() -> Self {
        SageConfig {
            depth: 2,
            sample_sizes: vec![32, 32],
            hidden_dim: 32,
            output_dim: 32,
            activation: Activation::Sigmoid,
            aggregator: Aggregator::Mean,
            negatives: 5,
            walk_length: 5,
            walks_per_node: 10,
            window: 2,
            weighted_sampling: false,
            weighted_walks: false,
            sampling: SamplingMode::Resample,
            optimizer: Optimizer::Adam,
            lr: 0.01,
            epochs: 20,
            batch_size: 64,
            seed: 1,
        }
    }
}

impl SageConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::Config("depth K must be at least 1".into()));
        }
        if self.sample_sizes.len() != self.depth {
            return Err(Error::Config(format!(
                "{} sample sizes given for depth {}",
                self.sample_sizes.len(),
                self.depth
            )));
        }
        if self.hidden_dim == 0 || self.output_dim == 0 || self.sample_sizes.contains(&0) {
            return Err(Error::Config("dimensions and sample sizes must be positive".into()));
        }
        if self.batch_size == 0 || self.walk_length < 2 || self.window == 0 {
            return Err(Error::Config(
                "batch_size, walk_length ≥ 2 and window must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Output width of layer `k` (1-based).
    pub fn layer_dim(&self, k: usize) -> usize {
        if k == self.depth {
            self.output_dim
        } else {
            self.hidden_dim
        }
    }
}

/// Layer weights `W^k`, shape `(out_k, 2 · in_k)`: the left half multiplies the
/// node's own vector, the right half the aggregated neighbor vector.
#[derive(Clone, Debug, PartialEq)]
pub struct SageModel {
    pub layers: Vec<Array2<f64>>,
}

impl SageModel {
    /// Xavier-uniform initialization.
    pub fn init(input_dim: usize, config: &SageConfig, rng: &mut Rng) -> Self {
        let mut in_dim = input_dim;
        let layers = (1..=config.depth)
            .map(|k| {
                let out = config.layer_dim(k);
                let cols = 2 * in_dim;
                let limit = (6.0 / (out + cols) as f64).sqrt();
                let w = Array2::from_shape_fn((out, cols), |_| rng.random_range(-limit..limit));
                in_dim = out;
                w
            })
            .collect();
        SageModel { layers }
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].ncols() / 2
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |w| w.nrows())
    }

    fn check(&self, feature_dim: usize) -> Result<()> {
        let mut expected = feature_dim;
        for w in &self.layers {
            if w.ncols() != 2 * expected {
                return Err(Error::DimensionMismatch {
                    expected: 2 * expected,
                    found: w.ncols(),
                });
            }
            expected = w.nrows();
        }
        Ok(())
    }
}

/// Per-domain output vectors aligned to the graph's node order.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSpace {
    pub codes: Vec<String>,
    pub vectors: Array2<f64>,
    /// Nodes whose pre-normalization vector was zero (left unnormalized).
    pub degenerate: Vec<bool>,
}

impl EmbeddingSpace {
    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.vectors.row(i).to_slice().expect("standard layout")
    }
}

/// Draws `size` neighbors: with replacement when the neighborhood is smaller
/// than `size`, without replacement otherwise.
pub fn sample_neighbors(neighbors: &[(usize, f64)], size: usize, weighted: bool, rng: &mut Rng) -> Vec<usize> {
    let n = neighbors.len();
    assert!(n > 0, "neighborhood must be non-empty");
    if n < size {
        if weighted {
            let dist = WeightedIndex::new(neighbors.iter().map(|e| e.1)).expect("positive weights");
            (0..size).map(|_| neighbors[dist.sample(rng)].0).collect()
        } else {
            (0..size).map(|_| neighbors[rng.random_range(0..n)].0).collect()
        }
    } else if weighted {
        index::sample_weighted(rng, n, |i| neighbors[i].1, size)
            .expect("positive weights")
            .into_iter()
            .map(|i| neighbors[i].0)
            .collect()
    } else {
        index::sample(rng, n, size)
            .into_iter()
            .map(|i| neighbors[i].0)
            .collect()
    }
}

/// Elementwise mean of the neighbor vectors.
pub fn aggregate_mean(vectors: &[&[f64]]) -> Result<Vec<f64>> {
    let first = vectors
        .first()
        .ok_or_else(|| Error::Invalid("cannot aggregate an empty neighbor set".into()))?;
    let dim = first.len();
    let mut acc = vec![0.0; dim];
    for v in vectors {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: v.len(),
            });
        }
        for (a, x) in acc.iter_mut().zip(v.iter()) {
            *a += x;
        }
    }
    let inv = 1.0 / vectors.len() as f64;
    acc.iter_mut().for_each(|a| *a *= inv);
    Ok(acc)
}

fn frozen_rng(seed: u64, node: usize, layer: usize) -> Rng {
    // splitmix64 of the (seed, node, layer) triple
    let mut z = seed ^ ((node as u64) << 8 | layer as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    seeded_rng(z ^ (z >> 31))
}

/// One layer of a computation plan.
#[derive(Clone, Debug)]
struct LayerPlan {
    /// Node ids computed at this layer.
    nodes: Vec<usize>,
    /// Position of each node in the previous layer's node list.
    self_pos: Vec<usize>,
    /// Positions of each node's sampled neighbors in the previous layer.
    neigh_pos: Vec<Vec<usize>>,
}

/// The sampled K-hop computation graph for a set of target nodes.
#[derive(Clone, Debug)]
pub struct ComputationPlan {
    /// Node ids whose features feed layer 1.
    inputs: Vec<usize>,
    layers: Vec<LayerPlan>,
}

impl ComputationPlan {
    pub fn build(
        targets: &[usize],
        nb: &Neighborhoods,
        config: &SageConfig,
        mode: SamplingMode,
        rng: &mut Rng,
    ) -> Self {
        let k_max = config.sample_sizes.len();
        let mut current: Vec<usize> = targets.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let mut sampled_layers: Vec<(Vec<usize>, Vec<Vec<usize>>)> = Vec::with_capacity(k_max);
        for k in (1..=k_max).rev() {
            let size = config.sample_sizes[k - 1];
            let samples: Vec<Vec<usize>> = current
                .iter()
                .map(|&v| {
                    let list = nb.sampling_list(v);
                    match mode {
                        SamplingMode::Full => list.iter().map(|e| e.0).collect(),
                        SamplingMode::Frozen => {
                            sample_neighbors(list, size, config.weighted_sampling, &mut frozen_rng(config.seed, v, k))
                        }
                        SamplingMode::Resample => sample_neighbors(list, size, config.weighted_sampling, rng),
                    }
                })
                .collect();
            sampled_layers.push((current.clone(), samples));
            let mut prev: BTreeSet<usize> = current.iter().copied().collect();
            for s in &sampled_layers.last().unwrap().1 {
                prev.extend(s.iter().copied());
            }
            current = prev.into_iter().collect();
        }
        let inputs = current;
        // Resolve positions bottom-up.
        let mut prev_nodes = inputs.clone();
        let mut layers = Vec::with_capacity(k_max);
        for (nodes, samples) in sampled_layers.into_iter().rev() {
            let pos: BTreeMap<usize, usize> = prev_nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
            let self_pos = nodes.iter().map(|v| pos[v]).collect();
            let neigh_pos = samples.iter().map(|s| s.iter().map(|v| pos[v]).collect()).collect();
            prev_nodes = nodes.clone();
            layers.push(LayerPlan {
                nodes,
                self_pos,
                neigh_pos,
            });
        }
        ComputationPlan { inputs, layers }
    }

    /// Node ids of the final layer.
    pub fn targets(&self) -> &[usize] {
        &self.layers.last().expect("depth ≥ 1").nodes
    }
}

/// Cached per-layer activations from [`run_plan`].
#[derive(Clone, Debug)]
pub struct Trace {
    /// `h[k][i]` is the normalized output of node `plan.layers[k-1].nodes[i]`
    /// at layer `k`; `h[0]` holds the input features.
    pub h: Vec<Vec<Vec<f64>>>,
    concat: Vec<Vec<Vec<f64>>>,
    act: Vec<Vec<Vec<f64>>>,
    norms: Vec<Vec<f64>>,
}

impl Trace {
    /// Final-layer vectors in target order.
    pub fn output(&self) -> &[Vec<f64>] {
        self.h.last().expect("non-empty trace")
    }

    /// Pre-normalization norms per layer (1-based layer `k` at index `k-1`).
    pub fn norms(&self) -> &[Vec<f64>] {
        &self.norms
    }
}

/// Forward pass over a computation plan.
pub fn run_plan(plan: &ComputationPlan, features: &SemanticFeatures, model: &SageModel) -> Result<Trace> {
    model.check(features.dim())?;
    let h0: Vec<Vec<f64>> = plan.inputs.iter().map(|&v| features.row(v).to_vec()).collect();
    let mut trace = Trace {
        h: vec![h0],
        concat: Vec::new(),
        act: Vec::new(),
        norms: Vec::new(),
    };
    for (layer, w) in plan.layers.iter().zip(&model.layers) {
        let prev = trace.h.last().unwrap();
        let out = par::map_range(layer.nodes.len(), |i| {
            let neigh: Vec<&[f64]> = layer.neigh_pos[i].iter().map(|&p| prev[p].as_slice()).collect();
            let agg = aggregate_mean(&neigh).expect("non-empty sampled neighborhood");
            let mut c = prev[layer.self_pos[i]].clone();
            c.extend_from_slice(&agg);
            let a: Vec<f64> = w
                .rows()
                .into_iter()
                .map(|row| sigmoid(dot(row.as_slice().expect("standard layout"), &c)))
                .collect();
            let n = norm(&a);
            let h = if n > 0.0 {
                a.iter().map(|x| x / n).collect()
            } else {
                a.clone()
            };
            (c, a, n, h)
        });
        let mut cs = Vec::with_capacity(out.len());
        let mut acts = Vec::with_capacity(out.len());
        let mut norms = Vec::with_capacity(out.len());
        let mut hs = Vec::with_capacity(out.len());
        for (c, a, n, h) in out {
            cs.push(c);
            acts.push(a);
            norms.push(n);
            hs.push(h);
        }
        trace.concat.push(cs);
        trace.act.push(acts);
        trace.norms.push(norms);
        trace.h.push(hs);
    }
    Ok(trace)
}

/// Gradients of a scalar loss w.r.t. every `W^k`, given `dL/dz` for each
/// target (in plan target order).
pub fn backward(plan: &ComputationPlan, trace: &Trace, model: &SageModel, d_out: Vec<Vec<f64>>) -> Vec<Array2<f64>> {
    let depth = plan.layers.len();
    let mut grads: Vec<Array2<f64>> = model.layers.iter().map(|w| Array2::zeros(w.raw_dim())).collect();
    let mut d_h = d_out;
    for k in (0..depth).rev() {
        let layer = &plan.layers[k];
        let w = &model.layers[k];
        let (out_dim, cols) = w.dim();
        let half = cols / 2;
        let h = &trace.h[k + 1];
        let act = &trace.act[k];
        let norms = &trace.norms[k];
        let concat = &trace.concat[k];
        let d_h_ref = &d_h;
        let chunks = par::map_chunks(layer.nodes.len(), |start, end| {
            let mut gw = vec![0.0; out_dim * cols];
            let mut dcs = Vec::with_capacity(end - start);
            for i in start..end {
                let dh = &d_h_ref[i];
                let n = norms[i];
                // through the L2 normalization
                let da: Vec<f64> = if n > 0.0 {
                    let proj = dot(&h[i], dh);
                    dh.iter().zip(&h[i]).map(|(g, hv)| (g - hv * proj) / n).collect()
                } else {
                    dh.clone()
                };
                // through the sigmoid
                let dp: Vec<f64> = da.iter().zip(&act[i]).map(|(g, a)| g * a * (1.0 - a)).collect();
                let c = &concat[i];
                let mut dc = vec![0.0; cols];
                for (r, &g) in dp.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    let wrow = w.row(r);
                    let grow = &mut gw[r * cols..(r + 1) * cols];
                    for j in 0..cols {
                        grow[j] += g * c[j];
                        dc[j] += g * wrow[j];
                    }
                }
                dcs.push(dc);
            }
            (gw, dcs)
        });
        let prev_len = if k == 0 {
            plan.inputs.len()
        } else {
            plan.layers[k - 1].nodes.len()
        };
        let mut d_prev = vec![vec![0.0; half]; prev_len];
        let gk = grads[k].as_slice_mut().expect("standard layout");
        let mut i = 0;
        for (gw, dcs) in chunks {
            for (g, x) in gk.iter_mut().zip(&gw) {
                *g += x;
            }
            for dc in dcs {
                for (d, x) in d_prev[layer.self_pos[i]].iter_mut().zip(&dc[..half]) {
                    *d += x;
                }
                let m = layer.neigh_pos[i].len() as f64;
                for &p in &layer.neigh_pos[i] {
                    for (d, x) in d_prev[p].iter_mut().zip(&dc[half..]) {
                        *d += x / m;
                    }
                }
                i += 1;
            }
        }
        d_h = d_prev;
    }
    grads
}

/// Embeds every node of the graph.
pub fn forward(
    nb: &Neighborhoods,
    features: &SemanticFeatures,
    model: &SageModel,
    config: &SageConfig,
    mode: SamplingMode,
    seed: u64,
) -> Result<EmbeddingSpace> {
    if features.vectors.nrows() != nb.len() {
        return Err(Error::DimensionMismatch {
            expected: nb.len(),
            found: features.vectors.nrows(),
        });
    }
    if model.depth() != config.sample_sizes.len() {
        return Err(Error::Config("model depth differs from sample_sizes".into()));
    }
    let all: Vec<usize> = (0..nb.len()).collect();
    let cfg = SageConfig { seed, ..config.clone() };
    let plan = ComputationPlan::build(&all, nb, &cfg, mode, &mut seeded_rng(seed));
    let trace = run_plan(&plan, features, model)?;
    let out = trace.output();
    let dim = model.output_dim();
    let mut vectors = Array2::zeros((nb.len(), dim));
    for (i, z) in out.iter().enumerate() {
        vectors.row_mut(i).assign(&ndarray::ArrayView1::from(z.as_slice()));
    }
    let degenerate = trace.norms.iter().fold(vec![false; nb.len()], |mut acc, layer_norms| {
        // only the last layer covers all nodes in order; earlier layers are supersets
        if layer_norms.len() == nb.len() {
            for (a, &n) in acc.iter_mut().zip(layer_norms) {
                *a |= n == 0.0;
            }
        }
        acc
    });
    if degenerate.iter().any(|&d| d) {
        log::warn!(
            "{} nodes produced a zero vector before normalization",
            degenerate.iter().filter(|&&d| d).count()
        );
    }
    Ok(EmbeddingSpace {
        codes: features.codes.clone(),
        vectors,
        degenerate,
    })
}

/// Random-walk co-occurrence pairs `(walk[i], walk[j])` for `i < j ≤ i + window`.
/// Self pairs are emitted; training filters them.
pub fn positive_pairs(
    nb: &Neighborhoods,
    walk_length: usize,
    walks_per_node: usize,
    window: usize,
    weighted: bool,
    rng: &mut Rng,
) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    let mut walk = Vec::with_capacity(walk_length);
    for _ in 0..walks_per_node {
        for start in 0..nb.len() {
            walk.clear();
            walk.push(start);
            while walk.len() < walk_length {
                let list = nb.sampling_list(*walk.last().unwrap());
                walk.push(sample_neighbors(list, 1, weighted, rng)[0]);
            }
            for i in 0..walk.len() {
                for j in i + 1..walk.len().min(i + window + 1) {
                    pairs.push((walk[i], walk[j]));
                }
            }
        }
    }
    pairs
}

fn log_sigmoid_clamped(x: f64) -> f64 {
    sigmoid(x).max(1e-12).ln()
}

/// `-log σ(z_u·z_v) - Σ_n log σ(-z_u·z_n)`, log arguments clamped at 1e-12.
pub fn unsupervised_loss(z_u: &[f64], z_v: &[f64], negatives: &[&[f64]]) -> f64 {
    -log_sigmoid_clamped(dot(z_u, z_v)) - negatives.iter().map(|n| log_sigmoid_clamped(-dot(z_u, n))).sum::<f64>()
}

/// Gradients of [`unsupervised_loss`] w.r.t. `z_u`, `z_v` and each negative.
pub fn unsupervised_loss_grad(z_u: &[f64], z_v: &[f64], negatives: &[&[f64]]) -> (Vec<f64>, Vec<f64>, Vec<Vec<f64>>) {
    let gp = sigmoid(dot(z_u, z_v)) - 1.0;
    let mut gu: Vec<f64> = z_v.iter().map(|x| gp * x).collect();
    let gv = z_u.iter().map(|x| gp * x).collect();
    let gn = negatives
        .iter()
        .map(|n| {
            let g = sigmoid(dot(z_u, n));
            for (a, x) in gu.iter_mut().zip(n.iter()) {
                *a += g * x;
            }
            z_u.iter().map(|x| g * x).collect()
        })
        .collect();
    (gu, gv, gn)
}

/// A training example: positive pair plus its negatives.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub u: usize,
    pub v: usize,
    pub negatives: Vec<usize>,
}

/// Mean loss over `batch` and its gradient w.r.t. the model, for a fixed plan
/// covering every node the batch touches.
pub fn batch_loss_and_grad(
    plan: &ComputationPlan,
    features: &SemanticFeatures,
    model: &SageModel,
    batch: &[Example],
) -> Result<(f64, Vec<Array2<f64>>)> {
    let trace = run_plan(plan, features, model)?;
    let targets = plan.targets();
    let pos = |v: usize| targets.binary_search(&v).expect("node in plan");
    let z = trace.output();
    let dim = z.first().map_or(0, Vec::len);
    let mut d_out = vec![vec![0.0; dim]; targets.len()];
    let scale = 1.0 / batch.len().max(1) as f64;
    let mut loss = 0.0;
    for ex in batch {
        let (iu, iv) = (pos(ex.u), pos(ex.v));
        let negs: Vec<&[f64]> = ex.negatives.iter().map(|&n| z[pos(n)].as_slice()).collect();
        loss += unsupervised_loss(&z[iu], &z[iv], &negs);
        let (gu, gv, gn) = unsupervised_loss_grad(&z[iu], &z[iv], &negs);
        let add = |d: &mut Vec<f64>, g: &[f64]| d.iter_mut().zip(g).for_each(|(a, b)| *a += b * scale);
        add(&mut d_out[iu], &gu);
        add(&mut d_out[iv], &gv);
        for (&n, g) in ex.negatives.iter().zip(&gn) {
            add(&mut d_out[pos(n)], g);
        }
    }
    let grads = backward(plan, &trace, model, d_out);
    Ok((loss * scale, grads))
}

/// Nodes referenced by a batch.
pub fn batch_nodes(batch: &[Example]) -> Vec<usize> {
    let mut set = BTreeSet::new();
    for ex in batch {
        set.insert(ex.u);
        set.insert(ex.v);
        set.extend(ex.negatives.iter().copied());
    }
    set.into_iter().collect()
}

struct AdamState {
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
    t: i32,
}

fn apply_update(model: &mut SageModel, grads: &[Array2<f64>], lr: f64, adam: Option<&mut AdamState>) {
    match adam {
        None => {
            for (w, g) in model.layers.iter_mut().zip(grads) {
                w.scaled_add(-lr, g);
            }
        }
        Some(st) => {
            const B1: f64 = 0.9;
            const B2: f64 = 0.999;
            st.t += 1;
            let c1 = 1.0 - B1.powi(st.t);
            let c2 = 1.0 - B2.powi(st.t);
            for k in 0..grads.len() {
                ndarray::Zip::from(&mut model.layers[k])
                    .and(&mut st.m[k])
                    .and(&mut st.v[k])
                    .and(&grads[k])
                    .for_each(|w, m, v, &g| {
                        *m = B1 * *m + (1.0 - B1) * g;
                        *v = B2 * *v + (1.0 - B2) * g * g;
                        *w -= lr * (*m / c1) / ((*v / c2).sqrt() + 1e-8);
                    });
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutput {
    pub model: SageModel,
    pub embeddings: EmbeddingSpace,
    /// Mean loss per epoch.
    pub epoch_losses: Vec<f64>,
}

/// Negative-sampling distribution: degree^0.75.
pub fn negative_distribution(nb: &Neighborhoods) -> WeightedIndex<f64> {
    let weights: Vec<f64> = (0..nb.len()).map(|v| (nb.degree(v) as f64).powf(0.75)).collect();
    if weights.iter().all(|&w| w == 0.0) {
        WeightedIndex::new(vec![1.0; nb.len()]).expect("non-empty graph")
    } else {
        WeightedIndex::new(weights).expect("non-negative weights")
    }
}

/// Trains the model on random-walk pairs with `negatives` negatives each and
/// returns the final model plus the embeddings of every node.
pub fn train(
    graph: &DomainGraph,
    nb: &Neighborhoods,
    features: &SemanticFeatures,
    config: &SageConfig,
) -> Result<TrainOutput> {
    config.validate()?;
    if features.vectors.nrows() != graph.len() || nb.len() != graph.len() {
        return Err(Error::DimensionMismatch {
            expected: graph.len(),
            found: features.vectors.nrows(),
        });
    }
    if graph.counts.nnz() == 0 {
        return Err(Error::Invalid("graph has no edges".into()));
    }
    let mut rng = seeded_rng(config.seed);
    let mut model = SageModel::init(features.dim(), config, &mut rng);
    let mut pairs: Vec<(usize, usize)> = positive_pairs(
        nb,
        config.walk_length,
        config.walks_per_node,
        config.window,
        config.weighted_walks,
        &mut rng,
    )
    .into_iter()
    .filter(|(u, v)| u != v)
    .collect();
    if pairs.is_empty() {
        return Err(Error::Invalid("random walks produced no non-self pairs".into()));
    }
    let neg_dist = negative_distribution(nb);
    let mut adam = match config.optimizer {
        Optimizer::Sgd => None,
        Optimizer::Adam => Some(AdamState {
            m: model.layers.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            v: model.layers.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
            t: 0,
        }),
    };

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        pairs.shuffle(&mut rng);
        let mut total = 0.0;
        for (b, chunk) in pairs.chunks(config.batch_size).enumerate() {
            let batch: Vec<Example> = chunk
                .iter()
                .map(|&(u, v)| Example {
                    u,
                    v,
                    negatives: (0..config.negatives).map(|_| neg_dist.sample(&mut rng)).collect(),
                })
                .collect();
            let plan = ComputationPlan::build(&batch_nodes(&batch), nb, config, config.sampling, &mut rng);
            let (loss, grads) = batch_loss_and_grad(&plan, features, &model, &batch)?;
            if !loss.is_finite() {
                return Err(Error::NonFiniteLoss {
                    epoch,
                    batch: b,
                    lr: config.lr,
                });
            }
            total += loss * batch.len() as f64;
            apply_update(&mut model, &grads, config.lr, adam.as_mut());
        }
        let mean = total / pairs.len() as f64;
        log::debug!("graphembed epoch {epoch}: loss {mean:.6}");
        epoch_losses.push(mean);
    }

    let embeddings = forward(nb, features, &model, config, config.sampling, config.seed ^ 0x5EED)?;
    Ok(TrainOutput {
        model,
        embeddings,
        epoch_losses,
    })
}
