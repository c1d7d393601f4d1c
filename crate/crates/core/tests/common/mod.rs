#![allow(dead_code)]

use std::collections::HashSet;

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::Rng as _;

use techscape::corpus::{neighborhoods, DirectionPolicy, DomainGraph, Neighborhoods};
use techscape::graphembed::{train, SageConfig};
use techscape::seeded_rng;
use techscape::textembed::SemanticFeatures;

/// The GraphSAGE forward pass written out literally: every node, every layer, full
/// neighborhood, sigmoid, L2 normalization. Shares no code with the library.
pub fn oracle_forward(x: &[Vec<f64>], nb: &Neighborhoods, weights: &[Array2<f64>]) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut h: Vec<Vec<f64>> = x.to_vec();
    for w in weights {
        let mut next = Vec::with_capacity(n);
        for v in 0..n {
            let neigh = nb.sampling_list(v);
            let d = h[v].len();
            let mut agg = vec![0.0; d];
            for &(u, _) in neigh {
                for t in 0..d {
                    agg[t] += h[u][t] / neigh.len() as f64;
                }
            }
            let mut c = h[v].clone();
            c.extend(agg);
            let mut out = Vec::with_capacity(w.nrows());
            for r in 0..w.nrows() {
                let mut s = 0.0;
                for t in 0..c.len() {
                    s += w[[r, t]] * c[t];
                }
                out.push(1.0 / (1.0 + (-s).exp()));
            }
            let len = out.iter().map(|a| a * a).sum::<f64>().sqrt();
            if len > 0.0 {
                out.iter_mut().for_each(|a| *a /= len);
            }
            next.push(out);
        }
        h = next;
    }
    h
}

pub struct Fixture {
    pub name: String,
    pub graph: DomainGraph,
    pub policy: DirectionPolicy,
}

impl Fixture {
    fn new(name: &str, n: usize, edges: &[(usize, usize)], policy: DirectionPolicy) -> Self {
        Fixture {
            name: name.to_string(),
            graph: DomainGraph::from_edges(n, edges),
            policy,
        }
    }

    pub fn neighborhoods(&self) -> Neighborhoods {
        neighborhoods(&self.graph, self.policy)
    }
}

/// Every small graph the forward pass is checked on (at most 6 nodes).
pub fn small_graphs() -> Vec<Fixture> {
    use DirectionPolicy::*;
    let mut out = vec![
        Fixture::new("isolated node", 1, &[], Undirected),
        Fixture::new("self-loop", 1, &[(0, 0)], Undirected),
        Fixture::new("single edge", 2, &[(0, 1)], Undirected),
        Fixture::new("path of 4", 4, &[(0, 1), (1, 2), (2, 3)], Undirected),
        Fixture::new("star", 5, &[(0, 1), (0, 2), (0, 3), (0, 4)], Undirected),
        Fixture::new("triangle plus isolated", 4, &[(0, 1), (1, 2), (2, 0)], Undirected),
        Fixture::new("K4", 4, &[(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)], Undirected),
        Fixture::new("outgoing chain", 4, &[(0, 1), (1, 2), (2, 3)], Outgoing),
        Fixture::new(
            "three domains",
            3,
            &[
                (0, 0),
                (0, 0),
                (0, 1),
                (0, 1),
                (0, 1),
                (0, 2),
                (1, 0),
                (1, 0),
                (1, 1),
                (1, 2),
                (2, 2),
            ],
            Undirected,
        ),
    ];
    for seed in 0..6u64 {
        let mut rng = seeded_rng(500 + seed);
        let edges: Vec<(usize, usize)> = (0..rng.random_range(3..14))
            .map(|_| (rng.random_range(0..6), rng.random_range(0..6)))
            .collect();
        let policy = if seed % 2 == 0 { Undirected } else { Outgoing };
        out.push(Fixture::new(&format!("random 6-node #{seed}"), 6, &edges, policy));
    }
    out
}

pub fn random_features(codes: &[String], dim: usize, seed: u64) -> SemanticFeatures {
    let mut rng = seeded_rng(seed);
    SemanticFeatures {
        codes: codes.to_vec(),
        vectors: Array2::from_shape_fn((codes.len(), dim), |_| rng.random_range(-1.0..1.0)),
    }
}

pub fn rows(features: &SemanticFeatures) -> Vec<Vec<f64>> {
    features.vectors.rows().into_iter().map(|r| r.to_vec()).collect()
}

/// `‖a − b‖ / max(‖a‖, ‖b‖)`, zero when both vanish.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let l2 = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = l2(&mut a.iter().zip(b).map(|(x, y)| x - y));
    let scale = l2(&mut a.iter().copied()).max(l2(&mut b.iter().copied()));
    if scale == 0.0 {
        diff
    } else {
        diff / scale
    }
}

fn cos(a: &[f64], b: &[f64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    d / (na * nb)
}

fn auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut s = 0.0;
    for p in pos {
        for q in neg {
            s += if p > q {
                1.0
            } else if p == q {
                0.5
            } else {
                0.0
            };
        }
    }
    s / (pos.len() * neg.len()) as f64
}

pub struct LinkPrediction {
    pub auc: f64,
    /// AUC of the best scorer that only knows block membership.
    pub block_bound: f64,
    pub intra_cosine: f64,
    pub inter_cosine: f64,
}

/// Hold out 10% of the edges of a two-block graph, train on the rest with
/// random 16-dim features, score held-out edges against an equal number of
/// random non-edges by `z_u · z_v`.
pub fn two_block_link_prediction(n: usize, p_in: f64, p_out: f64, seed: u64, config: &SageConfig) -> LinkPrediction {
    let (edges, labels) = techscape::synth::two_block_graph(n, p_in, p_out, seed);
    let mut rng = seeded_rng(100 + seed);
    let mut shuffled = edges.clone();
    shuffled.shuffle(&mut rng);
    let (test, train_edges) = shuffled.split_at(shuffled.len() / 10);
    let graph = DomainGraph::from_edges(n, train_edges);
    let nb = neighborhoods(&graph, DirectionPolicy::Undirected);
    let features = random_features(&graph.nodes, 16, 900 + seed);
    let out = train(&graph, &nb, &features, &SageConfig { seed, ..config.clone() }).expect("training");
    let z = &out.embeddings;

    let known: HashSet<(usize, usize)> = edges.iter().copied().collect();
    let mut negatives = Vec::with_capacity(test.len());
    while negatives.len() < test.len() {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a < b && !known.contains(&(a, b)) {
            negatives.push((a, b));
        }
    }
    let score = |&(a, b): &(usize, usize)| -> f64 { z.row(a).iter().zip(z.row(b)).map(|(x, y)| x * y).sum() };
    let block = |&(a, b): &(usize, usize)| f64::from(u8::from(labels[a] == labels[b]));
    let pos: Vec<f64> = test.iter().map(score).collect();
    let neg: Vec<f64> = negatives.iter().map(score).collect();
    let pos_b: Vec<f64> = test.iter().map(block).collect();
    let neg_b: Vec<f64> = negatives.iter().map(block).collect();

    let (mut intra, mut ni, mut inter, mut nx) = (0.0, 0usize, 0.0, 0usize);
    for a in 0..n {
        for b in a + 1..n {
            let c = cos(z.row(a), z.row(b));
            if labels[a] == labels[b] {
                intra += c;
                ni += 1;
            } else {
                inter += c;
                nx += 1;
            }
        }
    }
    LinkPrediction {
        auc: auc(&pos, &neg),
        block_bound: auc(&pos_b, &neg_b),
        intra_cosine: intra / ni as f64,
        inter_cosine: inter / nx as f64,
    }
}

/// Fraction of points whose cosine nearest neighbor shares their label.
pub fn nn_purity(vectors: &[Vec<f64>], labels: &[usize]) -> f64 {
    let n = vectors.len();
    let hits = (0..n)
        .filter(|&i| {
            let best = (0..n)
                .filter(|&j| j != i)
                .max_by(|&a, &b| cos(&vectors[i], &vectors[a]).total_cmp(&cos(&vectors[i], &vectors[b])))
                .expect("at least two points");
            labels[best] == labels[i]
        })
        .count();
    hits as f64 / n as f64
}
