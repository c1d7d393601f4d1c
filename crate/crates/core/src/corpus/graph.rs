use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{Corpus, DomainCatalog, DomainCode};
use crate::{Error, Result};

/// Row-keyed sparse matrix; each row holds `(column, value)` sorted by column.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseRows<T> {
    rows: Vec<Vec<(usize, T)>>,
    ncols: usize,
}

impl<T: Copy> SparseRows<T> {
    pub fn new(rows: Vec<Vec<(usize, T)>>, ncols: usize) -> Self {
        let mut rows = rows;
        for r in &mut rows {
            r.sort_by_key(|e| e.0);
        }
        SparseRows { rows, ncols }
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn row(&self, i: usize) -> &[(usize, T)] {
        &self.rows[i]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<T> {
        let r = &self.rows[i];
        r.binary_search_by_key(&j, |e| e.0).ok().map(|k| r[k].1)
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    /// Triplets in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, r)| r.iter().map(move |&(j, v)| (i, j, v)))
    }
}

impl<T: Copy + Default> SparseRows<T> {
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        self.rows
            .iter()
            .map(|r| {
                let mut d = vec![T::default(); self.ncols];
                for &(j, v) in r {
                    d[j] = v;
                }
                d
            })
            .collect()
    }
}

/// Inter-domain citation counts; row = citing domain, column = cited domain.
pub type CountMatrix = SparseRows<u64>;
/// Row-normalized citation weights.
pub type WeightMatrix = SparseRows<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct CountOptions {
    /// Count citations between two patents of the same domain on the diagonal.
    pub include_intra_domain: bool,
}

impl Default for CountOptions {
    fn default() -> Self {
        CountOptions {
            include_intra_domain: true,
        }
    }
}

/// Tallies patent-level citations into a domain × domain count matrix whose
/// index order is `nodes`.
pub fn build_domain_counts(
    corpus: &Corpus,
    nodes: &[DomainCode],
    citations: &[(usize, usize)],
    opts: CountOptions,
) -> Result<CountMatrix> {
    let node_of: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let patents = corpus.patents();
    let domain_idx = patents
        .iter()
        .map(|p| {
            node_of
                .get(p.domain.as_str())
                .copied()
                .ok_or_else(|| Error::UnknownDomains(vec![p.domain.clone()]))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut rows: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); nodes.len()];
    for &(citing, cited) in citations {
        let (n, m) = (domain_idx[citing], domain_idx[cited]);
        if n == m && !opts.include_intra_domain {
            continue;
        }
        *rows[n].entry(m).or_insert(0) += 1;
    }
    let rows = rows.into_iter().map(|r| r.into_iter().collect()).collect();
    Ok(SparseRows::new(rows, nodes.len()))
}

/// `w[n][m] = C[n][m] / Σ_k C[n][k]`. Rows with zero sum stay empty; the
/// returned flags mark those rows (no outgoing citations).
pub fn normalize_weights(counts: &CountMatrix) -> (WeightMatrix, Vec<bool>) {
    let mut isolated_out = Vec::with_capacity(counts.nrows());
    let rows = (0..counts.nrows())
        .map(|i| {
            let row = counts.row(i);
            let total: u64 = row.iter().map(|e| e.1).sum();
            isolated_out.push(total == 0);
            if total == 0 {
                return Vec::new();
            }
            let t = total as f64;
            row.iter()
                .filter(|e| e.1 > 0)
                .map(|&(j, c)| (j, c as f64 / t))
                .collect()
        })
        .collect();
    (SparseRows::new(rows, counts.ncols()), isolated_out)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DirectionPolicy {
    /// Union of in- and out-edges.
    #[default]
    Undirected,
    /// Cited domains only.
    Outgoing,
}

/// Domain graph: node order, counts `C` and normalized weights `W`.
#[derive(Clone, Debug)]
pub struct DomainGraph {
    pub nodes: Vec<DomainCode>,
    pub counts: CountMatrix,
    pub weights: WeightMatrix,
    /// Rows of `C` that sum to zero.
    pub isolated_out: Vec<bool>,
}

impl DomainGraph {
    pub fn from_counts(nodes: Vec<DomainCode>, counts: CountMatrix) -> Self {
        let (weights, isolated_out) = normalize_weights(&counts);
        DomainGraph {
            nodes,
            counts,
            weights,
            isolated_out,
        }
    }

    /// Builds the graph over every catalog domain (sorted by code).
    pub fn build(
        corpus: &Corpus,
        catalog: &DomainCatalog,
        citations: &[(usize, usize)],
        opts: CountOptions,
    ) -> Result<Self> {
        let nodes = catalog.codes();
        let counts = build_domain_counts(corpus, &nodes, citations, opts)?;
        Ok(Self::from_counts(nodes, counts))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn index_of(&self, code: &str) -> Option<usize> {
        self.nodes.iter().position(|c| c == code)
    }

    pub fn total_citations(&self) -> u64 {
        self.counts.iter().map(|e| e.2).sum()
    }

    /// Builds a graph straight from a weighted edge list, mostly for tests
    /// and synthetic benchmarks. Counts are the edge multiplicities.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut rows: Vec<BTreeMap<usize, u64>> = vec![BTreeMap::new(); n];
        for &(a, b) in edges {
            *rows[a].entry(b).or_insert(0) += 1;
        }
        let nodes = (0..n).map(|i| format!("N{i:04}")).collect();
        let counts = SparseRows::new(rows.into_iter().map(|r| r.into_iter().collect()).collect(), n);
        Self::from_counts(nodes, counts)
    }
}

/// Per-node neighbor lists with weights. Empty lists mark isolated nodes;
/// [`Neighborhoods::sampling_list`] substitutes a self-loop for those.
#[derive(Clone, Debug, PartialEq)]
pub struct Neighborhoods {
    lists: Vec<Vec<(usize, f64)>>,
    self_loops: Vec<Vec<(usize, f64)>>,
}

impl Neighborhoods {
    pub fn new(lists: Vec<Vec<(usize, f64)>>) -> Self {
        let self_loops = lists
            .iter()
            .enumerate()
            .map(|(v, l)| if l.is_empty() { vec![(v, 1.0)] } else { Vec::new() })
            .collect();
        Neighborhoods { lists, self_loops }
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// The raw neighbor set, possibly empty.
    pub fn of(&self, v: usize) -> &[(usize, f64)] {
        &self.lists[v]
    }

    pub fn is_isolated(&self, v: usize) -> bool {
        self.lists[v].is_empty()
    }

    pub fn isolated(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.is_isolated(v)).collect()
    }

    /// Never empty: isolated nodes get `[(v, 1.0)]`.
    pub fn sampling_list(&self, v: usize) -> &[(usize, f64)] {
        if self.lists[v].is_empty() {
            &self.self_loops[v]
        } else {
            &self.lists[v]
        }
    }

    pub fn degree(&self, v: usize) -> usize {
        self.lists[v].len()
    }
}

/// Neighbor sets from nonzero entries of `C`. Under the undirected policy a
/// neighbor's weight is `w[v→u] + w[u→v]`.
pub fn neighborhoods(graph: &DomainGraph, policy: DirectionPolicy) -> Neighborhoods {
    let n = graph.len();
    let mut acc: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
    for (i, j, c) in graph.counts.iter() {
        if c == 0 {
            continue;
        }
        let w = graph.weights.get(i, j).unwrap_or(0.0);
        *acc[i].entry(j).or_insert(0.0) += w;
        if policy == DirectionPolicy::Undirected && i != j {
            *acc[j].entry(i).or_insert(0.0) += w;
        }
    }
    Neighborhoods::new(acc.into_iter().map(|m| m.into_iter().collect()).collect())
}
