//! Corpus ingestion and the domain-level citation graph.

mod graph;
mod ingest;
pub mod nber;

pub use graph::{
    build_domain_counts, neighborhoods, normalize_weights, CountMatrix, CountOptions, DirectionPolicy, DomainGraph,
    Neighborhoods, SparseRows, WeightMatrix,
};
pub use ingest::{ingest, read_catalog, read_citations, read_patents, Ingested};
pub use nber::{NberCategory, NberSubcategory};

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A UPC-IPC pair string such as `719G06F`.
pub type DomainCode = String;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatentRecord {
    pub id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    pub year: i32,
    pub domain: DomainCode,
}

impl PatentRecord {
    pub fn text(&self) -> String {
        format!("{} {}", self.title, self.abstract_text)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainEntry {
    pub code: DomainCode,
    /// Percent per year.
    pub improvement_rate: f64,
    pub subcategory: NberSubcategory,
}

impl DomainEntry {
    pub fn category(&self) -> NberCategory {
        self.subcategory.category()
    }
}

/// Domain catalog keyed and ordered by code. The code order is the node order
/// of every downstream matrix.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DomainCatalog {
    entries: BTreeMap<DomainCode, DomainEntry>,
}

impl DomainCatalog {
    pub fn from_entries(entries: impl IntoIterator<Item = DomainEntry>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for e in entries {
            if !(e.improvement_rate > 0.0 && e.improvement_rate.is_finite()) {
                return Err(Error::Invalid(format!(
                    "domain {} has non-positive improvement rate {}",
                    e.code, e.improvement_rate
                )));
            }
            if map.contains_key(&e.code) {
                return Err(Error::Duplicate {
                    kind: "domain code",
                    key: e.code,
                });
            }
            map.insert(e.code.clone(), e);
        }
        Ok(DomainCatalog { entries: map })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, code: &str) -> Option<&DomainEntry> {
        self.entries.get(code)
    }

    pub fn contains(&self, code: &str) -> bool {
        self.entries.contains_key(code)
    }

    pub fn codes(&self) -> Vec<DomainCode> {
        self.entries.keys().cloned().collect()
    }

    pub fn entries(&self) -> impl Iterator<Item = &DomainEntry> {
        self.entries.values()
    }

    /// Rates aligned to `codes`.
    pub fn rates_for(&self, codes: &[DomainCode]) -> Result<Vec<f64>> {
        codes
            .iter()
            .map(|c| {
                self.get(c)
                    .map(|e| e.improvement_rate)
                    .ok_or_else(|| Error::DomainMismatch(format!("{c} not in catalog")))
            })
            .collect()
    }
}

#[derive(Clone, Debug, Default)]
pub struct Corpus {
    patents: Vec<PatentRecord>,
    index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(patents: Vec<PatentRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(patents.len());
        for (i, p) in patents.iter().enumerate() {
            if index.insert(p.id.clone(), i).is_some() {
                return Err(Error::Duplicate {
                    kind: "patent id",
                    key: p.id.clone(),
                });
            }
        }
        Ok(Corpus { patents, index })
    }

    pub fn len(&self) -> usize {
        self.patents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patents.is_empty()
    }

    pub fn patents(&self) -> &[PatentRecord] {
        &self.patents
    }

    pub fn position(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Checks every patent's domain against the catalog.
    pub fn validate_domains(&self, catalog: &DomainCatalog) -> Result<()> {
        let mut unknown: Vec<String> = self
            .patents
            .iter()
            .filter(|p| !catalog.contains(&p.domain))
            .map(|p| p.domain.clone())
            .collect();
        if unknown.is_empty() {
            return Ok(());
        }
        unknown.sort();
        unknown.dedup();
        Err(Error::UnknownDomains(unknown))
    }
}
