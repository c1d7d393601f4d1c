//! The landscape bundle: one self-describing JSON document holding every
//! artifact the explorer needs. Its schema lives in `docs/bundle-schema.json`.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::analyze::{DistanceGroup, QuantileReport, ShiftMatrix, TopicSet};
use crate::config::PipelineConfig;
use crate::corpus::DomainCatalog;
use crate::graphembed::EmbeddingSpace;
use crate::landscape::{BoundingBox, ContourLevel, PeakInfo, SurfaceGrid};
use crate::project::Projection2D;
use crate::{Error, Result};

pub const SCHEMA_VERSION: &str = "1.0.0";

/// Per-stage algorithm versions, bumped when a stage's output changes meaning.
pub const STAGE_VERSIONS: [(&str, u32); 7] = [
    ("ingest", 1),
    ("textembed", 1),
    ("graphembed", 1),
    ("project", 1),
    ("landscape", 1),
    ("analyze", 1),
    ("export", 1),
];

/// Choices the method leaves open, echoed so a bundle documents its own
/// construction.
pub fn assumptions() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([
        (
            "citation_direction",
            "undirected union of in- and out-edges; weight w(v,u) + w(u,v)",
        ),
        (
            "zero_citation_rows",
            "kept with zero weights; neighborhood falls back to a self-loop",
        ),
        (
            "text_model",
            "doc2vec DBOW with negative sampling; domain feature = mean of its patent vectors",
        ),
        ("walk_pairs", "co-occurrence within the window, forward direction only"),
        (
            "optimizer",
            "Adam on the negative-sampling loss by default; plain SGD selectable via sage.optimizer",
        ),
        (
            "surface_fit",
            "Gaussian kernel smoothing on a regular grid over the layout bounding box",
        ),
        (
            "surface_bandwidth",
            "1/30 of the bounding-box diagonal unless configured",
        ),
        (
            "surface_mask",
            "cells with total kernel weight below mask_threshold are null",
        ),
        ("peak_ties", "rate descending, then code ascending"),
        ("distance_space", "see meta.config.analysis.space"),
        (
            "decile_ties",
            "stable order by (distance, code); remainder goes to the nearest groups",
        ),
        ("nber_binning", "see meta.config.analysis.binning and shift_bins"),
        (
            "topic_documents",
            "all patents of the peak domains; TF-IDF over the text vocabulary",
        ),
    ])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Meta {
    pub schema_version: String,
    pub generator: String,
    pub stage_versions: BTreeMap<String, u32>,
    pub assumptions: BTreeMap<String, String>,
    pub config: PipelineConfig,
    pub final_kl: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DomainPoint {
    pub code: String,
    pub rate: f64,
    pub nber: u8,
    pub nber_category: String,
    pub xy: [f64; 2],
    pub z: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceDoc {
    pub nx: usize,
    pub ny: usize,
    pub bbox: BoundingBox,
    pub bandwidth: f64,
    /// Row-major, `y` index outer; `null` where masked.
    pub values: Vec<Option<f64>>,
}

impl SurfaceDoc {
    pub fn from_grid(grid: &SurfaceGrid) -> Self {
        SurfaceDoc {
            nx: grid.nx,
            ny: grid.ny,
            bbox: grid.bbox,
            bandwidth: grid.bandwidth,
            values: grid.values.clone(),
        }
    }

    pub fn to_grid(&self) -> SurfaceGrid {
        SurfaceGrid {
            nx: self.nx,
            ny: self.ny,
            bbox: self.bbox,
            bandwidth: self.bandwidth,
            values: self.values.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftRow {
    pub subcategory: u8,
    pub name: String,
    pub category: String,
    pub counts: Vec<u64>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TermWeight {
    pub term: String,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopicDoc {
    pub terms: Vec<TermWeight>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub meta: Meta,
    pub domains: Vec<DomainPoint>,
    pub surface: SurfaceDoc,
    pub contours: Vec<ContourLevel>,
    pub peak: PeakInfo,
    pub deciles: Vec<DistanceGroup>,
    pub nber_shift: Vec<ShiftRow>,
    pub nber_bins: Vec<crate::analyze::ShiftBin>,
    pub topics: Vec<TopicDoc>,
}

/// Everything the bundle is assembled from.
pub struct Artifacts<'a> {
    pub config: &'a PipelineConfig,
    pub catalog: &'a DomainCatalog,
    pub embeddings: &'a EmbeddingSpace,
    pub projection: &'a Projection2D,
    pub surface: &'a SurfaceGrid,
    pub contours: &'a [ContourLevel],
    pub peak: &'a PeakInfo,
    pub deciles: &'a QuantileReport,
    pub shift: &'a ShiftMatrix,
    pub topics: &'a TopicSet,
}

fn compare_sets(what: &str, expected: &BTreeSet<&str>, found: &BTreeSet<&str>, problems: &mut Vec<String>) {
    let missing: Vec<&str> = expected.difference(found).copied().collect();
    let extra: Vec<&str> = found.difference(expected).copied().collect();
    if !missing.is_empty() {
        problems.push(format!("{what} lacks {}", missing.join(", ")));
    }
    if !extra.is_empty() {
        problems.push(format!("{what} has unknown {}", extra.join(", ")));
    }
}

/// Checks that every artifact refers to the same domains.
fn check_domains(a: &Artifacts) -> Result<()> {
    let expected: BTreeSet<&str> = a.embeddings.codes.iter().map(String::as_str).collect();
    let mut problems = Vec::new();
    if a.projection.codes != a.embeddings.codes {
        let found = a.projection.codes.iter().map(String::as_str).collect();
        compare_sets("projection", &expected, &found, &mut problems);
        if problems.is_empty() {
            problems.push("projection lists the embedding domains in a different order".into());
        }
    }
    let catalog_codes = a.catalog.codes();
    let found = catalog_codes.iter().map(String::as_str).collect();
    compare_sets("catalog", &expected, &found, &mut problems);
    let found = a
        .deciles
        .groups
        .iter()
        .flat_map(|g| g.members.iter().map(String::as_str))
        .collect();
    compare_sets("deciles", &expected, &found, &mut problems);
    let unknown: Vec<&str> = a
        .peak
        .members
        .iter()
        .map(String::as_str)
        .filter(|c| !expected.contains(c))
        .collect();
    if !unknown.is_empty() {
        problems.push(format!("peak has unknown {}", unknown.join(", ")));
    }
    let shift_total: usize = a.shift.bins.iter().map(|b| b.count).sum();
    if shift_total != expected.len() {
        problems.push(format!(
            "nber_shift counts {shift_total} domains, expected {}",
            expected.len()
        ));
    }
    if problems.is_empty() {
        Ok(())
    } else {
        Err(Error::DomainMismatch(problems.join("; ")))
    }
}

pub fn assemble(a: &Artifacts) -> Result<Bundle> {
    check_domains(a)?;
    let domains = a
        .embeddings
        .codes
        .iter()
        .enumerate()
        .map(|(i, code)| {
            let entry = a.catalog.get(code).expect("checked above");
            DomainPoint {
                code: code.clone(),
                rate: entry.improvement_rate,
                nber: entry.subcategory.code(),
                nber_category: entry.subcategory.category().label().to_string(),
                xy: a.projection.coords[i],
                z: a.embeddings.row(i).to_vec(),
            }
        })
        .collect();
    let nber_shift = a
        .shift
        .subcategories
        .iter()
        .zip(a.shift.counts.iter().zip(&a.shift.values))
        .map(|(sub, (counts, values))| ShiftRow {
            subcategory: sub.code(),
            name: sub.name().to_string(),
            category: sub.category().label().to_string(),
            counts: counts.clone(),
            values: values.clone(),
        })
        .collect();
    let topics = a
        .topics
        .topics
        .iter()
        .map(|t| TopicDoc {
            terms: t
                .terms
                .iter()
                .map(|(term, weight)| TermWeight {
                    term: term.clone(),
                    weight: *weight,
                })
                .collect(),
        })
        .collect();
    Ok(Bundle {
        meta: Meta {
            schema_version: SCHEMA_VERSION.into(),
            generator: format!("{} {}", env!("CARGO_PKG_NAME"), env!("CARGO_PKG_VERSION")),
            stage_versions: STAGE_VERSIONS.iter().map(|&(s, v)| (s.to_string(), v)).collect(),
            assumptions: assumptions()
                .into_iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
            config: a.config.clone(),
            final_kl: a.projection.kl,
        },
        domains,
        surface: SurfaceDoc::from_grid(a.surface),
        contours: a.contours.to_vec(),
        peak: a.peak.clone(),
        deciles: a.deciles.groups.clone(),
        nber_shift,
        nber_bins: a.shift.bins.clone(),
        topics,
    })
}

/// Serialized form. Field order is fixed by the struct definitions and maps
/// are ordered, so equal bundles give equal bytes.
pub fn to_json(bundle: &Bundle) -> Result<String> {
    let mut text = serde_json::to_string(bundle)?;
    text.push('\n');
    Ok(text)
}
