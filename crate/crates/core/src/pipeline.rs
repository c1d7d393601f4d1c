//! Stage runner. Each stage reads its inputs and upstream artifacts from disk
//! and writes its own artifacts into the output directory.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::analyze::{self, QuantileReport, ShiftMatrix, TopicSet};
use crate::bundle::{self, Artifacts};
use crate::config::PipelineConfig;
use crate::corpus::{self, neighborhoods, read_catalog, read_patents, DomainCatalog, DomainGraph, SparseRows};
use crate::graphembed::{self, EmbeddingSpace};
use crate::io::{self, read_json, write_json, write_text, LabelledTable};
use crate::landscape::{self, ContourLevel, PeakInfo};
use crate::project::{self, Projection2D, TsneConfig};
use crate::textembed::{self, tokenize, SemanticFeatures, Vocabulary};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Ingest,
    TextEmbed,
    GraphEmbed,
    Project,
    Landscape,
    Analyze,
    Export,
}

impl Stage {
    pub const ALL: [Stage; 7] = [
        Stage::Ingest,
        Stage::TextEmbed,
        Stage::GraphEmbed,
        Stage::Project,
        Stage::Landscape,
        Stage::Analyze,
        Stage::Export,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::TextEmbed => "textembed",
            Stage::GraphEmbed => "graphembed",
            Stage::Project => "project",
            Stage::Landscape => "landscape",
            Stage::Analyze => "analyze",
            Stage::Export => "export",
        }
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown stage {s:?}")))
    }
}

/// Artifact file names, relative to the output directory.
pub mod files {
    pub const INGEST: &str = "ingest.json";
    pub const DOMAIN_COUNTS: &str = "domain_counts.csv";
    pub const PATENT_VECTORS: &str = "patent_vectors.tsv";
    pub const DOMAIN_FEATURES: &str = "domain_features.tsv";
    pub const VOCABULARY: &str = "vocabulary.tsv";
    pub const TEXTEMBED: &str = "textembed.json";
    pub const EMBEDDINGS: &str = "embeddings.tsv";
    pub const MODEL: &str = "model.json";
    pub const GRAPHEMBED: &str = "graphembed.json";
    pub const PROJECTION: &str = "projection.tsv";
    pub const PROJECTION_META: &str = "projection.json";
    pub const SURFACE: &str = "surface.json";
    pub const CONTOURS: &str = "contours.json";
    pub const PEAK: &str = "peak.json";
    pub const DECILES: &str = "deciles.csv";
    pub const NBER_SHIFT: &str = "nber_shift.csv";
    pub const TOPICS: &str = "topics.json";
    pub const ANALYSIS: &str = "analysis.json";
    pub const BUNDLE: &str = "landscape_bundle.json";
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub patents: usize,
    pub citations: usize,
    pub dangling_citations: usize,
    pub domain_citations: u64,
    /// Graph node order used by every later stage.
    pub domains: Vec<String>,
    /// Domains that cite no other domain.
    pub isolated: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TextSummary {
    pub config: textembed::TextConfig,
    pub vocabulary_size: usize,
    pub epoch_losses: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphSummary {
    pub config: graphembed::SageConfig,
    pub epoch_losses: Vec<f64>,
    pub degenerate: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectionSummary {
    pub config: TsneConfig,
    pub kl: f64,
    pub kl_trace: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub space: analyze::DistanceSpace,
    pub distances: Vec<f64>,
    pub deciles: QuantileReport,
    pub shift: ShiftMatrix,
}

pub struct Pipeline {
    pub config: PipelineConfig,
}

impl Pipeline {
    pub fn new(config: PipelineConfig) -> Result<Self> {
        config.validate()?;
        Ok(Pipeline { config })
    }

    pub fn out_dir(&self) -> &Path {
        &self.config.paths.out_dir
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out_dir().join(name)
    }

    /// Path of an upstream artifact, or an error naming the stage that makes it.
    fn require(&self, name: &str, stage: Stage) -> Result<PathBuf> {
        let path = self.artifact(name);
        if path.is_file() {
            Ok(path)
        } else {
            Err(Error::MissingArtifact {
                stage: stage.name(),
                path,
            })
        }
    }

    pub fn run(&self, stage: Stage) -> Result<()> {
        log::info!("stage {}", stage.name());
        match stage {
            Stage::Ingest => self.ingest(),
            Stage::TextEmbed => self.textembed(),
            Stage::GraphEmbed => self.graphembed(),
            Stage::Project => self.project(),
            Stage::Landscape => self.landscape(),
            Stage::Analyze => self.analyze(),
            Stage::Export => self.export(),
        }
    }

    pub fn run_all(&self) -> Result<()> {
        Stage::ALL.into_iter().try_for_each(|s| self.run(s))
    }

    fn catalog(&self) -> Result<DomainCatalog> {
        read_catalog(&self.config.paths.domains)
    }

    fn summary(&self) -> Result<IngestSummary> {
        read_json(&self.require(files::INGEST, Stage::Ingest)?)
    }

    pub fn ingest(&self) -> Result<()> {
        let p = &self.config.paths;
        let data = corpus::ingest(&p.patents, &p.citations, &p.domains)?;
        let graph = DomainGraph::build(&data.corpus, &data.catalog, &data.citations, self.config.graph.counts)?;
        let mut csv = String::from("citing,cited,count\n");
        for (i, j, c) in graph.counts.iter() {
            writeln!(csv, "{},{},{c}", graph.nodes[i], graph.nodes[j]).unwrap();
        }
        write_text(&self.artifact(files::DOMAIN_COUNTS), &csv)?;
        let summary = IngestSummary {
            patents: data.corpus.len(),
            citations: data.citations.len(),
            dangling_citations: data.dangling,
            domain_citations: graph.total_citations(),
            isolated: (0..graph.len())
                .filter(|&i| graph.isolated_out[i])
                .map(|i| graph.nodes[i].clone())
                .collect(),
            domains: graph.nodes,
        };
        log::info!(
            "{} patents, {} citations ({} dangling), {} domains",
            summary.patents,
            summary.citations,
            summary.dangling_citations,
            summary.domains.len()
        );
        write_json(&self.artifact(files::INGEST), &summary)
    }

    fn read_graph(&self, nodes: Vec<String>) -> Result<DomainGraph> {
        let path = self.require(files::DOMAIN_COUNTS, Stage::Ingest)?;
        let index: std::collections::HashMap<&str, usize> =
            nodes.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let mut rows = vec![Vec::new(); nodes.len()];
        let mut reader =
            csv::Reader::from_path(&path).map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))?;
        for (line, rec) in reader.records().enumerate() {
            let parse = |m: String| Error::Parse {
                path: path.clone(),
                line: line + 2,
                message: m,
            };
            let rec = rec.map_err(|e| parse(e.to_string()))?;
            let node = |k: usize| {
                index
                    .get(&rec[k])
                    .copied()
                    .ok_or_else(|| parse(format!("unknown domain {}", &rec[k])))
            };
            let count: u64 = rec[2].parse().map_err(|_| parse(format!("bad count {:?}", &rec[2])))?;
            rows[node(0)?].push((node(1)?, count));
        }
        let n = nodes.len();
        drop(index);
        Ok(DomainGraph::from_counts(nodes, SparseRows::new(rows, n)))
    }

    pub fn textembed(&self) -> Result<()> {
        let summary = self.summary()?;
        let patents = read_patents(&self.config.paths.patents)?;
        let index: std::collections::HashMap<&str, usize> = summary
            .domains
            .iter()
            .enumerate()
            .map(|(i, c)| (c.as_str(), i))
            .collect();
        let assignment = patents
            .iter()
            .map(|p| {
                index
                    .get(p.domain.as_str())
                    .copied()
                    .ok_or_else(|| Error::UnknownDomains(vec![p.domain.clone()]))
            })
            .collect::<Result<Vec<_>>>()?;
        let docs: Vec<Vec<String>> = patents.iter().map(|p| tokenize(&p.text())).collect();
        let model = textembed::train_doc_vectors(&docs, &self.config.text)?;
        let features = textembed::domain_features(&model.doc_vectors, &assignment, &summary.domains)?;

        let ids = patents.iter().map(|p| p.id.clone()).collect();
        LabelledTable::numbered("id", "t", ids, model.doc_vectors.clone())
            .write(&self.artifact(files::PATENT_VECTORS))?;
        LabelledTable::numbered("code", "t", features.codes.clone(), features.vectors)
            .write(&self.artifact(files::DOMAIN_FEATURES))?;
        let mut vocab = String::from("word\tcount\n");
        for i in 0..model.vocab.len() {
            writeln!(vocab, "{}\t{}", model.vocab.word(i), model.vocab.count(i)).unwrap();
        }
        write_text(&self.artifact(files::VOCABULARY), &vocab)?;
        write_json(
            &self.artifact(files::TEXTEMBED),
            &TextSummary {
                config: model.config().clone(),
                vocabulary_size: model.vocab.len(),
                epoch_losses: model.epoch_losses.clone(),
            },
        )
    }

    fn read_vocabulary(&self) -> Result<Vocabulary> {
        let path = self.require(files::VOCABULARY, Stage::TextEmbed)?;
        let meta: TextSummary = read_json(&self.require(files::TEXTEMBED, Stage::TextEmbed)?)?;
        let text = io::read_text(&path)?;
        let entries = text
            .lines()
            .enumerate()
            .skip(1)
            .filter(|(_, l)| !l.is_empty())
            .map(|(i, l)| {
                let (w, c) = l.split_once('\t').unwrap_or((l, ""));
                c.parse().map(|c| (w.to_string(), c)).map_err(|_| Error::Parse {
                    path: path.clone(),
                    line: i + 1,
                    message: format!("bad count {c:?}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Vocabulary::from_entries(
            entries,
            meta.config.min_count,
            meta.config.sample,
        ))
    }

    fn read_table(&self, name: &str, stage: Stage, expected: &[String]) -> Result<LabelledTable> {
        let table = LabelledTable::read(&self.require(name, stage)?)?;
        if table.labels != expected {
            return Err(Error::DomainMismatch(format!(
                "{name} lists {} domains that differ from the ingested {}; rerun {}",
                table.labels.len(),
                expected.len(),
                stage.name()
            )));
        }
        Ok(table)
    }

    pub fn graphembed(&self) -> Result<()> {
        let summary = self.summary()?;
        let features = self.read_table(files::DOMAIN_FEATURES, Stage::TextEmbed, &summary.domains)?;
        let features = SemanticFeatures {
            codes: features.labels,
            vectors: features.values,
        };
        let graph = self.read_graph(summary.domains)?;
        let nb = neighborhoods(&graph, self.config.graph.direction);
        let out = graphembed::train(&graph, &nb, &features, &self.config.sage)?;
        let emb = &out.embeddings;
        LabelledTable::numbered("code", "z", emb.codes.clone(), emb.vectors.clone())
            .write(&self.artifact(files::EMBEDDINGS))?;
        io::write_model(&self.artifact(files::MODEL), &out.model)?;
        write_json(
            &self.artifact(files::GRAPHEMBED),
            &GraphSummary {
                config: self.config.sage.clone(),
                epoch_losses: out.epoch_losses,
                degenerate: (0..emb.len())
                    .filter(|&i| emb.degenerate[i])
                    .map(|i| emb.codes[i].clone())
                    .collect(),
            },
        )
    }

    fn embeddings(&self, domains: &[String]) -> Result<EmbeddingSpace> {
        let t = self.read_table(files::EMBEDDINGS, Stage::GraphEmbed, domains)?;
        let meta: GraphSummary = read_json(&self.require(files::GRAPHEMBED, Stage::GraphEmbed)?)?;
        let degenerate = t.labels.iter().map(|c| meta.degenerate.contains(c)).collect();
        Ok(EmbeddingSpace {
            codes: t.labels,
            vectors: t.values,
            degenerate,
        })
    }

    pub fn project(&self) -> Result<()> {
        let summary = self.summary()?;
        let emb = self.embeddings(&summary.domains)?;
        let points: Vec<Vec<f64>> = emb.vectors.rows().into_iter().map(|r| r.to_vec()).collect();
        let proj = project::tsne(&emb.codes, &points, &self.config.tsne)?;
        let coords = Array2::from_shape_fn((proj.coords.len(), 2), |(i, j)| proj.coords[i][j]);
        LabelledTable::new(vec!["code".into(), "x".into(), "y".into()], proj.codes.clone(), coords)
            .write(&self.artifact(files::PROJECTION))?;
        write_json(
            &self.artifact(files::PROJECTION_META),
            &ProjectionSummary {
                config: proj.config.clone(),
                kl: proj.kl,
                kl_trace: proj.kl_trace,
            },
        )
    }

    fn projection(&self, domains: &[String]) -> Result<Projection2D> {
        let t = self.read_table(files::PROJECTION, Stage::Project, domains)?;
        let meta: ProjectionSummary = read_json(&self.require(files::PROJECTION_META, Stage::Project)?)?;
        Ok(Projection2D {
            coords: t.values.rows().into_iter().map(|r| [r[0], r[1]]).collect(),
            codes: t.labels,
            kl: meta.kl,
            kl_trace: meta.kl_trace,
            config: meta.config,
        })
    }

    pub fn landscape(&self) -> Result<()> {
        let summary = self.summary()?;
        let emb = self.embeddings(&summary.domains)?;
        let proj = self.projection(&summary.domains)?;
        let rates = self.catalog()?.rates_for(&summary.domains)?;
        let cfg = &self.config.landscape;
        let grid = landscape::fit_surface(&proj.coords, &rates, &cfg.surface)?;
        let contours = landscape::export_contours(&grid, &landscape::default_levels(&grid, cfg.contour_levels));
        let m = cfg.peak_size.min(emb.len());
        let peak = landscape::find_peak(&emb, &proj, &rates, m)?;
        write_json(&self.artifact(files::SURFACE), &bundle::SurfaceDoc::from_grid(&grid))?;
        write_json(&self.artifact(files::CONTOURS), &contours)?;
        write_json(&self.artifact(files::PEAK), &peak)
    }

    pub fn analyze(&self) -> Result<()> {
        let summary = self.summary()?;
        let emb = self.embeddings(&summary.domains)?;
        let proj = self.projection(&summary.domains)?;
        let peak: PeakInfo = read_json(&self.require(files::PEAK, Stage::Landscape)?)?;
        let vocab = self.read_vocabulary()?;
        let catalog = self.catalog()?;
        let rates = catalog.rates_for(&summary.domains)?;
        let cfg = &self.config.analysis;

        let distances = analyze::peak_distances(&emb, &proj, &peak, cfg.space);
        let deciles = analyze::distance_deciles(&emb.codes, &distances, &rates, peak.m)?;
        let shift = analyze::nber_shift(&catalog, &emb.codes, &distances, cfg.shift_bins, cfg.binning)?;

        let patents = read_patents(&self.config.paths.patents)?;
        let peak_docs: Vec<_> = patents.iter().filter(|p| peak.members.contains(&p.domain)).collect();
        let ids: Vec<String> = peak_docs.iter().map(|p| p.id.clone()).collect();
        let docs: Vec<Vec<String>> = peak_docs.iter().map(|p| tokenize(&p.text())).collect();
        let topics = analyze::nmf_topics(
            &ids,
            &docs,
            &vocab,
            cfg.topics,
            cfg.nmf_iterations,
            cfg.top_terms,
            cfg.seed,
        )?;

        write_text(&self.artifact(files::DECILES), &io::deciles_csv(&deciles))?;
        write_text(&self.artifact(files::NBER_SHIFT), &io::shift_csv(&shift))?;
        write_json(&self.artifact(files::TOPICS), &topics)?;
        write_json(
            &self.artifact(files::ANALYSIS),
            &AnalysisReport {
                space: cfg.space,
                distances,
                deciles,
                shift,
            },
        )
    }

    /// Assembles the bundle from the artifacts on disk.
    pub fn load_bundle(&self) -> Result<bundle::Bundle> {
        let summary = self.summary()?;
        self.require(files::DOMAIN_FEATURES, Stage::TextEmbed)?;
        let emb = self.embeddings(&summary.domains)?;
        let proj = self.projection(&summary.domains)?;
        let surface: bundle::SurfaceDoc = read_json(&self.require(files::SURFACE, Stage::Landscape)?)?;
        let contours: Vec<ContourLevel> = read_json(&self.require(files::CONTOURS, Stage::Landscape)?)?;
        let peak: PeakInfo = read_json(&self.require(files::PEAK, Stage::Landscape)?)?;
        let report: AnalysisReport = read_json(&self.require(files::ANALYSIS, Stage::Analyze)?)?;
        let topics: TopicSet = read_json(&self.require(files::TOPICS, Stage::Analyze)?)?;
        let catalog = self.catalog()?;
        let mut config = self.config.clone();
        // the output location does not affect results; leaving it out keeps
        // bundles from different directories comparable
        config.paths.out_dir = PathBuf::new();
        bundle::assemble(&Artifacts {
            config: &config,
            catalog: &catalog,
            embeddings: &emb,
            projection: &proj,
            surface: &surface.to_grid(),
            contours: &contours,
            peak: &peak,
            deciles: &report.deciles,
            shift: &report.shift,
            topics: &topics,
        })
    }

    pub fn export(&self) -> Result<()> {
        let b = self.load_bundle()?;
        write_text(&self.artifact(files::BUNDLE), &bundle::to_json(&b)?)
    }
}
