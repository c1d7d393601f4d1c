//! Pipeline configuration, read from TOML. Every field has a default so a
//! config file only needs the values it changes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::analyze::AnalysisConfig;
use crate::corpus::{CountOptions, DirectionPolicy};
use crate::graphembed::SageConfig;
use crate::landscape::SurfaceConfig;
use crate::project::TsneConfig;
use crate::textembed::TextConfig;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    pub patents: PathBuf,
    pub citations: PathBuf,
    pub domains: PathBuf,
    pub out_dir: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            patents: "data/patents.jsonl".into(),
            citations: "data/citations.csv".into(),
            domains: "data/domains.csv".into(),
            out_dir: "out".into(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GraphConfig {
    pub direction: DirectionPolicy,
    #[serde(flatten)]
    pub counts: CountOptions,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LandscapeConfig {
    #[serde(flatten)]
    pub surface: SurfaceConfig,
    /// Number of fastest domains whose centroid marks the peak.
    pub peak_size: usize,
    /// Evenly spaced contour levels between the surface minimum and maximum.
    pub contour_levels: usize,
}

impl Default for LandscapeConfig {
    fn default() -> Self {
        LandscapeConfig {
            surface: SurfaceConfig::default(),
            peak_size: 5,
            contour_levels: 10,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub paths: Paths,
    /// Fixed-order single-worker training wherever a stage offers a choice.
    pub deterministic: bool,
    pub graph: GraphConfig,
    pub text: TextConfig,
    pub sage: SageConfig,
    pub tsne: TsneConfig,
    pub landscape: LandscapeConfig,
    pub analysis: AnalysisConfig,
}

impl PipelineConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Sets every stage seed from one value.
    pub fn set_seed(&mut self, seed: u64) {
        self.text.seed = seed;
        self.sage.seed = seed;
        self.tsne.seed = seed;
        self.analysis.seed = seed;
    }

    pub fn set_deterministic(&mut self, on: bool) {
        self.deterministic = on;
        self.text.deterministic = on || self.text.deterministic;
    }

    /// Checks parameter ranges. Input paths are checked when a stage reads them.
    pub fn validate(&self) -> Result<()> {
        self.sage.validate()?;
        let t = &self.text;
        if t.dim == 0 || t.epochs == 0 || t.lr <= 0.0 || t.batch_docs == 0 {
            return Err(Error::Config(
                "text: dim, epochs, lr and batch_docs must be positive".into(),
            ));
        }
        if !(self.tsne.perplexity > 0.0) || self.tsne.iterations == 0 {
            return Err(Error::Config("tsne: perplexity and iterations must be positive".into()));
        }
        let l = &self.landscape;
        if l.surface.nx < 2 || l.surface.ny < 2 {
            return Err(Error::Config("landscape: nx and ny must be at least 2".into()));
        }
        if l.surface.bandwidth.is_some_and(|b| !(b > 0.0)) {
            return Err(Error::Config("landscape: bandwidth must be positive".into()));
        }
        if l.peak_size == 0 {
            return Err(Error::Config("landscape: peak_size must be at least 1".into()));
        }
        let a = &self.analysis;
        if a.shift_bins < 2 || a.topics == 0 || a.top_terms == 0 {
            return Err(Error::Config(
                "analysis: shift_bins ≥ 2, topics ≥ 1 and top_terms ≥ 1 required".into(),
            ));
        }
        Ok(())
    }
}
