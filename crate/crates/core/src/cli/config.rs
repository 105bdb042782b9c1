use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{build_urm, synthetic, DatasetFormat, Urm, MIN_INTERACTIONS};
use crate::error::{Error, Result};
use crate::evaluation::{DEFAULT_BUCKET_EDGES, DEFAULT_CUTOFFS};
use crate::model::Mode;
use crate::search::SearchSpace;
use crate::training::{DiscKind, TrainConfig};

/// Where interactions come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceFormat {
    Ml1m,
    Hetrec,
    Lastfm,
    /// A cache written by `ingest`.
    Urm,
    /// Disjoint fully dense user/item blocks, generated in memory.
    Blocks,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlockSpec {
    pub blocks: usize,
    pub users_per_block: usize,
    pub items_per_block: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetConfig {
    pub name: String,
    pub format: SourceFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub blocks: Option<BlockSpec>,
}

impl DatasetConfig {
    pub fn load(&self) -> Result<Urm> {
        let path = || {
            self.path
                .as_deref()
                .ok_or_else(|| Error::param(format!("dataset '{}' needs a path", self.name)))
        };
        let raw = |f: DatasetFormat| -> Result<Urm> { build_urm(&f.parse(path()?)?, MIN_INTERACTIONS) };
        match self.format {
            SourceFormat::Ml1m => raw(DatasetFormat::MovieLens1M),
            SourceFormat::Hetrec => raw(DatasetFormat::Hetrec),
            SourceFormat::Lastfm => raw(DatasetFormat::Lastfm),
            SourceFormat::Urm => Urm::load(path()?),
            SourceFormat::Blocks => {
                let b = self
                    .blocks
                    .ok_or_else(|| Error::param("blocks dataset needs a [dataset.blocks] table"))?;
                if b.blocks == 0 || b.users_per_block == 0 || b.items_per_block == 0 {
                    return Err(Error::param("block dimensions must be positive"));
                }
                Ok(synthetic::block_urm(b.blocks, b.users_per_block, b.items_per_block))
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    GanmfU,
    GanmfI,
    BinganmfU,
    BinganmfI,
    Toppop,
    Puresvd,
    Itemknn,
    P3alpha,
}

impl ModelKind {
    /// Mode and discriminator for the adversarial variants.
    pub fn adversarial(self) -> Option<(Mode, DiscKind)> {
        match self {
            ModelKind::GanmfU => Some((Mode::User, DiscKind::Energy)),
            ModelKind::GanmfI => Some((Mode::Item, DiscKind::Energy)),
            ModelKind::BinganmfU => Some((Mode::User, DiscKind::Binary)),
            ModelKind::BinganmfI => Some((Mode::Item, DiscKind::Binary)),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::GanmfU => "ganmf-u",
            ModelKind::GanmfI => "ganmf-i",
            ModelKind::BinganmfU => "binganmf-u",
            ModelKind::BinganmfI => "binganmf-i",
            ModelKind::Toppop => "toppop",
            ModelKind::Puresvd => "puresvd",
            ModelKind::Itemknn => "itemknn",
            ModelKind::P3alpha => "p3alpha",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineParams {
    pub svd_k: usize,
    pub knn_neighborhood: usize,
    pub knn_shrink: f64,
    pub p3_neighborhood: usize,
    pub p3_alpha: f64,
}

impl Default for BaselineParams {
    fn default() -> Self {
        Self {
            svd_k: 50,
            knn_neighborhood: 100,
            knn_shrink: 10.0,
            p3_neighborhood: 100,
            p3_alpha: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationParams {
    pub cutoffs: Vec<usize>,
    pub bucket_edges: Vec<usize>,
    /// Pairs drawn for similarity statistics when all pairs would be too many.
    pub similarity_sample: usize,
}

impl Default for EvaluationParams {
    fn default() -> Self {
        Self {
            cutoffs: DEFAULT_CUTOFFS.to_vec(),
            bucket_edges: DEFAULT_BUCKET_EDGES.to_vec(),
            similarity_sample: 1_000_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitParams {
    pub seed: u64,
}

impl Default for SplitParams {
    fn default() -> Self {
        Self { seed: 42 }
    }
}

/// One experiment: data, split, model and every parameter needed to
/// re-run it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub out: PathBuf,
    pub model: ModelKind,
    pub dataset: DatasetConfig,
    #[serde(default)]
    pub split: SplitParams,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub baseline: BaselineParams,
    #[serde(default)]
    pub evaluation: EvaluationParams,
    #[serde(default)]
    pub search: SearchSpace,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))?;
        cfg.resolve()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(format!("config: {e}")))
    }

    /// Makes the training and search sections agree with the model kind,
    /// then validates them.
    pub fn resolve(&mut self) -> Result<()> {
        if let Some((mode, disc)) = self.model.adversarial() {
            self.train.mode = mode;
            self.train.discriminator = disc;
            self.search.mode = mode;
            self.search.discriminator = disc;
        }
        self.train.validate()?;
        self.search.validate()?;
        if self.evaluation.cutoffs.is_empty() || self.evaluation.cutoffs.contains(&0) {
            return Err(Error::param("cutoffs must be positive"));
        }
        Ok(())
    }
}
