use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use tuplesim::classifier::SvmConfig;
use tuplesim::features::{BlockSet, FeatureSpec};
use tuplesim::spaces::GridSpec;
use tuplesim::tasks::SyntheticParams;

use crate::Failure;

/// Everything a run depends on. Read from TOML, then overridden by flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub grid: GridSpec,
    pub build: BuildConfig,
    pub features: FeatureConfig,
    pub svm: SvmConfig,
    pub eval: EvalConfig,
    pub generate: GenerateConfig,
    pub synthetic: SyntheticParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            paths: Paths::default(),
            grid: GridSpec::default(),
            build: BuildConfig::default(),
            features: FeatureConfig::default(),
            svm: SvmConfig::default(),
            eval: EvalConfig::default(),
            generate: GenerateConfig::default(),
            synthetic: SyntheticParams::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub corpus: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lexicon: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spaces: Option<PathBuf>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub questions: Vec<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub paradigms: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub model: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exclude_stems: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BuildConfig {
    /// SVD rank; the largest grid k when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rank: Option<usize>,
    pub verb_window: usize,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            rank: None,
            verb_window: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FeatureConfig {
    /// Comma-separated blocks out of lf, ppmi, dom, fun, or "all".
    pub blocks: String,
    /// Unordered tuple positions whose PPMI features are kept; all when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ppmi_pairs: Option<Vec<[usize; 2]>>,
}

impl Default for FeatureConfig {
    fn default() -> Self {
        FeatureConfig {
            blocks: "all".into(),
            ppmi_pairs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub folds: usize,
    /// Present analogy5 as analogy10 and paraphrase7 as paraphrase14.
    pub expand: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            folds: 10,
            expand: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GenerateConfig {
    pub n_questions: usize,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig { n_questions: 680 }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Failure> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::data(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Failure::usage(format!("bad config {}: {e}", path.display())))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("run config serializes to JSON")
    }

    pub fn blocks(&self) -> Result<BlockSet, Failure> {
        self.features.blocks.parse().map_err(|e| Failure::usage(format!("{e}")))
    }

    /// Feature spec for `n`-tuples over the bundle's grid.
    pub fn feature_spec(&self, n: usize, grid: &GridSpec) -> Result<FeatureSpec, Failure> {
        let spec = FeatureSpec::new(n, grid.clone()).with_blocks(self.blocks()?);
        match &self.features.ppmi_pairs {
            None => Ok(spec),
            Some(pairs) => {
                let pairs: Vec<(usize, usize)> = pairs.iter().map(|&[i, j]| (i, j)).collect();
                spec.with_ppmi_pairs(&pairs).map_err(|e| Failure::usage(format!("{e}")))
            }
        }
    }
}

pub fn require<'a>(p: &'a Option<PathBuf>, what: &str) -> Result<&'a Path, Failure> {
    p.as_deref()
        .ok_or_else(|| Failure::usage(format!("missing {what} path (flag or [paths] in config)")))
}
