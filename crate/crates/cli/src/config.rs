//! Pipeline configuration: a TOML file plus command-line overrides
//! (--seed, --out-dir, --profile), resolved into absolute paths and
//! concrete hyperparameters.
//!
//! Relative input paths are resolved against the config file's
//! directory, so the shipped configs work from any working directory.
//! Output locations live under the out dir (default
//! `runs/<config-stem>/`).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use lifetag_core::corpus::{CaseStudy, Label};
use lifetag_core::lexicon::DEFAULT_NEGATION_WINDOW;
use lifetag_core::model::Arch;

use crate::error::CliError;

/// Learning-rate profile. The paper profile keeps the published
/// fine-tuning rate 2e-5; the desk profile uses 1e-3, suited to training
/// the small encoder from scratch. An explicit `learning_rate` in the
/// config overrides both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Paper,
    Desk,
}

impl Profile {
    pub fn default_learning_rate(self) -> f64 {
        match self {
            Profile::Paper => 2e-5,
            Profile::Desk => 1e-3,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Paper => "paper",
            Profile::Desk => "desk",
        }
    }
}

impl FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "paper" => Ok(Profile::Paper),
            "desk" => Ok(Profile::Desk),
            other => Err(format!("unknown profile {other:?} (expected paper or desk)")),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    case_study: String,
    seed: u64,
    #[serde(default = "default_window")]
    negation_window: usize,
    paths: RawPaths,
    generator: RawGenerator,
    #[serde(default)]
    model: RawModel,
    #[serde(default)]
    train: RawTrain,
}

fn default_window() -> usize {
    DEFAULT_NEGATION_WINDOW
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPaths {
    lexicon: String,
    templates: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGenerator {
    #[serde(default)]
    noise_rate: f64,
    train_counts: BTreeMap<String, usize>,
    gsc_counts: BTreeMap<String, usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawModel {
    max_len: usize,
    embed_dim: usize,
    num_layers: usize,
    num_heads: usize,
    ff_dim: usize,
    dropout_rate: f64,
    arch: String,
}

impl Default for RawModel {
    fn default() -> RawModel {
        RawModel {
            max_len: 50,
            embed_dim: 64,
            num_layers: 2,
            num_heads: 4,
            ff_dim: 128,
            dropout_rate: 0.3,
            arch: "encoder".to_string(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawTrain {
    epochs: usize,
    batch_size: usize,
    learning_rate: Option<f64>,
    train_fraction: f64,
    adam_beta1: f64,
    adam_beta2: f64,
    adam_eps: f64,
}

impl Default for RawTrain {
    fn default() -> RawTrain {
        RawTrain {
            epochs: 10,
            batch_size: 64,
            learning_rate: None,
            train_fraction: 0.9,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_eps: 1e-8,
        }
    }
}

/// Model hyperparameters as configured (vocab and class count are fixed
/// at training time).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelSection {
    pub max_len: usize,
    pub embed_dim: usize,
    pub num_layers: usize,
    pub num_heads: usize,
    pub ff_dim: usize,
    pub dropout_rate: f64,
    pub arch: Arch,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainSection {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub train_fraction: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
}

/// Fully resolved pipeline configuration. Its digest identifies the
/// experiment — every parameter plus the lexicon and template file
/// contents — and is stamped into every output file. Output locations
/// are deliberately not part of the digest, so the same experiment is
/// byte-identical wherever it is written.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub case_study: CaseStudy,
    pub seed: u64,
    pub negation_window: usize,
    pub profile: Profile,
    pub lexicon_path: PathBuf,
    pub templates_path: PathBuf,
    pub out_dir: PathBuf,
    pub noise_rate: f64,
    pub train_counts: BTreeMap<String, usize>,
    pub gsc_counts: BTreeMap<String, usize>,
    pub model: ModelSection,
    pub train: TrainSection,
    digest: String,
}

#[derive(Serialize)]
struct DigestView<'a> {
    case_study: CaseStudy,
    seed: u64,
    negation_window: usize,
    profile: Profile,
    noise_rate: f64,
    train_counts: &'a BTreeMap<String, usize>,
    gsc_counts: &'a BTreeMap<String, usize>,
    model: &'a ModelSection,
    train: &'a TrainSection,
    lexicon_sha256: String,
    templates_sha256: String,
}

fn parse_counts(
    counts: &BTreeMap<String, usize>,
    case_study: CaseStudy,
    section: &str,
) -> Result<BTreeMap<Label, usize>, CliError> {
    let mut out = BTreeMap::new();
    for (key, &value) in counts {
        let label: Label = key
            .parse()
            .map_err(|msg| CliError::Config(format!("[{section}] {msg}")))?;
        if label.case_study() != case_study {
            return Err(CliError::Config(format!(
                "[{section}] label {label} does not belong to case study {case_study}"
            )));
        }
        out.insert(label, value);
    }
    if out.is_empty() {
        return Err(CliError::Config(format!("[{section}] has no classes")));
    }
    Ok(out)
}

impl ResolvedConfig {
    /// Load a config file and apply the command-line overrides.
    pub fn load(
        config_path: &Path,
        seed_override: Option<u64>,
        out_dir_override: Option<PathBuf>,
        profile: Profile,
    ) -> Result<ResolvedConfig, CliError> {
        let text = fs::read_to_string(config_path).map_err(|e| {
            CliError::Config(format!("cannot read config {}: {e}", config_path.display()))
        })?;
        let raw: RawConfig = toml::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", config_path.display())))?;

        let case_study: CaseStudy = raw.case_study.parse().map_err(CliError::Config)?;
        let base = config_path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &str| {
            let path = Path::new(p);
            if path.is_absolute() {
                path.to_path_buf()
            } else {
                base.join(path)
            }
        };
        let lexicon_path = resolve(&raw.paths.lexicon);
        let templates_path = resolve(&raw.paths.templates);
        for (name, path) in [("lexicon", &lexicon_path), ("templates", &templates_path)] {
            if !path.is_file() {
                return Err(CliError::Config(format!(
                    "{name} file not found: {}",
                    path.display()
                )));
            }
        }

        let stem = config_path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "run".to_string());
        let out_dir = out_dir_override.unwrap_or_else(|| PathBuf::from("runs").join(stem));

        let arch = match raw.model.arch.as_str() {
            "encoder" => Arch::Encoder,
            "bag_of_embeddings" => Arch::BagOfEmbeddings,
            other => {
                return Err(CliError::Config(format!(
                    "[model] unknown arch {other:?} (expected encoder or bag_of_embeddings)"
                )))
            }
        };
        if !(0.0..=1.0).contains(&raw.generator.noise_rate) {
            return Err(CliError::Config(format!(
                "[generator] noise_rate {} not in [0, 1]",
                raw.generator.noise_rate
            )));
        }
        if !(raw.train.train_fraction > 0.0 && raw.train.train_fraction < 1.0) {
            return Err(CliError::Config(format!(
                "[train] train_fraction {} not in (0, 1)",
                raw.train.train_fraction
            )));
        }

        let model = ModelSection {
            max_len: raw.model.max_len,
            embed_dim: raw.model.embed_dim,
            num_layers: raw.model.num_layers,
            num_heads: raw.model.num_heads,
            ff_dim: raw.model.ff_dim,
            dropout_rate: raw.model.dropout_rate,
            arch,
        };
        let train = TrainSection {
            epochs: raw.train.epochs,
            batch_size: raw.train.batch_size,
            learning_rate: raw
                .train
                .learning_rate
                .unwrap_or_else(|| profile.default_learning_rate()),
            train_fraction: raw.train.train_fraction,
            adam_beta1: raw.train.adam_beta1,
            adam_beta2: raw.train.adam_beta2,
            adam_eps: raw.train.adam_eps,
        };
        let seed = seed_override.unwrap_or(raw.seed);
        let view = DigestView {
            case_study,
            seed,
            negation_window: raw.negation_window,
            profile,
            noise_rate: raw.generator.noise_rate,
            train_counts: &raw.generator.train_counts,
            gsc_counts: &raw.generator.gsc_counts,
            model: &model,
            train: &train,
            lexicon_sha256: file_digest(&lexicon_path)?,
            templates_sha256: file_digest(&templates_path)?,
        };
        let digest = hex_digest(
            serde_json::to_string(&view)
                .expect("digest view serializes")
                .as_bytes(),
        );

        let config = ResolvedConfig {
            case_study,
            seed,
            negation_window: raw.negation_window,
            profile,
            lexicon_path,
            templates_path,
            out_dir,
            noise_rate: raw.generator.noise_rate,
            train_counts: raw.generator.train_counts,
            gsc_counts: raw.generator.gsc_counts,
            model,
            train,
            digest,
        };
        // validate the count tables eagerly
        config.train_label_counts()?;
        config.gsc_label_counts()?;
        Ok(config)
    }

    pub fn train_label_counts(&self) -> Result<BTreeMap<Label, usize>, CliError> {
        parse_counts(&self.train_counts, self.case_study, "generator.train_counts")
    }

    pub fn gsc_label_counts(&self) -> Result<BTreeMap<Label, usize>, CliError> {
        parse_counts(&self.gsc_counts, self.case_study, "generator.gsc_counts")
    }

    /// Hex SHA-256 identifying the experiment: every parameter plus the
    /// lexicon and template file contents. Stamped into every output
    /// file.
    pub fn digest(&self) -> String {
        self.digest.clone()
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.out_dir.join("corpus")
    }

    pub fn train_gold_path(&self) -> PathBuf {
        self.corpus_dir().join("train_gold.tsv")
    }

    pub fn gsc_path(&self) -> PathBuf {
        self.corpus_dir().join("gsc.tsv")
    }

    pub fn train_weak_path(&self) -> PathBuf {
        self.corpus_dir().join("train_weak.tsv")
    }

    pub fn train_split_path(&self) -> PathBuf {
        self.corpus_dir().join("train_split.tsv")
    }

    pub fn valid_split_path(&self) -> PathBuf {
        self.corpus_dir().join("valid_split.tsv")
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.out_dir.join("model.ckpt")
    }

    pub fn history_path(&self) -> PathBuf {
        self.out_dir.join("history.json")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.out_dir.join("report")
    }
}

pub fn hex_digest(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let out = hasher.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<String, CliError> {
    Ok(hex_digest(&fs::read(path)?))
}
