//! Run configuration: a flat JSON object with dotted keys mirroring the
//! module configs. Unknown keys are rejected before any work starts, and
//! every default equals the published hyperparameters.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sector::corpus::SyntheticConfig;
use sector::encode::{EncoderConfig, EncoderKind};
use sector::segment::{SegConfig, Strategy};
use sector::topicnet::{LossKind, RankingParams, TaskKind, TrainConfig};
use sector::{Error, Result};
use serde_json::Value;

#[derive(Debug, Clone)]
pub struct Paths {
    pub corpus: Option<PathBuf>,
    pub train: Option<PathBuf>,
    pub validation: Option<PathBuf>,
    pub test: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub task: TaskKind,
    pub seed: u64,
    pub paths: Paths,
    pub max_sentences: usize,
    pub encoder: EncoderConfig,
    pub train: TrainConfig,
    pub segment: SegConfig,
    pub synth: SyntheticConfig,
    /// The resolved flat key/value view echoed into run manifests.
    pub echo: BTreeMap<String, Value>,
}

fn bad(key: &str, detail: impl std::fmt::Display) -> Error {
    Error::Config(format!("config key '{key}': {detail}"))
}

struct Flat {
    values: BTreeMap<String, Value>,
    used: std::cell::RefCell<std::collections::BTreeSet<String>>,
}

impl Flat {
    fn get(&self, key: &str) -> Option<&Value> {
        self.used.borrow_mut().insert(key.to_string());
        self.values.get(key)
    }

    fn string(&self, key: &str) -> Result<Option<String>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.clone())),
            Some(other) => Err(bad(key, format!("expected a string, got {other}"))),
        }
    }

    fn path(&self, key: &str) -> Result<Option<PathBuf>> {
        Ok(self.string(key)?.map(PathBuf::from))
    }

    fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .map(|x| x as usize)
                .ok_or_else(|| bad(key, format!("expected a non-negative integer, got {v}"))),
        }
    }

    fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_u64()
                .ok_or_else(|| bad(key, format!("expected a non-negative integer, got {v}"))),
        }
    }

    fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .as_f64()
                .ok_or_else(|| bad(key, format!("expected a number, got {v}"))),
        }
    }
}

/// Parse and validate a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
    let root: Value = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("config {} is not valid JSON: {e}", path.display())))?;
    let Value::Object(map) = root else {
        return Err(Error::Config("config root must be a JSON object".into()));
    };
    let flat = Flat {
        values: map.into_iter().collect(),
        used: Default::default(),
    };

    let task = match flat.string("task")?.as_deref() {
        None | Some("single") => TaskKind::Single,
        Some("multi") => TaskKind::Multi,
        Some(other) => return Err(bad("task", format!("expected single|multi, got {other}"))),
    };
    let mut seed = flat.u64_or("seed", 1)?;
    if let Ok(env_seed) = std::env::var("SECTOR_SEED") {
        seed = env_seed
            .parse::<u64>()
            .map_err(|_| Error::Config(format!("SECTOR_SEED is not an integer: {env_seed}")))?;
    }

    let paths = Paths {
        corpus: flat.path("paths.corpus")?,
        train: flat.path("paths.train")?,
        validation: flat.path("paths.validation")?,
        test: flat.path("paths.test")?,
        embeddings: flat.path("paths.embeddings")?,
        output_dir: flat
            .path("paths.output_dir")?
            .unwrap_or_else(|| PathBuf::from("out")),
    };

    let encoder = EncoderConfig {
        variant: flat
            .string("encoder.variant")?
            .as_deref()
            .unwrap_or("bloom")
            .parse::<EncoderKind>()?,
        bloom_size: flat.usize_or("encoder.bloom_size", 4096)?,
        bloom_hashes: flat.usize_or("encoder.bloom_hashes", 5)?,
        sif_alpha: flat.f64_or("encoder.sif_alpha", 1e-4)?,
        max_vocab: flat.usize_or("encoder.max_vocab", 50_000)?,
        min_count: flat.usize_or("encoder.min_count", 1)?,
    };

    let defaults = TrainConfig::default();
    let loss = match flat.string("train.loss")?.as_deref() {
        None => None,
        Some(s) => Some(s.parse::<LossKind>()?),
    };
    let train = TrainConfig {
        hidden: flat.usize_or("train.hidden", defaults.hidden)?,
        embedding: flat.usize_or("train.embedding", defaults.embedding)?,
        batch_size: flat.usize_or("train.batch_size", defaults.batch_size)?,
        learning_rate: flat.f64_or("train.learning_rate", defaults.learning_rate)?,
        dropout: flat.f64_or("train.dropout", defaults.dropout)?,
        beta1: flat.f64_or("train.beta1", defaults.beta1)?,
        beta2: flat.f64_or("train.beta2", defaults.beta2)?,
        epsilon: flat.f64_or("train.epsilon", defaults.epsilon)?,
        patience: flat.usize_or("train.patience", defaults.patience)?,
        max_epochs: flat.usize_or("train.max_epochs", defaults.max_epochs)?,
        loss,
        ranking: RankingParams {
            gamma: flat.f64_or("train.ranking_gamma", 2.0)?,
            margin_pos: flat.f64_or("train.margin_pos", 2.5)?,
            margin_neg: flat.f64_or("train.margin_neg", 0.5)?,
        },
        heading_min_frequency: flat.usize_or("train.heading_min_frequency", 1)?,
        seed,
    };
    if train.patience == 0 {
        return Err(bad("train.patience", "must be at least 1"));
    }
    if !(0.0..1.0).contains(&train.dropout) {
        return Err(bad("train.dropout", "must be in [0, 1)"));
    }

    let segment = SegConfig {
        pca_dims: flat.usize_or("segment.pca_dims", 16)?,
        sigma: flat.f64_or("segment.sigma", 2.5)?,
        strategy: flat
            .string("segment.strategy")?
            .as_deref()
            .unwrap_or("bemd")
            .parse::<Strategy>()?,
    };
    if segment.pca_dims == 0 {
        return Err(bad("segment.pca_dims", "must be at least 1"));
    }
    if segment.sigma <= 0.0 {
        return Err(bad("segment.sigma", "must be positive"));
    }

    let sdef = SyntheticConfig::default();
    let synth = SyntheticConfig {
        topics: flat.usize_or("synth.topics", sdef.topics)?,
        words_per_topic: flat.usize_or("synth.words_per_topic", sdef.words_per_topic)?,
        documents: flat.usize_or("synth.documents", sdef.documents)?,
        segment_sentences: (
            flat.usize_or("synth.segment_sentences_min", sdef.segment_sentences.0)?,
            flat.usize_or("synth.segment_sentences_max", sdef.segment_sentences.1)?,
        ),
        segments_per_document: (
            flat.usize_or("synth.segments_min", sdef.segments_per_document.0)?,
            flat.usize_or("synth.segments_max", sdef.segments_per_document.1)?,
        ),
        words_per_sentence: (
            flat.usize_or("synth.words_min", sdef.words_per_sentence.0)?,
            flat.usize_or("synth.words_max", sdef.words_per_sentence.1)?,
        ),
        concentration: flat.f64_or("synth.concentration", sdef.concentration)?,
        seed,
    };
    if synth.topics < 2 {
        return Err(bad("synth.topics", "need at least 2 topics"));
    }

    let max_sentences = flat.usize_or("corpus.max_sentences", 512)?;

    // Reject unknown keys.
    let used = flat.used.borrow();
    for key in flat.values.keys() {
        if !used.contains(key) {
            return Err(Error::Config(format!("unknown config key '{key}'")));
        }
    }

    let mut echo = flat.values.clone();
    echo.insert("seed".into(), Value::from(seed));

    Ok(RunConfig {
        task,
        seed,
        paths,
        max_sentences,
        encoder,
        train,
        segment,
        synth,
        echo,
    })
}

impl RunConfig {
    /// Check that every referenced path exists (run before expensive work).
    pub fn validate_paths(&self, require_dataset: bool) -> Result<()> {
        let check = |label: &str, p: &Option<PathBuf>| -> Result<()> {
            if let Some(p) = p {
                if !p.exists() {
                    return Err(Error::Config(format!(
                        "{label} path does not exist: {}",
                        p.display()
                    )));
                }
            }
            Ok(())
        };
        check("paths.corpus", &self.paths.corpus)?;
        check("paths.train", &self.paths.train)?;
        check("paths.validation", &self.paths.validation)?;
        check("paths.test", &self.paths.test)?;
        check("paths.embeddings", &self.paths.embeddings)?;
        if require_dataset && self.paths.corpus.is_none() && self.paths.train.is_none() {
            return Err(Error::Config(
                "config needs paths.corpus or explicit paths.train/paths.validation/paths.test".into(),
            ));
        }
        if self.encoder.variant == EncoderKind::Emb && self.paths.embeddings.is_none() {
            return Err(Error::Config(
                "encoder.variant = emb requires paths.embeddings".into(),
            ));
        }
        Ok(())
    }
}
