//! Full-pipeline configuration, whole-dataset training, and the persisted
//! model bundle.
//!
//! A bundle is a single versioned JSON document holding the effective
//! configuration, the topic model, the autoencoder stack, the discriminant,
//! and a hash of the stop-word list bytes. Loading verifies the version, the
//! stop-word hash, and that all component dimensions agree before anything
//! can be scored.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{load_stopwords, to_bow, tokenize, ClassLabel, RawMessage};
use crate::detector::{fit_fda_with, score_message, FdaModel, ScoredMessage, ThresholdRule};
use crate::error::{Error, Result};
use crate::lda::{self, infer, LdaConfig, TopicModel};
use crate::sda::{train_stack, SdaConfig, SdaModel};
use crate::seeds::derive_seed;

pub const BUNDLE_FORMAT_VERSION: u32 = 1;

/// Everything needed to reproduce a training run. `seed` is the master
/// seed: training and cross-validation derive all component seeds from it,
/// overriding the per-component seed fields, which only matter when the
/// component trainers are called directly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub lda: LdaConfig,
    pub sda: SdaConfig,
    /// Autoencoder layer sizes, input first. The input size must equal the
    /// topic count.
    pub sizes: Vec<usize>,
    pub folds: usize,
    pub seed: u64,
    /// Train the autoencoder on ham-only topic vectors instead of all
    /// training vectors.
    pub sda_ham_only: bool,
    /// Where the discriminant places its threshold.
    #[serde(default)]
    pub fda_threshold: ThresholdRule,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            lda: LdaConfig::with_topics(60),
            sda: SdaConfig::default(),
            sizes: vec![60, 100, 150],
            folds: 10,
            seed: 42,
            sda_ham_only: false,
            fda_threshold: ThresholdRule::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.lda.validate()?;
        self.sda.validate()?;
        if self.sizes.len() < 2 {
            return Err(Error::Config("need an input size and at least one hidden size".into()));
        }
        if self.sizes[0] != self.lda.topics {
            return Err(Error::Config(format!(
                "autoencoder input size {} must equal the topic count {}",
                self.sizes[0], self.lda.topics
            )));
        }
        if self.folds < 2 {
            return Err(Error::Config("need at least 2 folds".into()));
        }
        Ok(())
    }
}

/// A trained pipeline ready to score messages.
#[derive(Debug)]
pub struct TrainedPipeline {
    pub config: PipelineConfig,
    pub topic_model: TopicModel,
    pub sda: SdaModel,
    pub fda: FdaModel,
    stopword_text: String,
    stopwords: HashSet<String>,
}

impl TrainedPipeline {
    pub fn stopwords(&self) -> &HashSet<String> {
        &self.stopwords
    }

    pub fn score(&self, text: &str) -> Result<ScoredMessage> {
        score_message(
            &self.topic_model,
            &self.sda,
            &self.fda,
            &self.config.lda,
            text,
            &self.stopwords,
        )
    }

    pub fn into_bundle(self) -> Bundle {
        Bundle {
            format_version: BUNDLE_FORMAT_VERSION,
            config: self.config,
            stopwords_fnv1a64: format!("{:016x}", fnv1a64(self.stopword_text.as_bytes())),
            topic_model: self.topic_model,
            sda: self.sda,
            fda: self.fda,
        }
    }
}

/// Train on the whole dataset: topic model on spam-only text, autoencoder on
/// every training message's topic vector (ham-only behind the config
/// switch), discriminant on the labeled reconstruction errors.
pub fn train_pipeline(
    messages: &[RawMessage],
    config: &PipelineConfig,
    stopword_text: &str,
) -> Result<TrainedPipeline> {
    config.validate()?;
    let stopwords = load_stopwords(stopword_text);
    let tokenized: Vec<_> = messages
        .iter()
        .map(|m| tokenize(&m.text, &stopwords))
        .collect();

    let spam_docs: Vec<_> = messages
        .iter()
        .zip(&tokenized)
        .filter(|(m, _)| m.label == ClassLabel::Spam)
        .map(|(_, t)| t.clone())
        .collect();
    let vocab = crate::corpus::build_vocabulary(&spam_docs);
    let spam_bows: Vec<_> = spam_docs.iter().map(|d| to_bow(d, &vocab)).collect();

    let mut effective = config.clone();
    effective.lda.seed = derive_seed(config.seed, 1);
    effective.sda.seed = derive_seed(config.seed, 2);

    let topic_model = lda::fit(&spam_bows, vocab, &effective.lda)?;

    let thetas: Vec<Vec<f64>> = tokenized
        .iter()
        .map(|t| {
            let bow = to_bow(t, topic_model.vocabulary());
            infer(&topic_model, &bow, &effective.lda).theta
        })
        .collect();

    let sda_inputs: Vec<Vec<f64>> = if config.sda_ham_only {
        thetas
            .iter()
            .zip(messages)
            .filter(|(_, m)| m.label == ClassLabel::Ham)
            .map(|(t, _)| t.clone())
            .collect()
    } else {
        thetas.clone()
    };
    let sda = train_stack(&sda_inputs, &effective.sizes, &effective.sda)?;

    let re_features: Vec<Vec<f64>> = thetas
        .iter()
        .map(|t| vec![sda.reconstruction_error(t)])
        .collect();
    let labels: Vec<ClassLabel> = messages.iter().map(|m| m.label).collect();
    let fda = fit_fda_with(&re_features, &labels, config.fda_threshold)?;

    Ok(TrainedPipeline {
        config: effective,
        topic_model,
        sda,
        fda,
        stopword_text: stopword_text.to_string(),
        stopwords,
    })
}

/// The persisted container. Field names are part of the on-disk contract and
/// are documented in the README.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bundle {
    pub format_version: u32,
    pub config: PipelineConfig,
    pub stopwords_fnv1a64: String,
    pub topic_model: TopicModel,
    pub sda: SdaModel,
    pub fda: FdaModel,
}

impl Bundle {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Bundle> {
        let text = fs::read_to_string(path)?;
        let bundle: Bundle = serde_json::from_str(&text)?;
        if bundle.format_version != BUNDLE_FORMAT_VERSION {
            return Err(Error::Bundle(format!(
                "unsupported bundle format version {} (expected {})",
                bundle.format_version, BUNDLE_FORMAT_VERSION
            )));
        }
        Ok(bundle)
    }

    /// Rebuild a scoring pipeline. The provided stop-word list must hash to
    /// the recorded value and every stored dimension must agree.
    pub fn into_pipeline(self, stopword_text: &str) -> Result<TrainedPipeline> {
        let hash = format!("{:016x}", fnv1a64(stopword_text.as_bytes()));
        if hash != self.stopwords_fnv1a64 {
            return Err(Error::Bundle(format!(
                "stop-word list hash {hash} does not match bundle ({})",
                self.stopwords_fnv1a64
            )));
        }
        if self.topic_model.topics() != self.config.lda.topics {
            return Err(Error::Bundle("topic model disagrees with config topic count".into()));
        }
        if !self.topic_model.counts_consistent() {
            return Err(Error::Bundle("topic model counts are inconsistent".into()));
        }
        if !self.sda.dimensions_consistent() || self.sda.sizes() != self.config.sizes {
            return Err(Error::Bundle("autoencoder layer sizes are inconsistent".into()));
        }
        if self.topic_model.topics() != self.sda.input_size() {
            return Err(Error::Bundle(
                "topic count does not match autoencoder input size".into(),
            ));
        }
        if self.fda.dimension() != 1 {
            return Err(Error::Bundle(
                "discriminant dimension must be 1 (scalar reconstruction error)".into(),
            ));
        }
        Ok(TrainedPipeline {
            config: self.config,
            topic_model: self.topic_model,
            sda: self.sda,
            fda: self.fda,
            stopword_text: stopword_text.to_string(),
            stopwords: load_stopwords(stopword_text),
        })
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
