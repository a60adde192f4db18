//! Latent Dirichlet allocation trained by collapsed Gibbs sampling.
//!
//! Training integrates out the topic and word distributions and resamples
//! one token's topic at a time from
//!
//! ```text
//! P(z_i = k | rest) ∝ (n_dk + α) · (n_kw + β) / (n_k + V·β)
//! ```
//!
//! where the counts exclude the token being resampled. Inference for a new
//! message folds the message in against frozen model counts and reports the
//! smoothed topic proportions averaged over the post-burn-in sweeps.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{BagOfWords, Vocabulary};
use crate::error::{Error, Result};

/// Sampler settings. `seed` drives both training and fold-in inference;
/// inference re-seeds per call so repeated scoring of the same message is
/// reproducible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LdaConfig {
    pub topics: usize,
    pub alpha: f64,
    pub beta: f64,
    pub train_iters: usize,
    pub infer_iters: usize,
    pub infer_burn: usize,
    pub seed: u64,
}

impl LdaConfig {
    /// Defaults for a given topic count: α = 50/K, β = 0.01, 1000 training
    /// sweeps, 100 inference sweeps with 50 discarded as burn-in.
    pub fn with_topics(topics: usize) -> Self {
        LdaConfig {
            topics,
            alpha: 50.0 / topics.max(1) as f64,
            beta: 0.01,
            train_iters: 1000,
            infer_iters: 100,
            infer_burn: 50,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.topics < 1 {
            return Err(Error::Config("topic count must be at least 1".into()));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0)
            || !(self.beta.is_finite() && self.beta > 0.0)
        {
            return Err(Error::Config("alpha and beta must be positive".into()));
        }
        if self.train_iters < 1 {
            return Err(Error::Config("train_iters must be at least 1".into()));
        }
        if self.infer_iters <= self.infer_burn {
            return Err(Error::Config(
                "infer_iters must exceed infer_burn".into(),
            ));
        }
        Ok(())
    }
}

impl Default for LdaConfig {
    fn default() -> Self {
        LdaConfig::with_topics(60)
    }
}

/// Per-message topic proportions; entries sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicVector {
    pub theta: Vec<f64>,
}

/// Trained topic model: topic-word counts plus the smoothing priors.
/// `topic_word` has one row of vocabulary counts per topic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicModel {
    topics: usize,
    alpha: f64,
    beta: f64,
    vocabulary: Vocabulary,
    topic_word: Vec<Vec<u32>>,
    topic_totals: Vec<u32>,
}

impl TopicModel {
    pub(crate) fn from_counts(
        vocabulary: Vocabulary,
        alpha: f64,
        beta: f64,
        topic_word: Vec<Vec<u32>>,
        topic_totals: Vec<u32>,
    ) -> Self {
        TopicModel {
            topics: topic_word.len(),
            alpha,
            beta,
            vocabulary,
            topic_word,
            topic_totals,
        }
    }

    pub fn topics(&self) -> usize {
        self.topics
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocabulary
    }

    /// Smoothed word probability φ_k(w) = (n_kw + β) / (n_k + V·β).
    pub fn phi(&self, topic: usize, word: u32) -> f64 {
        let v = self.vocabulary.len() as f64;
        (self.topic_word[topic][word as usize] as f64 + self.beta)
            / (self.topic_totals[topic] as f64 + v * self.beta)
    }

    /// Top-`n` words of a topic by φ, descending, ties broken by ascending
    /// word id. Asking for more words than the vocabulary holds returns all
    /// of them.
    pub fn top_words(&self, topic: usize, n: usize) -> Result<Vec<(String, f64)>> {
        if topic >= self.topics {
            return Err(Error::Config(format!(
                "topic index {topic} out of range (model has {} topics)",
                self.topics
            )));
        }
        let mut ranked: Vec<(u32, f64)> = (0..self.vocabulary.len() as u32)
            .map(|w| (w, self.phi(topic, w)))
            .collect();
        ranked.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .expect("phi values are finite")
                .then(a.0.cmp(&b.0))
        });
        Ok(ranked
            .into_iter()
            .take(n)
            .map(|(w, p)| (self.vocabulary.word(w).to_string(), p))
            .collect())
    }

    /// Sanity check used by consistency validation: counts in each row must
    /// add up to the row total.
    pub fn counts_consistent(&self) -> bool {
        self.topic_word.len() == self.topics
            && self.topic_totals.len() == self.topics
            && self
                .topic_word
                .iter()
                .zip(&self.topic_totals)
                .all(|(row, &total)| {
                    row.len() == self.vocabulary.len()
                        && row.iter().map(|&c| c as u64).sum::<u64>() == total as u64
                })
    }
}

/// The collapsed Gibbs chain over token-topic assignments. `fit` drives it
/// internally; it is public so the sampler's state distribution can be
/// compared against exact enumeration on toy corpora.
pub struct GibbsChain {
    topics: usize,
    vocab_size: usize,
    alpha: f64,
    beta: f64,
    docs: Vec<Vec<u32>>,
    assignments: Vec<Vec<u32>>,
    doc_topic: Vec<Vec<u32>>,
    topic_word: Vec<u32>,
    topic_totals: Vec<u32>,
    rng: ChaCha8Rng,
    weights: Vec<f64>,
}

impl GibbsChain {
    /// Build a chain with uniformly random initial assignments. Empty bags
    /// contribute no token positions and are dropped. Token positions within
    /// a document are enumerated word-id-ascending, repeated by count.
    pub fn new(bows: &[BagOfWords], vocab_size: usize, config: &LdaConfig) -> Self {
        let topics = config.topics;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let mut docs = Vec::new();
        for bow in bows {
            if bow.is_empty() {
                continue;
            }
            let mut tokens = Vec::with_capacity(bow.total as usize);
            for &(word, count) in &bow.entries {
                debug_assert!((word as usize) < vocab_size);
                for _ in 0..count {
                    tokens.push(word);
                }
            }
            docs.push(tokens);
        }

        let mut doc_topic = vec![vec![0u32; topics]; docs.len()];
        let mut topic_word = vec![0u32; topics * vocab_size];
        let mut topic_totals = vec![0u32; topics];
        let mut assignments = Vec::with_capacity(docs.len());
        for (d, tokens) in docs.iter().enumerate() {
            let mut z_d = Vec::with_capacity(tokens.len());
            for &word in tokens {
                let k = rng.gen_range(0..topics);
                z_d.push(k as u32);
                doc_topic[d][k] += 1;
                topic_word[k * vocab_size + word as usize] += 1;
                topic_totals[k] += 1;
            }
            assignments.push(z_d);
        }

        GibbsChain {
            topics,
            vocab_size,
            alpha: config.alpha,
            beta: config.beta,
            docs,
            assignments,
            doc_topic,
            topic_word,
            topic_totals,
            rng,
            weights: vec![0.0; topics],
        }
    }

    /// One full sweep: every token position resampled once, in document and
    /// position order.
    pub fn sweep(&mut self) {
        let v_beta = self.vocab_size as f64 * self.beta;
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let word = self.docs[d][i] as usize;
                let old = self.assignments[d][i] as usize;
                self.doc_topic[d][old] -= 1;
                self.topic_word[old * self.vocab_size + word] -= 1;
                self.topic_totals[old] -= 1;

                let mut total = 0.0;
                for k in 0..self.topics {
                    let w = (self.doc_topic[d][k] as f64 + self.alpha)
                        * (self.topic_word[k * self.vocab_size + word] as f64 + self.beta)
                        / (self.topic_totals[k] as f64 + v_beta);
                    self.weights[k] = w;
                    total += w;
                }
                let mut u = self.rng.gen::<f64>() * total;
                let mut new = self.topics - 1;
                for (k, &w) in self.weights.iter().enumerate() {
                    u -= w;
                    if u <= 0.0 {
                        new = k;
                        break;
                    }
                }

                self.assignments[d][i] = new as u32;
                self.doc_topic[d][new] += 1;
                self.topic_word[new * self.vocab_size + word] += 1;
                self.topic_totals[new] += 1;
            }
        }
    }

    /// Current assignment of every token position, flattened in document
    /// order.
    pub fn assignments(&self) -> impl Iterator<Item = u32> + '_ {
        self.assignments.iter().flatten().copied()
    }

    pub fn total_positions(&self) -> usize {
        self.docs.iter().map(Vec::len).sum()
    }

    pub fn topic_totals(&self) -> &[u32] {
        &self.topic_totals
    }

    /// n_k recomputed from the topic-word table, for conservation checks.
    pub fn topic_totals_from_words(&self) -> Vec<u64> {
        (0..self.topics)
            .map(|k| {
                self.topic_word[k * self.vocab_size..(k + 1) * self.vocab_size]
                    .iter()
                    .map(|&c| c as u64)
                    .sum()
            })
            .collect()
    }

    fn into_model(self, vocabulary: Vocabulary) -> TopicModel {
        let topic_word = (0..self.topics)
            .map(|k| self.topic_word[k * self.vocab_size..(k + 1) * self.vocab_size].to_vec())
            .collect();
        TopicModel::from_counts(
            vocabulary,
            self.alpha,
            self.beta,
            topic_word,
            self.topic_totals,
        )
    }
}

/// Train a topic model. Sweep order and all random draws are fully
/// determined by `config.seed`.
pub fn fit(bows: &[BagOfWords], vocabulary: Vocabulary, config: &LdaConfig) -> Result<TopicModel> {
    config.validate()?;
    if vocabulary.is_empty() {
        return Err(Error::Config("cannot fit a topic model on an empty vocabulary".into()));
    }
    if !bows.iter().any(|b| b.total > 0) {
        return Err(Error::Config("cannot fit a topic model on an empty corpus".into()));
    }
    if bows
        .iter()
        .flat_map(|b| &b.entries)
        .any(|&(w, _)| w as usize >= vocabulary.len())
    {
        return Err(Error::Config("bag of words references an id outside the vocabulary".into()));
    }

    let mut chain = GibbsChain::new(bows, vocabulary.len(), config);
    for _ in 0..config.train_iters {
        chain.sweep();
    }
    Ok(chain.into_model(vocabulary))
}

/// Fold-in inference against frozen model counts. New tokens never touch the
/// model's tables; θ_k is (n_dk + α) / (N_d + K·α) averaged over post-burn-in
/// sweeps. An empty bag yields the uniform vector.
pub fn infer(model: &TopicModel, bow: &BagOfWords, config: &LdaConfig) -> TopicVector {
    let k = model.topics;
    if bow.is_empty() {
        return TopicVector {
            theta: vec![1.0 / k as f64; k],
        };
    }

    let mut tokens = Vec::with_capacity(bow.total as usize);
    for &(word, count) in &bow.entries {
        for _ in 0..count {
            tokens.push(word);
        }
    }
    let n_d = tokens.len() as f64;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut doc_topic = vec![0u32; k];
    let mut assignments = Vec::with_capacity(tokens.len());
    for _ in &tokens {
        let z = rng.gen_range(0..k);
        assignments.push(z);
        doc_topic[z] += 1;
    }

    let mut weights = vec![0.0; k];
    let mut theta_acc = vec![0.0; k];
    let denom = n_d + k as f64 * model.alpha;
    for sweep in 0..config.infer_iters {
        for (i, &word) in tokens.iter().enumerate() {
            let old = assignments[i];
            doc_topic[old] -= 1;
            let mut total = 0.0;
            for (t, w) in weights.iter_mut().enumerate() {
                *w = (doc_topic[t] as f64 + model.alpha) * model.phi(t, word);
                total += *w;
            }
            let mut u = rng.gen::<f64>() * total;
            let mut new = k - 1;
            for (t, &w) in weights.iter().enumerate() {
                u -= w;
                if u <= 0.0 {
                    new = t;
                    break;
                }
            }
            assignments[i] = new;
            doc_topic[new] += 1;
        }
        if sweep >= config.infer_burn {
            for (t, acc) in theta_acc.iter_mut().enumerate() {
                *acc += (doc_topic[t] as f64 + model.alpha) / denom;
            }
        }
    }

    let samples = (config.infer_iters - config.infer_burn) as f64;
    TopicVector {
        theta: theta_acc.into_iter().map(|t| t / samples).collect(),
    }
}
