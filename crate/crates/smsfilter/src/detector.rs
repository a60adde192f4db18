//! Fisher discriminant on reconstruction-error features and end-to-end
//! message scoring.
//!
//! The pipeline feeds the scalar reconstruction error into a two-class
//! Fisher discriminant, but the fit is implemented for general feature
//! dimension so topic vectors can be classified directly for comparison
//! runs. The learned projection is normalized to unit length; in one
//! dimension the decision reduces to comparing the reconstruction error
//! against the threshold.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;

use crate::corpus::{tokenize, to_bow, ClassLabel};
use crate::error::{Error, Result};
use crate::lda::{infer, LdaConfig, TopicModel, TopicVector};
use crate::sda::SdaModel;

/// Where to place the decision threshold on the projected axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum ThresholdRule {
    /// Midpoint of the projected class means (the classic two-class rule).
    #[default]
    MidpointOfMeans,
    /// Equal-variance Gaussian rule with empirical class priors: the
    /// midpoint shifted by s²·ln(n_ham/n_spam)/(m_spam − m_ham), where s² is
    /// the pooled within-class variance of the projections. With ham in the
    /// majority this demands more evidence before calling spam.
    PriorWeighted,
}

/// Two-class Fisher discriminant: unit projection vector, a threshold on the
/// projected axis, and which side is spam.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FdaModel {
    projection: Vec<f64>,
    threshold: f64,
    spam_is_high: bool,
}

impl FdaModel {
    pub fn projection(&self) -> &[f64] {
        &self.projection
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn spam_is_high(&self) -> bool {
        self.spam_is_high
    }

    pub fn dimension(&self) -> usize {
        self.projection.len()
    }

    /// Spam iff the projected feature lies strictly on the spam side of the
    /// threshold; a feature projecting exactly onto the threshold is ham.
    pub fn classify(&self, feature: &[f64]) -> ClassLabel {
        assert_eq!(feature.len(), self.projection.len(), "classify dimension mismatch");
        let projected = dot(&self.projection, feature);
        let spam = if self.spam_is_high {
            projected > self.threshold
        } else {
            projected < self.threshold
        };
        if spam {
            ClassLabel::Spam
        } else {
            ClassLabel::Ham
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fit with the default midpoint threshold.
pub fn fit_fda(features: &[Vec<f64>], labels: &[ClassLabel]) -> Result<FdaModel> {
    fit_fda_with(features, labels, ThresholdRule::MidpointOfMeans)
}

/// Fit the discriminant: w ∝ S_w⁻¹(μ_spam − μ_ham) with the within-class
/// scatter regularized by ε·I, ε = 1e-9·trace(S_w)/d (floored at 1e-12 when
/// the scatter is identically zero). Requires both classes; inseparable
/// degenerate input (identical class means) is a training error.
pub fn fit_fda_with(
    features: &[Vec<f64>],
    labels: &[ClassLabel],
    rule: ThresholdRule,
) -> Result<FdaModel> {
    if features.len() != labels.len() {
        return Err(Error::Config("feature/label count mismatch".into()));
    }
    let dim = match features.first() {
        Some(f) if !f.is_empty() => f.len(),
        _ => return Err(Error::Config("need at least one nonempty feature vector".into())),
    };
    if features.iter().any(|f| f.len() != dim) {
        return Err(Error::Config("features must share one dimension".into()));
    }

    let mut mean_spam = vec![0.0; dim];
    let mut mean_ham = vec![0.0; dim];
    let mut n_spam = 0usize;
    let mut n_ham = 0usize;
    for (x, &label) in features.iter().zip(labels) {
        let (mean, n) = match label {
            ClassLabel::Spam => (&mut mean_spam, &mut n_spam),
            ClassLabel::Ham => (&mut mean_ham, &mut n_ham),
        };
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v;
        }
        *n += 1;
    }
    if n_spam == 0 || n_ham == 0 {
        return Err(Error::Training("both classes are required to fit the discriminant".into()));
    }
    mean_spam.iter_mut().for_each(|m| *m /= n_spam as f64);
    mean_ham.iter_mut().for_each(|m| *m /= n_ham as f64);

    // Within-class scatter.
    let mut scatter = vec![0.0; dim * dim];
    for (x, &label) in features.iter().zip(labels) {
        let mean = match label {
            ClassLabel::Spam => &mean_spam,
            ClassLabel::Ham => &mean_ham,
        };
        let centered: Vec<f64> = x.iter().zip(mean).map(|(v, m)| v - m).collect();
        for i in 0..dim {
            for j in 0..dim {
                scatter[i * dim + j] += centered[i] * centered[j];
            }
        }
    }
    let trace: f64 = (0..dim).map(|i| scatter[i * dim + i]).sum();
    let mut epsilon = 1e-9 * trace / dim as f64;
    if epsilon <= 0.0 {
        epsilon = 1e-12;
    }
    for i in 0..dim {
        scatter[i * dim + i] += epsilon;
    }

    let delta: Vec<f64> = mean_spam.iter().zip(&mean_ham).map(|(s, h)| s - h).collect();
    let raw = solve(scatter, delta, dim)?;
    let norm = dot(&raw, &raw).sqrt();
    if !(norm.is_finite() && norm > 0.0) {
        return Err(Error::Training(
            "degenerate classes: identical class means give no discriminant direction".into(),
        ));
    }
    let projection: Vec<f64> = raw.into_iter().map(|w| w / norm).collect();

    let proj_spam = dot(&projection, &mean_spam);
    let proj_ham = dot(&projection, &mean_ham);
    // Relative tolerance: means of identical per-class values can land an
    // ulp apart, and a threshold inside that noise would be meaningless.
    let scale = proj_spam.abs().max(proj_ham.abs());
    if (proj_spam - proj_ham).abs() <= 1e-9 * scale {
        return Err(Error::Training(
            "degenerate classes: projected class means coincide".into(),
        ));
    }
    let midpoint = 0.5 * (proj_spam + proj_ham);
    let threshold = match rule {
        ThresholdRule::MidpointOfMeans => midpoint,
        ThresholdRule::PriorWeighted => {
            let pooled: f64 = features
                .iter()
                .zip(labels)
                .map(|(x, &label)| {
                    let m = match label {
                        ClassLabel::Spam => proj_spam,
                        ClassLabel::Ham => proj_ham,
                    };
                    let p = dot(&projection, x);
                    (p - m) * (p - m)
                })
                .sum::<f64>()
                / (features.len() as f64 - 2.0).max(1.0);
            midpoint + pooled * (n_ham as f64 / n_spam as f64).ln() / (proj_spam - proj_ham)
        }
    };
    Ok(FdaModel {
        projection,
        threshold,
        spam_is_high: proj_spam > midpoint,
    })
}

/// Dense Gaussian elimination with partial pivoting; `a` is d×d row-major.
fn solve(mut a: Vec<f64>, mut b: Vec<f64>, dim: usize) -> Result<Vec<f64>> {
    for col in 0..dim {
        let pivot_row = (col..dim)
            .max_by(|&r, &s| {
                a[r * dim + col]
                    .abs()
                    .partial_cmp(&a[s * dim + col].abs())
                    .expect("scatter entries are finite")
            })
            .expect("nonempty pivot range");
        if a[pivot_row * dim + col] == 0.0 {
            return Err(Error::Training("singular within-class scatter".into()));
        }
        if pivot_row != col {
            for j in 0..dim {
                a.swap(col * dim + j, pivot_row * dim + j);
            }
            b.swap(col, pivot_row);
        }
        let pivot = a[col * dim + col];
        for row in col + 1..dim {
            let factor = a[row * dim + col] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in col..dim {
                a[row * dim + j] -= factor * a[col * dim + j];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; dim];
    for row in (0..dim).rev() {
        let mut acc = b[row];
        for j in row + 1..dim {
            acc -= a[row * dim + j] * x[j];
        }
        x[row] = acc / a[row * dim + row];
    }
    Ok(x)
}

/// A message scored by the full pipeline.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredMessage {
    pub label: ClassLabel,
    pub re: f64,
    pub theta: TopicVector,
}

/// Run one message through the whole pipeline: tokenize, bag against the
/// topic model's vocabulary, infer topic proportions, compute the stack's
/// reconstruction error, classify. The inference seed comes from
/// `lda_config`, so scoring the same text twice gives the same record.
pub fn score_message(
    topic_model: &TopicModel,
    sda_model: &SdaModel,
    fda_model: &FdaModel,
    lda_config: &LdaConfig,
    text: &str,
    stopwords: &HashSet<String>,
) -> Result<ScoredMessage> {
    if topic_model.topics() != sda_model.input_size() {
        return Err(Error::Config(format!(
            "topic count {} does not match autoencoder input size {}",
            topic_model.topics(),
            sda_model.input_size()
        )));
    }
    if fda_model.dimension() != 1 {
        return Err(Error::Config(
            "discriminant was not fit on scalar reconstruction errors".into(),
        ));
    }
    let tokens = tokenize(text, stopwords);
    let bow = to_bow(&tokens, topic_model.vocabulary());
    let theta = infer(topic_model, &bow, lda_config);
    let re = sda_model.reconstruction_error(&theta.theta);
    let label = fda_model.classify(&[re]);
    Ok(ScoredMessage { label, re, theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{build_vocabulary, TokenizedMessage};
    use crate::sda::{train_stack, SdaConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn one_d(values: &[f64]) -> Vec<Vec<f64>> {
        values.iter().map(|&v| vec![v]).collect()
    }

    #[test]
    fn midpoint_threshold_in_one_dimension() {
        let features = one_d(&[0.1, 0.2, 0.9, 1.0]);
        let labels = vec![
            ClassLabel::Ham,
            ClassLabel::Ham,
            ClassLabel::Spam,
            ClassLabel::Spam,
        ];
        let model = fit_fda(&features, &labels).unwrap();
        assert_eq!(model.projection(), &[1.0]);
        assert!((model.threshold() - 0.55).abs() < 1e-12);
        assert!(model.spam_is_high());
    }

    #[test]
    fn classify_examples() {
        let features = one_d(&[0.1, 0.2, 0.9, 1.0]);
        let labels = vec![
            ClassLabel::Ham,
            ClassLabel::Ham,
            ClassLabel::Spam,
            ClassLabel::Spam,
        ];
        let model = fit_fda(&features, &labels).unwrap();
        assert_eq!(model.classify(&[0.95]), ClassLabel::Spam);
        assert_eq!(model.classify(&[model.threshold()]), ClassLabel::Ham);
        assert_eq!(model.classify(&[0.0]), ClassLabel::Ham);
    }

    #[test]
    fn identical_class_means_is_training_error() {
        let features = one_d(&[0.5, 0.5]);
        let labels = vec![ClassLabel::Ham, ClassLabel::Spam];
        assert!(matches!(fit_fda(&features, &labels), Err(Error::Training(_))));
    }

    #[test]
    fn single_class_is_training_error() {
        let features = one_d(&[0.1, 0.2]);
        let labels = vec![ClassLabel::Ham, ClassLabel::Ham];
        assert!(matches!(fit_fda(&features, &labels), Err(Error::Training(_))));
    }

    #[test]
    fn separable_one_d_has_zero_training_error() {
        let features = one_d(&[0.05, 0.1, 0.15, 0.8, 0.85, 0.9]);
        let labels = vec![
            ClassLabel::Ham,
            ClassLabel::Ham,
            ClassLabel::Ham,
            ClassLabel::Spam,
            ClassLabel::Spam,
            ClassLabel::Spam,
        ];
        let model = fit_fda(&features, &labels).unwrap();
        for (x, &want) in features.iter().zip(&labels) {
            assert_eq!(model.classify(x), want);
        }
    }

    #[test]
    fn one_d_classification_is_re_greater_than_threshold() {
        let features = one_d(&[0.1, 0.2, 0.9, 1.0]);
        let labels = vec![
            ClassLabel::Ham,
            ClassLabel::Ham,
            ClassLabel::Spam,
            ClassLabel::Spam,
        ];
        let model = fit_fda(&features, &labels).unwrap();
        assert!(model.spam_is_high());
        for re in [0.0, 0.3, 0.54999, 0.55, 0.55001, 0.9, 2.0] {
            let expected = if re > model.threshold() {
                ClassLabel::Spam
            } else {
                ClassLabel::Ham
            };
            assert_eq!(model.classify(&[re]), expected, "re = {re}");
        }
    }

    #[test]
    fn prior_weighting_raises_threshold_under_ham_majority() {
        let features = one_d(&[0.1, 0.12, 0.2, 0.14, 0.18, 0.16, 0.9, 1.0]);
        let labels = vec![
            ClassLabel::Ham,
            ClassLabel::Ham,
            ClassLabel::Ham,
            ClassLabel::Ham,
            ClassLabel::Ham,
            ClassLabel::Ham,
            ClassLabel::Spam,
            ClassLabel::Spam,
        ];
        let midpoint = fit_fda(&features, &labels).unwrap();
        let weighted = fit_fda_with(&features, &labels, ThresholdRule::PriorWeighted).unwrap();
        assert!(weighted.threshold() > midpoint.threshold());
        // Still separates this easy data.
        for (x, &want) in features.iter().zip(&labels) {
            assert_eq!(weighted.classify(x), want);
        }
    }

    #[test]
    fn decisions_invariant_under_scaling_and_shift() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for dim in 1..=3 {
            for _ in 0..20 {
                let n = rng.gen_range(6..20);
                let mut features = Vec::with_capacity(n);
                let mut labels = Vec::with_capacity(n);
                for i in 0..n {
                    let spam = i % 3 == 0;
                    let center = if spam { 0.8 } else { 0.2 };
                    features.push(
                        (0..dim)
                            .map(|_| center + rng.gen_range(-0.15..0.15))
                            .collect::<Vec<f64>>(),
                    );
                    labels.push(if spam { ClassLabel::Spam } else { ClassLabel::Ham });
                }
                let base = fit_fda(&features, &labels).unwrap();
                let base_labels: Vec<_> = features.iter().map(|f| base.classify(f)).collect();

                let scaled: Vec<Vec<f64>> = features
                    .iter()
                    .map(|f| f.iter().map(|v| v * 10.0).collect())
                    .collect();
                let scaled_model = fit_fda(&scaled, &labels).unwrap();
                let scaled_labels: Vec<_> =
                    scaled.iter().map(|f| scaled_model.classify(f)).collect();
                assert_eq!(base_labels, scaled_labels, "scaling changed decisions");

                let shift: Vec<f64> = (0..dim).map(|d| d as f64 + 3.5).collect();
                let shifted: Vec<Vec<f64>> = features
                    .iter()
                    .map(|f| f.iter().zip(&shift).map(|(v, s)| v + s).collect())
                    .collect();
                let shifted_model = fit_fda(&shifted, &labels).unwrap();
                let shifted_labels: Vec<_> =
                    shifted.iter().map(|f| shifted_model.classify(f)).collect();
                assert_eq!(base_labels, shifted_labels, "shifting changed decisions");
            }
        }
    }

    fn tiny_pipeline() -> (TopicModel, SdaModel, FdaModel, LdaConfig) {
        let docs: Vec<TokenizedMessage> = ["win cash now", "win prize cash", "claim cash win"]
            .iter()
            .map(|t| tokenize(t, &HashSet::new()))
            .collect();
        let vocab = build_vocabulary(&docs);
        let bows: Vec<_> = docs.iter().map(|d| to_bow(d, &vocab)).collect();
        let mut lda_config = LdaConfig::with_topics(3);
        lda_config.train_iters = 30;
        lda_config.infer_iters = 10;
        lda_config.infer_burn = 5;
        let topic_model = crate::lda::fit(&bows, vocab, &lda_config).unwrap();

        let thetas: Vec<Vec<f64>> = bows
            .iter()
            .map(|b| infer(&topic_model, b, &lda_config).theta)
            .collect();
        let sda_config = SdaConfig {
            epochs: 5,
            seed: 9,
            ..SdaConfig::default()
        };
        let sda_model = train_stack(&thetas, &[3, 4], &sda_config).unwrap();

        let fda_model = fit_fda(
            &one_d(&[0.001, 0.002, 0.9]),
            &[ClassLabel::Ham, ClassLabel::Ham, ClassLabel::Spam],
        )
        .unwrap();
        (topic_model, sda_model, fda_model, lda_config)
    }

    #[test]
    fn score_message_total_on_empty_text() {
        let (tm, sda, fda, config) = tiny_pipeline();
        let scored = score_message(&tm, &sda, &fda, &config, "", &HashSet::new()).unwrap();
        assert_eq!(scored.theta.theta, vec![1.0 / 3.0; 3]);
        assert!(scored.re >= 0.0);
    }

    #[test]
    fn score_message_deterministic() {
        let (tm, sda, fda, config) = tiny_pipeline();
        let a = score_message(&tm, &sda, &fda, &config, "win cash", &HashSet::new()).unwrap();
        let b = score_message(&tm, &sda, &fda, &config, "win cash", &HashSet::new()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn score_message_rejects_dimension_mismatch() {
        let (tm, _, fda, config) = tiny_pipeline();
        let wrong_sda = train_stack(
            &[vec![0.2, 0.3, 0.1, 0.4], vec![0.3, 0.3, 0.2, 0.2]],
            &[4, 2],
            &SdaConfig { epochs: 1, ..SdaConfig::default() },
        )
        .unwrap();
        let err = score_message(&tm, &wrong_sda, &fda, &config, "hi", &HashSet::new()).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }
}
