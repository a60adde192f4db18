//! Stratified cross-validation of the full pipeline and the reported
//! metrics, plus the first-principal-component baseline and figure-data
//! exports.
//!
//! Per fold: the topic model is fit on spam-only training messages, topic
//! vectors are inferred for training and test messages against that frozen
//! model, the autoencoder stack is trained on the training vectors, and a
//! Fisher discriminant is fit on the training reconstruction errors. Test
//! messages never influence any trained component.

use std::io::Write;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{build_vocabulary, to_bow, tokenize, ClassLabel, RawMessage, TokenizedMessage};
use crate::detector::{fit_fda_with, FdaModel};
use crate::error::{Error, Result};
use crate::lda::{self, infer, LdaConfig, TopicModel};
use crate::pipeline::PipelineConfig;
use crate::sda::{train_stack, SdaModel};
use crate::seeds::derive_seed;

/// Binary confusion counts with spam as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn record(&mut self, actual: ClassLabel, predicted: ClassLabel) {
        match (actual, predicted) {
            (ClassLabel::Spam, ClassLabel::Spam) => self.true_pos += 1,
            (ClassLabel::Ham, ClassLabel::Spam) => self.false_pos += 1,
            (ClassLabel::Ham, ClassLabel::Ham) => self.true_neg += 1,
            (ClassLabel::Spam, ClassLabel::Ham) => self.false_neg += 1,
        }
    }
}

/// The evaluation numbers reported per fold. `spam_caught` is recall on
/// spam, `blocked_ham` the fraction of ham predicted spam. Metrics whose
/// denominator is zero are reported as 0 and listed in `degenerate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub spam_caught: f64,
    pub blocked_ham: f64,
    pub matthews: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub degenerate: Vec<String>,
}

/// Confusion-matrix-derived metrics. Zero denominators never fail; they
/// yield 0 plus a degeneracy flag so fold aggregation stays total.
pub fn metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let tp = cm.true_pos as f64;
    let fp = cm.false_pos as f64;
    let tn = cm.true_neg as f64;
    let fn_ = cm.false_neg as f64;
    let mut degenerate = Vec::new();
    let mut ratio = |num: f64, den: f64, name: &str| {
        if den > 0.0 {
            num / den
        } else {
            degenerate.push(name.to_string());
            0.0
        }
    };

    let accuracy = ratio(tp + tn, tp + fp + tn + fn_, "accuracy");
    let spam_caught = ratio(tp, tp + fn_, "spam_caught");
    let blocked_ham = ratio(fp, fp + tn, "blocked_ham");
    let precision = ratio(tp, tp + fp, "precision");
    let recall = spam_caught;
    let f1 = ratio(2.0 * precision * recall, precision + recall, "f1");
    let mcc_den = ((tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_)).sqrt();
    let matthews = ratio(tp * tn - fp * fn_, mcc_den, "matthews");

    MetricsReport {
        accuracy,
        spam_caught,
        blocked_ham,
        matthews,
        precision,
        recall,
        f1,
        degenerate,
    }
}

/// Stratified fold assignment: within each class the shuffled members are
/// dealt round-robin, with the dealing cursor carried across classes so
/// total fold sizes also differ by at most one. Returns the fold index of
/// every message. Deterministic under `seed`.
pub fn stratified_folds(labels: &[ClassLabel], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Config("need at least 2 folds".into()));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(), Vec::new()];
    for (i, &label) in labels.iter().enumerate() {
        let c = match label {
            ClassLabel::Ham => 0,
            ClassLabel::Spam => 1,
        };
        by_class[c].push(i);
    }
    for (class, members) in by_class.iter().enumerate() {
        if members.len() < k {
            let name = if class == 0 { "ham" } else { "spam" };
            return Err(Error::Config(format!(
                "class {name} has {} members, fewer than {k} folds",
                members.len()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut fold_of = vec![0usize; labels.len()];
    let mut cursor = 0usize;
    for members in &mut by_class {
        members.shuffle(&mut rng);
        for &idx in members.iter() {
            fold_of[idx] = cursor % k;
            cursor += 1;
        }
    }
    Ok(fold_of)
}

/// Everything trained inside one fold, together with the inference settings
/// the fold used.
pub struct FoldModels {
    pub topic_model: TopicModel,
    pub sda: SdaModel,
    pub fda: FdaModel,
    pub lda_config: LdaConfig,
}

/// One fold's evaluation: metrics over its held-out messages plus the
/// held-out reconstruction errors, in message order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub confusion: ConfusionMatrix,
    pub metrics: MetricsReport,
    pub test_re: Vec<(ClassLabel, f64)>,
}

/// Per-metric mean and sample standard deviation across folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub mean: f64,
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvSummary {
    pub spam_caught: MetricStats,
    pub blocked_ham: MetricStats,
    pub accuracy: MetricStats,
    pub matthews: MetricStats,
    pub precision: MetricStats,
    pub recall: MetricStats,
    pub f1: MetricStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub config: PipelineConfig,
    pub folds: Vec<FoldReport>,
    pub summary: CvSummary,
}

/// Train all three pipeline components on the training side of `fold`.
/// Seeds derive from the master seed and the fold index alone, so two runs
/// (or two thread schedules) produce identical models, and test-side texts
/// cannot influence anything trained here.
pub fn train_fold(
    messages: &[RawMessage],
    tokenized: &[TokenizedMessage],
    fold_of: &[usize],
    fold: usize,
    config: &PipelineConfig,
) -> Result<FoldModels> {
    let fold_seed = derive_seed(config.seed, 1 + fold as u64);
    let train: Vec<usize> = (0..messages.len()).filter(|&i| fold_of[i] != fold).collect();

    let spam_docs: Vec<TokenizedMessage> = train
        .iter()
        .filter(|&&i| messages[i].label == ClassLabel::Spam)
        .map(|&i| tokenized[i].clone())
        .collect();
    let vocab = build_vocabulary(&spam_docs);
    let spam_bows: Vec<_> = spam_docs.iter().map(|d| to_bow(d, &vocab)).collect();

    let mut lda_config = config.lda.clone();
    lda_config.seed = derive_seed(fold_seed, 1);
    let topic_model = lda::fit(&spam_bows, vocab, &lda_config)?;

    let mut thetas = Vec::with_capacity(train.len());
    let mut labels = Vec::with_capacity(train.len());
    for &i in &train {
        let bow = to_bow(&tokenized[i], topic_model.vocabulary());
        thetas.push(infer(&topic_model, &bow, &lda_config).theta);
        labels.push(messages[i].label);
    }

    let sda_inputs: Vec<Vec<f64>> = if config.sda_ham_only {
        thetas
            .iter()
            .zip(&labels)
            .filter(|(_, &l)| l == ClassLabel::Ham)
            .map(|(t, _)| t.clone())
            .collect()
    } else {
        thetas.clone()
    };
    let mut sda_config = config.sda.clone();
    sda_config.seed = derive_seed(fold_seed, 2);
    let sda = train_stack(&sda_inputs, &config.sizes, &sda_config)?;

    let re_features: Vec<Vec<f64>> = thetas
        .iter()
        .map(|t| vec![sda.reconstruction_error(t)])
        .collect();
    let fda = fit_fda_with(&re_features, &labels, config.fda_threshold)?;

    Ok(FoldModels {
        topic_model,
        sda,
        fda,
        lda_config,
    })
}

/// Score the held-out side of `fold` against its trained models.
pub fn evaluate_fold(
    models: &FoldModels,
    messages: &[RawMessage],
    tokenized: &[TokenizedMessage],
    fold_of: &[usize],
    fold: usize,
) -> FoldReport {
    let mut confusion = ConfusionMatrix::default();
    let mut test_re = Vec::new();
    for i in 0..messages.len() {
        if fold_of[i] != fold {
            continue;
        }
        let bow = to_bow(&tokenized[i], models.topic_model.vocabulary());
        let theta = infer(&models.topic_model, &bow, &models.lda_config).theta;
        let re = models.sda.reconstruction_error(&theta);
        let predicted = models.fda.classify(&[re]);
        confusion.record(messages[i].label, predicted);
        test_re.push((messages[i].label, re));
    }
    FoldReport {
        confusion,
        metrics: metrics(&confusion),
        test_re,
    }
}

fn run_one_fold(
    messages: &[RawMessage],
    tokenized: &[TokenizedMessage],
    fold_of: &[usize],
    fold: usize,
    config: &PipelineConfig,
) -> Result<FoldReport> {
    let models = train_fold(messages, tokenized, fold_of, fold, config)?;
    Ok(evaluate_fold(&models, messages, tokenized, fold_of, fold))
}

/// Stratified k-fold cross-validation of the whole pipeline. Folds are
/// independent; `jobs > 1` runs them on worker threads without changing any
/// result byte.
pub fn run_cv(
    messages: &[RawMessage],
    config: &PipelineConfig,
    stopword_text: &str,
    jobs: usize,
) -> Result<CvReport> {
    config.validate()?;
    let labels: Vec<ClassLabel> = messages.iter().map(|m| m.label).collect();
    let fold_of = stratified_folds(&labels, config.folds, derive_seed(config.seed, 0))?;

    let stopwords = crate::corpus::load_stopwords(stopword_text);
    let tokenized: Vec<TokenizedMessage> = messages
        .iter()
        .map(|m| tokenize(&m.text, &stopwords))
        .collect();

    let k = config.folds;
    let mut reports: Vec<Option<Result<FoldReport>>> = (0..k).map(|_| None).collect();
    if jobs <= 1 {
        for (fold, slot) in reports.iter_mut().enumerate() {
            *slot = Some(run_one_fold(messages, &tokenized, &fold_of, fold, config));
        }
    } else {
        let next = AtomicUsize::new(0);
        let slots = Mutex::new(&mut reports);
        std::thread::scope(|scope| {
            for _ in 0..jobs.min(k) {
                scope.spawn(|| loop {
                    let fold = next.fetch_add(1, Ordering::SeqCst);
                    if fold >= k {
                        break;
                    }
                    let report = run_one_fold(messages, &tokenized, &fold_of, fold, config);
                    slots.lock().expect("fold slot lock")[fold] = Some(report);
                });
            }
        });
    }

    let mut folds = Vec::with_capacity(k);
    for report in reports {
        folds.push(report.expect("every fold scheduled")?);
    }
    let summary = summarize(&folds);
    Ok(CvReport {
        config: config.clone(),
        folds,
        summary,
    })
}

fn stats(values: &[f64]) -> MetricStats {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() > 1 {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    MetricStats { mean, std }
}

fn summarize(folds: &[FoldReport]) -> CvSummary {
    let collect = |f: fn(&MetricsReport) -> f64| -> Vec<f64> {
        folds.iter().map(|r| f(&r.metrics)).collect()
    };
    CvSummary {
        spam_caught: stats(&collect(|m| m.spam_caught)),
        blocked_ham: stats(&collect(|m| m.blocked_ham)),
        accuracy: stats(&collect(|m| m.accuracy)),
        matthews: stats(&collect(|m| m.matthews)),
        precision: stats(&collect(|m| m.precision)),
        recall: stats(&collect(|m| m.recall)),
        f1: stats(&collect(|m| m.f1)),
    }
}

/// Plain-text table, per-fold rows plus a mean±std summary row.
pub fn render_table(report: &CvReport) -> String {
    let mut out = String::new();
    out.push_str("fold    SC%     BH%     Acc%    MCC     Prec%   Rec%    F1%\n");
    for (i, fold) in report.folds.iter().enumerate() {
        let m = &fold.metrics;
        out.push_str(&format!(
            "{:<7} {:<7.2} {:<7.2} {:<7.2} {:<7.3} {:<7.2} {:<7.2} {:<7.2}\n",
            i,
            m.spam_caught * 100.0,
            m.blocked_ham * 100.0,
            m.accuracy * 100.0,
            m.matthews,
            m.precision * 100.0,
            m.recall * 100.0,
            m.f1 * 100.0,
        ));
    }
    let s = &report.summary;
    out.push_str(&format!(
        "mean    {:.2}±{:.2} {:.2}±{:.2} {:.2}±{:.2} {:.3}±{:.3} {:.2}±{:.2} {:.2}±{:.2} {:.2}±{:.2}\n",
        s.spam_caught.mean * 100.0,
        s.spam_caught.std * 100.0,
        s.blocked_ham.mean * 100.0,
        s.blocked_ham.std * 100.0,
        s.accuracy.mean * 100.0,
        s.accuracy.std * 100.0,
        s.matthews.mean,
        s.matthews.std,
        s.precision.mean * 100.0,
        s.precision.std * 100.0,
        s.recall.mean * 100.0,
        s.recall.std * 100.0,
        s.f1.mean * 100.0,
        s.f1.std * 100.0,
    ));
    out
}

/// Projections of centered features onto the leading eigenvector of the
/// sample covariance, sign fixed so the first nonzero loading is positive.
/// Zero-variance input yields all-zero projections.
pub fn pca_first_component(features: &[Vec<f64>]) -> Result<Vec<f64>> {
    if features.len() < 2 {
        return Err(Error::Config("need at least 2 samples for a principal component".into()));
    }
    let dim = features[0].len();
    if dim == 0 || features.iter().any(|f| f.len() != dim) {
        return Err(Error::Config("features must share one nonzero dimension".into()));
    }

    let n = features.len() as f64;
    let mut mean = vec![0.0; dim];
    for f in features {
        for (m, v) in mean.iter_mut().zip(f) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);

    let centered: Vec<Vec<f64>> = features
        .iter()
        .map(|f| f.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();

    let mut cov = vec![0.0; dim * dim];
    for c in &centered {
        for i in 0..dim {
            for j in 0..dim {
                cov[i * dim + j] += c[i] * c[j];
            }
        }
    }
    cov.iter_mut().for_each(|v| *v /= n - 1.0);

    if cov.iter().all(|&v| v == 0.0) {
        return Ok(vec![0.0; features.len()]);
    }

    // Power iteration from a fixed random start; the covariance is PSD so
    // this converges to the leading eigenvector.
    let mut rng = ChaCha8Rng::seed_from_u64(0x9E37_79B9_7F4A_7C15);
    let mut v: Vec<f64> = (0..dim).map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0)).collect();
    normalize(&mut v);
    let mut next = vec![0.0; dim];
    for _ in 0..1000 {
        for (i, slot) in next.iter_mut().enumerate() {
            *slot = cov[i * dim..(i + 1) * dim]
                .iter()
                .zip(&v)
                .map(|(c, x)| c * x)
                .sum();
        }
        if !normalize(&mut next) {
            break;
        }
        let delta: f64 = next.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum();
        v.copy_from_slice(&next);
        if delta < 1e-13 {
            break;
        }
    }

    let max_abs = v.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-12 * max_abs) {
        if *first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }

    Ok(centered
        .iter()
        .map(|c| c.iter().zip(&v).map(|(a, b)| a * b).sum())
        .collect())
}

fn normalize(v: &mut [f64]) -> bool {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
        true
    } else {
        false
    }
}

/// Write `(label, reconstruction error)` rows as tab-separated text with a
/// header. Values print in shortest round-trip form, so the file carries the
/// scores bit-for-bit.
pub fn export_re_histogram<W: Write>(rows: &[(ClassLabel, f64)], mut writer: W) -> std::io::Result<()> {
    writeln!(writer, "label\tre")?;
    for (label, re) in rows {
        writeln!(writer, "{label}\t{re}")?;
    }
    Ok(())
}
