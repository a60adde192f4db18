//! Implementations behind the CLI subcommands. Argument parsing lives in
//! `main.rs`; everything here takes parsed values, does the work, and prints
//! to stdout. Exit codes: 0 success, 1 component/training errors, 2
//! input/format errors (see [`crate::error::Error::exit_code`]).

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use crate::corpus::{
    build_vocabulary, load_stopwords, parse_collection, to_bow, tokenize, ClassLabel, RawMessage,
    DEFAULT_STOPWORDS,
};
use crate::error::{Error, Result};
use crate::eval::{self, export_re_histogram, pca_first_component, render_table};
use crate::lda::infer;
use crate::pipeline::{train_pipeline, Bundle, PipelineConfig};

/// Read the stop-word list: an explicit file if given, the embedded default
/// otherwise. Returns the raw text; its bytes are what bundles hash.
pub fn read_stopword_text(path: Option<&Path>) -> Result<String> {
    match path {
        Some(p) => Ok(fs::read_to_string(p)?),
        None => Ok(DEFAULT_STOPWORDS.to_string()),
    }
}

pub fn read_collection(path: &Path) -> Result<Vec<RawMessage>> {
    let file = fs::File::open(path)?;
    parse_collection(BufReader::new(file))
}

fn class_counts(messages: &[RawMessage]) -> (usize, usize) {
    let spam = messages.iter().filter(|m| m.label == ClassLabel::Spam).count();
    (spam, messages.len() - spam)
}

fn percent(part: usize, whole: usize) -> f64 {
    if whole == 0 {
        0.0
    } else {
        100.0 * part as f64 / whole as f64
    }
}

pub fn cmd_validate(data: &Path, stopwords: Option<&Path>) -> Result<()> {
    let messages = read_collection(data)?;
    let (spam, ham) = class_counts(&messages);
    println!(
        "{} messages, {} spam ({:.2}%), {} ham ({:.2}%)",
        messages.len(),
        spam,
        percent(spam, messages.len()),
        ham,
        percent(ham, messages.len()),
    );

    let stop = load_stopwords(&read_stopword_text(stopwords)?);
    let tokenized: Vec<_> = messages.iter().map(|m| tokenize(&m.text, &stop)).collect();
    let total_tokens: usize = tokenized.iter().map(|t| t.tokens.len()).sum();
    let vocab = build_vocabulary(&tokenized);
    let mean = if messages.is_empty() {
        0.0
    } else {
        total_tokens as f64 / messages.len() as f64
    };
    println!(
        "tokens: {} total, {} distinct, {:.2} mean per message",
        total_tokens,
        vocab.len(),
        mean
    );
    Ok(())
}

pub fn cmd_train(
    data: &Path,
    out: &Path,
    config: &PipelineConfig,
    stopwords: Option<&Path>,
) -> Result<()> {
    let messages = read_collection(data)?;
    let stopword_text = read_stopword_text(stopwords)?;
    let pipeline = train_pipeline(&messages, config, &stopword_text)?;
    println!("config: {}", serde_json::to_string(&pipeline.config)?);

    let mut ham_re = Vec::new();
    let mut spam_re = Vec::new();
    for m in &messages {
        let scored = pipeline.score(&m.text)?;
        match m.label {
            ClassLabel::Ham => ham_re.push(scored.re),
            ClassLabel::Spam => spam_re.push(scored.re),
        }
    }
    let summary = |values: &[f64]| -> String {
        if values.is_empty() {
            return "n/a".into();
        }
        let mean = values.iter().sum::<f64>() / values.len() as f64;
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        format!("mean {mean:.6} (min {min:.6}, max {max:.6})")
    };
    let (spam, ham) = class_counts(&messages);
    println!("trained on {} messages ({spam} spam, {ham} ham)", messages.len());
    println!("training RE ham:  {}", summary(&ham_re));
    println!("training RE spam: {}", summary(&spam_re));

    pipeline.into_bundle().save(out)?;
    println!("wrote bundle to {}", out.display());
    Ok(())
}

pub fn cmd_cv(
    data: &Path,
    config: &PipelineConfig,
    stopwords: Option<&Path>,
    jobs: usize,
    out: Option<&Path>,
) -> Result<()> {
    let messages = read_collection(data)?;
    let stopword_text = read_stopword_text(stopwords)?;
    println!("config: {}", serde_json::to_string(config)?);
    println!("jobs: {jobs}");
    let report = eval::run_cv(&messages, config, &stopword_text, jobs)?;
    print!("{}", render_table(&report));
    if let Some(path) = out {
        fs::write(path, serde_json::to_string_pretty(&report)?)?;
        println!("wrote report to {}", path.display());
    }
    Ok(())
}

fn top_topics(theta: &[f64], n: usize) -> Vec<(usize, f64)> {
    let mut ranked: Vec<(usize, f64)> = theta.iter().copied().enumerate().collect();
    ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("theta is finite").then(a.0.cmp(&b.0)));
    ranked.truncate(n);
    ranked
}

pub fn cmd_score(
    bundle_path: &Path,
    text: Option<&str>,
    file: Option<&Path>,
    stopwords: Option<&Path>,
) -> Result<()> {
    let bundle = Bundle::load(bundle_path)?;
    let stopword_text = read_stopword_text(stopwords)?;
    let pipeline = bundle.into_pipeline(&stopword_text)?;

    let texts: Vec<String> = match (text, file) {
        (Some(t), None) => vec![t.to_string()],
        (None, Some(path)) => {
            let file = fs::File::open(path)?;
            BufReader::new(file).lines().collect::<std::io::Result<_>>()?
        }
        _ => {
            return Err(Error::Config(
                "provide exactly one of --text or --file".into(),
            ))
        }
    };

    println!("label\tre\ttop_topics");
    for t in &texts {
        let scored = pipeline.score(t)?;
        let tops = top_topics(&scored.theta.theta, 3)
            .into_iter()
            .map(|(k, p)| format!("{k}:{p:.4}"))
            .collect::<Vec<_>>()
            .join(",");
        println!("{}\t{}\t{}", scored.label, scored.re, tops);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopicsFormat {
    Text,
    Svg,
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Deterministic word-cloud grid: one cell per topic, words stacked with
/// font size mapped linearly from φ (6pt at φ=0 up to 26pt at the topic's
/// maximum φ).
fn render_svg(per_topic: &[Vec<(String, f64)>]) -> String {
    let cols = (per_topic.len() as f64).sqrt().ceil() as usize;
    let cell_w = 180.0;
    let line_h = 30.0;
    let max_words = per_topic.iter().map(Vec::len).max().unwrap_or(0);
    let cell_h = 24.0 + line_h * max_words as f64;
    let rows = per_topic.len().div_ceil(cols);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\">\n",
        cols as f64 * cell_w,
        rows as f64 * cell_h
    );
    for (k, words) in per_topic.iter().enumerate() {
        let x0 = (k % cols) as f64 * cell_w + 8.0;
        let y0 = (k / cols) as f64 * cell_h + 16.0;
        svg.push_str(&format!(
            "  <text x=\"{x0}\" y=\"{y0}\" font-size=\"11\" font-family=\"sans-serif\" fill=\"#888\">topic {k}</text>\n"
        ));
        let phi_max = words.first().map(|(_, p)| *p).unwrap_or(0.0);
        for (i, (word, phi)) in words.iter().enumerate() {
            let size = if phi_max > 0.0 { 6.0 + 20.0 * phi / phi_max } else { 6.0 };
            let y = y0 + line_h * (i + 1) as f64;
            svg.push_str(&format!(
                "  <text x=\"{x0}\" y=\"{y}\" font-size=\"{size:.2}\" font-family=\"sans-serif\">{}</text>\n",
                xml_escape(word)
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

pub fn cmd_topics(
    bundle_path: &Path,
    top_n: usize,
    format: TopicsFormat,
    topic: Option<usize>,
    out: Option<&Path>,
) -> Result<()> {
    let bundle = Bundle::load(bundle_path)?;
    let model = &bundle.topic_model;
    let indices: Vec<usize> = match topic {
        Some(k) => vec![k],
        None => (0..model.topics()).collect(),
    };
    let mut per_topic = Vec::with_capacity(indices.len());
    for &k in &indices {
        per_topic.push(model.top_words(k, top_n)?);
    }

    let rendered = match format {
        TopicsFormat::Text => {
            let mut text = String::from("topic\trank\tword\tphi\n");
            for (&k, words) in indices.iter().zip(&per_topic) {
                for (rank, (word, phi)) in words.iter().enumerate() {
                    text.push_str(&format!("{k}\t{}\t{word}\t{phi:.6}\n", rank + 1));
                }
            }
            text
        }
        TopicsFormat::Svg => render_svg(&per_topic),
    };
    match out {
        Some(path) => fs::write(path, rendered)?,
        None => print!("{rendered}"),
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FigData {
    ReHist,
    Pca1,
}

pub fn cmd_figdata(
    which: FigData,
    bundle_path: &Path,
    data: &Path,
    stopwords: Option<&Path>,
    out: Option<&PathBuf>,
) -> Result<()> {
    let bundle = Bundle::load(bundle_path)?;
    let stopword_text = read_stopword_text(stopwords)?;
    let pipeline = bundle.into_pipeline(&stopword_text)?;
    let messages = read_collection(data)?;

    let mut buffer = Vec::new();
    match which {
        FigData::ReHist => {
            let rows: Vec<(ClassLabel, f64)> = messages
                .iter()
                .map(|m| pipeline.score(&m.text).map(|s| (m.label, s.re)))
                .collect::<Result<_>>()?;
            export_re_histogram(&rows, &mut buffer)?;
        }
        FigData::Pca1 => {
            let thetas: Vec<Vec<f64>> = messages
                .iter()
                .map(|m| {
                    let tokens = tokenize(&m.text, pipeline.stopwords());
                    let bow = to_bow(&tokens, pipeline.topic_model.vocabulary());
                    infer(&pipeline.topic_model, &bow, &pipeline.config.lda).theta
                })
                .collect();
            let projections = pca_first_component(&thetas)?;
            writeln!(buffer, "label\tpca1")?;
            for (m, p) in messages.iter().zip(&projections) {
                writeln!(buffer, "{}\t{}", m.label, p)?;
            }
        }
    }
    match out {
        Some(path) => fs::write(path, buffer)?,
        None => print!("{}", String::from_utf8(buffer).expect("exports are UTF-8")),
    }
    Ok(())
}
