//! Dataset parsing, tokenization, and bag-of-words construction.
//!
//! The input format is one message per line, `label<TAB>text`, labels
//! exactly `ham` or `spam`. Tokenization lowercases the text and splits on
//! every maximal run of non-alphanumeric characters; stop words are removed
//! after lowercasing and no stemming is applied. The stop-word list shipped
//! with the crate lives in `stopwords.txt` (one word per line) and is
//! embedded at compile time.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The stop-word list published with the crate, one word per line.
pub const DEFAULT_STOPWORDS: &str = include_str!("../stopwords.txt");

/// Message class. Spam is the positive class everywhere downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassLabel {
    Ham,
    Spam,
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ClassLabel::Ham => write!(f, "ham"),
            ClassLabel::Spam => write!(f, "spam"),
        }
    }
}

impl FromStr for ClassLabel {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "ham" => Ok(ClassLabel::Ham),
            "spam" => Ok(ClassLabel::Spam),
            other => Err(format!("unknown label {other:?}, expected \"ham\" or \"spam\"")),
        }
    }
}

/// A labeled message with its text kept verbatim from the source file.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawMessage {
    pub label: ClassLabel,
    pub text: String,
}

/// Lowercased tokens in message order, stop words removed, duplicates kept.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenizedMessage {
    pub tokens: Vec<String>,
}

/// Word <-> id bijection. Ids are dense `0..len()` in first-occurrence order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "Vec<String>", try_from = "Vec<String>")]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id_of(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize]
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Vec<String> {
        v.words
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = String;

    fn try_from(words: Vec<String>) -> std::result::Result<Self, String> {
        let mut index = HashMap::with_capacity(words.len());
        for (id, w) in words.iter().enumerate() {
            if index.insert(w.clone(), id as u32).is_some() {
                return Err(format!("duplicate vocabulary word {w:?}"));
            }
        }
        Ok(Vocabulary { words, index })
    }
}

/// Sparse token counts of one document: `(word_id, count)` pairs sorted by
/// ascending word id, plus the total token count.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BagOfWords {
    pub entries: Vec<(u32, u32)>,
    pub total: u32,
}

impl BagOfWords {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Parse a `label<TAB>text` collection. Empty lines are skipped; a missing
/// tab or an unknown label is a parse error carrying the 1-based line number.
pub fn parse_collection<R: BufRead>(reader: R) -> Result<Vec<RawMessage>> {
    let mut messages = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let mut line = line?;
        if line.ends_with('\r') {
            line.pop();
        }
        if line.is_empty() {
            continue;
        }
        let (label, text) = line.split_once('\t').ok_or_else(|| Error::Parse {
            line: line_no,
            message: "missing tab separator between label and text".into(),
        })?;
        let label = ClassLabel::from_str(label).map_err(|message| Error::Parse {
            line: line_no,
            message,
        })?;
        messages.push(RawMessage {
            label,
            text: text.to_string(),
        });
    }
    Ok(messages)
}

/// Parse a stop-word list, one word per line. Blank lines are ignored and
/// entries are lowercased so membership tests line up with tokenizer output.
pub fn load_stopwords(text: &str) -> HashSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(|l| l.to_lowercase())
        .collect()
}

/// Lowercase, split on maximal runs of non-alphanumeric characters, drop
/// empty tokens and stop-list members. Duplicates and digits are kept; no
/// stemming and no minimum token length.
pub fn tokenize(text: &str, stopwords: &HashSet<String>) -> TokenizedMessage {
    let lowered = text.to_lowercase();
    let tokens = lowered
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty() && !stopwords.contains(*t))
        .map(str::to_string)
        .collect();
    TokenizedMessage { tokens }
}

/// Assign one dense id per distinct token, in first-occurrence order.
pub fn build_vocabulary(docs: &[TokenizedMessage]) -> Vocabulary {
    let mut words = Vec::new();
    let mut index: HashMap<String, u32> = HashMap::new();
    for doc in docs {
        for token in &doc.tokens {
            if !index.contains_key(token) {
                index.insert(token.clone(), words.len() as u32);
                words.push(token.clone());
            }
        }
    }
    Vocabulary { words, index }
}

/// Count in-vocabulary tokens. Out-of-vocabulary tokens are dropped, which is
/// the normal case when featurizing ham against a spam-built vocabulary.
pub fn to_bow(doc: &TokenizedMessage, vocab: &Vocabulary) -> BagOfWords {
    let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
    for token in &doc.tokens {
        if let Some(id) = vocab.id_of(token) {
            *counts.entry(id).or_insert(0) += 1;
        }
    }
    let total = counts.values().sum();
    BagOfWords {
        entries: counts.into_iter().collect(),
        total,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn no_stopwords() -> HashSet<String> {
        HashSet::new()
    }

    #[test]
    fn parse_single_line() {
        let msgs = parse_collection("spam\tWIN cash now".as_bytes()).unwrap();
        assert_eq!(
            msgs,
            vec![RawMessage {
                label: ClassLabel::Spam,
                text: "WIN cash now".into()
            }]
        );
    }

    #[test]
    fn parse_empty_stream() {
        assert!(parse_collection("".as_bytes()).unwrap().is_empty());
    }

    #[test]
    fn parse_skips_blank_lines_and_keeps_order() {
        let input = "ham\tfirst\n\nspam\tsecond\n";
        let msgs = parse_collection(input.as_bytes()).unwrap();
        assert_eq!(msgs.len(), 2);
        assert_eq!(msgs[0].text, "first");
        assert_eq!(msgs[1].label, ClassLabel::Spam);
    }

    #[test]
    fn parse_missing_tab_reports_line() {
        let input = "ham\tok\nbroken line\n";
        match parse_collection(input.as_bytes()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_bad_label_reports_line() {
        let input = "ham\tok\nspammy\ttext\n";
        match parse_collection(input.as_bytes()) {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 2);
                assert!(message.contains("spammy"));
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_strips_carriage_returns() {
        let msgs = parse_collection("ham\thello\r\n".as_bytes()).unwrap();
        assert_eq!(msgs[0].text, "hello");
    }

    #[test]
    fn tokenize_splits_and_lowercases() {
        let t = tokenize("Hello!!! hello world", &no_stopwords());
        assert_eq!(t.tokens, vec!["hello", "hello", "world"]);
    }

    #[test]
    fn tokenize_empty_text() {
        assert!(tokenize("", &no_stopwords()).tokens.is_empty());
    }

    #[test]
    fn tokenize_stopwords_case_insensitive() {
        let stop = load_stopwords("the");
        let t = tokenize("The THE the", &stop);
        assert!(t.tokens.is_empty());
    }

    #[test]
    fn tokenize_keeps_digits_and_short_tokens() {
        let t = tokenize("c u 2nite @ 8", &no_stopwords());
        assert_eq!(t.tokens, vec!["c", "u", "2nite", "8"]);
    }

    #[test]
    fn tokenize_idempotent_on_its_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let stop = load_stopwords(DEFAULT_STOPWORDS);
        let alphabet: Vec<char> = "abcXYZ 019!?.,-_äÖß€\t\n".chars().collect();
        for _ in 0..200 {
            let len = rng.gen_range(0..40);
            let text: String = (0..len)
                .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
                .collect();
            let once = tokenize(&text, &stop);
            let rejoined = once.tokens.join(" ");
            let twice = tokenize(&rejoined, &stop);
            assert_eq!(once, twice, "not idempotent on {text:?}");
        }
    }

    #[test]
    fn vocabulary_first_occurrence_order() {
        let docs = vec![
            TokenizedMessage { tokens: vec!["a".into(), "b".into()] },
            TokenizedMessage { tokens: vec!["b".into(), "c".into()] },
        ];
        let vocab = build_vocabulary(&docs);
        assert_eq!(vocab.len(), 3);
        assert_eq!(vocab.id_of("a"), Some(0));
        assert_eq!(vocab.id_of("b"), Some(1));
        assert_eq!(vocab.id_of("c"), Some(2));
    }

    #[test]
    fn vocabulary_empty_and_duplicates() {
        assert_eq!(build_vocabulary(&[]).len(), 0);
        let docs = vec![TokenizedMessage { tokens: vec!["x".into(), "x".into()] }];
        let vocab = build_vocabulary(&docs);
        assert_eq!(vocab.len(), 1);
        assert_eq!(vocab.id_of("x"), Some(0));
    }

    #[test]
    fn vocabulary_bijection() {
        let docs = vec![TokenizedMessage {
            tokens: vec!["one".into(), "two".into(), "three".into()],
        }];
        let vocab = build_vocabulary(&docs);
        for id in 0..vocab.len() as u32 {
            assert_eq!(vocab.id_of(vocab.word(id)), Some(id));
        }
    }

    #[test]
    fn bow_counts_and_total() {
        let vocab = build_vocabulary(&[TokenizedMessage {
            tokens: vec!["a".into(), "b".into()],
        }]);
        let doc = TokenizedMessage {
            tokens: vec!["a".into(), "a".into(), "b".into()],
        };
        let bow = to_bow(&doc, &vocab);
        assert_eq!(bow.entries, vec![(0, 2), (1, 1)]);
        assert_eq!(bow.total, 3);
    }

    #[test]
    fn bow_drops_out_of_vocabulary() {
        let vocab = build_vocabulary(&[TokenizedMessage { tokens: vec!["a".into()] }]);
        let doc = TokenizedMessage { tokens: vec!["zzz".into()] };
        let bow = to_bow(&doc, &vocab);
        assert!(bow.is_empty());
        assert_eq!(bow.total, 0);
    }

    #[test]
    fn bow_empty_doc() {
        let vocab = build_vocabulary(&[TokenizedMessage { tokens: vec!["a".into()] }]);
        assert!(to_bow(&TokenizedMessage::default(), &vocab).is_empty());
    }

    #[test]
    fn bow_total_matches_token_count_when_vocab_covers_doc() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let pool = ["win", "cash", "now", "call", "free", "txt"];
        for _ in 0..50 {
            let len = rng.gen_range(0..30);
            let doc = TokenizedMessage {
                tokens: (0..len)
                    .map(|_| pool[rng.gen_range(0..pool.len())].to_string())
                    .collect(),
            };
            let vocab = build_vocabulary(std::slice::from_ref(&doc));
            assert_eq!(to_bow(&doc, &vocab).total as usize, doc.tokens.len());
        }
    }

    #[test]
    fn collection_round_trip() {
        let msgs = vec![
            RawMessage { label: ClassLabel::Ham, text: "hello there".into() },
            RawMessage { label: ClassLabel::Spam, text: "WIN!! now".into() },
            RawMessage { label: ClassLabel::Ham, text: String::new() },
        ];
        let serialized: String = msgs
            .iter()
            .map(|m| format!("{}\t{}\n", m.label, m.text))
            .collect();
        let parsed = parse_collection(serialized.as_bytes()).unwrap();
        assert_eq!(parsed, msgs);
    }

    #[test]
    fn default_stopwords_load() {
        let stop = load_stopwords(DEFAULT_STOPWORDS);
        assert!(stop.len() > 100);
        assert!(stop.contains("the"));
        assert!(stop.contains("yourselves"));
        // Informative spam words must stay out of the list.
        assert!(!stop.contains("win"));
        assert!(!stop.contains("free"));
    }
}
