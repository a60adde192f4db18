#![allow(dead_code)]

//! Shared test fixtures: a seeded synthetic SMS corpus with a ham majority
//! and topically clustered spam, plus a fast pipeline configuration sized
//! for it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use smsfilter::corpus::{ClassLabel, RawMessage};
use smsfilter::lda::LdaConfig;
use smsfilter::pipeline::PipelineConfig;

const HAM_POOL: &[&str] = &[
    "ok", "lol", "see", "later", "going", "home", "soon", "sorry", "cant", "talk", "busy",
    "meeting", "tomorrow", "lunch", "dinner", "movie", "tonight", "morning", "love", "miss",
    "dear", "friend", "mom", "dad", "work", "school", "class", "test", "exam", "study", "book",
    "read", "watch", "game", "play", "team", "match", "bus", "train", "car", "ride", "walk",
    "shop", "buy", "milk", "bread", "food", "eat", "hungry", "sleep", "tired", "early", "late",
    "week", "month", "today", "yesterday", "plan", "trip", "visit", "house", "room", "door",
    "key", "rain", "weather", "cold", "hot", "nice", "good", "great", "fine", "happy", "sad",
    "funny", "joke", "story", "news", "music", "song", "dance", "party", "birthday", "gift",
    "thanks", "welcome", "doctor", "appointment", "library", "garden", "kitchen", "coffee",
    "tea", "juice", "water", "beach", "park", "road", "street", "city", "town", "uncle", "aunt",
    "cousin", "sister", "brother", "baby", "dog", "cat", "bird", "fish", "tree", "flower",
    "sun", "moon", "star", "cloud", "wind", "snow", "spring", "summer", "winter", "monday",
    "tuesday", "friday", "saturday", "sunday", "holiday", "market", "bank", "wallet", "ticket",
    "concert", "festival", "exercise", "gym", "yoga", "run", "swim", "bike", "hike", "camp",
    "paper", "pen", "pencil", "desk", "chair", "table", "sofa", "bed", "pillow", "blanket",
    "minute", "hour", "clock", "question", "answer", "problem", "idea", "dream", "hope", "wish",
    "start", "finish", "open", "close", "give", "take", "bring", "send", "meet", "leave",
    "stay", "wait", "hurry",
];

const SPAM_THEMES: &[&[&str]] = &[
    &[
        "win", "winner", "won", "free", "prize", "cash", "award", "claim", "guaranteed", "draw",
        "lottery", "1000", "500", "bonus", "congratulations", "selected", "urgent", "valid",
        "expires", "code",
    ],
    &[
        "ringtone", "tone", "mobile", "nokia", "phone", "free", "weekly", "download", "txt",
        "reply", "stop", "service", "msg", "charged", "150p", "per", "network", "poly",
        "latest", "chart",
    ],
    &[
        "chat", "date", "sexy", "singles", "meet", "local", "lonely", "service", "txt", "reply",
        "stop", "18", "premium", "rate", "call", "09061", "contact", "guess", "secret", "babe",
    ],
    &[
        "loan", "credit", "debt", "cash", "urgent", "approved", "apply", "rate", "percent",
        "free", "quote", "payment", "claim", "entitled", "compensation", "refund", "accident",
        "injury", "offer", "call",
    ],
];

/// A labeled corpus with roughly 13% spam. Spam draws from one of four
/// topical pools per message with a small admixture of everyday words; ham
/// draws from a wide everyday vocabulary that is mostly absent from spam.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<RawMessage> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut messages = Vec::with_capacity(n);
    for _ in 0..n {
        if rng.gen::<f64>() < 0.134 {
            let pool = SPAM_THEMES[rng.gen_range(0..SPAM_THEMES.len())];
            let len = rng.gen_range(6..16);
            let mut words: Vec<&str> = (0..len).map(|_| pool[rng.gen_range(0..pool.len())]).collect();
            for w in words.iter_mut() {
                if rng.gen::<f64>() < 0.06 {
                    *w = HAM_POOL[rng.gen_range(0..HAM_POOL.len())];
                }
            }
            messages.push(RawMessage {
                label: ClassLabel::Spam,
                text: words.join(" "),
            });
        } else {
            let len = rng.gen_range(3..12);
            let mut words: Vec<&str> = (0..len)
                .map(|_| HAM_POOL[rng.gen_range(0..HAM_POOL.len())])
                .collect();
            if rng.gen::<f64>() < 0.02 {
                words.push(["free", "call", "txt"][rng.gen_range(0..3)]);
            }
            messages.push(RawMessage {
                label: ClassLabel::Ham,
                text: words.join(" "),
            });
        }
    }
    messages
}

pub fn to_tsv(messages: &[RawMessage]) -> String {
    messages
        .iter()
        .map(|m| format!("{}\t{}\n", m.label, m.text))
        .collect()
}

/// A configuration small enough for tests: 12 topics, a 12-18 stack, short
/// sampler and SGD runs. The document-topic prior is set explicitly because
/// the 50/K default is tuned for K=60.
pub fn fast_config() -> PipelineConfig {
    let mut lda = LdaConfig::with_topics(12);
    lda.alpha = 0.8;
    lda.train_iters = 200;
    lda.infer_iters = 40;
    lda.infer_burn = 10;
    let mut config = PipelineConfig {
        lda,
        sizes: vec![12, 18],
        folds: 3,
        seed: 42,
        ..PipelineConfig::default()
    };
    config.sda.epochs = 20;
    config
}
