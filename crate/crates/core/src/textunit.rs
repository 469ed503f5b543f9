//! Text units: canonical sentence keys, rule-based segmentation and corpus
//! ingestion.
//!
//! Recurrence statistics compare states by their canonical key. The key is
//! the raw string with Unicode normalized to NFC, leading and trailing
//! whitespace removed and internal whitespace runs collapsed to one ASCII
//! space. Case and punctuation are kept, so "We begin." and "We start." are
//! different states.
//!
//! The segmenter splits after `.`, `!` or `?` (optionally followed by closing
//! quotes or brackets) when the next non-space character is uppercase, an
//! opening quote, or when the terminator ends the text or is followed by a
//! blank line. A terminator attached to one of [`ABBREVIATIONS`] never
//! splits.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

/// Tokens that end in a period but do not end a sentence. Matched
/// case-sensitively against the whitespace-delimited word.
pub const ABBREVIATIONS: &[&str] = &[
    "Mr.", "Mrs.", "Ms.", "Dr.", "Prof.", "St.", "Jr.", "Sr.", "e.g.", "i.e.", "etc.", "vs.",
];

const CLOSERS: &[char] = &['"', '\'', '\u{201D}', '\u{2019}', ')', ']', '\u{00BB}'];
const OPENERS: &[char] = &['"', '\'', '\u{201C}', '\u{2018}', '(', '[', '\u{00AB}'];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TextError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient data: requested {requested} documents, found {available} in {path}")]
    InsufficientData {
        requested: usize,
        available: usize,
        path: String,
    },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed corpus record at {path}:{line}: {message}")]
    Format {
        path: String,
        line: usize,
        message: String,
    },
}

/// Canonical comparison key of a raw string.
pub fn canonicalize(raw: &str) -> Result<String, TextError> {
    let composed: String = raw.nfc().collect();
    let key = composed.split_whitespace().collect::<Vec<_>>().join(" ");
    if key.is_empty() {
        return Err(TextError::InvalidInput("text is empty after trimming".into()));
    }
    Ok(key)
}

/// A Markov state: the surface string together with its canonical key.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Sentence {
    raw: String,
    key: String,
}

impl Sentence {
    pub fn new(raw: impl Into<String>) -> Result<Self, TextError> {
        let raw = raw.into();
        let key = canonicalize(&raw)?;
        Ok(Self { raw, key })
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn key(&self) -> &str {
        &self.key
    }

    /// Number of whitespace-delimited words in the canonical key.
    pub fn word_count(&self) -> usize {
        self.key.split(' ').count()
    }
}

impl std::fmt::Display for Sentence {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.key)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    sentences: Vec<Sentence>,
    source_id: String,
}

impl Paragraph {
    pub fn new(sentences: Vec<Sentence>, source_id: impl Into<String>) -> Result<Self, TextError> {
        if sentences.is_empty() {
            return Err(TextError::InvalidInput("paragraph has no sentences".into()));
        }
        Ok(Self {
            sentences,
            source_id: source_id.into(),
        })
    }

    pub fn parse(text: &str, source_id: impl Into<String>) -> Result<Self, TextError> {
        Self::new(segment(text), source_id)
    }

    pub fn sentences(&self) -> &[Sentence] {
        &self.sentences
    }

    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    /// The paragraph as a single state, sentences joined by one space.
    pub fn to_state(&self) -> Sentence {
        let joined = self
            .sentences
            .iter()
            .map(Sentence::key)
            .collect::<Vec<_>>()
            .join(" ");
        Sentence::new(joined).expect("paragraph sentences are non-empty")
    }
}

fn is_abbreviation(word: &str) -> bool {
    let trimmed = word.trim_start_matches(OPENERS);
    ABBREVIATIONS.contains(&trimmed)
}

/// Split text into sentences. Never returns an empty list for non-blank
/// input; blank input yields an empty list.
pub fn segment(text: &str) -> Vec<Sentence> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut start = 0usize;
    let mut i = 0usize;

    while i < chars.len() {
        let (_, c) = chars[i];
        if !matches!(c, '.' | '!' | '?') {
            i += 1;
            continue;
        }
        // Extend over repeated terminators and closing quotes.
        let mut end = i + 1;
        while end < chars.len() && (matches!(chars[end].1, '.' | '!' | '?') || CLOSERS.contains(&chars[end].1)) {
            end += 1;
        }
        let end_byte = chars.get(end).map_or(text.len(), |&(b, _)| b);

        let mut ws = end;
        let mut newlines = 0;
        while ws < chars.len() && chars[ws].1.is_whitespace() {
            if chars[ws].1 == '\n' {
                newlines += 1;
            }
            ws += 1;
        }

        let at_end = ws == chars.len();
        let has_space = ws > end;
        let boundary = if at_end {
            true
        } else if !has_space {
            false
        } else if newlines >= 2 {
            true
        } else {
            let next = chars[ws].1;
            let next_upper = next.is_uppercase()
                || (OPENERS.contains(&next) && chars.get(ws + 1).is_some_and(|&(_, n)| n.is_uppercase()));
            next_upper && !(c == '.' && ends_with_abbreviation(&text[start..end_byte]))
        };

        if boundary {
            if let Ok(s) = Sentence::new(&text[start..end_byte]) {
                out.push(s);
            }
            start = end_byte;
        }
        i = end;
    }

    if start < text.len() {
        if let Ok(s) = Sentence::new(&text[start..]) {
            out.push(s);
        }
    }
    out
}

fn ends_with_abbreviation(piece: &str) -> bool {
    let word = piece.split_whitespace().last().unwrap_or("");
    let word = word.trim_end_matches(CLOSERS);
    is_abbreviation(word)
}

/// The first paragraph of a document: text up to the first blank line.
pub fn first_paragraph(text: &str) -> Option<&str> {
    let mut start = None;
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        let blank = line.trim().is_empty();
        match (start, blank) {
            (None, false) => start = Some(offset),
            (Some(s), true) => return Some(text[s..offset].trim()),
            _ => {}
        }
        offset += line.len();
    }
    start.map(|s| text[s..].trim()).filter(|p| !p.is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    #[default]
    Sentence,
    Paragraph,
}

/// A seed state drawn from a corpus document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Seed {
    pub doc_id: String,
    pub state: Sentence,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub dataset_name: String,
    pub sample_seed: u64,
    pub unit: Unit,
    pub seeds: Vec<Seed>,
}

#[derive(Deserialize)]
struct JsonlRecord {
    id: Option<serde_json::Value>,
    text: String,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> TextError {
    TextError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    }
}

/// Read `(id, text)` documents from a directory of `.txt` files (sorted by
/// file name) or a JSONL file with `id` and `text` fields.
pub fn read_documents(path: &Path) -> Result<Vec<(String, String)>, TextError> {
    let meta = fs::metadata(path).map_err(|e| io_err(path, e))?;
    if meta.is_dir() {
        let mut files: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| io_err(path, e))?
            .filter_map(|entry| entry.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|ext| ext == "txt"))
            .collect();
        files.sort();
        files
            .into_iter()
            .map(|p| {
                let text = fs::read_to_string(&p).map_err(|e| io_err(&p, e))?;
                let id = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                Ok((id, text))
            })
            .collect()
    } else {
        let content = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
        let mut docs = Vec::new();
        for (lineno, line) in content.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let rec: JsonlRecord = serde_json::from_str(line).map_err(|e| TextError::Format {
                path: path.display().to_string(),
                line: lineno + 1,
                message: e.to_string(),
            })?;
            let id = match rec.id {
                Some(serde_json::Value::String(s)) => s,
                Some(other) => other.to_string(),
                None => format!("{}", docs.len()),
            };
            docs.push((id, rec.text));
        }
        Ok(docs)
    }
}

fn extract_seed(text: &str, unit: Unit) -> Option<Sentence> {
    match unit {
        Unit::Sentence => segment(text).into_iter().next(),
        Unit::Paragraph => first_paragraph(text).and_then(|p| Sentence::new(p).ok()),
    }
}

/// Uniformly sample `n` documents without replacement and extract the first
/// sentence (or paragraph) of each. Documents with no text are not part of
/// the sampling population.
pub fn load_corpus(path: &Path, n: usize, sample_seed: u64, unit: Unit) -> Result<Corpus, TextError> {
    let docs: Vec<(String, Sentence)> = read_documents(path)?
        .into_iter()
        .filter_map(|(id, text)| extract_seed(&text, unit).map(|s| (id, s)))
        .collect();
    if docs.len() < n {
        return Err(TextError::InsufficientData {
            requested: n,
            available: docs.len(),
            path: path.display().to_string(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(sample_seed);
    let picked = index::sample(&mut rng, docs.len(), n);
    let seeds = picked
        .into_iter()
        .map(|i| Seed {
            doc_id: docs[i].0.clone(),
            state: docs[i].1.clone(),
        })
        .collect();
    let dataset_name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "corpus".into());
    Ok(Corpus {
        dataset_name,
        sample_seed,
        unit,
        seeds,
    })
}

/// Distinct canonical keys in order of first appearance.
pub fn distinct_keys<'a>(states: impl IntoIterator<Item = &'a Sentence>) -> Vec<&'a str> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for s in states {
        if seen.insert(s.key()) {
            out.push(s.key());
        }
    }
    out
}
