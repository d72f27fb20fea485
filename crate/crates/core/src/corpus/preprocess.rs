//! Text normalisation shared by every artifact and query.
//!
//! Pipeline: split on anything that is not a letter (so punctuation,
//! underscores and digits all separate tokens), split camelCase runs,
//! lowercase, drop stopwords and Java keywords, stem.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rust_stemmers::{Algorithm, Stemmer};
use serde::{Deserialize, Serialize};

use crate::error::Error;

pub const STOP_ENGLISH: &str = include_str!("../../data/stop_english.txt");
pub const STOP_ITALIAN: &str = include_str!("../../data/stop_italian.txt");
pub const JAVA_KEYWORDS: &str = include_str!("../../data/java_keywords.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Language {
    #[default]
    English,
    Italian,
}

impl FromStr for Language {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.trim().to_ascii_lowercase().as_str() {
            "english" | "en" => Ok(Language::English),
            "italian" | "it" => Ok(Language::Italian),
            other => Err(Error::Config(format!("unknown language '{other}'"))),
        }
    }
}

impl fmt::Display for Language {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Language::English => "english",
            Language::Italian => "italian",
        })
    }
}

fn word_list(text: &str) -> impl Iterator<Item = &str> {
    text.lines().map(str::trim).filter(|w| !w.is_empty())
}

pub struct Preprocessor {
    language: Language,
    stopwords: HashSet<String>,
    stemmer: Stemmer,
}

impl fmt::Debug for Preprocessor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Preprocessor")
            .field("language", &self.language)
            .field("stopwords", &self.stopwords.len())
            .finish()
    }
}

impl Preprocessor {
    pub fn new(language: Language) -> Self {
        let (stoplist, algorithm) = match language {
            Language::English => (STOP_ENGLISH, Algorithm::English),
            Language::Italian => (STOP_ITALIAN, Algorithm::Italian),
        };
        let stopwords = word_list(stoplist)
            .chain(word_list(JAVA_KEYWORDS))
            .map(str::to_owned)
            .collect();
        Preprocessor {
            language,
            stopwords,
            stemmer: Stemmer::create(algorithm),
        }
    }

    pub fn language(&self) -> Language {
        self.language
    }

    pub fn is_stopword(&self, word: &str) -> bool {
        self.stopwords.contains(word)
    }

    pub fn stem(&self, word: &str) -> String {
        self.stemmer.stem(word).into_owned()
    }

    pub fn preprocess(&self, raw: &str) -> Vec<String> {
        split_identifiers(raw)
            .into_iter()
            .map(|w| w.to_lowercase())
            .filter(|w| !self.is_stopword(w))
            .map(|w| self.stem(&w))
            .filter(|w| !w.is_empty())
            .collect()
    }
}

pub fn preprocess(raw: &str, language: Language) -> Vec<String> {
    Preprocessor::new(language).preprocess(raw)
}

/// Splits raw text into identifier fragments without changing case.
///
/// `getUserName_fast` gives `get`, `User`, `Name`, `fast`; `HTTPServer`
/// gives `HTTP`, `Server`; `utf8Decode` gives `utf`, `Decode`.
pub fn split_identifiers(raw: &str) -> Vec<String> {
    let mut out = Vec::new();
    for run in raw.split(|c: char| !c.is_alphabetic()) {
        if run.is_empty() {
            continue;
        }
        let chars: Vec<char> = run.chars().collect();
        let mut start = 0;
        for i in 1..chars.len() {
            let prev = chars[i - 1];
            let cur = chars[i];
            let lower_to_upper = prev.is_lowercase() && cur.is_uppercase();
            let acronym_end = prev.is_uppercase()
                && cur.is_uppercase()
                && chars.get(i + 1).is_some_and(|c| c.is_lowercase());
            if lower_to_upper || acronym_end {
                out.push(chars[start..i].iter().collect());
                start = i;
            }
        }
        out.push(chars[start..].iter().collect());
    }
    out
}
