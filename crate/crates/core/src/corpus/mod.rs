//! Artifact ingestion, the answer oracle, and candidate-link enumeration.
//!
//! A dataset directory holds `source/` and `target/` folders of flat text
//! files plus `answers.txt` with one `source_id<TAB>target_id` per line.
//! Ids are file stems. An optional `dataset.conf` may set `name` and
//! `language`.

mod preprocess;

use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::parse_key_values;
use crate::error::{Error, Result};

pub use preprocess::{
    preprocess, split_identifiers, Language, Preprocessor, JAVA_KEYWORDS, STOP_ENGLISH,
    STOP_ITALIAN,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Source,
    Target,
}

impl Side {
    pub fn opposite(self) -> Side {
        match self {
            Side::Source => Side::Target,
            Side::Target => Side::Source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub id: String,
    pub side: Side,
    pub raw_text: String,
    pub tokens: Vec<String>,
}

impl Artifact {
    pub fn new(id: impl Into<String>, side: Side, raw_text: impl Into<String>, pp: &Preprocessor) -> Self {
        let raw_text = raw_text.into();
        let tokens = pp.preprocess(&raw_text);
        Artifact {
            id: id.into(),
            side,
            raw_text,
            tokens,
        }
    }

    /// Builds an artifact from already-processed tokens.
    pub fn from_tokens(id: impl Into<String>, side: Side, tokens: Vec<String>) -> Self {
        Artifact {
            id: id.into(),
            side,
            raw_text: tokens.join(" "),
            tokens,
        }
    }

    /// Nothing survived preprocessing. Such artifacts stay in the corpus.
    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CandidateLink {
    pub source_id: String,
    pub target_id: String,
    pub label: bool,
}

#[derive(Debug, Clone)]
pub struct TraceDataset {
    pub name: String,
    pub language: Language,
    pub sources: Vec<Artifact>,
    pub targets: Vec<Artifact>,
    pub valid_links: BTreeSet<(String, String)>,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    /// Overrides `dataset.conf`; English when neither is given.
    pub language: Option<Language>,
    pub name: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub sources: usize,
    pub targets: usize,
    pub candidates: usize,
    pub valid: usize,
    pub invalid: usize,
    pub empty_artifacts: usize,
}

impl DatasetSummary {
    pub fn valid_ratio(&self) -> f64 {
        if self.candidates == 0 {
            0.0
        } else {
            self.valid as f64 / self.candidates as f64
        }
    }
}

impl fmt::Display for DatasetSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: {} invalid, {} valid ({:.2}%)",
            self.name,
            self.invalid,
            self.valid,
            100.0 * self.valid_ratio()
        )
    }
}

impl TraceDataset {
    /// Builds a dataset in memory, checking that every answer references
    /// existing ids and that ids are unique per side.
    pub fn new(
        name: impl Into<String>,
        language: Language,
        mut sources: Vec<Artifact>,
        mut targets: Vec<Artifact>,
        valid_links: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self> {
        sources.sort_by(|a, b| a.id.cmp(&b.id));
        targets.sort_by(|a, b| a.id.cmp(&b.id));
        for (side, list) in [("source", &sources), ("target", &targets)] {
            if let Some(w) = list.windows(2).find(|w| w[0].id == w[1].id) {
                return Err(Error::Data(format!("duplicate {side} id '{}'", w[0].id)));
            }
        }
        let source_ids: HashSet<&str> = sources.iter().map(|a| a.id.as_str()).collect();
        let target_ids: HashSet<&str> = targets.iter().map(|a| a.id.as_str()).collect();
        let valid_links: BTreeSet<(String, String)> = valid_links.into_iter().collect();
        let offenders: Vec<String> = valid_links
            .iter()
            .filter(|(s, t)| !source_ids.contains(s.as_str()) || !target_ids.contains(t.as_str()))
            .map(|(s, t)| format!("{s}\t{t}"))
            .collect();
        if !offenders.is_empty() {
            return Err(Error::Data(format!(
                "answer set references unknown ids: {}",
                offenders.join(", ")
            )));
        }
        Ok(TraceDataset {
            name: name.into(),
            language,
            sources,
            targets,
            valid_links,
        })
    }

    pub fn artifacts(&self, side: Side) -> &[Artifact] {
        match side {
            Side::Source => &self.sources,
            Side::Target => &self.targets,
        }
    }

    pub fn is_valid(&self, source_id: &str, target_id: &str) -> bool {
        self.valid_links
            .contains(&(source_id.to_owned(), target_id.to_owned()))
    }

    pub fn num_candidates(&self) -> usize {
        self.sources.len() * self.targets.len()
    }

    /// The full Cartesian product, sorted by `(source_id, target_id)`.
    pub fn enumerate_links(&self) -> Vec<CandidateLink> {
        let mut links = Vec::with_capacity(self.num_candidates());
        for s in &self.sources {
            for t in &self.targets {
                links.push(CandidateLink {
                    source_id: s.id.clone(),
                    target_id: t.id.clone(),
                    label: self.is_valid(&s.id, &t.id),
                });
            }
        }
        links
    }

    pub fn summary(&self) -> DatasetSummary {
        let candidates = self.num_candidates();
        let valid = self.valid_links.len();
        DatasetSummary {
            name: self.name.clone(),
            sources: self.sources.len(),
            targets: self.targets.len(),
            candidates,
            valid,
            invalid: candidates - valid,
            empty_artifacts: self
                .sources
                .iter()
                .chain(&self.targets)
                .filter(|a| a.is_empty())
                .count(),
        }
    }

    /// Writes one JSON object per artifact: `{"id", "side", "tokens"}`.
    pub fn write_tokens_jsonl(&self, path: &Path) -> Result<()> {
        let mut out = Vec::new();
        for a in self.sources.iter().chain(&self.targets) {
            let line = serde_json::json!({ "id": a.id, "side": a.side, "tokens": a.tokens });
            writeln!(out, "{line}").expect("writing to a Vec cannot fail");
        }
        fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Free-function form of [`TraceDataset::enumerate_links`].
pub fn enumerate_links(dataset: &TraceDataset) -> Vec<CandidateLink> {
    dataset.enumerate_links()
}

fn decode_text(bytes: Vec<u8>) -> String {
    match String::from_utf8(bytes) {
        Ok(s) => s,
        // CoEST dumps are frequently Latin-1.
        Err(e) => e.into_bytes().iter().map(|&b| b as char).collect(),
    }
}

fn list_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with('.'));
        if path.is_file() && !hidden {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn load_side(dir: &Path, side: Side, pp: &Preprocessor) -> Result<Vec<Artifact>> {
    let files = list_files(dir)?;
    files
        .par_iter()
        .map(|path| {
            let id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .ok_or_else(|| Error::Data(format!("unusable file name {}", path.display())))?
                .to_owned();
            let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
            Ok(Artifact::new(id, side, decode_text(bytes), pp))
        })
        .collect()
}

pub fn parse_answers(text: &str) -> Result<Vec<(String, String)>> {
    let mut links = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split('\t');
        match (parts.next(), parts.next(), parts.next()) {
            (Some(s), Some(t), None) if !s.trim().is_empty() && !t.trim().is_empty() => {
                links.push((s.trim().to_owned(), t.trim().to_owned()))
            }
            _ => {
                return Err(Error::Data(format!(
                    "answers.txt line {}: expected 'source_id<TAB>target_id', got {line:?}",
                    lineno + 1
                )))
            }
        }
    }
    Ok(links)
}

/// Loads and preprocesses a dataset directory.
pub fn load_dataset(dir: &Path, options: &LoadOptions) -> Result<TraceDataset> {
    let conf_path = dir.join("dataset.conf");
    let conf = if conf_path.is_file() {
        let text = fs::read_to_string(&conf_path).map_err(|e| Error::io(&conf_path, e))?;
        parse_key_values(&text)?
    } else {
        Default::default()
    };
    let language = match (options.language, conf.get("language")) {
        (Some(l), _) => l,
        (None, Some(l)) => l.parse()?,
        (None, None) => Language::English,
    };
    let name = options
        .name
        .clone()
        .or_else(|| conf.get("name").cloned())
        .or_else(|| dir.file_name().and_then(|n| n.to_str()).map(str::to_owned))
        .unwrap_or_else(|| "dataset".to_owned());

    let answers_path = dir.join("answers.txt");
    if !answers_path.is_file() {
        return Err(Error::Data(format!("missing answer file {}", answers_path.display())));
    }
    let answers_text =
        fs::read_to_string(&answers_path).map_err(|e| Error::io(&answers_path, e))?;
    let answers = parse_answers(&answers_text)?;

    let pp = Preprocessor::new(language);
    let sources = load_side(&dir.join("source"), Side::Source, &pp)?;
    let targets = load_side(&dir.join("target"), Side::Target, &pp)?;
    TraceDataset::new(name, language, sources, targets, answers)
}
