//! Keyword assignments: a frequency-based extractor and a CSV loader for
//! assignments produced elsewhere (e.g. by an embedding model).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::corpus::PaperRecord;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KeywordAssignment {
    pub keyword: String,
    pub similarity: f64,
}

/// Case-folds and collapses internal whitespace.
pub fn normalize_keyword(raw: &str) -> String {
    raw.split_whitespace().map(str::to_lowercase).collect::<Vec<_>>().join(" ")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractorMode {
    LoadFile,
    FrequencyFallback,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExtractorSpec {
    pub mode: ExtractorMode,
    pub top_k: usize,
    /// Bigrams must occur at least this often in a text to be candidates.
    pub min_bigram_count: usize,
    /// Replaces the built-in English list when set.
    pub stopwords: Option<Vec<String>>,
}

impl Default for ExtractorSpec {
    fn default() -> Self {
        Self { mode: ExtractorMode::FrequencyFallback, top_k: 5, min_bigram_count: 2, stopwords: None }
    }
}

impl ExtractorSpec {
    pub fn validate(&self) -> Result<()> {
        if self.top_k == 0 {
            return Err(Error::config("top_k must be at least 1"));
        }
        Ok(())
    }

    fn stopword_set(&self) -> HashSet<String> {
        match &self.stopwords {
            Some(list) => list.iter().map(|w| w.to_lowercase()).collect(),
            None => ENGLISH_STOPWORDS.iter().map(|w| w.to_string()).collect(),
        }
    }
}

const ENGLISH_STOPWORDS: &[&str] = &[
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any", "are", "as",
    "at", "based", "be", "because", "been", "before", "being", "below", "between", "both", "but", "by",
    "can", "could", "did", "do", "does", "doing", "down", "during", "each", "et", "few", "for", "from",
    "further", "had", "has", "have", "having", "he", "her", "here", "hers", "him", "his", "how", "however",
    "i", "if", "in", "into", "is", "it", "its", "itself", "just", "may", "me", "more", "most", "must",
    "my", "new", "no", "nor", "not", "now", "of", "off", "on", "once", "only", "or", "other", "our",
    "ours", "out", "over", "own", "paper", "propose", "proposed", "same", "she", "should", "show", "so",
    "some", "such", "than", "that", "the", "their", "theirs", "them", "then", "there", "these", "they",
    "this", "those", "through", "to", "too", "two", "under", "until", "up", "us", "use", "used", "using",
    "very", "via", "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom", "why",
    "will", "with", "within", "would", "you", "your",
];

/// Ranks unigrams and bigrams of the title and abstract by term frequency.
///
/// Similarity is `tf(term) / tf(top term)`, so the first entry is always 1.0.
/// Ties are broken lexicographically. A bigram is two adjacent non-stopword
/// tokens (distinct from each other) seen at least `min_bigram_count` times.
pub fn annotate_fallback(record: &PaperRecord, spec: &ExtractorSpec) -> Vec<KeywordAssignment> {
    extract_keywords(&format!("{} {}", record.title, record.abstract_text), spec)
}

pub fn extract_keywords(text: &str, spec: &ExtractorSpec) -> Vec<KeywordAssignment> {
    let stop = spec.stopword_set();
    let lowered = text.to_lowercase();
    // None marks a break (stopword or non-alphanumeric run) that bigrams may not span.
    let mut stream: Vec<Option<&str>> = Vec::new();
    for tok in lowered.split(|c: char| !c.is_alphanumeric()) {
        if tok.is_empty() {
            continue;
        }
        if stop.contains(tok) || tok.chars().all(|c| c.is_ascii_digit()) || tok.chars().count() < 2 {
            stream.push(None);
        } else {
            stream.push(Some(tok));
        }
    }

    let mut counts: HashMap<String, usize> = HashMap::new();
    for t in stream.iter().flatten() {
        *counts.entry((*t).to_string()).or_default() += 1;
    }
    let mut bigrams: HashMap<String, usize> = HashMap::new();
    for w in stream.windows(2) {
        if let [Some(a), Some(b)] = w {
            if a != b {
                *bigrams.entry(format!("{a} {b}")).or_default() += 1;
            }
        }
    }
    counts.extend(bigrams.into_iter().filter(|(_, c)| *c >= spec.min_bigram_count.max(1)));

    let mut ranked: Vec<(String, usize)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    let Some(top) = ranked.first().map(|(_, c)| *c) else {
        return Vec::new();
    };
    ranked
        .into_iter()
        .take(spec.top_k)
        .map(|(keyword, c)| KeywordAssignment { keyword, similarity: c as f64 / top as f64 })
        .collect()
}

/// Runs the fallback extractor over every record.
pub fn annotate_corpus(corpus: &mut [PaperRecord], spec: &ExtractorSpec) {
    use rayon::prelude::*;
    corpus.par_iter_mut().for_each(|p| p.keywords = annotate_fallback(p, spec));
}

/// Outcome of attaching an assignment file to a corpus.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LoadTally {
    pub attached: usize,
    pub unknown_work: usize,
    pub out_of_bounds: usize,
    pub duplicate_keyword: usize,
}

#[derive(Deserialize)]
struct AssignmentRow {
    work_id: String,
    keyword: String,
    similarity: f64,
}

/// Attaches `work_id,keyword,similarity` rows to the corpus, replacing any
/// existing assignments. Records absent from the file end up with none.
pub fn load_assignments(reader: impl Read, corpus: &mut [PaperRecord]) -> Result<LoadTally> {
    let positions: HashMap<String, usize> =
        corpus.iter().enumerate().map(|(i, p)| (p.work_id.clone(), i)).collect();
    let mut attached: BTreeMap<usize, Vec<KeywordAssignment>> = BTreeMap::new();
    let mut tally = LoadTally::default();

    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["work_id", "keyword", "similarity"] {
        return Err(Error::Row { line: 1, reason: "expected header work_id,keyword,similarity".into() });
    }
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Row { line, reason: e.to_string() })?;
        let row: AssignmentRow =
            rec.deserialize(Some(&headers)).map_err(|e| Error::Row { line, reason: e.to_string() })?;
        let keyword = normalize_keyword(&row.keyword);
        if keyword.is_empty() {
            return Err(Error::Row { line, reason: "empty keyword".into() });
        }
        if !(0.0..=1.0).contains(&row.similarity) {
            tally.out_of_bounds += 1;
            continue;
        }
        let Some(&pos) = positions.get(crate::corpus::short_id(&row.work_id)) else {
            tally.unknown_work += 1;
            continue;
        };
        let list = attached.entry(pos).or_default();
        if list.iter().any(|k| k.keyword == keyword) {
            tally.duplicate_keyword += 1;
            continue;
        }
        list.push(KeywordAssignment { keyword, similarity: row.similarity });
        tally.attached += 1;
    }
    for (i, p) in corpus.iter_mut().enumerate() {
        p.keywords = attached.remove(&i).unwrap_or_default();
    }
    Ok(tally)
}

pub fn export_assignments(writer: impl Write, corpus: &[PaperRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["work_id", "keyword", "similarity"])?;
    for p in corpus {
        for k in &p.keywords {
            w.write_record([p.work_id.as_str(), k.keyword.as_str(), &format_float(k.similarity)])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Shortest representation that parses back to the same value.
pub(crate) fn format_float(x: f64) -> String {
    format!("{x:?}")
}
