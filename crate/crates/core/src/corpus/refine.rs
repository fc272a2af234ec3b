//! Corpus refinement: reference and concept filtering, deduplication and
//! redistribution of default-dated January records.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::abstract_text::reconstruct_abstract;
use super::model::{short_id, MonthKey, MonthRange, PaperRecord, RawWork, TechnologyCatalog};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RefineConfig {
    /// A paper is related to a technology when its score exceeds this.
    pub relatedness_threshold: f64,
    pub seed: u64,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self { relatedness_threshold: 0.0, seed: 0 }
    }
}

/// Accounts for every input record. `output` plus every drop counter equals `input`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub input: usize,
    pub malformed: usize,
    pub bad_date: usize,
    pub out_of_range: usize,
    pub no_references: usize,
    pub no_concepts: usize,
    pub duplicates_merged: usize,
    pub output: usize,
    /// Survivors moved out of a January-1 default date.
    pub january_redistributed: usize,
    /// Survivors whose abstract index was malformed (kept with an empty abstract).
    pub abstract_errors: usize,
}

impl CorpusStats {
    pub fn dropped(&self) -> usize {
        self.malformed
            + self.bad_date
            + self.out_of_range
            + self.no_references
            + self.no_concepts
            + self.duplicates_merged
    }

    pub fn is_conserved(&self) -> bool {
        self.dropped() + self.output == self.input
    }
}

/// Month assigned to a record dated on January 1st: `hash(work_id, seed) mod 12`.
pub fn redistributed_month(work_id: &str, seed: u64, year: i32) -> MonthKey {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(short_id(work_id).as_bytes());
    let digest = h.finalize();
    let mut first = [0u8; 8];
    first.copy_from_slice(&digest[..8]);
    let month = (u64::from_le_bytes(first) % 12) as u8 + 1;
    MonthKey { year, month }
}

struct Candidate {
    order: usize,
    completeness: usize,
    record: PaperRecord,
    abstract_error: bool,
}

/// Refines raw works into the analysis corpus.
///
/// Rules, in order: malformed works, unparseable dates, works without
/// references and works with no catalog attribution are dropped; records
/// sharing a work id collapse onto the most complete one (first in input
/// order on ties); January-1 records are spread over the year; records whose
/// effective month falls outside the catalog range are dropped. Output is
/// sorted by `(month, work_id)`.
pub fn refine_corpus(
    works: &[RawWork],
    catalog: &TechnologyCatalog,
    cfg: &RefineConfig,
) -> (Vec<PaperRecord>, CorpusStats) {
    let mut stats = CorpusStats { input: works.len(), ..Default::default() };
    let mut groups: HashMap<String, Candidate> = HashMap::new();

    for (order, w) in works.iter().enumerate() {
        if w.validate().is_err() {
            stats.malformed += 1;
            continue;
        }
        let Some((month, day)) = w.publication_date.as_deref().and_then(|d| MonthKey::parse_date(d).ok())
        else {
            stats.bad_date += 1;
            continue;
        };
        if w.referenced_works.is_empty() {
            stats.no_references += 1;
            continue;
        }
        let tech_scores = catalog_scores(w, catalog, cfg.relatedness_threshold);
        if tech_scores.is_empty() {
            stats.no_concepts += 1;
            continue;
        }
        let effective = if month.month == 1 && day == 1 {
            redistributed_month(&w.id, cfg.seed, month.year)
        } else {
            month
        };
        if !catalog.range.contains(effective) {
            stats.out_of_range += 1;
            continue;
        }

        let (abstract_text, abstract_error) = match &w.abstract_inverted_index {
            Some(idx) => match reconstruct_abstract(idx) {
                Ok(text) => (text, false),
                Err(_) => (String::new(), true),
            },
            None => (String::new(), false),
        };
        let mut referenced = Vec::new();
        for r in &w.referenced_works {
            let r = short_id(r).to_string();
            if !referenced.contains(&r) {
                referenced.push(r);
            }
        }
        let record = PaperRecord {
            work_id: short_id(&w.id).to_string(),
            title: w.title.clone().unwrap_or_default(),
            abstract_text,
            publication_date: w.publication_date.clone().unwrap_or_default(),
            month: effective,
            authors: w.author_ids(),
            referenced_works: referenced,
            tech_scores,
            keywords: Vec::new(),
        };
        let completeness = [
            !record.title.trim().is_empty(),
            !record.abstract_text.is_empty(),
            !record.authors.is_empty(),
            !record.referenced_works.is_empty(),
            !w.concepts.is_empty(),
        ]
        .iter()
        .filter(|b| **b)
        .count();
        let cand = Candidate { order, completeness, record, abstract_error };

        match groups.get_mut(&cand.record.work_id) {
            Some(existing) => {
                stats.duplicates_merged += 1;
                if cand.completeness > existing.completeness {
                    *existing = cand;
                }
            }
            None => {
                groups.insert(cand.record.work_id.clone(), cand);
            }
        }
    }

    let mut kept: Vec<Candidate> = groups.into_values().collect();
    kept.sort_by_key(|c| c.order);
    let mut out: Vec<PaperRecord> = Vec::with_capacity(kept.len());
    for c in kept {
        if let Ok((orig, day)) = MonthKey::parse_date(&c.record.publication_date) {
            if orig.month == 1 && day == 1 && c.record.month != orig {
                stats.january_redistributed += 1;
            }
        }
        if c.abstract_error {
            stats.abstract_errors += 1;
        }
        out.push(c.record);
    }
    out.sort_by(|a, b| (a.month, &a.work_id).cmp(&(b.month, &b.work_id)));
    stats.output = out.len();
    debug_assert!(stats.is_conserved());
    (out, stats)
}

fn catalog_scores(w: &RawWork, catalog: &TechnologyCatalog, threshold: f64) -> BTreeMap<String, f64> {
    let mut scores: BTreeMap<String, f64> = BTreeMap::new();
    for c in &w.concepts {
        let id = short_id(&c.id);
        if c.score > threshold && catalog.contains(id) {
            let e = scores.entry(id.to_string()).or_insert(c.score);
            if c.score > *e {
                *e = c.score;
            }
        }
    }
    scores
}

/// Partitions a corpus by effective month. Records outside `range` are left out.
pub fn month_bucket(corpus: &[PaperRecord], range: MonthRange) -> BTreeMap<MonthKey, Vec<&PaperRecord>> {
    let mut buckets: BTreeMap<MonthKey, Vec<&PaperRecord>> = BTreeMap::new();
    for p in corpus.iter().filter(|p| range.contains(p.month)) {
        buckets.entry(p.month).or_default().push(p);
    }
    buckets
}
