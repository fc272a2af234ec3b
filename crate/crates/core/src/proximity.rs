//! Monthly proximity indices between ordered technology pairs.
//!
//! Keyword index: `IK = Σ_K N_K · C_K · A_K` over keywords shared by papers
//! related to each technology. Citation index: `IC = Σ (s(p,t1) + s(q,t2)) / 2`
//! over citations `p → q` from papers of the month related to `t1` to corpus
//! papers related to `t2`. Collaboration index: `IA = Σ_A N_A · H_A · A_A` over
//! authors bridging both technologies in the month.
//!
//! A month with no paper on a required side yields `None`: the value is
//! missing and gets interpolated later. A populated month without bridges
//! yields `Some(0.0)`.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::author_impact::{HIndexTable, HTables};
use crate::corpus::{month_bucket, MonthKey, MonthRange, PaperRecord, TechnologyCatalog};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TechPair {
    pub t1: String,
    pub t2: String,
}

impl TechPair {
    pub fn new(t1: impl Into<String>, t2: impl Into<String>) -> Self {
        Self { t1: t1.into(), t2: t2.into() }
    }

    pub fn swapped(&self) -> Self {
        Self { t1: self.t2.clone(), t2: self.t1.clone() }
    }
}

impl fmt::Display for TechPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}~{}", self.t1, self.t2)
    }
}

/// The five index kinds, in report column order (Index 1 through Index 5).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IndexKind {
    CitationFwd,
    CitationRev,
    CollabIncremental,
    CollabNonIncremental,
    KeywordIk,
}

impl IndexKind {
    pub const ALL: [IndexKind; 5] = [
        IndexKind::CitationFwd,
        IndexKind::CitationRev,
        IndexKind::CollabIncremental,
        IndexKind::CollabNonIncremental,
        IndexKind::KeywordIk,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IndexKind::CitationFwd => "citation-fwd",
            IndexKind::CitationRev => "citation-rev",
            IndexKind::CollabIncremental => "collab-incremental",
            IndexKind::CollabNonIncremental => "collab-non-incremental",
            IndexKind::KeywordIk => "keyword",
        }
    }

    /// 1-based report column.
    pub fn column(self) -> usize {
        IndexKind::ALL.iter().position(|k| *k == self).unwrap() + 1
    }
}

impl fmt::Display for IndexKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IndexKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IndexKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::malformed(format!("unknown index kind {s:?}")))
    }
}

/// Monthly values of one index for one pair; `None` marks a month without data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexSeries {
    pub pair: TechPair,
    pub kind: IndexKind,
    pub range: MonthRange,
    pub values: Vec<Option<f64>>,
}

impl IndexSeries {
    pub fn id(&self) -> String {
        series_id(&self.pair, self.kind)
    }

    pub fn present_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

pub fn series_id(pair: &TechPair, kind: IndexKind) -> String {
    format!("{}:{}:{}", pair.t1, pair.t2, kind.name())
}

fn pair_score(p: &PaperRecord, pair: &TechPair) -> f64 {
    (p.score(&pair.t1) + p.score(&pair.t2)) / 2.0
}

fn both_sides_present(bucket: &[&PaperRecord], pair: &TechPair) -> bool {
    bucket.iter().any(|p| p.related_to(&pair.t1)) && bucket.iter().any(|p| p.related_to(&pair.t2))
}

#[derive(Default)]
struct Accumulator {
    side1: usize,
    side2: usize,
    weight_sum: f64,
    weight_n: usize,
    attribution_sum: f64,
    papers: usize,
}

impl Accumulator {
    fn add(&mut self, p: &PaperRecord, pair: &TechPair, weight: f64) {
        self.side1 += p.related_to(&pair.t1) as usize;
        self.side2 += p.related_to(&pair.t2) as usize;
        self.weight_sum += weight;
        self.weight_n += 1;
        self.attribution_sum += pair_score(p, pair);
        self.papers += 1;
    }

    fn bridges(&self) -> bool {
        self.side1 > 0 && self.side2 > 0
    }

    fn occurrence(&self) -> f64 {
        (self.side1 + self.side2) as f64 / 2.0
    }

    fn mean_weight(&self) -> f64 {
        self.weight_sum / self.weight_n as f64
    }

    fn mean_attribution(&self) -> f64 {
        self.attribution_sum / self.papers as f64
    }
}

/// Keyword proximity for one month's papers.
pub fn keyword_index(bucket: &[&PaperRecord], pair: &TechPair) -> Option<f64> {
    if !both_sides_present(bucket, pair) {
        return None;
    }
    let mut per_keyword: BTreeMap<&str, Accumulator> = BTreeMap::new();
    for p in bucket.iter().filter(|p| p.related_to(&pair.t1) || p.related_to(&pair.t2)) {
        let mut seen = HashSet::new();
        for k in &p.keywords {
            if seen.insert(k.keyword.as_str()) {
                per_keyword.entry(k.keyword.as_str()).or_default().add(p, pair, k.similarity);
            }
        }
    }
    Some(
        per_keyword
            .values()
            .filter(|acc| acc.bridges())
            .map(|acc| acc.occurrence() * acc.mean_weight() * acc.mean_attribution())
            .sum(),
    )
}

/// Collaboration proximity for one month's papers, weighted by each bridging
/// author's h-index for `month` in `h_table`.
pub fn collaboration_index(
    bucket: &[&PaperRecord],
    pair: &TechPair,
    h_table: &HIndexTable,
    month: MonthKey,
) -> Option<f64> {
    if !both_sides_present(bucket, pair) {
        return None;
    }
    let period = h_table.variant.period_of(month);
    let mut per_author: BTreeMap<&str, Accumulator> = BTreeMap::new();
    for p in bucket.iter().filter(|p| p.related_to(&pair.t1) || p.related_to(&pair.t2)) {
        let mut seen = HashSet::new();
        for a in &p.authors {
            if seen.insert(a.as_str()) {
                per_author.entry(a.as_str()).or_default().add(p, pair, 0.0);
            }
        }
    }
    Some(
        per_author
            .iter()
            .filter(|(_, acc)| acc.bridges())
            .map(|(a, acc)| acc.occurrence() * h_table.get(a, period) as f64 * acc.mean_attribution())
            .sum(),
    )
}

/// Resolves work ids to corpus records for the citation index.
pub struct CorpusLookup<'a> {
    by_id: HashMap<&'a str, &'a PaperRecord>,
}

impl<'a> CorpusLookup<'a> {
    pub fn new(corpus: &'a [PaperRecord]) -> Self {
        Self { by_id: corpus.iter().map(|p| (p.work_id.as_str(), p)).collect() }
    }

    pub fn get(&self, id: &str) -> Option<&'a PaperRecord> {
        self.by_id.get(id).copied()
    }
}

/// Citation proximity from `pair.t1` to `pair.t2`. Returns the value and the
/// number of references that did not resolve inside the corpus.
pub fn citation_index(lookup: &CorpusLookup<'_>, bucket: &[&PaperRecord], pair: &TechPair) -> (Option<f64>, usize) {
    let mut unresolved = 0;
    let mut total = 0.0;
    let mut any_citing = false;
    for p in bucket.iter().filter(|p| p.related_to(&pair.t1)) {
        any_citing = true;
        let mut seen = HashSet::new();
        for r in &p.referenced_works {
            if !seen.insert(r.as_str()) {
                continue;
            }
            match lookup.get(r) {
                Some(q) if q.related_to(&pair.t2) => total += (p.score(&pair.t1) + q.score(&pair.t2)) / 2.0,
                Some(_) => {}
                None => unresolved += 1,
            }
        }
    }
    (any_citing.then_some(total), unresolved)
}

/// Every ordered pair of distinct catalog technologies, in catalog order.
pub fn ordered_pairs(catalog: &TechnologyCatalog) -> Vec<TechPair> {
    let ids: Vec<&str> = catalog.ids().collect();
    let mut pairs = Vec::new();
    for a in &ids {
        for b in &ids {
            if a != b {
                pairs.push(TechPair::new(*a, *b));
            }
        }
    }
    pairs
}

/// Computes all five index kinds for every ordered pair over the catalog range.
pub fn build_all_series(corpus: &[PaperRecord], catalog: &TechnologyCatalog, h_tables: &HTables) -> Vec<IndexSeries> {
    let range = catalog.range;
    let buckets = month_bucket(corpus, range);
    let lookup = CorpusLookup::new(corpus);
    let empty: Vec<&PaperRecord> = Vec::new();
    let months: Vec<MonthKey> = range.months().collect();

    ordered_pairs(catalog)
        .par_iter()
        .flat_map_iter(|pair| {
            let swapped = pair.swapped();
            let mut out: Vec<IndexSeries> = IndexKind::ALL
                .iter()
                .map(|&kind| IndexSeries {
                    pair: pair.clone(),
                    kind,
                    range,
                    values: Vec::with_capacity(months.len()),
                })
                .collect();
            for &m in &months {
                let bucket = buckets.get(&m).unwrap_or(&empty);
                let fwd = citation_index(&lookup, bucket, pair).0;
                let rev = citation_index(&lookup, bucket, &swapped).0;
                let inc = collaboration_index(bucket, pair, &h_tables.monthly_incremental, m);
                let non = collaboration_index(bucket, pair, &h_tables.monthly_non_incremental, m);
                let kw = keyword_index(bucket, pair);
                for (s, v) in out.iter_mut().zip([fwd, rev, inc, non, kw]) {
                    s.values.push(v);
                }
            }
            out
        })
        .collect()
}

/// CSV with columns `t1,t2,kind,year,month,value,is_missing`.
pub fn write_series_csv(writer: impl Write, series: &[IndexSeries]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t1", "t2", "kind", "year", "month", "value", "is_missing"])?;
    for s in series {
        for (i, v) in s.values.iter().enumerate() {
            let m = s.range.month_at(i);
            w.write_record([
                s.pair.t1.as_str(),
                s.pair.t2.as_str(),
                s.kind.name(),
                &m.year.to_string(),
                &m.month.to_string(),
                &v.map(crate::keywords::format_float).unwrap_or_default(),
                if v.is_some() { "false" } else { "true" },
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Inverse of [`write_series_csv`]. Series must list their months contiguously.
pub fn read_series_csv(reader: impl std::io::Read) -> Result<Vec<IndexSeries>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut out: Vec<IndexSeries> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| Error::Row { line, reason: e.to_string() })?;
        let field = |j: usize| rec.get(j).ok_or_else(|| Error::Row { line, reason: format!("missing column {j}") });
        let pair = TechPair::new(field(0)?, field(1)?);
        let kind: IndexKind = field(2)?.parse().map_err(|e: Error| Error::Row { line, reason: e.to_string() })?;
        let year: i32 = field(3)?.parse().map_err(|_| Error::Row { line, reason: "bad year".into() })?;
        let month: u8 = field(4)?.parse().map_err(|_| Error::Row { line, reason: "bad month".into() })?;
        let m = MonthKey::new(year, month).map_err(|e| Error::Row { line, reason: e.to_string() })?;
        let value = match field(6)? {
            "true" => None,
            _ => Some(field(5)?.parse::<f64>().map_err(|_| Error::Row { line, reason: "bad value".into() })?),
        };
        match out.last_mut() {
            Some(s) if s.pair == pair && s.kind == kind => {
                if s.range.end.offset(1) != m {
                    return Err(Error::Row { line, reason: format!("non-contiguous month {m}") });
                }
                s.range.end = m;
                s.values.push(value);
            }
            _ => out.push(IndexSeries { pair, kind, range: MonthRange { start: m, end: m }, values: vec![value] }),
        }
    }
    Ok(out)
}
