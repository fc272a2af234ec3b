//! Corpus-local h-indices per author and period.
//!
//! Citations are counted only between works of the refined corpus. Four
//! variants are built: monthly or yearly periods, each either incremental
//! (papers and citing papers up to the period) or non-incremental (papers of
//! the period, cited by any corpus paper regardless of date).

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::corpus::{MonthKey, PaperRecord};
use crate::error::Result;

/// Largest `h` such that at least `h` counts are `>= h`.
pub fn h_index(citation_counts: &[u32]) -> u32 {
    let mut sorted = citation_counts.to_vec();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    let mut h = 0;
    for (i, &c) in sorted.iter().enumerate() {
        if c as usize > i {
            h = i as u32 + 1;
        } else {
            break;
        }
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Granularity {
    Monthly,
    Yearly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Accumulation {
    Incremental,
    NonIncremental,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HVariant {
    pub granularity: Granularity,
    pub accumulation: Accumulation,
}

impl HVariant {
    pub const MONTHLY_INCREMENTAL: HVariant =
        HVariant { granularity: Granularity::Monthly, accumulation: Accumulation::Incremental };
    pub const MONTHLY_NON_INCREMENTAL: HVariant =
        HVariant { granularity: Granularity::Monthly, accumulation: Accumulation::NonIncremental };
    pub const YEARLY_INCREMENTAL: HVariant =
        HVariant { granularity: Granularity::Yearly, accumulation: Accumulation::Incremental };
    pub const YEARLY_NON_INCREMENTAL: HVariant =
        HVariant { granularity: Granularity::Yearly, accumulation: Accumulation::NonIncremental };

    pub const ALL: [HVariant; 4] = [
        Self::MONTHLY_INCREMENTAL,
        Self::MONTHLY_NON_INCREMENTAL,
        Self::YEARLY_INCREMENTAL,
        Self::YEARLY_NON_INCREMENTAL,
    ];

    pub fn period_of(&self, month: MonthKey) -> Period {
        match self.granularity {
            Granularity::Monthly => Period::Month(month),
            Granularity::Yearly => Period::Year(month.year),
        }
    }

    pub fn name(&self) -> &'static str {
        match (self.granularity, self.accumulation) {
            (Granularity::Monthly, Accumulation::Incremental) => "monthly-incremental",
            (Granularity::Monthly, Accumulation::NonIncremental) => "monthly-non-incremental",
            (Granularity::Yearly, Accumulation::Incremental) => "yearly-incremental",
            (Granularity::Yearly, Accumulation::NonIncremental) => "yearly-non-incremental",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Period {
    Month(MonthKey),
    Year(i32),
}

impl std::fmt::Display for Period {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Period::Month(m) => write!(f, "{m}"),
            Period::Year(y) => write!(f, "{y:04}"),
        }
    }
}

/// h-index per (author, period) for one variant.
///
/// Entries exist only for periods in which the author published; consumers
/// treat a missing entry as 0.
#[derive(Clone, Debug, PartialEq)]
pub struct HIndexTable {
    pub variant: HVariant,
    entries: BTreeMap<String, BTreeMap<Period, u32>>,
    /// References that did not resolve to a corpus work.
    pub unknown_references: usize,
}

impl HIndexTable {
    pub fn get(&self, author: &str, period: Period) -> u32 {
        self.entries.get(author).and_then(|m| m.get(&period)).copied().unwrap_or(0)
    }

    pub fn author_periods(&self, author: &str) -> impl Iterator<Item = (Period, u32)> + '_ {
        self.entries.get(author).into_iter().flat_map(|m| m.iter().map(|(p, h)| (*p, *h)))
    }

    pub fn len(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Period, u32)> {
        self.entries.iter().flat_map(|(a, m)| m.iter().map(move |(p, h)| (a.as_str(), *p, *h)))
    }

    /// CSV with columns `author_id,period,variant,h`.
    pub fn write_csv(&self, writer: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["author_id", "period", "variant", "h"])?;
        for (a, p, h) in self.iter() {
            w.write_record([a, &p.to_string(), self.variant.name(), &h.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Distinct citing papers per cited work, as sorted citing periods.
struct CitationIndex {
    citing_periods: HashMap<usize, Vec<Period>>,
    unknown: usize,
}

fn citation_index(corpus: &[PaperRecord], variant: HVariant) -> CitationIndex {
    let pos: HashMap<&str, usize> = corpus.iter().enumerate().map(|(i, p)| (p.work_id.as_str(), i)).collect();
    let mut citing_periods: HashMap<usize, Vec<Period>> = HashMap::new();
    let mut unknown = 0;
    for p in corpus {
        let mut cited = HashSet::new();
        for r in &p.referenced_works {
            match pos.get(r.as_str()) {
                Some(&q) if cited.insert(q) => {
                    citing_periods.entry(q).or_default().push(variant.period_of(p.month));
                }
                Some(_) => {}
                None => unknown += 1,
            }
        }
    }
    for v in citing_periods.values_mut() {
        v.sort_unstable();
    }
    CitationIndex { citing_periods, unknown }
}

pub fn build_h_table(corpus: &[PaperRecord], variant: HVariant) -> HIndexTable {
    let cites = citation_index(corpus, variant);
    let mut by_author: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in corpus.iter().enumerate() {
        for a in &p.authors {
            by_author.entry(a.as_str()).or_default().push(i);
        }
    }

    let mut entries = BTreeMap::new();
    for (author, papers) in by_author {
        let mut periods: Vec<Period> = papers.iter().map(|&i| variant.period_of(corpus[i].month)).collect();
        periods.sort_unstable();
        periods.dedup();
        let mut table = BTreeMap::new();
        for &period in &periods {
            let counts: Vec<u32> = match variant.accumulation {
                Accumulation::Incremental => papers
                    .iter()
                    .filter(|&&i| variant.period_of(corpus[i].month) <= period)
                    .map(|i| {
                        cites.citing_periods.get(i).map_or(0, |c| c.partition_point(|cp| *cp <= period) as u32)
                    })
                    .collect(),
                Accumulation::NonIncremental => papers
                    .iter()
                    .filter(|&&i| variant.period_of(corpus[i].month) == period)
                    .map(|i| cites.citing_periods.get(i).map_or(0, |c| c.len() as u32))
                    .collect(),
            };
            table.insert(period, h_index(&counts));
        }
        entries.insert(author.to_string(), table);
    }
    HIndexTable { variant, entries, unknown_references: cites.unknown }
}

/// All four variants.
#[derive(Clone, Debug)]
pub struct HTables {
    pub monthly_incremental: HIndexTable,
    pub monthly_non_incremental: HIndexTable,
    pub yearly_incremental: HIndexTable,
    pub yearly_non_incremental: HIndexTable,
}

impl HTables {
    pub fn build(corpus: &[PaperRecord]) -> Self {
        Self {
            monthly_incremental: build_h_table(corpus, HVariant::MONTHLY_INCREMENTAL),
            monthly_non_incremental: build_h_table(corpus, HVariant::MONTHLY_NON_INCREMENTAL),
            yearly_incremental: build_h_table(corpus, HVariant::YEARLY_INCREMENTAL),
            yearly_non_incremental: build_h_table(corpus, HVariant::YEARLY_NON_INCREMENTAL),
        }
    }

    pub fn all(&self) -> [&HIndexTable; 4] {
        [
            &self.monthly_incremental,
            &self.monthly_non_incremental,
            &self.yearly_incremental,
            &self.yearly_non_incremental,
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute_h(counts: &[u32]) -> u32 {
        (0..=counts.len() as u32).filter(|&h| counts.iter().filter(|&&c| c >= h).count() as u32 >= h).max().unwrap()
    }

    fn paper(id: &str, month: u8, authors: &[&str], refs: &[&str]) -> PaperRecord {
        PaperRecord {
            work_id: id.into(),
            title: String::new(),
            abstract_text: String::new(),
            publication_date: format!("2010-{month:02}-10"),
            month: MonthKey::new(2010, month).unwrap(),
            authors: authors.iter().map(|s| s.to_string()).collect(),
            referenced_works: refs.iter().map(|s| s.to_string()).collect(),
            tech_scores: [("C1".to_string(), 0.5)].into_iter().collect(),
            keywords: vec![],
        }
    }

    #[test]
    fn hand_cases() {
        assert_eq!(h_index(&[]), 0);
        assert_eq!(h_index(&[3, 0, 6, 1, 5]), 3);
        assert_eq!(h_index(&[10, 10, 10]), 3);
        assert_eq!(h_index(&[0, 0]), 0);
    }

    #[test]
    fn two_paper_trace() {
        let corpus = vec![paper("P1", 1, &["A"], &["X"]), paper("P2", 2, &["A"], &["P1"])];
        let t = build_h_table(&corpus, HVariant::MONTHLY_INCREMENTAL);
        assert_eq!(t.get("A", Period::Month(MonthKey::new(2010, 1).unwrap())), 0);
        assert_eq!(t.get("A", Period::Month(MonthKey::new(2010, 2).unwrap())), 1);
        assert_eq!(t.unknown_references, 1);
        // non-incremental: P1's month counts its later citation
        let n = build_h_table(&corpus, HVariant::MONTHLY_NON_INCREMENTAL);
        assert_eq!(n.get("A", Period::Month(MonthKey::new(2010, 1).unwrap())), 1);
        assert_eq!(n.get("A", Period::Month(MonthKey::new(2010, 2).unwrap())), 0);
        let y = build_h_table(&corpus, HVariant::YEARLY_INCREMENTAL);
        assert_eq!(y.get("A", Period::Year(2010)), 1);
    }

    #[test]
    fn no_cross_references_means_zero() {
        let corpus = vec![paper("P1", 1, &["A"], &["X"]), paper("P2", 2, &["B"], &["Y"])];
        for v in HVariant::ALL {
            let t = build_h_table(&corpus, v);
            assert!(t.iter().all(|(_, _, h)| h == 0));
        }
    }

    #[test]
    fn csv_export_has_header() {
        let corpus = vec![paper("P1", 1, &["A"], &["X"])];
        let mut buf = Vec::new();
        build_h_table(&corpus, HVariant::YEARLY_NON_INCREMENTAL).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text, "author_id,period,variant,h\nA,2010,yearly-non-incremental,0\n");
    }

    proptest! {
        #[test]
        fn matches_brute_force(counts in proptest::collection::vec(0u32..60, 0..50)) {
            prop_assert_eq!(h_index(&counts), brute_h(&counts));
        }

        #[test]
        fn permutation_invariant(mut counts in proptest::collection::vec(0u32..30, 0..40), seed in any::<u64>()) {
            let h = h_index(&counts);
            let n = counts.len();
            if n > 1 {
                let mut s = seed;
                for i in (1..n).rev() {
                    s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    counts.swap(i, (s >> 33) as usize % (i + 1));
                }
            }
            prop_assert_eq!(h_index(&counts), h);
        }
    }
}
