//! Record types for the scholarly-work corpus.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::keywords::KeywordAssignment;

const OPENALEX_PREFIX: &str = "https://openalex.org/";

/// Strips the `https://openalex.org/` prefix from an OpenAlex identifier.
pub fn short_id(id: &str) -> &str {
    id.strip_prefix(OPENALEX_PREFIX).unwrap_or(id)
}

/// A calendar month. Ordered chronologically.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct MonthKey {
    pub year: i32,
    pub month: u8,
}

impl MonthKey {
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::malformed(format!("month {month} outside 1..=12")));
        }
        Ok(Self { year, month })
    }

    /// Months since year 0, January.
    pub fn ordinal(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }

    pub fn from_ordinal(ordinal: i64) -> Self {
        let year = ordinal.div_euclid(12) as i32;
        let month = ordinal.rem_euclid(12) as u8 + 1;
        Self { year, month }
    }

    /// Signed number of months from `self` to `later`.
    pub fn months_until(self, later: MonthKey) -> i64 {
        later.ordinal() - self.ordinal()
    }

    pub fn offset(self, months: i64) -> Self {
        Self::from_ordinal(self.ordinal() + months)
    }

    /// Parses the year and month of an ISO-8601 date (`YYYY-MM-DD`), returning the day too.
    pub fn parse_date(date: &str) -> Result<(Self, u8)> {
        let bad = || Error::malformed(format!("unparseable date {date:?}"));
        let mut parts = date.trim().splitn(3, '-');
        let year: i32 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let month: u8 = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let day: u8 = match parts.next() {
            Some(d) => d.get(..2).unwrap_or(d).parse().map_err(|_| bad())?,
            None => 1,
        };
        if !(1..=31).contains(&day) {
            return Err(bad());
        }
        Ok((Self::new(year, month).map_err(|_| bad())?, day))
    }
}

impl fmt::Display for MonthKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for MonthKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (y, m) = s
            .split_once('-')
            .ok_or_else(|| Error::malformed(format!("expected YYYY-MM, got {s:?}")))?;
        let year = y.parse().map_err(|_| Error::malformed(format!("bad year in {s:?}")))?;
        let month = m.parse().map_err(|_| Error::malformed(format!("bad month in {s:?}")))?;
        MonthKey::new(year, month)
    }
}

/// Inclusive month range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MonthRange {
    pub start: MonthKey,
    pub end: MonthKey,
}

impl MonthRange {
    pub fn new(start: MonthKey, end: MonthKey) -> Result<Self> {
        if end < start {
            return Err(Error::config(format!("range end {end} precedes start {start}")));
        }
        Ok(Self { start, end })
    }

    pub fn len(&self) -> usize {
        (self.start.months_until(self.end) + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn contains(&self, m: MonthKey) -> bool {
        self.start <= m && m <= self.end
    }

    /// Position of `m` inside the range.
    pub fn index_of(&self, m: MonthKey) -> Option<usize> {
        self.contains(m).then(|| self.start.months_until(m) as usize)
    }

    pub fn month_at(&self, index: usize) -> MonthKey {
        self.start.offset(index as i64)
    }

    pub fn months(&self) -> impl Iterator<Item = MonthKey> + '_ {
        (0..self.len()).map(|i| self.month_at(i))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Technology {
    pub id: String,
    pub label: String,
}

/// The technologies under study and the analysis window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TechnologyCatalog {
    pub technologies: Vec<Technology>,
    pub range: MonthRange,
}

impl TechnologyCatalog {
    pub fn new(technologies: Vec<Technology>, range: MonthRange) -> Result<Self> {
        let mut seen = std::collections::BTreeSet::new();
        for t in &technologies {
            if !seen.insert(short_id(&t.id)) {
                return Err(Error::config(format!("duplicate technology id {}", t.id)));
            }
        }
        Ok(Self { technologies, range })
    }

    /// 2002-01 through 2022-12.
    pub fn default_range() -> MonthRange {
        MonthRange { start: MonthKey { year: 2002, month: 1 }, end: MonthKey { year: 2022, month: 12 } }
    }

    pub fn contains(&self, tech_id: &str) -> bool {
        let id = short_id(tech_id);
        self.technologies.iter().any(|t| short_id(&t.id) == id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.technologies.iter().map(|t| short_id(&t.id))
    }

    pub fn label(&self, tech_id: &str) -> Option<&str> {
        let id = short_id(tech_id);
        self.technologies.iter().find(|t| short_id(&t.id) == id).map(|t| t.label.as_str())
    }

    /// Resolves either an id or a case-insensitive label to the catalog id.
    pub fn resolve(&self, name: &str) -> Option<&str> {
        let name = name.trim();
        self.technologies
            .iter()
            .find(|t| short_id(&t.id) == short_id(name) || t.label.eq_ignore_ascii_case(name))
            .map(|t| short_id(&t.id))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuthorRef {
    #[serde(default)]
    pub id: Option<String>,
    #[serde(default)]
    pub display_name: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Authorship {
    #[serde(default)]
    pub author: AuthorRef,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConceptScore {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub display_name: Option<String>,
    pub score: f64,
}

/// A work as served by the OpenAlex works endpoint (subset of fields).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RawWork {
    pub id: String,
    #[serde(default)]
    pub title: Option<String>,
    #[serde(default)]
    pub abstract_inverted_index: Option<BTreeMap<String, Vec<i64>>>,
    #[serde(default)]
    pub publication_date: Option<String>,
    #[serde(default)]
    pub authorships: Vec<Authorship>,
    #[serde(default)]
    pub referenced_works: Vec<String>,
    #[serde(default)]
    pub concepts: Vec<ConceptScore>,
}

impl RawWork {
    pub fn validate(&self) -> Result<()> {
        if self.id.trim().is_empty() {
            return Err(Error::malformed("work id is empty"));
        }
        for c in &self.concepts {
            if !(0.0..=1.0).contains(&c.score) {
                return Err(Error::malformed(format!(
                    "concept {} score {} outside [0, 1] on work {}",
                    c.id, c.score, self.id
                )));
            }
        }
        Ok(())
    }

    pub fn author_ids(&self) -> Vec<String> {
        let mut out = Vec::new();
        for a in &self.authorships {
            if let Some(id) = a.author.id.as_deref().filter(|s| !s.is_empty()) {
                let id = short_id(id).to_string();
                if !out.contains(&id) {
                    out.push(id);
                }
            }
        }
        out
    }
}

/// A refined work: the row type the proximity indices are computed from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PaperRecord {
    pub work_id: String,
    pub title: String,
    #[serde(rename = "abstract")]
    pub abstract_text: String,
    /// Date as served, before any redistribution.
    pub publication_date: String,
    /// Effective publication month.
    pub month: MonthKey,
    pub authors: Vec<String>,
    pub referenced_works: Vec<String>,
    pub tech_scores: BTreeMap<String, f64>,
    #[serde(default)]
    pub keywords: Vec<KeywordAssignment>,
}

impl PaperRecord {
    /// Attribution score to a technology; zero when absent.
    pub fn score(&self, tech: &str) -> f64 {
        self.tech_scores.get(tech).copied().unwrap_or(0.0)
    }

    pub fn related_to(&self, tech: &str) -> bool {
        self.score(tech) > 0.0
    }

    /// Converts back to the raw schema. Refining the result reproduces this record.
    pub fn to_raw(&self) -> RawWork {
        let abstract_inverted_index = (!self.abstract_text.is_empty()).then(|| {
            let mut idx: BTreeMap<String, Vec<i64>> = BTreeMap::new();
            for (pos, w) in self.abstract_text.split(' ').enumerate() {
                idx.entry(w.to_string()).or_default().push(pos as i64);
            }
            idx
        });
        RawWork {
            id: self.work_id.clone(),
            title: (!self.title.is_empty()).then(|| self.title.clone()),
            abstract_inverted_index,
            publication_date: Some(self.publication_date.clone()),
            authorships: self
                .authors
                .iter()
                .map(|a| Authorship { author: AuthorRef { id: Some(a.clone()), display_name: None } })
                .collect(),
            referenced_works: self.referenced_works.clone(),
            concepts: self
                .tech_scores
                .iter()
                .map(|(id, s)| ConceptScore { id: id.clone(), display_name: None, score: *s })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn month_ordering_and_difference() {
        let a = MonthKey::new(2017, 11).unwrap();
        let b = MonthKey::new(2018, 2).unwrap();
        assert!(a < b);
        assert_eq!(a.months_until(b), 3);
        assert_eq!(a.offset(3), b);
        assert_eq!(MonthKey::from_ordinal(b.ordinal()), b);
        assert!(MonthKey::new(2017, 13).is_err());
    }

    #[test]
    fn parses_dates() {
        assert_eq!(MonthKey::parse_date("2017-05-21").unwrap(), (MonthKey::new(2017, 5).unwrap(), 21));
        assert!(MonthKey::parse_date("2017-5x").is_err());
        assert!(MonthKey::parse_date("").is_err());
        assert_eq!("2002-01".parse::<MonthKey>().unwrap().to_string(), "2002-01");
    }

    #[test]
    fn default_range_has_252_months() {
        assert_eq!(TechnologyCatalog::default_range().len(), 252);
    }

    #[test]
    fn catalog_rejects_duplicate_ids() {
        let t = |id: &str| Technology { id: id.into(), label: id.into() };
        let err = TechnologyCatalog::new(
            vec![t("C1"), t("https://openalex.org/C1")],
            TechnologyCatalog::default_range(),
        );
        assert!(err.is_err());
    }

    #[test]
    fn raw_work_validation() {
        let mut w = RawWork { id: "W1".into(), ..Default::default() };
        assert!(w.validate().is_ok());
        w.concepts.push(ConceptScore { id: "C1".into(), display_name: None, score: 1.2 });
        assert!(w.validate().is_err());
        assert!(RawWork::default().validate().is_err());
    }
}
