//! Cursor-paginated OpenAlex works client with retry and an on-disk response cache.

use std::collections::{HashSet, VecDeque};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Duration;

use serde::Deserialize;
use sha2::{Digest, Sha256};
use tracing::{debug, warn};
use url::Url;

use super::model::{short_id, MonthKey, RawWork, TechnologyCatalog};
use crate::error::{Error, Result};

pub const DEFAULT_ENDPOINT: &str = "https://api.openalex.org/works";

#[derive(Clone, Debug)]
pub struct FetchConfig {
    pub endpoint: String,
    /// Sent as the `mailto` parameter (OpenAlex polite pool).
    pub contact: String,
    pub cache_dir: Option<PathBuf>,
    pub per_page: usize,
    pub max_retries: u32,
    pub backoff_base: Duration,
    pub backoff_cap: Duration,
    /// Concepts fetched concurrently by [`OpenAlexClient::fetch_all`].
    pub max_in_flight: usize,
    /// Serve only from cache; a miss is an error.
    pub offline: bool,
}

impl FetchConfig {
    pub fn new(endpoint: impl Into<String>, contact: impl Into<String>) -> Self {
        Self {
            endpoint: endpoint.into(),
            contact: contact.into(),
            cache_dir: None,
            per_page: 200,
            max_retries: 5,
            backoff_base: Duration::from_millis(500),
            backoff_cap: Duration::from_secs(30),
            max_in_flight: 1,
            offline: false,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FetchStats {
    /// HTTP requests actually sent, retries included.
    pub requests: usize,
    pub cache_hits: usize,
    pub retries: usize,
    pub pages: usize,
}

#[derive(Deserialize, Default)]
struct PageMeta {
    #[serde(default)]
    next_cursor: Option<String>,
}

#[derive(Deserialize)]
struct PageResponse {
    #[serde(default)]
    meta: PageMeta,
    #[serde(default)]
    results: Vec<RawWork>,
}

pub struct OpenAlexClient {
    cfg: FetchConfig,
    agent: ureq::Agent,
    stats: Mutex<FetchStats>,
}

impl OpenAlexClient {
    pub fn new(cfg: FetchConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(Duration::from_secs(120)))
            .user_agent(format!("techprox/{} (mailto:{})", env!("CARGO_PKG_VERSION"), cfg.contact))
            .build()
            .into();
        Self { cfg, agent, stats: Mutex::new(FetchStats::default()) }
    }

    pub fn stats(&self) -> FetchStats {
        *self.stats.lock().unwrap()
    }

    /// Streams every work attributed to any catalog concept within the catalog's
    /// date range. Works reached through several concepts are yielded once.
    pub fn fetch_works<'a>(&'a self, catalog: &'a TechnologyCatalog) -> WorkStream<'a> {
        let concepts = catalog.ids().map(str::to_string).collect();
        WorkStream {
            client: self,
            catalog,
            concepts,
            next_concept: 0,
            cursor: None,
            buffer: VecDeque::new(),
            seen: HashSet::new(),
            failed: false,
        }
    }

    /// Fetches all concepts, up to `max_in_flight` at once, and merges them in
    /// catalog order so the result does not depend on scheduling.
    pub fn fetch_all(&self, catalog: &TechnologyCatalog) -> Result<Vec<RawWork>> {
        let concepts: Vec<String> = catalog.ids().map(str::to_string).collect();
        let width = self.cfg.max_in_flight.max(1);
        let mut per_concept: Vec<Result<Vec<RawWork>>> = Vec::with_capacity(concepts.len());
        for chunk in concepts.chunks(width) {
            let results: Vec<Result<Vec<RawWork>>> = std::thread::scope(|s| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|c| s.spawn(move || self.fetch_concept(c, catalog)))
                    .collect();
                handles.into_iter().map(|h| h.join().expect("fetch thread panicked")).collect()
            });
            per_concept.extend(results);
        }
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for works in per_concept {
            for w in works? {
                if seen.insert(short_id(&w.id).to_string()) {
                    out.push(w);
                }
            }
        }
        Ok(out)
    }

    fn fetch_concept(&self, concept: &str, catalog: &TechnologyCatalog) -> Result<Vec<RawWork>> {
        let mut out = Vec::new();
        let mut cursor = "*".to_string();
        loop {
            let page = self.fetch_page(concept, catalog, &cursor)?;
            let empty = page.results.is_empty();
            out.extend(page.results);
            match page.meta.next_cursor {
                Some(next) if !empty => cursor = next,
                _ => return Ok(out),
            }
        }
    }

    fn page_url(&self, concept: &str, catalog: &TechnologyCatalog, cursor: &str) -> Result<(Url, String)> {
        let range = catalog.range;
        let filter = format!(
            "concepts.id:{},from_publication_date:{}-01,to_publication_date:{}-{:02}",
            concept,
            range.start,
            range.end,
            days_in_month(range.end)
        );
        let mut url = Url::parse(&self.cfg.endpoint)
            .map_err(|e| Error::config(format!("invalid endpoint {:?}: {e}", self.cfg.endpoint)))?;
        url.query_pairs_mut()
            .append_pair("filter", &filter)
            .append_pair("per-page", &self.cfg.per_page.to_string())
            .append_pair("cursor", cursor);
        // The contact address is not part of the cache key.
        let key = url.to_string();
        if !self.cfg.contact.is_empty() {
            url.query_pairs_mut().append_pair("mailto", &self.cfg.contact);
        }
        Ok((url, key))
    }

    fn fetch_page(&self, concept: &str, catalog: &TechnologyCatalog, cursor: &str) -> Result<PageResponse> {
        let (url, key) = self.page_url(concept, catalog, cursor)?;
        let cache_path = self.cfg.cache_dir.as_ref().map(|d| cache_file(d, &key));
        if let Some(path) = cache_path.as_ref().filter(|p| p.exists()) {
            let body = fs::read_to_string(path)?;
            let mut st = self.stats.lock().unwrap();
            st.cache_hits += 1;
            st.pages += 1;
            drop(st);
            return serde_json::from_str(&body).map_err(|e| Error::Ingestion {
                cursor: cursor.to_string(),
                reason: format!("corrupt cache entry {}: {e}", path.display()),
            });
        }
        if self.cfg.offline {
            return Err(Error::Ingestion {
                cursor: cursor.to_string(),
                reason: format!("offline mode and no cached response for {key}"),
            });
        }
        let body = self.get_with_retry(url.as_str(), cursor)?;
        let page: PageResponse = serde_json::from_str(&body).map_err(|e| Error::Ingestion {
            cursor: cursor.to_string(),
            reason: format!("unparseable response: {e}"),
        })?;
        if let Some(path) = cache_path {
            write_atomic(&path, body.as_bytes())?;
        }
        self.stats.lock().unwrap().pages += 1;
        Ok(page)
    }

    fn get_with_retry(&self, url: &str, cursor: &str) -> Result<String> {
        let mut attempt = 0u32;
        loop {
            self.stats.lock().unwrap().requests += 1;
            let outcome = match self.agent.get(url).call() {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if (200..300).contains(&status) {
                        match resp.body_mut().with_config().limit(256 * 1024 * 1024).read_to_string() {
                            Ok(body) => return Ok(body),
                            Err(e) => format!("reading body: {e}"),
                        }
                    } else if status == 429 || status >= 500 {
                        format!("HTTP {status}")
                    } else {
                        return Err(Error::config(format!("HTTP {status} for {url}")));
                    }
                }
                Err(e) => format!("transport: {e}"),
            };
            if attempt >= self.cfg.max_retries {
                return Err(Error::Ingestion {
                    cursor: cursor.to_string(),
                    reason: format!("retry budget of {} exhausted; last failure {outcome}", self.cfg.max_retries),
                });
            }
            let delay = self
                .cfg
                .backoff_base
                .saturating_mul(1u32 << attempt.min(16))
                .min(self.cfg.backoff_cap);
            warn!(%outcome, attempt, ?delay, "transient OpenAlex failure, retrying");
            self.stats.lock().unwrap().retries += 1;
            std::thread::sleep(delay);
            attempt += 1;
        }
    }
}

/// Lazy stream over the works of every catalog concept.
pub struct WorkStream<'a> {
    client: &'a OpenAlexClient,
    catalog: &'a TechnologyCatalog,
    concepts: Vec<String>,
    next_concept: usize,
    /// Cursor for the concept currently being paged; `None` between concepts.
    cursor: Option<(usize, String)>,
    buffer: VecDeque<RawWork>,
    seen: HashSet<String>,
    failed: bool,
}

impl Iterator for WorkStream<'_> {
    type Item = Result<RawWork>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            if self.failed {
                return None;
            }
            if let Some(w) = self.buffer.pop_front() {
                if self.seen.insert(short_id(&w.id).to_string()) {
                    return Some(Ok(w));
                }
                continue;
            }
            let (ci, cursor) = match self.cursor.take() {
                Some(c) => c,
                None => {
                    if self.next_concept >= self.concepts.len() {
                        return None;
                    }
                    self.next_concept += 1;
                    (self.next_concept - 1, "*".to_string())
                }
            };
            debug!(concept = %self.concepts[ci], %cursor, "fetching page");
            match self.client.fetch_page(&self.concepts[ci], self.catalog, &cursor) {
                Ok(page) => {
                    let empty = page.results.is_empty();
                    self.buffer.extend(page.results);
                    if let Some(next) = page.meta.next_cursor.filter(|_| !empty) {
                        self.cursor = Some((ci, next));
                    }
                }
                Err(e) => {
                    self.failed = true;
                    return Some(Err(e));
                }
            }
        }
    }
}

fn days_in_month(m: MonthKey) -> u8 {
    match m.month {
        2 if (m.year % 4 == 0 && m.year % 100 != 0) || m.year % 400 == 0 => 29,
        2 => 28,
        4 | 6 | 9 | 11 => 30,
        _ => 31,
    }
}

fn cache_file(dir: &Path, key: &str) -> PathBuf {
    let digest = Sha256::digest(key.as_bytes());
    dir.join(format!("{}.json", hex::encode(digest)))
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp{}",
        path.extension().and_then(|e| e.to_str()).unwrap_or(""),
        std::process::id()
    ));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn month_lengths() {
        assert_eq!(days_in_month(MonthKey::new(2020, 2).unwrap()), 29);
        assert_eq!(days_in_month(MonthKey::new(1900, 2).unwrap()), 28);
        assert_eq!(days_in_month(MonthKey::new(2000, 2).unwrap()), 29);
        assert_eq!(days_in_month(MonthKey::new(2022, 12).unwrap()), 31);
    }

    #[test]
    fn cache_key_ignores_contact() {
        let catalog = TechnologyCatalog::new(
            vec![super::super::model::Technology { id: "C1".into(), label: "x".into() }],
            TechnologyCatalog::default_range(),
        )
        .unwrap();
        let a = OpenAlexClient::new(FetchConfig::new("http://localhost/works", "a@example.org"));
        let b = OpenAlexClient::new(FetchConfig::new("http://localhost/works", "b@example.org"));
        let (ua, ka) = a.page_url("C1", &catalog, "*").unwrap();
        let (ub, kb) = b.page_url("C1", &catalog, "*").unwrap();
        assert_eq!(ka, kb);
        assert_ne!(ua, ub);
        assert!(ua.as_str().contains("mailto=a%40example.org"));
        assert!(ka.contains("to_publication_date%3A2022-12-31"));
    }
}
