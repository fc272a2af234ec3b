//! A small deterministic corpus with a planted convergence between two
//! technologies, for end-to-end runs without network access.
//!
//! Technology A and B papers exist throughout the range; from month 120
//! onwards papers bridging A and B appear with a linearly increasing density,
//! sharing a keyword vocabulary, a pool of authors and citations to earlier
//! bridging papers. Technology C shares nothing with either and serves as a
//! control.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{AuthorRef, Authorship, ConceptScore, MonthKey, MonthRange, RawWork, Technology, TechnologyCatalog};
use crate::proximity::TechPair;

pub const TECH_A: &str = "C7001";
pub const TECH_B: &str = "C7002";
pub const TECH_C: &str = "C7003";

/// First month index (0-based) of the bridging papers.
pub const CONVERGENCE_START: usize = 120;
pub const CORPUS_SIZE: usize = 200;

const BRIDGING: usize = 100;
const BACKGROUND_AB: usize = 72;
const BACKGROUND_C: usize = 20;

const VOCAB_A: &[&str] = &["lattice", "reduction", "module", "basis", "shortest", "vector", "hardness", "ring"];
const VOCAB_B: &[&str] = &["ledger", "consensus", "block", "validator", "chain", "fork", "mining", "shard"];
const VOCAB_C: &[&str] = &["watermark", "audio", "spectrum", "embedding", "perceptual", "echo", "masking", "carrier"];
const VOCAB_BRIDGE: &[&str] = &["postquantum", "signature", "resistant", "ledger", "lattice", "wallet"];

pub fn synthetic_range() -> MonthRange {
    MonthRange { start: MonthKey { year: 2002, month: 1 }, end: MonthKey { year: 2021, month: 12 } }
}

pub fn synthetic_catalog() -> TechnologyCatalog {
    TechnologyCatalog {
        technologies: vec![
            Technology { id: TECH_A.into(), label: "Lattice cryptography".into() },
            Technology { id: TECH_B.into(), label: "Distributed ledger".into() },
            Technology { id: TECH_C.into(), label: "Audio watermarking".into() },
        ],
        range: synthetic_range(),
    }
}

/// The pair with the planted convergence.
pub fn planted_pair() -> TechPair {
    TechPair::new(TECH_A, TECH_B)
}

/// A pair with no shared evidence.
pub fn control_pair() -> TechPair {
    TechPair::new(TECH_A, TECH_C)
}

struct Builder {
    rng: ChaCha8Rng,
    next_id: u64,
    works: Vec<RawWork>,
}

impl Builder {
    fn date(&mut self, month_index: usize) -> String {
        let m = synthetic_range().month_at(month_index);
        // day 1 is avoided: January 1st has special meaning downstream
        format!("{}-{:02}-{:02}", m.year, m.month, self.rng.random_range(2..=28))
    }

    fn text(&mut self, vocab: &[&str], words: usize) -> String {
        (0..words).map(|_| vocab[self.rng.random_range(0..vocab.len())]).collect::<Vec<_>>().join(" ")
    }

    fn work(
        &mut self,
        date: String,
        title: String,
        abstract_text: &str,
        concepts: &[(&str, f64)],
        authors: &[u64],
        refs: Vec<String>,
    ) -> String {
        let id = format!("https://openalex.org/W{}", self.next_id);
        self.next_id += 1;
        let mut index: BTreeMap<String, Vec<i64>> = BTreeMap::new();
        for (pos, w) in abstract_text.split(' ').enumerate() {
            index.entry(w.to_string()).or_default().push(pos as i64);
        }
        self.works.push(RawWork {
            id: id.clone(),
            title: Some(title),
            abstract_inverted_index: Some(index),
            publication_date: Some(date),
            authorships: authors
                .iter()
                .map(|a| Authorship {
                    author: AuthorRef { id: Some(format!("https://openalex.org/A{a}")), display_name: None },
                })
                .collect(),
            referenced_works: refs,
            concepts: concepts
                .iter()
                .map(|(c, s)| ConceptScore { id: format!("https://openalex.org/{c}"), display_name: None, score: *s })
                .collect(),
        });
        id
    }

    fn score(&mut self, lo: f64, spread: f64) -> f64 {
        let s = lo + spread * self.rng.random::<f64>();
        (s * 1000.0).round() / 1000.0
    }
}

/// Month index of the `j`-th of `n` bridging papers: quantiles of a density
/// rising linearly from the convergence start to the end of the range.
fn bridging_month(j: usize, n: usize, months: usize) -> usize {
    let span = (months - CONVERGENCE_START) as f64;
    let u = (j as f64 + 0.5) / n as f64;
    (CONVERGENCE_START + (span * u.sqrt()).floor() as usize).min(months - 1)
}

/// Raw works of the synthetic corpus: 192 regular works plus 8 that exercise
/// the refinement rules (missing references, duplicates, January-1 dates, an
/// out-of-range date and an unknown concept).
pub fn synthetic_corpus(seed: u64) -> Vec<RawWork> {
    let months = synthetic_range().len();
    let mut b = Builder { rng: ChaCha8Rng::seed_from_u64(seed), next_id: 1000, works: Vec::new() };
    let external = "https://openalex.org/W1".to_string();

    // A- and B-leaning background papers every other month in the first 144 months
    let mut background: Vec<String> = Vec::new();
    for i in 0..BACKGROUND_AB {
        let month = 2 * i;
        let (vocab, lead, other) = if i % 2 == 0 { (VOCAB_A, TECH_A, TECH_B) } else { (VOCAB_B, TECH_B, TECH_A) };
        let (hi, lo) = (b.score(0.6, 0.3), b.score(0.05, 0.1));
        let authors = [100 + (i as u64 * 7) % 40, 100 + (i as u64 * 11 + 3) % 40];
        let mut refs = vec![external.clone()];
        if i >= 2 {
            refs.push(background[b.rng.random_range(0..i)].clone());
        }
        let date = b.date(month);
        let title = b.text(vocab, 3);
        let abs = b.text(vocab, 14);
        let id = b.work(date, title, &abs, &[(lead, hi), (other, lo)], &authors, refs);
        background.push(id);
    }

    // control technology
    let mut control: Vec<String> = Vec::new();
    for i in 0..BACKGROUND_C {
        let month = 5 + 12 * i;
        let authors = [300 + (i as u64 % 10)];
        let mut refs = vec![external.clone()];
        if let Some(prev) = control.last() {
            refs.push(prev.clone());
        }
        let date = b.date(month);
        let title = b.text(VOCAB_C, 3);
        let abs = b.text(VOCAB_C, 14);
        let s = b.score(0.7, 0.2);
        control.push(b.work(date, title, &abs, &[(TECH_C, s)], &authors, refs));
    }

    // bridging papers
    let mut bridging: Vec<String> = Vec::new();
    for j in 0..BRIDGING {
        let month = bridging_month(j, BRIDGING, months);
        let n_authors = 2 + j % 2;
        let authors: Vec<u64> = (0..n_authors).map(|k| 200 + ((j * 3 + k * 5) % 8) as u64).collect();
        let mut refs = vec![external.clone(), background[b.rng.random_range(0..background.len())].clone()];
        refs.extend(bridging.iter().rev().take(3).cloned());
        let date = b.date(month);
        let title = b.text(VOCAB_BRIDGE, 4);
        let mut abs = b.text(VOCAB_BRIDGE, 12);
        let tail = if j % 2 == 0 { b.text(VOCAB_A, 4) } else { b.text(VOCAB_B, 4) };
        abs = format!("{abs} {tail}");
        let (sa, sb) = (b.score(0.5, 0.3), b.score(0.5, 0.3));
        bridging.push(b.work(date, title, &abs, &[(TECH_A, sa), (TECH_B, sb)], &authors, refs));
    }

    // records that refinement must handle
    for k in 0..2 {
        let date = b.date(50 + k);
        let abs = b.text(VOCAB_A, 10);
        b.work(date, "unreferenced lattice note".into(), &abs, &[(TECH_A, 0.7)], &[100], Vec::new());
    }
    for j in [10, 50] {
        let mut dup = b.works[BACKGROUND_AB + BACKGROUND_C + j].clone();
        dup.title = None;
        b.works.push(dup);
    }
    for year in [2005, 2010] {
        let abs = b.text(VOCAB_A, 10);
        let refs = vec![external.clone(), background[0].clone()];
        b.work(format!("{year}-01-01"), "lattice basis survey".into(), &abs, &[(TECH_A, 0.8)], &[101], refs);
    }
    let abs = b.text(VOCAB_B, 10);
    b.work("2001-06-15".into(), "early ledger".into(), &abs, &[(TECH_B, 0.8)], &[102], vec![external.clone()]);
    let abs = b.text(VOCAB_B, 10);
    let date = b.date(60);
    b.work(date, "unrelated".into(), &abs, &[("C9999", 0.9)], &[103], vec![external]);

    debug_assert_eq!(b.works.len(), CORPUS_SIZE);
    b.works
}
