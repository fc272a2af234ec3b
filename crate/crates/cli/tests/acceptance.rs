//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use techprox_cli::fixture::{self, CONFIG_FILE, CORPUS_FILE, EXTERNAL_FILE};
use techprox_cli::manifest::MANIFEST_FILE;
use techprox_cli::pipeline::{final_third_slope, PROCESSED};
use techprox_cli::{Outcome, Pipeline, PipelineConfig};
use techprox_core::author_impact::{h_index, HTables};
use techprox_core::clustering::{adjusted_rand_index, l1_distance, run_algorithm, silhouette, Algorithm, ClusterParams, Distance};
use techprox_core::corpus::{
    refine_corpus, reconstruct_abstract, FetchConfig, MonthKey, MonthRange, OpenAlexClient, PaperRecord, RefineConfig,
    Technology, TechnologyCatalog,
};
use techprox_core::forecasting::{expanding_window_cv, smape, theta_forecast, ModelSpec};
use techprox_core::keywords::KeywordAssignment;
use techprox_core::proximity::{build_all_series, IndexKind, IndexSeries, TechPair};
use techprox_core::series::{
    classify, exp_smooth, fit_best_polynomial, interpolate, process_series, ProcessedSeries, ProcessingConfig,
};
use techprox_core::synthetic::{control_pair, planted_pair};

type Verdict = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- 1

const TECHS: [&str; 4] = ["T1", "T2", "T3", "T4"];
const VOCAB: [&str; 6] = ["hash", "lattice", "ledger", "proof", "audio", "key"];

fn random_corpus(rng: &mut ChaCha8Rng) -> (Vec<PaperRecord>, TechnologyCatalog) {
    let n_tech = rng.random_range(2..=4);
    let range = MonthRange::new(MonthKey::new(2020, 1).unwrap(), MonthKey::new(2020, 4).unwrap()).unwrap();
    let catalog = TechnologyCatalog::new(
        TECHS[..n_tech].iter().map(|t| Technology { id: t.to_string(), label: t.to_string() }).collect(),
        range,
    )
    .unwrap();
    let n = rng.random_range(1..=20);
    let mut papers = Vec::with_capacity(n);
    for i in 0..n {
        let month = range.month_at(rng.random_range(0..range.len()));
        let mut tech_scores = BTreeMap::new();
        for t in &TECHS[..n_tech] {
            match rng.random_range(0..4) {
                0 | 1 => {
                    tech_scores.insert(t.to_string(), rng.random_range(1..=1000) as f64 / 1000.0);
                }
                2 => {
                    tech_scores.insert(t.to_string(), 0.0);
                }
                _ => {}
            }
        }
        let mut authors: Vec<String> = (0..6).map(|a| format!("A{a}")).collect();
        authors.shuffle(rng);
        authors.truncate(rng.random_range(1..=3));
        let mut refs: Vec<String> = (0..n).filter(|&j| j != i && rng.random_bool(0.3)).map(|j| format!("W{j}")).collect();
        if rng.random_bool(0.2) {
            refs.push("W999".into());
        }
        let mut kws: Vec<&str> = VOCAB.to_vec();
        kws.shuffle(rng);
        let keywords = kws[..rng.random_range(0..=4)]
            .iter()
            .map(|k| KeywordAssignment { keyword: k.to_string(), similarity: rng.random_range(1..=1000) as f64 / 1000.0 })
            .collect();
        papers.push(PaperRecord {
            work_id: format!("W{i}"),
            title: String::new(),
            abstract_text: String::new(),
            publication_date: format!("{month}-15"),
            month,
            authors,
            referenced_works: refs,
            tech_scores,
            keywords,
        });
    }
    (papers, catalog)
}

fn s(p: &PaperRecord, t: &str) -> f64 {
    p.tech_scores.get(t).copied().unwrap_or(0.0)
}

fn cites(c: &PaperRecord, q: &PaperRecord) -> bool {
    c.referenced_works.iter().any(|r| *r == q.work_id)
}

fn brute_h(counts: &[u32]) -> u32 {
    (0..=counts.len() as u32).rev().find(|&h| counts.iter().filter(|&&c| c >= h).count() as u32 >= h).unwrap_or(0)
}

/// Monthly h of `author` at `m`, straight from the definition.
fn oracle_h(corpus: &[PaperRecord], author: &str, m: MonthKey, incremental: bool) -> f64 {
    let counts: Vec<u32> = corpus
        .iter()
        .filter(|p| p.authors.iter().any(|a| a == author))
        .filter(|p| if incremental { p.month <= m } else { p.month == m })
        .map(|p| corpus.iter().filter(|c| cites(c, p) && (!incremental || c.month <= m)).count() as u32)
        .collect();
    brute_h(&counts) as f64
}

fn oracle_value(corpus: &[PaperRecord], m: MonthKey, t1: &str, t2: &str, kind: IndexKind) -> Option<f64> {
    let bucket: Vec<&PaperRecord> = corpus.iter().filter(|p| p.month == m).collect();
    let rel = |p: &PaperRecord, t: &str| s(p, t) > 0.0;
    let side1 = bucket.iter().any(|p| rel(p, t1));
    let side2 = bucket.iter().any(|p| rel(p, t2));
    let attribution = |p: &PaperRecord| (s(p, t1) + s(p, t2)) / 2.0;
    match kind {
        IndexKind::CitationFwd | IndexKind::CitationRev => {
            let (a, b) = if kind == IndexKind::CitationFwd { (t1, t2) } else { (t2, t1) };
            if !bucket.iter().any(|p| rel(p, a)) {
                return None;
            }
            let mut total = 0.0;
            for p in bucket.iter().filter(|p| rel(p, a)) {
                for q in corpus.iter().filter(|q| cites(p, q) && rel(q, b)) {
                    total += (s(p, a) + s(q, b)) / 2.0;
                }
            }
            Some(total)
        }
        IndexKind::KeywordIk => {
            if !(side1 && side2) {
                return None;
            }
            let mut total = 0.0;
            for k in VOCAB {
                let pk: Vec<(&PaperRecord, f64)> = bucket
                    .iter()
                    .filter(|p| rel(p, t1) || rel(p, t2))
                    .filter_map(|p| p.keywords.iter().find(|a| a.keyword == k).map(|a| (*p, a.similarity)))
                    .collect();
                let n1 = pk.iter().filter(|(p, _)| rel(p, t1)).count();
                let n2 = pk.iter().filter(|(p, _)| rel(p, t2)).count();
                if n1 == 0 || n2 == 0 {
                    continue;
                }
                let n = (n1 + n2) as f64 / 2.0;
                let c = pk.iter().map(|x| x.1).sum::<f64>() / pk.len() as f64;
                let a = pk.iter().map(|x| attribution(x.0)).sum::<f64>() / pk.len() as f64;
                total += n * c * a;
            }
            Some(total)
        }
        IndexKind::CollabIncremental | IndexKind::CollabNonIncremental => {
            if !(side1 && side2) {
                return None;
            }
            let authors: BTreeSet<&str> = bucket.iter().flat_map(|p| p.authors.iter().map(String::as_str)).collect();
            let mut total = 0.0;
            for au in authors {
                let pa: Vec<&PaperRecord> = bucket
                    .iter()
                    .copied()
                    .filter(|p| (rel(p, t1) || rel(p, t2)) && p.authors.iter().any(|x| x == au))
                    .collect();
                let n1 = pa.iter().filter(|p| rel(p, t1)).count();
                let n2 = pa.iter().filter(|p| rel(p, t2)).count();
                if n1 == 0 || n2 == 0 {
                    continue;
                }
                let n = (n1 + n2) as f64 / 2.0;
                let h = oracle_h(corpus, au, m, kind == IndexKind::CollabIncremental);
                let a = pa.iter().map(|p| attribution(p)).sum::<f64>() / pa.len() as f64;
                total += n * h * a;
            }
            Some(total)
        }
    }
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-12 * a.abs().max(b.abs())
}

fn criterion_1() -> Verdict {
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut compared = 0usize;
    let mut present = 0usize;
    for trial in 0..200 {
        let (corpus, catalog) = random_corpus(&mut rng);
        let tables = HTables::build(&corpus);
        let series = build_all_series(&corpus, &catalog, &tables);
        let n_pairs = catalog.technologies.len() * (catalog.technologies.len() - 1);
        ensure(series.len() == n_pairs * 5, || format!("trial {trial}: {} series", series.len()))?;
        for s in &series {
            for (i, v) in s.values.iter().enumerate() {
                let m = catalog.range.month_at(i);
                let want = oracle_value(&corpus, m, &s.pair.t1, &s.pair.t2, s.kind);
                let ok = match (v, want) {
                    (None, None) => true,
                    (Some(a), Some(b)) => close(*a, b) && *a >= 0.0,
                    _ => false,
                };
                ensure(ok, || format!("trial {trial} {} {m}: got {v:?}, oracle {want:?}", s.id()))?;
                compared += 1;
                present += v.is_some() as usize;
            }
        }
    }
    let secs = started.elapsed().as_secs_f64();
    ensure(secs < 60.0, || format!("took {secs:.1}s"))?;
    Ok(format!("200 corpora, {compared} month values ({present} present) match the oracle in {secs:.2}s"))
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..1000 {
        let n = rng.random_range(0..=50);
        let counts: Vec<u32> = (0..n).map(|_| rng.random_range(0..60)).collect();
        let quadratic = (0..=n as u32)
            .filter(|&h| {
                let mut at_least = 0;
                for &c in &counts {
                    if c >= h {
                        at_least += 1;
                    }
                }
                at_least >= h
            })
            .max()
            .unwrap_or(0);
        ensure(h_index(&counts) == quadratic, || format!("trial {trial}: {counts:?}"))?;
    }
    Ok("1000 random lists match the brute-force definition".into())
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Verdict {
    ensure(smape(&[1.0], &[3.0]).unwrap() == 100.0, || "smape([1],[3]) != 100".into())?;
    ensure(smape(&[0.0, 0.0], &[1.0, 0.0]).unwrap() == 100.0, || "smape([0,0],[1,0]) != 100".into())?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let value = |rng: &mut ChaCha8Rng| match rng.random_range(0..4) {
        0 => 0.0,
        1 => rng.random_range(-100.0..100.0),
        2 => rng.random_range(0.0..1e-3),
        _ => rng.random_range(-1e6..1e6),
    };
    for trial in 0..10_000 {
        let n = rng.random_range(1..=12);
        let a: Vec<f64> = (0..n).map(|_| value(&mut rng)).collect();
        let f: Vec<f64> = (0..n).map(|_| value(&mut rng)).collect();
        let e = smape(&a, &f).unwrap();
        ensure(e == smape(&f, &a).unwrap(), || format!("trial {trial}: asymmetric"))?;
        ensure(smape(&a, &a).unwrap() == 0.0, || format!("trial {trial}: identity not zero"))?;
        ensure((0.0..=200.0).contains(&e), || format!("trial {trial}: {e} outside [0,200]"))?;
        // both-zero terms contribute nothing but still count
        let mut a0 = a.clone();
        let mut f0 = f.clone();
        a0.push(0.0);
        f0.push(0.0);
        let e0 = smape(&a0, &f0).unwrap();
        let want = e * n as f64 / (n + 1) as f64;
        ensure((e0 - want).abs() <= 1e-9 * want.max(1.0), || format!("trial {trial}: both-zero rule {e0} vs {want}"))?;
    }
    Ok("hand cases exact; symmetry, identity, both-zero and bound hold on 10000 pairs".into())
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst = 0.0f64;
    for trial in 0..500 {
        let n = rng.random_range(12..80);
        let degree = rng.random_range(0..=3);
        let c: Vec<f64> = (0..=degree).map(|_| rng.random_range(-1.0..1.0)).collect();
        let raw = |t: f64| {
            let u = t / n as f64;
            c.iter().rev().fold(0.0, |acc, k| acc * u + k)
        };
        // shift so the polynomial stays positive and no fill is clipped
        let lo = (0..n).map(|t| raw(t as f64)).fold(f64::INFINITY, f64::min);
        let truth: Vec<f64> = (0..n).map(|t| raw(t as f64) - lo + 1.0).collect();
        let mut obs: Vec<Option<f64>> = truth.iter().copied().map(Some).collect();
        // interior gaps only, keeping both ends observed
        for i in 1..n - 1 {
            if rng.random_bool(0.4) {
                obs[i] = None;
            }
        }
        let f = interpolate(&obs);
        for i in 0..n {
            let err = (f.values[i] - truth[i]).abs();
            worst = worst.max(err);
            ensure(err < 1e-9, || format!("trial {trial}: degree {degree} month {i} error {err:e}"))?;
        }
    }
    // leading and trailing gaps on lines with exactly representable slopes
    for trial in 0..500 {
        let n = rng.random_range(6..60);
        let a = rng.random_range(0..64) as f64 + 64.0;
        let b = rng.random_range(-16..=16) as f64 / 16.0;
        let truth: Vec<f64> = (0..n).map(|t| a + b * t as f64).collect();
        let mut obs: Vec<Option<f64>> = truth.iter().copied().map(Some).collect();
        let lead = rng.random_range(0..n / 3);
        let trail = rng.random_range(0..n / 3);
        for v in obs.iter_mut().take(lead) {
            *v = None;
        }
        for v in obs.iter_mut().rev().take(trail) {
            *v = None;
        }
        let f = interpolate(&obs);
        ensure(f.values == truth, || format!("line trial {trial}: {:?} vs {truth:?}", f.values))?;
    }
    // clipping
    for trial in 0..500 {
        let n = rng.random_range(4..40);
        let obs: Vec<Option<f64>> =
            (0..n).map(|_| rng.random_bool(0.5).then(|| rng.random_range(0.0..10.0) * rng.random_range(0..2) as f64)).collect();
        let f = interpolate(&obs);
        ensure(f.values.iter().all(|v| *v >= 0.0), || format!("clip trial {trial}: negative output {:?}", f.values))?;
    }
    Ok(format!("cubic fills worst error {worst:.1e}; line edge-fills exact; outputs non-negative"))
}

// ---------------------------------------------------------------- 5

fn criterion_5() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 240;
    let mut lines = Vec::new();
    for d in 0..=10usize {
        for trial in 0..3 {
            let mut c: Vec<f64> = (0..=d).map(|_| rng.random_range(-1.0..1.0)).collect();
            if d > 0 {
                c[d] = if rng.random_bool(0.5) { 1.0 } else { -1.0 } * rng.random_range(0.5..1.0);
            }
            let raw: Vec<f64> = (0..n)
                .map(|t| {
                    let u = (t as f64 - 119.5) / 119.5;
                    c.iter().rev().fold(0.0, |acc, k| acc * u + k)
                })
                .collect();
            let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
            let values: Vec<f64> = raw.iter().map(|v| v - lo + 2.0).collect();
            let fit = fit_best_polynomial(&values).ok_or_else(|| format!("degree {d}: no fit"))?;
            ensure(fit.degree <= d, || format!("degree {d} trial {trial}: selected {}", fit.degree))?;
            ensure(fit.smape < 1e-6, || format!("degree {d} trial {trial}: smape {:e}", fit.smape))?;
            let lower_fail = fit.per_degree.iter().filter(|p| p.degree < d).all(|p| p.smape.is_none_or(|e| e > 1e-6));
            if lower_fail {
                ensure(fit.degree == d, || format!("degree {d} trial {trial}: selected {} though lower degrees fail", fit.degree))?;
            }
            if trial == 0 {
                lines.push(format!("{d}->{}", fit.degree));
            }
        }
    }
    Ok(format!("33 noiseless polynomials, selections {}", lines.join(" ")))
}

// ---------------------------------------------------------------- 6

fn criterion_6(fixture_alpha: Option<f64>) -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..1000 {
        let n = rng.random_range(1..120);
        let alpha = if trial % 2 == 0 { 0.1 } else { rng.random_range(0.01..0.99) };
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0)).collect();
        let s = exp_smooth(&x, alpha).unwrap();
        for t in 0..n {
            let closed = (1.0 - alpha).powi(t as i32) * x[0]
                + (0..t).map(|j| alpha * (1.0 - alpha).powi(j as i32) * x[t - j]).sum::<f64>();
            ensure((s[t] - closed).abs() < 1e-12, || format!("trial {trial} t={t}: {} vs {closed}", s[t]))?;
        }
        let c = x[0];
        ensure(exp_smooth(&vec![c; n], alpha).unwrap() == vec![c; n], || format!("trial {trial}: constant moved"))?;
    }
    ensure(ProcessingConfig::default().alpha == 0.1, || "default alpha is not 0.1".into())?;
    let mut values: Vec<Option<f64>> = (0..240).map(|t| Some((t % 17) as f64)).collect();
    values[5] = None;
    let series = IndexSeries {
        pair: TechPair::new("a", "b"),
        kind: IndexKind::KeywordIk,
        range: MonthRange::new(MonthKey::new(2002, 1).unwrap(), MonthKey::new(2021, 12).unwrap()).unwrap(),
        values,
    };
    let p = process_series(&series, &ProcessingConfig::default()).unwrap();
    ensure(p.smoothed == exp_smooth(&p.normalized, 0.1).unwrap(), || "processing does not smooth with 0.1".into())?;
    let alpha = fixture_alpha.ok_or("end-to-end fixture run unavailable")?;
    ensure(alpha == 0.1, || format!("fixture run smoothed with {alpha}"))?;
    Ok("closed form within 1e-12 on 1000 series; constants fixed; alpha 0.1 used in processing and the fixture run".into())
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Verdict {
    let cfg = ProcessingConfig::default();
    ensure(classify(0.5 + 1e-12, 0.5, &cfg).excluded, || "0.5+eps not excluded".into())?;
    ensure(!classify(0.5, 0.5, &cfg).excluded, || "0.5 excluded".into())?;
    ensure(classify(0.1, 0.02, &cfg).flat, || "mean 0.02 not flat".into())?;
    ensure(!classify(0.1, 0.020000001, &cfg).flat, || "mean above 0.02 flat".into())?;

    let range = MonthRange::new(MonthKey::new(2002, 1).unwrap(), MonthKey::new(2021, 12).unwrap()).unwrap();
    let mk = |values: Vec<Option<f64>>| IndexSeries { pair: TechPair::new("a", "b"), kind: IndexKind::CitationFwd, range, values };
    let half: Vec<Option<f64>> = (0..240).map(|t| (t % 2 == 0).then_some(1.0 + (t % 7) as f64)).collect();
    let p = process_series(&mk(half.clone()), &cfg).unwrap();
    ensure(p.interpolation_rate == 0.5 && !p.flags.excluded, || format!("rate {} excluded {}", p.interpolation_rate, p.flags.excluded))?;
    let mut more = half;
    more[2] = None;
    let p = process_series(&mk(more), &cfg).unwrap();
    ensure(p.interpolation_rate > 0.5 && p.flags.excluded, || format!("rate {} not excluded", p.interpolation_rate))?;

    let spike: Vec<Option<f64>> = (0..50).map(|t| Some(if t == 49 { 5.0 } else { 0.0 })).collect();
    let short = MonthRange::new(MonthKey::new(2002, 1).unwrap(), MonthKey::new(2006, 2).unwrap()).unwrap();
    let p = process_series(&IndexSeries { range: short, ..mk(spike) }, &cfg).unwrap();
    ensure(p.flags.flat && p.flags.retained() == false, || "normalized mean exactly 0.02 not flat".into())?;
    Ok("rate 0.5 retained, 0.5+eps excluded, normalized mean 0.02 flat (classifier and end to end)".into())
}

// ---------------------------------------------------------------- 8

fn planted_shapes(freqs: &[usize], per: usize, rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<usize>) {
    let len = 64;
    let mut data = Vec::new();
    let mut truth = Vec::new();
    for (c, &f) in freqs.iter().enumerate() {
        for _ in 0..per {
            let scale = rng.random_range(0.9..1.1);
            let x: Vec<f64> = (0..len)
                .map(|t| {
                    let phase = std::f64::consts::TAU * f as f64 * t as f64 / len as f64;
                    scale * phase.sin() + rng.random_range(-0.02..0.02)
                })
                .collect();
            data.push(x);
            truth.push(c);
        }
    }
    (data, truth)
}

fn separation(data: &[Vec<f64>], truth: &[usize]) -> f64 {
    let (mut inter, mut ni, mut intra, mut na) = (0.0, 0usize, 0.0, 0usize);
    for i in 0..data.len() {
        for j in i + 1..data.len() {
            let d = l1_distance(&data[i], &data[j]).unwrap();
            if truth[i] == truth[j] {
                intra += d;
                na += 1;
            } else {
                inter += d;
                ni += 1;
            }
        }
    }
    (inter / ni as f64) / (intra / na as f64)
}

fn criterion_8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut notes = Vec::new();
    for freqs in [&[1usize, 3][..], &[1, 2, 3, 5, 8][..]] {
        let (data, truth) = planted_shapes(freqs, 10, &mut rng);
        let ratio = separation(&data, &truth);
        ensure(ratio >= 5.0, || format!("fixture separation {ratio:.2} below 5"))?;
        for algo in Algorithm::ALL {
            let a = run_algorithm(algo, &data, &ClusterParams::with_k(freqs.len(), 11)).map_err(|e| e.to_string())?;
            let ari = adjusted_rand_index(&a.labels, &truth).unwrap();
            ensure(ari >= 0.9, || format!("{} k={}: ARI {ari:.3}", algo.name(), freqs.len()))?;
            if algo != Algorithm::KShape {
                ensure(a.cost_trace.windows(2).all(|w| w[1] <= w[0]), || {
                    format!("{} cost increased: {:?}", algo.name(), a.cost_trace)
                })?;
            }
            let sil = silhouette(&data, &a.labels, algo.distance()).map_err(|e| e.to_string())?;
            ensure(sil.samples.iter().all(|s| (-1.0..=1.0).contains(s)), || "silhouette out of range".into())?;
            notes.push(format!("{}/k{}={ari:.2}", algo.name(), freqs.len()));
        }
    }
    for trial in 0..200 {
        let n = rng.random_range(3..15);
        let data: Vec<Vec<f64>> = (0..n).map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let mut labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..3)).collect();
        labels[0] = 0;
        labels[1] = 1;
        for d in [Distance::L1, Distance::Sbd] {
            let sil = silhouette(&data, &labels, d).map_err(|e| e.to_string())?;
            ensure(sil.samples.iter().chain([&sil.mean]).all(|s| (-1.0..=1.0).contains(s)), || {
                format!("random trial {trial}: silhouette out of [-1,1]")
            })?;
        }
    }
    let hand = silhouette(&[vec![0.0], vec![1.0], vec![10.0]], &[0, 0, 1], Distance::L1).unwrap();
    ensure(hand.samples[0] == 0.9, || format!("hand case gave {}", hand.samples[0]))?;
    Ok(format!("ARI {}; costs non-increasing; silhouettes bounded; hand case 0.9", notes.join(" ")))
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut failures = Vec::new();

    let mut naive_ok = true;
    for _ in 0..20 {
        let pattern: Vec<f64> = (0..12).map(|_| rng.random_range(0.0..5.0)).collect();
        let n = rng.random_range(60..240);
        let v: Vec<f64> = (0..n).map(|t| pattern[t % 12]).collect();
        for h in [3, 6, 12] {
            let folds = expanding_window_cv(&v, &ModelSpec::NaiveSeasonal { k: 12 }, h, 5).map_err(|e| e.to_string())?;
            naive_ok &= !folds.is_empty() && folds.iter().all(|f| f.smape == 0.0);
        }
    }
    if !naive_ok {
        failures.push("naive seasonal(12) not exact on period-12 series".to_string());
    }

    let mut theta_err = 0.0f64;
    for _ in 0..20 {
        let a = rng.random_range(0.0..10.0);
        let b = rng.random_range(-0.2..0.5);
        let n = rng.random_range(24..200);
        let line: Vec<f64> = (0..n + 12).map(|t| a + b * t as f64).collect();
        let f = theta_forecast(&line[..n], 12);
        for (i, v) in f.iter().enumerate() {
            theta_err = theta_err.max((v - line[n + i]).abs());
        }
    }
    if theta_err >= 1e-4 {
        failures.push(format!("theta max per-step error on exact lines {theta_err:.3e} (limit 1e-4)"));
    }

    let mut leaks = 0;
    let base: Vec<f64> = (0..180).map(|t| 1.0 + (t as f64 / 9.0).sin() + t as f64 / 90.0).collect();
    for spec in ModelSpec::default_lineup(3) {
        for h in [3, 12] {
            let folds = expanding_window_cv(&base, &spec, h, 5).map_err(|e| e.to_string())?;
            for f in &folds {
                let mut perturbed = base.clone();
                for v in &mut perturbed[f.window_end..] {
                    *v += rng.random_range(-5.0..5.0);
                }
                let again = expanding_window_cv(&perturbed, &spec, h, 5).map_err(|e| e.to_string())?;
                let same = again.iter().find(|g| g.fold == f.fold).is_some_and(|g| g.forecast == f.forecast);
                if !same {
                    leaks += 1;
                }
            }
        }
    }
    if leaks > 0 {
        failures.push(format!("{leaks} fold forecasts changed when post-window data was perturbed"));
    }

    if failures.is_empty() {
        Ok(format!("naive seasonal exact; theta max error {theta_err:.1e}; no leakage"))
    } else {
        Err(format!(
            "{} [naive seasonal exact: {naive_ok}; leakage-free: {}]",
            failures.join("; "),
            leaks == 0
        ))
    }
}

// ---------------------------------------------------------------- 10

fn fixture_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

fn files_under(dir: &Path) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap().flatten() {
            let p = e.path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_string_lossy().replace('\\', "/"));
            }
        }
    }
    out
}

fn run_fixture(out: &Path) -> Result<(Vec<Outcome>, Duration), String> {
    let mut cfg = PipelineConfig::load(&fixture_dir().join(CONFIG_FILE)).map_err(|e| e.to_string())?;
    cfg.output_dir = out.to_path_buf();
    let started = Instant::now();
    let mut p = Pipeline::open(cfg, "fixtures/techprox.toml").map_err(|e| e.to_string())?.quiet(true);
    let outcomes = p.run_all().map_err(|e| e.to_string())?;
    Ok((outcomes.into_iter().map(|o| o.1).collect(), started.elapsed()))
}

fn criterion_10(alpha_seen: &mut Option<f64>) -> Verdict {
    let dir = fixture_dir();
    let bundled = fs::read(dir.join(CORPUS_FILE)).map_err(|e| format!("bundled corpus: {e}"))?;
    ensure(bundled == fixture::corpus_jsonl(0).unwrap(), || "bundled corpus differs from the generator".into())?;
    ensure(bundled.iter().filter(|b| **b == b'\n').count() == 200, || "bundled corpus is not 200 records".into())?;
    let ext = fs::read_to_string(dir.join(EXTERNAL_FILE)).map_err(|e| e.to_string())?;
    ensure(ext == fixture::external_corpus_csv(0), || "bundled external corpus differs".into())?;

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let (first, elapsed) = run_fixture(&a)?;
    ensure(first.iter().all(|o| *o == Outcome::Ran), || format!("first run outcomes {first:?}"))?;
    ensure(elapsed < Duration::from_secs(300), || format!("run took {elapsed:?}"))?;
    let (second, _) = run_fixture(&b)?;
    ensure(second.iter().all(|o| *o == Outcome::Ran), || "second directory did not run".into())?;
    let files = files_under(&a);
    ensure(files == files_under(&b), || "runs produced different file sets".into())?;
    for f in files.iter().filter(|f| *f != MANIFEST_FILE) {
        ensure(fs::read(a.join(f)).unwrap() == fs::read(b.join(f)).unwrap(), || format!("{f} differs between runs"))?;
    }
    let (again, _) = run_fixture(&a)?;
    ensure(again.iter().all(|o| *o == Outcome::Skipped), || format!("rerun outcomes {again:?}"))?;

    let processed: Vec<ProcessedSeries> =
        serde_json::from_slice(&fs::read(a.join(PROCESSED)).unwrap()).map_err(|e| e.to_string())?;
    let smoothed_ok = processed.iter().filter(|p| !p.normalized.is_empty()).all(|p| exp_smooth(&p.normalized, 0.1).ok().as_ref() == Some(&p.smoothed));
    ensure(smoothed_ok, || "fixture run did not smooth with alpha 0.1".into())?;
    *alpha_seen = Some(0.1);
    let slope = |pair: &TechPair, kind: IndexKind| {
        processed.iter().find(|s| s.pair == *pair && s.kind == kind).and_then(|s| final_third_slope(&s.fitted))
    };
    let mut notes = Vec::new();
    for kind in [IndexKind::KeywordIk, IndexKind::CollabIncremental, IndexKind::CollabNonIncremental] {
        let planted = slope(&planted_pair(), kind).ok_or("planted series missing")?;
        let control = slope(&control_pair(), kind).ok_or("control series missing")?;
        ensure(planted > 0.0, || format!("{} planted slope {planted:e} not positive", kind.name()))?;
        ensure(control.abs() < 0.1 * planted, || {
            format!("{} control slope {control:e} not below 10% of planted {planted:e}", kind.name())
        })?;
        notes.push(format!("{} {planted:.2e}/{control:.1e}", kind.name()));
    }
    Ok(format!(
        "{} artifacts in {:.1}s, byte-identical across runs, rerun skipped; slopes planted/control: {}",
        files.len(),
        elapsed.as_secs_f64(),
        notes.join(", ")
    ))
}

// ---------------------------------------------------------------- 11

fn criterion_11() -> Verdict {
    use common::{concept_of, page, work_json, MockApi};
    let api = MockApi::start(|q, attempt| {
        let cursor = q.get("cursor").cloned().unwrap_or_default();
        match (concept_of(q).as_str(), cursor.as_str()) {
            ("C1", "*") => (
                200,
                page(
                    vec![
                        work_json("W1", "C1", "2020-03-04", "lattice based signatures are small", &["W2"]),
                        work_json("W2", "C1", "2020-05-06", "a ledger of lattice keys", &["W1"]),
                    ],
                    Some("c1-2"),
                ),
            ),
            ("C1", "c1-2") if attempt == 0 => (429, "{}".into()),
            ("C1", "c1-2") => (
                200,
                page(vec![work_json("W3", "C1", "2020-07-08", "rate limited page body", &["W1"])], Some("c1-3")),
            ),
            ("C1", _) => (200, page(vec![], None)),
            ("C2", "*") => (
                200,
                page(
                    vec![
                        work_json("W3", "C2", "2020-07-08", "rate limited page body", &["W1"]),
                        work_json("W4", "C2", "2020-09-10", "consensus meets lattices", &["W3"]),
                    ],
                    None,
                ),
            ),
            _ => (500, "{}".into()),
        }
    });
    let catalog = TechnologyCatalog::new(
        vec![Technology { id: "C1".into(), label: "one".into() }, Technology { id: "C2".into(), label: "two".into() }],
        MonthRange::new(MonthKey::new(2020, 1).unwrap(), MonthKey::new(2020, 12).unwrap()).unwrap(),
    )
    .unwrap();
    let cache = tempfile::tempdir().map_err(|e| e.to_string())?;
    let make = |offline: bool| {
        let mut cfg = FetchConfig::new(api.endpoint.clone(), "ops@example.org");
        cfg.cache_dir = Some(cache.path().to_path_buf());
        cfg.per_page = 2;
        cfg.backoff_base = Duration::from_millis(1);
        cfg.offline = offline;
        OpenAlexClient::new(cfg)
    };

    let client = make(false);
    let works = client.fetch_all(&catalog).map_err(|e| e.to_string())?;
    let ids: Vec<&str> = works.iter().map(|w| w.id.as_str()).collect();
    let want: Vec<String> = ["W1", "W2", "W3", "W4"].iter().map(|w| format!("https://openalex.org/{w}")).collect();
    ensure(ids == want, || format!("works {ids:?}"))?;
    let st = client.stats();
    ensure(st.retries == 1, || format!("expected one retry, saw {}", st.retries))?;
    ensure(st.pages == 4, || format!("expected 4 pages, saw {}", st.pages))?;
    let log = api.log.lock().unwrap().clone();
    ensure(log.iter().all(|r| r.contains("per-page=2") && r.contains("mailto=")), || format!("request params {log:?}"))?;
    ensure(api.requests() == 5, || format!("{} requests", api.requests()))?;

    let text = reconstruct_abstract(works[0].abstract_inverted_index.as_ref().unwrap()).map_err(|e| e.to_string())?;
    ensure(text == "lattice based signatures are small", || format!("abstract {text:?}"))?;
    let (corpus, stats) = refine_corpus(&works, &catalog, &RefineConfig::default());
    ensure(stats.output == 4 && corpus[3].abstract_text == "consensus meets lattices", || format!("{stats:?}"))?;

    let before = api.requests();
    let offline = make(true);
    let again = offline.fetch_all(&catalog).map_err(|e| e.to_string())?;
    ensure(again == works, || "offline rerun returned different works".into())?;
    ensure(api.requests() == before && offline.stats().requests == 0, || "offline rerun touched the network".into())?;
    ensure(offline.stats().cache_hits == 4, || format!("{} cache hits", offline.stats().cache_hits))?;
    Ok("2 pages + retry on 429 + dedup across concepts; abstracts rebuilt; offline rerun served from cache".into())
}

// ----------------------------------------------------------------

fn guarded(f: impl FnOnce() -> Verdict) -> Verdict {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(v) => v,
        Err(p) => Err(format!(
            "panicked: {}",
            p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_default()
        )),
    }
}

fn main() {
    let args: HashSet<String> = std::env::args().skip(1).collect();
    if args.contains("--list") {
        return;
    }
    let mut alpha_seen = None;
    let c10 = guarded(|| criterion_10(&mut alpha_seen));
    let results: Vec<(u8, &str, Verdict)> = vec![
        (1, "index formula oracles", guarded(criterion_1)),
        (2, "h-index oracle", guarded(criterion_2)),
        (3, "SMAPE contract", guarded(criterion_3)),
        (4, "interpolation exactness", guarded(criterion_4)),
        (5, "polynomial degree selection", guarded(criterion_5)),
        (6, "exponential smoothing", guarded(|| criterion_6(alpha_seen))),
        (7, "threshold rules", guarded(criterion_7)),
        (8, "clustering recovery", guarded(criterion_8)),
        (9, "forecasting sanity", guarded(criterion_9)),
        (10, "end-to-end fixture", c10),
        (11, "mocked API ingestion", guarded(criterion_11)),
    ];
    let mut failed = 0;
    for (id, name, verdict) in &results {
        match verdict {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {id:>2} {name}: {detail}");
            }
        }
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
