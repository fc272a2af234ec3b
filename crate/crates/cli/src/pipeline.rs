//! Stage orchestration with hash-based memoization.
//!
//! Each stage reads its inputs from the output directory (plus optional
//! external files), writes its artifacts atomically and records everything in
//! the manifest. A stage whose version, parameters and input hashes match the
//! manifest, and whose outputs are intact, is skipped.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use techprox_core::author_impact::HTables;
use techprox_core::clustering::{
    centroid_layout, cluster_series, cluster_series_external, read_assignment_csv, silhouette, write_assignment_csv,
    write_layout_csv, ClusterParams, SeriesClustering,
};
use techprox_core::corpus::{
    read_jsonl, refine_corpus, write_jsonl, FetchConfig, OpenAlexClient, PaperRecord, RawWork, RefineConfig,
};
use techprox_core::forecasting::{
    error_histogram, median, read_external_corpus, run_regime, write_histogram_csv, write_median_table,
    BacktestConfig, BacktestReport, BacktestSeries, Regime, RegimeContext,
};
use techprox_core::keywords::{annotate_corpus, export_assignments, load_assignments, ExtractorMode, ExtractorSpec};
use techprox_core::proximity::{build_all_series, read_series_csv, write_series_csv, IndexKind, TechPair};
use techprox_core::series::{exp_smooth, minmax_normalize, process_all, write_processed_csv, ProcessedSeries};
use tracing::{debug, info};

use crate::config::{sha256_json, PipelineConfig, Training, CONTACT_ENV};
use crate::error::{CliError, Result};
use crate::manifest::{hash_bytes, hash_file, open, unix_now, Manifest, RunLock, StageRecord};
use crate::svg;

pub const RAW_WORKS: &str = "raw_works.jsonl";
pub const CORPUS: &str = "corpus.jsonl";
pub const ANNOTATED: &str = "annotated.jsonl";
pub const SERIES: &str = "series.csv";
pub const PROCESSED: &str = "processed.json";
pub const CLUSTERS: &str = "clusters.csv";
pub const REPORT: &str = "report.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Stage {
    Ingest,
    Refine,
    Annotate,
    Index,
    Process,
    Cluster,
    Forecast,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 8] = [
        Stage::Ingest,
        Stage::Refine,
        Stage::Annotate,
        Stage::Index,
        Stage::Process,
        Stage::Cluster,
        Stage::Forecast,
        Stage::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Ingest => "ingest",
            Stage::Refine => "refine",
            Stage::Annotate => "annotate",
            Stage::Index => "index",
            Stage::Process => "process",
            Stage::Cluster => "cluster",
            Stage::Forecast => "forecast",
            Stage::Report => "report",
        }
    }

    pub fn predecessor(self) -> Option<Stage> {
        let i = Stage::ALL.iter().position(|s| *s == self)?;
        i.checked_sub(1).map(|p| Stage::ALL[p])
    }

    /// Bumped when a stage's output format or semantics change.
    fn version(self) -> u32 {
        1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Ran,
    Skipped,
}

/// Collects the artifacts a stage writes, with their hashes.
struct Outputs<'a> {
    dir: &'a Path,
    files: BTreeMap<String, String>,
}

impl Outputs<'_> {
    fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        techprox_core::corpus::write_atomic(&self.dir.join(rel), bytes)?;
        self.files.insert(rel.to_string(), hash_bytes(bytes));
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, rel: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(rel, &bytes)
    }

    fn with(&mut self, rel: &str, f: impl FnOnce(&mut Vec<u8>) -> techprox_core::Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(rel, &buf)
    }
}

pub struct Pipeline {
    cfg: PipelineConfig,
    /// How the config was named on the command line, for error messages.
    config_label: String,
    dir: PathBuf,
    manifest: Manifest,
    quiet: bool,
    _lock: RunLock,
}

impl Pipeline {
    pub fn open(cfg: PipelineConfig, config_label: impl Into<String>) -> Result<Self> {
        let dir = cfg.output_dir.clone();
        let lock = RunLock::acquire(&dir)?;
        let manifest = Manifest::load(&dir)?;
        Ok(Self { cfg, config_label: config_label.into(), dir, manifest, quiet: false, _lock: lock })
    }

    /// Suppresses the per-stage status lines on stdout.
    pub fn quiet(mut self, quiet: bool) -> Self {
        self.quiet = quiet;
        self
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn manifest(&self) -> &Manifest {
        &self.manifest
    }

    fn say(&self, line: &str) {
        if !self.quiet {
            println!("{line}");
        }
    }

    pub fn run_all(&mut self) -> Result<Vec<(Stage, Outcome)>> {
        Stage::ALL.iter().map(|&s| Ok((s, self.run_stage(s)?))).collect()
    }

    pub fn run_stage(&mut self, stage: Stage) -> Result<Outcome> {
        let name = stage.name();
        if let Some(prev) = stage.predecessor() {
            if !self.is_current(prev)? {
                return Err(CliError::MissingPredecessor {
                    stage: name,
                    required: prev.name(),
                    config: self.config_label.clone(),
                });
            }
        }
        let inputs = self.inputs(stage)?;
        let params_hash = sha256_json(&self.params(stage)?);
        if let Some(r) = self.manifest.stages.get(name) {
            if r.version == stage.version()
                && r.params_hash == params_hash
                && r.inputs == inputs
                && self.manifest.outputs_intact(&self.dir, name)
            {
                self.say(&format!("{name}: skipped (up-to-date)"));
                return Ok(Outcome::Skipped);
            }
        }
        if let Some(old) = self.manifest.stages.remove(name) {
            for rel in old.outputs.keys() {
                let _ = fs::remove_file(self.dir.join(rel));
            }
            self.manifest.save(&self.dir)?;
        }

        let started_at = unix_now();
        let clock = Instant::now();
        let dir = self.dir.clone();
        let mut out = Outputs { dir: &dir, files: BTreeMap::new() };
        match stage {
            Stage::Ingest => self.ingest(&mut out)?,
            Stage::Refine => self.refine(&mut out)?,
            Stage::Annotate => self.annotate(&mut out)?,
            Stage::Index => self.index(&mut out)?,
            Stage::Process => self.process(&mut out)?,
            Stage::Cluster => self.cluster(&mut out)?,
            Stage::Forecast => self.forecast(&mut out)?,
            Stage::Report => self.report(&mut out)?,
        }
        let elapsed = clock.elapsed();
        let n_out = out.files.len();
        self.manifest.stages.insert(
            name.to_string(),
            StageRecord {
                version: stage.version(),
                params_hash,
                inputs,
                outputs: out.files,
                started_at,
                finished_at: unix_now(),
                elapsed_ms: elapsed.as_millis() as u64,
            },
        );
        self.manifest.config_hash = self.cfg.hash();
        self.manifest.save(&self.dir)?;
        self.say(&format!("{name}: done ({n_out} artifacts, {:.2}s)", elapsed.as_secs_f64()));
        Ok(Outcome::Ran)
    }

    /// Recorded, outputs intact, and internal inputs unchanged since it ran.
    fn is_current(&self, stage: Stage) -> Result<bool> {
        let Some(r) = self.manifest.stages.get(stage.name()) else { return Ok(false) };
        if !self.manifest.outputs_intact(&self.dir, stage.name()) {
            return Ok(false);
        }
        Ok(r.inputs.iter().all(|(path, hash)| {
            let p = Path::new(path);
            let full = if p.is_absolute() { p.to_path_buf() } else { self.dir.join(p) };
            hash_file(&full).is_ok_and(|h| h == *hash)
        }))
    }

    fn inputs(&self, stage: Stage) -> Result<BTreeMap<String, String>> {
        let d = &self.cfg.data;
        let mut internal: Vec<&str> = Vec::new();
        let mut external: Vec<&PathBuf> = Vec::new();
        let regimes = self.cfg.forecasting.regimes()?;
        match stage {
            Stage::Ingest => external.extend(d.dump.as_ref()),
            Stage::Refine => internal.push(RAW_WORKS),
            Stage::Annotate => {
                internal.push(CORPUS);
                external.extend(d.assignments.as_ref());
            }
            Stage::Index => internal.push(ANNOTATED),
            Stage::Process => internal.push(SERIES),
            Stage::Cluster => {
                internal.push(PROCESSED);
                if self.cfg.clustering.training == Training::External {
                    external.extend(d.external_corpus.as_ref());
                }
            }
            Stage::Forecast => {
                internal.extend([PROCESSED, CLUSTERS]);
                if regimes.contains(&Regime::TransferLearning) {
                    external.extend(d.external_corpus.as_ref());
                }
            }
            Stage::Report => internal.extend([PROCESSED, CLUSTERS, REPORT]),
        }
        let mut out = BTreeMap::new();
        for rel in internal {
            let path = self.dir.join(rel);
            out.insert(rel.to_string(), hash_file(&path).map_err(|e| CliError::artifact(path, e))?);
        }
        // absolute, so `is_current` can tell them apart from artifacts under `dir`
        for p in external {
            let abs = std::path::absolute(p)?;
            out.insert(abs.display().to_string(), hash_file(p).map_err(|e| CliError::artifact(p, e))?);
        }
        Ok(out)
    }

    fn params(&self, stage: Stage) -> Result<serde_json::Value> {
        let c = &self.cfg;
        Ok(match stage {
            Stage::Ingest => json!({
                "catalog": c.catalog()?,
                "source": if c.data.dump.is_some() { "dump" } else { "api" },
                "endpoint": c.ingest.endpoint,
                "per_page": c.ingest.per_page,
            }),
            Stage::Refine => json!({
                "catalog": c.catalog()?,
                "relatedness_threshold": c.refine.relatedness_threshold,
                "seed": c.seed,
            }),
            Stage::Annotate => json!({ "keywords": c.keywords, "from_file": c.data.assignments.is_some() }),
            Stage::Index => json!({ "catalog": c.catalog()? }),
            Stage::Process => json!({ "processing": c.processing }),
            Stage::Cluster => json!({ "clustering": c.clustering, "seed": c.seed, "processing": c.processing }),
            Stage::Forecast => json!({
                "horizons": c.forecasting.horizons,
                "n_sections": c.forecasting.n_sections,
                "regimes": c.forecasting.regimes,
                "grids": c.forecasting.grids(c.seed),
                "tuning": c.forecasting.tuning,
                "seed": c.seed,
                "alpha": c.processing.alpha,
            }),
            Stage::Report => json!({ "report": c.report, "catalog": c.catalog()? }),
        })
    }

    fn read_internal<T: serde::de::DeserializeOwned>(&self, rel: &str) -> Result<Vec<T>> {
        Ok(read_jsonl(BufReader::new(open(&self.dir.join(rel))?))?)
    }

    fn read_processed(&self) -> Result<Vec<ProcessedSeries>> {
        let path = self.dir.join(PROCESSED);
        serde_json::from_reader(BufReader::new(open(&path)?)).map_err(|e| CliError::artifact(path, e))
    }

    fn read_external(&self) -> Result<Vec<Vec<f64>>> {
        let path = self.cfg.data.external_corpus.as_ref().ok_or_else(|| {
            CliError::Config("this configuration needs data.external_corpus".into())
        })?;
        Ok(read_external_corpus(open(path)?)?.into_iter().map(|(_, v)| v).collect())
    }

    fn ingest(&self, out: &mut Outputs) -> Result<()> {
        let works: Vec<RawWork> = match &self.cfg.data.dump {
            Some(path) => read_jsonl(BufReader::new(open(path)?))?,
            None => {
                let contact = std::env::var(CONTACT_ENV)
                    .ok()
                    .filter(|s| !s.trim().is_empty())
                    .ok_or(CliError::MissingContact(CONTACT_ENV))?;
                let ic = &self.cfg.ingest;
                let mut fc = FetchConfig::new(ic.endpoint.clone(), contact);
                fc.cache_dir = self.cfg.data.cache_dir.clone();
                fc.per_page = ic.per_page;
                fc.max_retries = ic.max_retries;
                fc.max_in_flight = ic.max_in_flight;
                fc.offline = ic.offline;
                let client = OpenAlexClient::new(fc);
                let works = client.fetch_all(&self.cfg.catalog()?)?;
                let st = client.stats();
                info!(requests = st.requests, cache_hits = st.cache_hits, retries = st.retries, pages = st.pages, "fetched");
                works
            }
        };
        info!(works = works.len(), "ingested");
        out.with(RAW_WORKS, |w| write_jsonl(w, &works))
    }

    fn refine(&self, out: &mut Outputs) -> Result<()> {
        let raws: Vec<RawWork> = self.read_internal(RAW_WORKS)?;
        let rc = RefineConfig { relatedness_threshold: self.cfg.refine.relatedness_threshold, seed: self.cfg.seed };
        let (corpus, stats) = refine_corpus(&raws, &self.cfg.catalog()?, &rc);
        info!(input = stats.input, output = stats.output, "refined");
        out.with(CORPUS, |w| write_jsonl(w, &corpus))?;
        out.json("refine_stats.json", &stats)
    }

    fn annotate(&self, out: &mut Outputs) -> Result<()> {
        let mut corpus: Vec<PaperRecord> = self.read_internal(CORPUS)?;
        let kc = &self.cfg.keywords;
        let mut spec = ExtractorSpec {
            mode: ExtractorMode::FrequencyFallback,
            top_k: kc.top_k,
            min_bigram_count: kc.min_bigram_count,
            stopwords: kc.stopwords.clone(),
        };
        let tally = match &self.cfg.data.assignments {
            Some(path) => {
                spec.mode = ExtractorMode::LoadFile;
                Some(load_assignments(open(path)?, &mut corpus)?)
            }
            None => {
                annotate_corpus(&mut corpus, &spec);
                None
            }
        };
        let with_keywords = corpus.iter().filter(|p| !p.keywords.is_empty()).count();
        out.with(ANNOTATED, |w| write_jsonl(w, &corpus))?;
        out.with("keywords.csv", |w| export_assignments(w, &corpus))?;
        out.json(
            "keyword_stats.json",
            &json!({ "mode": spec.mode, "papers": corpus.len(), "papers_with_keywords": with_keywords, "load": tally }),
        )
    }

    fn index(&self, out: &mut Outputs) -> Result<()> {
        let corpus: Vec<PaperRecord> = self.read_internal(ANNOTATED)?;
        let catalog = self.cfg.catalog()?;
        let tables = HTables::build(&corpus);
        let mut h = Vec::new();
        for (i, t) in tables.all().into_iter().enumerate() {
            let mut buf = Vec::new();
            t.write_csv(&mut buf)?;
            // one header for the concatenated tables
            let body = if i == 0 { &buf[..] } else { &buf[buf.iter().position(|&b| b == b'\n').map_or(0, |p| p + 1)..] };
            h.extend_from_slice(body);
        }
        out.write("h_index.csv", &h)?;
        let series = build_all_series(&corpus, &catalog, &tables);
        out.with(SERIES, |w| write_series_csv(w, &series))
    }

    fn process(&self, out: &mut Outputs) -> Result<()> {
        let series = read_series_csv(open(&self.dir.join(SERIES))?)?;
        let processed = process_all(&series, &self.cfg.processing)?;
        let retained = processed.iter().filter(|s| s.flags.retained()).count();
        info!(series = processed.len(), retained, "processed");
        out.write(PROCESSED, &serde_json::to_vec(&processed)?)?;
        out.with("processed.csv", |w| write_processed_csv(w, &processed))?;
        let meta: Vec<_> = processed.iter().map(ProcessedSeries::metadata).collect();
        out.json("series_meta.json", &meta)
    }

    fn cluster_with(&self, processed: &[ProcessedSeries], k: usize) -> Result<SeriesClustering> {
        let cc = &self.cfg.clustering;
        let params = ClusterParams { k, seed: self.cfg.seed, max_iters: cc.max_iters, n_init: cc.n_init };
        let algorithm = cc.algorithm()?;
        Ok(match cc.training {
            Training::Project => cluster_series(processed, algorithm, &params)?,
            Training::External => {
                cluster_series_external(processed, &self.read_external()?, algorithm, &params, &self.cfg.processing)?
            }
        })
    }

    fn cluster(&self, out: &mut Outputs) -> Result<()> {
        let processed = self.read_processed()?;
        let cc = &self.cfg.clustering;
        let algorithm = cc.algorithm()?;
        let data: Vec<Vec<f64>> =
            processed.iter().filter(|s| s.flags.retained()).map(|s| s.smoothed.clone()).collect();
        if data.len() < cc.k {
            return Err(CliError::Core(techprox_core::Error::InsufficientData(format!(
                "{} series retained after processing; clustering.k = {} needs at least that many",
                data.len(),
                cc.k
            ))));
        }
        let clustering = self.cluster_with(&processed, cc.k)?;
        let a = &clustering.assignment;
        let sil = silhouette(&data, &a.labels, algorithm.distance()).ok();
        let layout = centroid_layout(a, algorithm.distance())?;
        out.with(CLUSTERS, |w| write_assignment_csv(w, &clustering))?;
        out.with("layout.csv", |w| write_layout_csv(w, &layout))?;
        out.json(
            "cluster.json",
            &json!({
                "algorithm": algorithm.name(),
                "training": cc.training,
                "k": a.k,
                "seed": a.seed,
                "sizes": a.sizes(),
                "iterations": a.iterations,
                "cost": a.cost,
                "cost_trace": a.cost_trace,
                "zero_variance": a.zero_variance,
                "retained": data.len(),
                "flat": processed.iter().filter(|s| !s.flags.excluded && s.flags.flat).count(),
                "excluded": processed.iter().filter(|s| s.flags.excluded).count(),
                "silhouette_mean": sil.as_ref().map(|s| s.mean),
                "silhouette_per_cluster": sil.as_ref().map(|s| &s.per_cluster),
                "layout_rank_deficient": layout.rank_deficient,
                "centroids": a.centroids,
            }),
        )?;

        let ks: BTreeSet<usize> = cc.sweep.iter().copied().filter(|&k| k >= 2 && k <= data.len()).collect();
        let mut sweep = String::from("k,silhouette,cost\n");
        for k in ks {
            let c = self.cluster_with(&processed, k)?;
            let s = silhouette(&data, &c.assignment.labels, algorithm.distance()).ok();
            sweep.push_str(&format!(
                "{k},{},{:?}\n",
                s.map(|s| format!("{:?}", s.mean)).unwrap_or_default(),
                c.assignment.cost
            ));
        }
        out.write("sweep.csv", sweep.as_bytes())
    }

    fn forecast(&self, out: &mut Outputs) -> Result<()> {
        let processed = self.read_processed()?;
        let series: Vec<BacktestSeries> = processed
            .iter()
            .filter(|s| s.flags.retained())
            .map(|s| BacktestSeries { id: s.id(), kind: s.kind, values: s.smoothed.clone() })
            .collect();
        if series.is_empty() {
            return Err(CliError::Core(techprox_core::Error::InsufficientData(
                "no series retained after processing; nothing to forecast".into(),
            )));
        }
        let labels = read_assignment_csv(open(&self.dir.join(CLUSTERS))?)?;
        let regimes = self.cfg.forecasting.regimes()?;
        let external = if regimes.contains(&Regime::TransferLearning) {
            let alpha = self.cfg.processing.alpha;
            let raw = self.read_external()?;
            Some(raw.iter().map(|s| exp_smooth(&minmax_normalize(s), alpha)).collect::<techprox_core::Result<Vec<_>>>()?)
        } else {
            None
        };
        let fc = &self.cfg.forecasting;
        let bc = BacktestConfig { n_sections: fc.n_sections, seed: self.cfg.seed, tuning: fc.tuning.clone() };
        let ctx = RegimeContext { clusters: Some(&labels), external: external.as_deref() };
        let mut report = BacktestReport::new(&bc);
        for regime in regimes {
            for grid in fc.grids(self.cfg.seed) {
                if regime != Regime::Local && grid[0].is_statistical() {
                    debug!(%regime, model = grid[0].family(), "statistical model skipped for pooled regime");
                    continue;
                }
                for &h in &fc.horizons {
                    let r = run_regime(&series, regime, &grid, h, &bc, ctx)?;
                    let secs: f64 = r.entries.iter().map(|e| e.elapsed_secs).fold(0.0, f64::max);
                    info!(%regime, model = grid[0].family(), horizon = h, secs, "backtested");
                    report.merge(r);
                }
            }
        }
        out.json(REPORT, &report)
    }

    fn report(&self, out: &mut Outputs) -> Result<()> {
        let processed = self.read_processed()?;
        let path = self.dir.join(REPORT);
        let report: BacktestReport =
            serde_json::from_reader(BufReader::new(open(&path)?)).map_err(|e| CliError::artifact(path, e))?;
        let labels = read_assignment_csv(open(&self.dir.join(CLUSTERS))?)?;
        let catalog = self.cfg.catalog()?;

        // resolve the case-study pair before writing anything
        let case = match &self.cfg.report.pair {
            Some(spec) => Some(resolve_pair(spec, &catalog, &processed)?),
            None => None,
        };

        for regime in Regime::ALL {
            if report.entries.iter().any(|e| e.regime == regime) {
                out.with(&format!("medians_{}.csv", regime.name()), |w| write_median_table(w, &report, regime))?;
            }
        }
        let rows = error_histogram(&report, self.cfg.report.histogram_width)?;
        out.with("histogram.csv", |w| write_histogram_csv(w, &rows))?;
        out.write("histogram.svg", svg::histogram_plot("Fold SMAPE distribution by model", &rows).as_bytes())?;

        let pairs = by_pair(&processed);
        let label = |id: &str| catalog.label(id).unwrap_or(id).to_string();
        for (pair, series) in &pairs {
            let title = format!("{} / {}", label(&pair.t1), label(&pair.t2));
            out.write(&plot_path(pair), svg::series_plot(&title, series).as_bytes())?;
        }
        if let Some(pair) = case {
            let series = &pairs[&pair];
            let title = format!("{} / {}", label(&pair.t1), label(&pair.t2));
            let page = case_study_page(&title, series, &labels, &report);
            out.write(&format!("case_{}_{}.html", pair.t1, pair.t2), page.as_bytes())?;
        }
        Ok(())
    }
}

pub fn plot_path(pair: &TechPair) -> String {
    format!("plots/{}_{}.svg", pair.t1, pair.t2)
}

/// Processed series grouped by pair, kinds in canonical order.
pub fn by_pair(processed: &[ProcessedSeries]) -> BTreeMap<TechPair, Vec<&ProcessedSeries>> {
    let mut out: BTreeMap<TechPair, Vec<&ProcessedSeries>> = BTreeMap::new();
    for s in processed {
        out.entry(s.pair.clone()).or_default().push(s);
    }
    for v in out.values_mut() {
        v.sort_by_key(|s| IndexKind::ALL.iter().position(|k| *k == s.kind));
    }
    out
}

/// Parses `T1,T2` (ids or labels) into a pair that has processed series.
pub fn resolve_pair(
    spec: &str,
    catalog: &techprox_core::corpus::TechnologyCatalog,
    processed: &[ProcessedSeries],
) -> Result<TechPair> {
    let no = |reason: String| CliError::NoSeries { pair: spec.to_string(), reason };
    let (a, b) = spec.split_once(',').ok_or_else(|| no("expected two technologies as T1,T2".into()))?;
    let find = |name: &str| {
        catalog.resolve(name).map(str::to_string).ok_or_else(|| no(format!("{:?} is not in the catalog", name.trim())))
    };
    let pair = TechPair::new(find(a)?, find(b)?);
    if pair.t1 == pair.t2 {
        return Err(no("a technology is not paired with itself".into()));
    }
    if !processed.iter().any(|s| s.pair == pair) {
        return Err(no("the processed artifacts hold no series for it".into()));
    }
    Ok(pair)
}

/// Least-squares slope of `values` over their final third, per month.
pub fn final_third_slope(values: &[f64]) -> Option<f64> {
    let n = values.len();
    if n < 6 {
        return None;
    }
    let tail = &values[n - n / 3..];
    let m = tail.len() as f64;
    let xm = (m - 1.0) / 2.0;
    let ym = tail.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in tail.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    Some(sxy / sxx)
}

fn case_study_page(
    title: &str,
    series: &[&ProcessedSeries],
    labels: &BTreeMap<String, techprox_core::clustering::ClusterLabel>,
    report: &BacktestReport,
) -> String {
    let esc = svg::escape;
    let mut html = String::new();
    html.push_str("<!DOCTYPE html>\n<html><head><meta charset=\"utf-8\">");
    html.push_str(&format!("<title>Case study: {}</title></head><body>\n", esc(title)));
    html.push_str(&format!("<h1>Case study: {}</h1>\n", esc(title)));
    if let Some(s) = series.first() {
        html.push_str(&format!(
            "<p>Monthly proximity indices from {} to {}, with the selected polynomial fit of each index.</p>\n",
            s.range.start, s.range.end
        ));
    }
    html.push_str(&svg::series_plot(title, series));
    html.push_str("<h2>Series</h2>\n<table>\n<tr><th>index</th><th>interpolation rate</th><th>fit degree</th>");
    html.push_str("<th>status</th><th>cluster</th><th>fitted slope, final third</th></tr>\n");
    for s in series {
        let status = if s.flags.excluded {
            "excluded"
        } else if s.flags.flat {
            "flat"
        } else {
            "retained"
        };
        html.push_str(&format!(
            "<tr><td>{}</td><td>{:.1}%</td><td>{}</td><td>{status}</td><td>{}</td><td>{}</td></tr>\n",
            s.kind.name(),
            100.0 * s.interpolation_rate,
            s.fit.as_ref().map(|f| f.degree.to_string()).unwrap_or_else(|| "-".into()),
            labels.get(&s.id()).map(|l| l.to_string()).unwrap_or_else(|| "-".into()),
            final_third_slope(&s.fitted).map(|v| format!("{v:.3e}")).unwrap_or_else(|| "-".into()),
        ));
    }
    html.push_str("</table>\n<h2>Backtest median SMAPE over this pair's series</h2>\n<table>\n");
    html.push_str("<tr><th>regime</th><th>model</th><th>horizon</th><th>median</th><th>folds</th></tr>\n");
    let ids: BTreeSet<String> = series.iter().map(|s| s.id()).collect();
    let mut rows: BTreeMap<(Regime, String, usize), Vec<f64>> = BTreeMap::new();
    for e in &report.entries {
        for r in e.records.iter().filter(|r| ids.contains(&r.series_id)) {
            rows.entry((e.regime, e.model.clone(), e.horizon)).or_default().push(r.smape);
        }
    }
    for ((regime, model, h), v) in &rows {
        html.push_str(&format!(
            "<tr><td>{regime}</td><td>{}</td><td>{h}</td><td>{:.2}</td><td>{}</td></tr>\n",
            esc(model),
            median(v).unwrap_or(f64::NAN),
            v.len()
        ));
    }
    html.push_str("</table>\n</body></html>\n");
    html
}
