//! Pipeline configuration: one TOML file, paths relative to its directory.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use techprox_core::clustering::Algorithm;
use techprox_core::corpus::{MonthKey, MonthRange, Technology, TechnologyCatalog, DEFAULT_ENDPOINT};
use techprox_core::forecasting::{ModelSpec, Regime, TuningConfig};
use techprox_core::series::ProcessingConfig;

use crate::error::{CliError, Result};

pub const CONTACT_ENV: &str = "TECHPROX_CONTACT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub output_dir: PathBuf,
    /// Seeds every randomized step; never taken from the clock.
    pub seed: u64,
    #[serde(default)]
    pub data: DataConfig,
    pub catalog: CatalogConfig,
    #[serde(default)]
    pub ingest: IngestConfig,
    #[serde(default)]
    pub refine: RefineSection,
    #[serde(default)]
    pub keywords: KeywordsConfig,
    #[serde(default)]
    pub processing: ProcessingConfig,
    #[serde(default)]
    pub clustering: ClusteringConfig,
    #[serde(default)]
    pub forecasting: ForecastingConfig,
    #[serde(default)]
    pub report: ReportConfig,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    /// Response cache for the works API.
    pub cache_dir: Option<PathBuf>,
    /// JSON-lines works dump; when set, `ingest` reads it instead of the API.
    pub dump: Option<PathBuf>,
    /// Precomputed `work_id,keyword,similarity` assignments.
    pub assignments: Option<PathBuf>,
    /// External series corpus for transfer learning and external cluster training.
    pub external_corpus: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogConfig {
    #[serde(default = "default_start")]
    pub start: String,
    #[serde(default = "default_end")]
    pub end: String,
    pub technologies: Vec<Technology>,
}

fn default_start() -> String {
    "2002-01".into()
}
fn default_end() -> String {
    "2021-12".into()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IngestConfig {
    pub endpoint: String,
    pub per_page: usize,
    pub max_retries: u32,
    pub max_in_flight: usize,
    /// Serve only from the cache.
    pub offline: bool,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self { endpoint: DEFAULT_ENDPOINT.into(), per_page: 200, max_retries: 5, max_in_flight: 1, offline: false }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineSection {
    pub relatedness_threshold: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeywordsConfig {
    pub top_k: usize,
    pub min_bigram_count: usize,
    pub stopwords: Option<Vec<String>>,
}

impl Default for KeywordsConfig {
    fn default() -> Self {
        Self { top_k: 5, min_bigram_count: 2, stopwords: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Training {
    Project,
    External,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusteringConfig {
    pub algorithm: String,
    pub k: usize,
    pub max_iters: usize,
    pub n_init: usize,
    pub training: Training,
    /// Values of k scored by silhouette in `sweep.csv`.
    pub sweep: Vec<usize>,
}

impl Default for ClusteringConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::KShape.name().into(),
            k: 5,
            max_iters: 100,
            n_init: 8,
            training: Training::Project,
            sweep: (2..=8).collect(),
        }
    }
}

impl ClusteringConfig {
    pub fn algorithm(&self) -> Result<Algorithm> {
        Ok(self.algorithm.parse()?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForecastingConfig {
    pub horizons: Vec<usize>,
    pub n_sections: usize,
    pub regimes: Vec<String>,
    /// Candidates; consecutive entries of one family form a tuning grid.
    /// Random forest seeds are offset by the pipeline seed.
    pub models: Vec<ModelSpec>,
    pub tuning: TuningConfig,
}

impl Default for ForecastingConfig {
    fn default() -> Self {
        Self {
            horizons: vec![3, 6, 12],
            n_sections: 5,
            regimes: ["local", "cluster-rand", "cluster", "global"].map(String::from).to_vec(),
            models: ModelSpec::default_lineup(0),
            tuning: TuningConfig::default(),
        }
    }
}

impl ForecastingConfig {
    pub fn regimes(&self) -> Result<Vec<Regime>> {
        self.regimes.iter().map(|r| Ok(r.parse()?)).collect()
    }

    /// Models grouped into single-family grids, in first-appearance order.
    pub fn grids(&self, seed: u64) -> Vec<Vec<ModelSpec>> {
        let mut grids: Vec<Vec<ModelSpec>> = Vec::new();
        for m in &self.models {
            let mut m = m.clone();
            if let ModelSpec::RandomForest { seed: s, .. } = &mut m {
                *s = s.wrapping_add(seed);
            }
            match grids.iter_mut().find(|g| g[0].family() == m.family()) {
                Some(g) => g.push(m),
                None => grids.push(vec![m]),
            }
        }
        grids
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    pub histogram_width: f64,
    /// Pair for the case-study page, `T1,T2` by id or label.
    pub pair: Option<String>,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { histogram_width: 10.0, pair: None }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub horizon: Option<usize>,
    pub regime: Option<Regime>,
    pub pair: Option<String>,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Makes every relative path relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.output_dir);
        for p in [&mut self.data.cache_dir, &mut self.data.dump, &mut self.data.assignments, &mut self.data.external_corpus]
            .into_iter()
            .flatten()
        {
            fix(p);
        }
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.seed = seed;
        }
        if let Some(k) = o.k {
            self.clustering.k = k;
        }
        if let Some(h) = o.horizon {
            self.forecasting.horizons = vec![h];
        }
        if let Some(r) = o.regime {
            self.forecasting.regimes = vec![r.name().to_string()];
        }
        if let Some(p) = &o.pair {
            self.report.pair = Some(p.clone());
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Config(m));
        self.catalog()?;
        if !(0.0..1.0).contains(&self.refine.relatedness_threshold) {
            return bad(format!("relatedness_threshold {} outside [0,1)", self.refine.relatedness_threshold));
        }
        if self.keywords.top_k == 0 {
            return bad("keywords.top_k must be at least 1".into());
        }
        self.processing.validate()?;
        self.clustering.algorithm()?;
        if self.clustering.k < 2 {
            return bad(format!("clustering.k = {} must be at least 2", self.clustering.k));
        }
        if self.clustering.n_init == 0 || self.clustering.max_iters == 0 {
            return bad("clustering.n_init and max_iters must be positive".into());
        }
        if self.clustering.training == Training::External && self.data.external_corpus.is_none() {
            return bad("clustering.training = \"external\" needs data.external_corpus".into());
        }
        let f = &self.forecasting;
        if f.horizons.is_empty() || f.horizons.contains(&0) {
            return bad("forecasting.horizons must be positive and non-empty".into());
        }
        if f.n_sections < 2 {
            return bad("forecasting.n_sections must be at least 2".into());
        }
        if f.models.is_empty() {
            return bad("forecasting.models is empty".into());
        }
        for m in &f.models {
            m.validate()?;
        }
        let regimes = f.regimes()?;
        if regimes.contains(&Regime::TransferLearning) && self.data.external_corpus.is_none() {
            return bad("regime transfer needs data.external_corpus".into());
        }
        let w = self.report.histogram_width;
        if !(w > 0.0 && w <= 200.0) {
            return bad(format!("report.histogram_width {w} outside (0, 200]"));
        }
        Ok(())
    }

    pub fn range(&self) -> Result<MonthRange> {
        let start: MonthKey = self.catalog.start.parse()?;
        let end: MonthKey = self.catalog.end.parse()?;
        Ok(MonthRange::new(start, end)?)
    }

    pub fn catalog(&self) -> Result<TechnologyCatalog> {
        if self.catalog.technologies.len() < 2 {
            return Err(CliError::Config("the catalog needs at least two technologies".into()));
        }
        Ok(TechnologyCatalog::new(self.catalog.technologies.clone(), self.range()?)?)
    }

    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        sha256_json(self)
    }
}

pub fn sha256_json<T: Serialize + ?Sized>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config values serialize");
    hex::encode(Sha256::digest(&bytes))
}
