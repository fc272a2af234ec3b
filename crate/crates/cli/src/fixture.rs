//! The bundled synthetic inputs: a works dump with a planted convergence, an
//! external series corpus and a configuration that ties them together.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use techprox_core::corpus::{write_atomic, write_jsonl};
use techprox_core::synthetic::synthetic_corpus;

use crate::error::Result;

pub const CORPUS_FILE: &str = "synthetic_corpus.jsonl";
pub const EXTERNAL_FILE: &str = "external_corpus.csv";
pub const CONFIG_FILE: &str = "techprox.toml";

const EXTERNAL_SERIES: usize = 60;
const EXTERNAL_LEN: usize = 300;

pub const EXAMPLE_CONFIG: &str = r#"# Synthetic planted-convergence run. Relative paths resolve against this file.
output_dir = "out"
seed = 0

[data]
dump = "synthetic_corpus.jsonl"
external_corpus = "external_corpus.csv"

[catalog]
start = "2002-01"
end = "2021-12"

[[catalog.technologies]]
id = "C7001"
label = "Lattice cryptography"

[[catalog.technologies]]
id = "C7002"
label = "Distributed ledger"

[[catalog.technologies]]
id = "C7003"
label = "Audio watermarking"

[keywords]
top_k = 5

[processing]
alpha = 0.1
exclusion_rate = 0.5
flat_mean = 0.02

[clustering]
algorithm = "kshape"
k = 5
training = "project"
sweep = [2, 3, 4, 5, 6]

[forecasting]
horizons = [3, 6, 12]
n_sections = 5
regimes = ["local", "cluster-rand", "cluster", "global", "transfer"]

[[forecasting.models]]
family = "naive-seasonal"
k = 1

[[forecasting.models]]
family = "exponential-smoothing"
alpha = 0.1

[[forecasting.models]]
family = "theta"

[[forecasting.models]]
family = "linear-regression"
lags = 12

[[forecasting.models]]
family = "gradient-boosted-trees"
lags = 12

[[forecasting.models]]
family = "random-forest"
lags = 12

[report]
histogram_width = 10.0
pair = "Lattice cryptography,Distributed ledger"
"#;

/// Non-negative series from five shape families (rising, falling, seasonal,
/// single hump, late surge) with seeded noise, one per line as `id,v1,...`.
pub fn external_corpus_csv(seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for i in 0..EXTERNAL_SERIES {
        let family = i % 5;
        let amp = 1.0 + rng.random::<f64>();
        let phase = rng.random::<f64>() * std::f64::consts::TAU;
        let _ = write!(out, "ext{i:03}");
        for t in 0..EXTERNAL_LEN {
            let u = t as f64 / (EXTERNAL_LEN - 1) as f64;
            let base = match family {
                0 => u,
                1 => 1.0 - u,
                2 => 0.5 + 0.5 * (std::f64::consts::TAU * t as f64 / 12.0 + phase).sin(),
                3 => (-((u - 0.5) / 0.15).powi(2)).exp(),
                _ => (u - 0.6).max(0.0) * 2.5,
            };
            let v = (amp * base + 0.05 * rng.random::<f64>()).max(0.0);
            let _ = write!(out, ",{v:.6}");
        }
        out.push('\n');
    }
    out
}

pub fn corpus_jsonl(seed: u64) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_jsonl(&mut buf, &synthetic_corpus(seed))?;
    Ok(buf)
}

/// Writes the dump, the external corpus and the example config into `dir`.
pub fn write_fixture(dir: &Path, seed: u64) -> Result<Vec<PathBuf>> {
    let files = [
        (CORPUS_FILE, corpus_jsonl(seed)?),
        (EXTERNAL_FILE, external_corpus_csv(seed).into_bytes()),
        (CONFIG_FILE, EXAMPLE_CONFIG.as_bytes().to_vec()),
    ];
    let mut written = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        write_atomic(&path, &bytes)?;
        written.push(path);
    }
    Ok(written)
}
