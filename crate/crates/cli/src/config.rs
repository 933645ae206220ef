//! Run configuration: one TOML file plus `--set key=value` overrides.

use std::path::{Path, PathBuf};

use resid_core::embedding::{SkipGramConfig, WalkConfig};
use resid_core::graph::DEFAULT_SELF_WEIGHT;
use resid_core::ingest::{SamplingConfig, StatusMapping};
use resid_core::model::TrainConfig;
use resid_core::rng::derive_seed;
use serde::{Deserialize, Serialize};

use crate::fail::Failure;

pub const ENCODERS: [&str; 4] = ["none", "coordinates", "room_number", "node2vec"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Master seed. Every stochastic stage derives its stream from it.
    pub seed: u64,
    #[serde(default)]
    pub paths: Paths,
    #[serde(default)]
    pub dataset: Dataset,
    #[serde(default)]
    pub graph: GraphSection,
    #[serde(default)]
    pub encoder: EncoderSection,
    #[serde(default)]
    pub walk: WalkConfig,
    #[serde(default)]
    pub skipgram: SkipGramConfig,
    #[serde(default)]
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub train: TrainConfig,
    #[serde(default)]
    pub cv: CvSection,
    #[serde(default)]
    pub status: StatusMapping,
    #[serde(default)]
    pub simulate: SimulateSection,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// Layout TOML. Either this or `fixture` names the floor plan.
    pub layout: Option<PathBuf>,
    /// Built-in fixture (square4, cycle8, office9).
    pub fixture: Option<String>,
    /// Annotated sensor logs, merged in time order.
    pub logs: Vec<PathBuf>,
    /// Precomputed embeddings JSON; skips the walk and skip-gram stages.
    pub embeddings: Option<PathBuf>,
    pub output_dir: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Dataset {
    /// Year for timestamps that lack one.
    pub year: i32,
    /// Resident tags, in class order. Empty means: take them from the
    /// fixture, or from the log annotations in sorted order.
    pub residents: Vec<String>,
}

impl Default for Dataset {
    fn default() -> Self {
        Dataset {
            year: 2009,
            residents: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GraphSection {
    pub self_weight: f64,
}

impl Default for GraphSection {
    fn default() -> Self {
        GraphSection {
            self_weight: DEFAULT_SELF_WEIGHT,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    /// Positional encoders to run; several give a comparison table.
    pub variants: Vec<String>,
}

impl Default for EncoderSection {
    fn default() -> Self {
        EncoderSection {
            variants: vec!["node2vec".into()],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CvSection {
    pub folds: usize,
    /// Share of the non-test chunks used for epoch selection.
    pub valid_fraction: f64,
    /// Share of chunks (taken from the end of the log) held out by `train`.
    pub test_fraction: f64,
}

impl Default for CvSection {
    fn default() -> Self {
        CvSection {
            folds: 10,
            valid_fraction: 0.25,
            test_fraction: 0.2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSection {
    /// Overrides the fixture duration.
    pub days: Option<f64>,
    pub detection_interval: Option<f64>,
    pub p_fail: Option<f64>,
}

fn parse_value(text: &str) -> toml::Value {
    // anything that is not a TOML literal is taken as a bare string
    match toml::from_str::<toml::Table>(&format!("v = {text}")) {
        Ok(mut t) => t.remove("v").expect("key just parsed"),
        Err(_) => toml::Value::String(text.to_string()),
    }
}

fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<(), Failure> {
    let (key, value) = assignment
        .split_once('=')
        .ok_or_else(|| Failure::config(format!("--set expects key=value, got `{assignment}`")))?;
    let parts: Vec<&str> = key.trim().split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Failure::config(format!("bad key `{key}` in --set")));
    }
    let mut table = root;
    for p in &parts[..parts.len() - 1] {
        let entry = table
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Failure::config(format!("`{p}` in `{key}` is not a table")))?;
    }
    table.insert(parts[parts.len() - 1].to_string(), parse_value(value.trim()));
    Ok(())
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Reads `path`, applies overrides, resolves relative paths against the
    /// config file's directory and derives the per-stage seeds.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        let mut table: toml::Table = toml::from_str(&text)
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| Failure::config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.resolve_paths(base);
        cfg.derive_seeds();
        cfg.validate()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let p = &mut self.paths;
        p.layout = p.layout.as_ref().map(|l| resolve(base, l));
        p.embeddings = p.embeddings.as_ref().map(|l| resolve(base, l));
        p.logs = p.logs.iter().map(|l| resolve(base, l)).collect();
        if p.output_dir.as_os_str().is_empty() {
            p.output_dir = PathBuf::from("run");
        }
        p.output_dir = resolve(base, &p.output_dir);
    }

    fn derive_seeds(&mut self) {
        self.walk.rng_seed = derive_seed(self.seed, 1);
        self.skipgram.rng_seed = derive_seed(self.seed, 2);
        self.train.rng_seed = derive_seed(self.seed, 3);
    }

    fn validate(&self) -> Result<(), Failure> {
        let p = &self.paths;
        if p.layout.is_some() && p.fixture.is_some() {
            return Err(Failure::config("set either paths.layout or paths.fixture, not both"));
        }
        let mut must_exist: Vec<&PathBuf> = p.logs.iter().collect();
        must_exist.extend(p.layout.iter());
        must_exist.extend(p.embeddings.iter());
        for f in must_exist {
            if !f.is_file() {
                return Err(Failure::config(format!("{}: file not found", f.display())));
            }
        }
        if self.encoder.variants.is_empty() {
            return Err(Failure::config("encoder.variants is empty"));
        }
        for v in &self.encoder.variants {
            if !ENCODERS.contains(&v.as_str()) {
                return Err(Failure::config(format!(
                    "unknown encoder `{v}` (expected one of {})",
                    ENCODERS.join(", ")
                )));
            }
        }
        let mut seen = self.encoder.variants.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.encoder.variants.len() {
            return Err(Failure::config("encoder.variants lists an encoder twice"));
        }
        if !(0.0..1.0).contains(&self.cv.test_fraction) {
            return Err(Failure::config("cv.test_fraction must be in [0, 1)"));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}
