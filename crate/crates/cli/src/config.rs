//! The JSON pipeline configuration.
//!
//! Paths are resolved against the directory holding the config file. Every
//! section except `paths` and `normalization` may be omitted.

use std::path::{Path, PathBuf};

use restool_core::density::{PairMode, DEFAULT_GRID_MARGIN, DEFAULT_GRID_POINTS};
use restool_core::detector::{Method, DEFAULT_METHODS, MIN_PERMUTATIONS};
use restool_core::index::Normalization;
use restool_core::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub normalization: Normalization,
    #[serde(default)]
    pub weights: WeightsConfig,
    #[serde(default)]
    pub classification: ClassificationConfig,
    #[serde(default)]
    pub ellipse: EllipseConfig,
    #[serde(default)]
    pub density: DensityConfig,
    #[serde(default)]
    pub detector: DetectorConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Paths {
    pub values: PathBuf,
    pub spec: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub centroids: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adjacency: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drivers: Option<PathBuf>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightsConfig {
    /// `{indicator_id: weight}` JSON file.
    File { path: PathBuf },
    /// Weights listed in the indicator spec.
    Spec,
    #[default]
    Entropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassificationConfig {
    #[serde(default = "default_k")]
    pub k: usize,
    /// Years to classify; all panel years when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub years: Option<Vec<i32>>,
}

fn default_k() -> usize {
    5
}

impl Default for ClassificationConfig {
    fn default() -> Self {
        Self { k: default_k(), years: None }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EllipseConfig {
    /// Years to summarize; all panel years when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub years: Option<Vec<i32>>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bandwidth {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub y: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Neighbors {
    /// Pairs from the adjacency file.
    #[default]
    Contiguity,
    /// The `k` nearest centroids.
    Knn {
        #[serde(default = "default_knn")]
        k: usize,
    },
}

fn default_knn() -> usize {
    4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    #[serde(default = "default_modes")]
    pub modes: Vec<PairMode>,
    #[serde(default = "default_delta")]
    pub delta: usize,
    /// Silverman's rule per axis unless overridden.
    #[serde(default)]
    pub bandwidth: Bandwidth,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default = "default_grid_margin")]
    pub grid_margin: f64,
    #[serde(default)]
    pub neighbors: Neighbors,
}

fn default_modes() -> Vec<PairMode> {
    PairMode::ALL.to_vec()
}

fn default_delta() -> usize {
    3
}

fn default_grid_points() -> usize {
    DEFAULT_GRID_POINTS
}

fn default_grid_margin() -> f64 {
    DEFAULT_GRID_MARGIN
}

impl Default for DensityConfig {
    fn default() -> Self {
        Self {
            modes: default_modes(),
            delta: default_delta(),
            bandwidth: Bandwidth::default(),
            grid_points: default_grid_points(),
            grid_margin: default_grid_margin(),
            neighbors: Neighbors::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Driver factors to analyse; every factor in the drivers file when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factors: Option<Vec<String>>,
    /// Outcome years; the last panel year when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub years: Option<Vec<i32>>,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    /// Inclusive range of stratum counts tried by the discretization search.
    #[serde(default = "default_l_range")]
    pub l_range: [usize; 2],
    /// 0 skips the significance test.
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default = "default_true")]
    pub interactions: bool,
}

fn default_methods() -> Vec<Method> {
    DEFAULT_METHODS.to_vec()
}

fn default_l_range() -> [usize; 2] {
    [3, 8]
}

fn default_permutations() -> usize {
    999
}

fn default_true() -> bool {
    true
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            factors: None,
            years: None,
            methods: default_methods(),
            l_range: default_l_range(),
            permutations: default_permutations(),
            seed: None,
            interactions: true,
        }
    }
}

/// Command-line values that replace config fields.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output_dir: Option<PathBuf>,
    pub base_year: Option<i32>,
    pub delta: Option<usize>,
    pub permutations: Option<usize>,
}

impl PipelineConfig {
    pub fn from_json(text: &str, origin: &Path) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("<root>", format!("{}: {e}", origin.display())))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::from_json(&text, path)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(seed) = o.seed {
            self.detector.seed = Some(seed);
        }
        if let Some(dir) = &o.output_dir {
            self.paths.output_dir = dir.clone();
        }
        if let Some(year) = o.base_year {
            match &mut self.normalization {
                Normalization::FixedBase { base_year } => *base_year = year,
                Normalization::Minmax { .. } => {
                    return Err(Error::config(
                        "normalization.base_year",
                        "--base-year applies only to fixed_base normalization",
                    ))
                }
            }
        }
        if let Some(d) = o.delta {
            self.density.delta = d;
        }
        if let Some(p) = o.permutations {
            self.detector.permutations = p;
        }
        Ok(())
    }

    /// Checks that do not need the data files.
    pub fn validate(&self) -> Result<()> {
        if self.classification.k < 2 {
            return Err(Error::config("classification.k", "at least 2 classes are required"));
        }
        let d = &self.density;
        if d.delta == 0 {
            return Err(Error::config("density.delta", "lag must be at least one year"));
        }
        if d.grid_points < 2 {
            return Err(Error::config("density.grid_points", "at least 2 grid points are required"));
        }
        if !(d.grid_margin.is_finite() && d.grid_margin >= 0.0) {
            return Err(Error::config("density.grid_margin", "must be a nonnegative number"));
        }
        for (axis, h) in [("x", d.bandwidth.x), ("y", d.bandwidth.y)] {
            if let Some(h) = h {
                if !(h.is_finite() && h > 0.0) {
                    return Err(Error::config(format!("density.bandwidth.{axis}"), "must be positive"));
                }
            }
        }
        if d.modes.is_empty() {
            return Err(Error::config("density.modes", "list at least one mode"));
        }
        if let Neighbors::Knn { k } = d.neighbors {
            if k == 0 {
                return Err(Error::config("density.neighbors.k", "must be at least 1"));
            }
        }
        let det = &self.detector;
        let [lo, hi] = det.l_range;
        if lo < 2 || hi < lo {
            return Err(Error::config("detector.l_range", "expected [min, max] with 2 <= min <= max"));
        }
        if det.methods.is_empty() || det.methods.contains(&Method::Supplied) {
            return Err(Error::config(
                "detector.methods",
                "list one or more of equal_interval, quantile, natural_breaks, geometric, std_dev",
            ));
        }
        if det.permutations > 0 {
            if det.permutations < MIN_PERMUTATIONS {
                return Err(Error::config(
                    "detector.permutations",
                    format!("use 0 to skip the test or at least {MIN_PERMUTATIONS}"),
                ));
            }
            if det.seed.is_none() {
                return Err(Error::config("detector.seed", "a seed is required when permutations are requested"));
            }
        }
        Ok(())
    }

    /// SHA-256 over the canonical serialization. Formatting, key order and
    /// spelled-out defaults do not change it; neither does the output
    /// directory.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.paths.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&canonical).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// A config with every path made absolute.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub config: PipelineConfig,
    pub values: PathBuf,
    pub spec: PathBuf,
    pub centroids: Option<PathBuf>,
    pub adjacency: Option<PathBuf>,
    pub drivers: Option<PathBuf>,
    pub weights: Option<PathBuf>,
    pub output_dir: PathBuf,
}

fn existing(base: &Path, p: &Path, field: &str) -> Result<PathBuf> {
    let full = base.join(p);
    if !full.is_file() {
        return Err(Error::config(field, format!("file not found: {}", full.display())));
    }
    Ok(full)
}

impl Resolved {
    /// Resolves paths against `base` and checks that input files exist.
    pub fn new(config: PipelineConfig, base: &Path) -> Result<Self> {
        config.validate()?;
        let p = &config.paths;
        let opt = |p: &Option<PathBuf>, field: &str| p.as_ref().map(|p| existing(base, p, field)).transpose();
        let weights = match &config.weights {
            WeightsConfig::File { path } => Some(existing(base, path, "weights.path")?),
            _ => None,
        };
        Ok(Self {
            values: existing(base, &p.values, "paths.values")?,
            spec: existing(base, &p.spec, "paths.spec")?,
            centroids: opt(&p.centroids, "paths.centroids")?,
            adjacency: opt(&p.adjacency, "paths.adjacency")?,
            drivers: opt(&p.drivers, "paths.drivers")?,
            weights,
            output_dir: base.join(&p.output_dir),
            config,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "paths": {"values": "v.csv", "spec": "s.json"},
        "normalization": {"mode": "fixed_base", "base_year": 2004},
        "detector": {"seed": 1}
    }"#;

    #[test]
    fn defaults_fill_in() {
        let c = PipelineConfig::from_json(MINIMAL, Path::new("c.json")).unwrap();
        assert_eq!(c.classification.k, 5);
        assert_eq!(c.density.delta, 3);
        assert_eq!(c.density.grid_points, 256);
        assert_eq!(c.density.neighbors, Neighbors::Contiguity);
        assert_eq!(c.detector.permutations, 999);
        assert_eq!(c.weights, WeightsConfig::Entropy);
        c.validate().unwrap();
    }

    #[test]
    fn hash_ignores_formatting_and_explicit_defaults() {
        let a = PipelineConfig::from_json(MINIMAL, Path::new("a")).unwrap();
        let explicit = r#"{"detector": {"permutations": 999, "seed": 1},
            "normalization": {"base_year": 2004, "mode": "fixed_base"},
            "paths": {"spec": "s.json", "values": "v.csv", "output_dir": "elsewhere"},
            "density": {"delta": 3}}"#;
        let b = PipelineConfig::from_json(explicit, Path::new("b")).unwrap();
        assert_eq!(a.hash(), b.hash());

        let mut c = a.clone();
        c.detector.seed = Some(2);
        assert_ne!(a.hash(), c.hash());
        let mut d = a.clone();
        d.density.bandwidth.x = Some(0.1);
        assert_ne!(a.hash(), d.hash());
    }

    #[test]
    fn unknown_field_is_a_config_error() {
        let bad = MINIMAL.replace("\"detector\"", "\"detectr\"");
        let e = PipelineConfig::from_json(&bad, Path::new("c.json")).unwrap_err();
        assert_eq!(e.kind(), restool_core::ErrorKind::Config);
    }

    #[test]
    fn permutations_need_a_seed() {
        let mut c = PipelineConfig::from_json(MINIMAL, Path::new("c.json")).unwrap();
        c.detector.seed = None;
        assert!(matches!(c.validate(), Err(Error::Config { field, .. }) if field == "detector.seed"));
        c.detector.permutations = 0;
        c.validate().unwrap();
        c.detector.permutations = 50;
        assert!(c.validate().is_err());
    }

    #[test]
    fn base_year_override_needs_fixed_base() {
        let mut c = PipelineConfig::from_json(MINIMAL, Path::new("c.json")).unwrap();
        c.apply(&Overrides { base_year: Some(2010), ..Default::default() }).unwrap();
        assert_eq!(c.normalization, Normalization::FixedBase { base_year: 2010 });
        c.normalization = Normalization::Minmax { scope: restool_core::index::Scope::Pooled };
        assert!(c.apply(&Overrides { base_year: Some(2010), ..Default::default() }).is_err());
    }
}
