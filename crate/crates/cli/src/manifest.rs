use std::collections::BTreeMap;
use std::path::Path;

use restool_core::{Error, Result};
use serde::{Deserialize, Serialize};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: String,
    pub outputs: Vec<String>,
    pub wall_clock_ms: f64,
}

/// `<output_dir>/manifest.json`. Stage records from earlier runs are kept
/// when the config hash matches.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub tool: String,
    pub tool_version: String,
    pub core_version: String,
    pub stages: BTreeMap<String, StageRecord>,
}

impl RunManifest {
    pub fn new(config_hash: &str) -> Self {
        Self {
            config_hash: config_hash.to_owned(),
            tool: "restool".to_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            core_version: restool_core::VERSION.to_owned(),
            stages: BTreeMap::new(),
        }
    }

    pub fn load_or_new(dir: &Path, config_hash: &str) -> Self {
        std::fs::read_to_string(dir.join(MANIFEST_FILE))
            .ok()
            .and_then(|s| serde_json::from_str::<RunManifest>(&s).ok())
            .filter(|m| m.config_hash == config_hash)
            .unwrap_or_else(|| Self::new(config_hash))
    }

    pub fn record(&mut self, rec: StageRecord) {
        self.stages.insert(rec.stage.clone(), rec);
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}
