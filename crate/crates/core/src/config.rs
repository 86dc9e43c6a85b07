//! TOML configuration with environment overrides.
//!
//! Any key can be overridden by an environment variable named after its path:
//! `UGSEL_` followed by the upper-cased section and key joined with `__`, for
//! example `UGSEL_GATES__KAPPA1=0.6` or `UGSEL_SIMULATOR__SCENE__WIDTH=800`.
//! Values are parsed as TOML literals and fall back to plain strings.

use std::path::Path;

use serde::{Deserialize, Serialize};
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::gates::GateConfig;
use crate::seed::derive_seed;
use crate::sim::{DetectorModel, SceneConfig, DEFAULT_ROUND_DECAY};
use crate::tiling::TilingConfig;

pub const ENV_PREFIX: &str = "UGSEL_";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorConfig {
    pub n_scenes: usize,
    pub round_decay: f64,
    pub scene: SceneConfig,
    pub detector: DetectorModel,
}

impl Default for SimulatorConfig {
    fn default() -> Self {
        Self {
            n_scenes: 200,
            round_decay: DEFAULT_ROUND_DECAY,
            scene: SceneConfig::default(),
            detector: DetectorModel::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    /// Match IoU for pseudo-label precision, calibration and tile checks.
    pub iou_threshold: f64,
    pub ece_bins: usize,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            iou_threshold: 0.5,
            ece_bins: 10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    pub gates: GateConfig,
    pub tiling: TilingConfig,
    pub simulator: SimulatorConfig,
    pub evaluation: EvaluationConfig,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            seed: 7,
            gates: GateConfig::default(),
            tiling: TilingConfig::default(),
            simulator: SimulatorConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        self.gates.validate()?;
        self.tiling.validate()?;
        self.simulator.scene.validate()?;
        self.simulator.detector.validate()?;
        if !(self.simulator.round_decay > 0.0 && self.simulator.round_decay <= 1.0) {
            return Err(Error::Config("round_decay must lie in (0, 1]".into()));
        }
        if !(self.evaluation.iou_threshold > 0.0 && self.evaluation.iou_threshold <= 1.0) {
            return Err(Error::Config("iou_threshold must lie in (0, 1]".into()));
        }
        if self.evaluation.ece_bins == 0 {
            return Err(Error::Config("ece_bins must be positive".into()));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        Self::from_table(parse_table(text)?)
    }

    fn from_table(table: Table) -> Result<Self> {
        let cfg: Config = Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads an optional file, then applies overrides from `vars`.
    pub fn load_with<I>(path: Option<&Path>, vars: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut table = match path {
            Some(p) => parse_table(&std::fs::read_to_string(p)?)?,
            None => Table::new(),
        };
        apply_overrides(&mut table, vars)?;
        Self::from_table(table)
    }

    /// [`Config::load_with`] over the process environment.
    pub fn load(path: Option<&Path>) -> Result<Self> {
        Self::load_with(path, std::env::vars())
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Scene settings with the stream seed derived from the master seed.
    pub fn scene_config(&self) -> SceneConfig {
        SceneConfig {
            seed: derive_seed(self.seed, "scenes"),
            ..self.simulator.scene
        }
    }
}

fn parse_table(text: &str) -> Result<Table> {
    text.parse::<Table>().map_err(|e| Error::Config(e.to_string()))
}

fn parse_value(raw: &str) -> Value {
    match format!("v = {raw}").parse::<Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn apply_overrides<I>(table: &mut Table, vars: I) -> Result<()>
where
    I: IntoIterator<Item = (String, String)>,
{
    let mut vars: Vec<(String, String)> = vars
        .into_iter()
        .filter(|(k, _)| k.starts_with(ENV_PREFIX))
        .collect();
    vars.sort();
    for (key, raw) in vars {
        let path: Vec<String> = key[ENV_PREFIX.len()..]
            .split("__")
            .map(str::to_ascii_lowercase)
            .collect();
        if path.iter().any(String::is_empty) {
            return Err(Error::Config(format!("malformed override {key}")));
        }
        let (leaf, parents) = path.split_last().expect("split yields one item");
        let mut node = &mut *table;
        for part in parents {
            let entry = node.entry(part.clone()).or_insert_with(|| Value::Table(Table::new()));
            node = entry
                .as_table_mut()
                .ok_or_else(|| Error::Config(format!("override {key}: {part} is not a section")))?;
        }
        node.insert(leaf.clone(), parse_value(&raw));
    }
    Ok(())
}
