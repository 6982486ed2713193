//! Pipeline configuration: TOML sections, `section.key=value` overrides and
//! range validation.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{PositiveSet, TauScope};
use crate::feature_selection::DEFAULT_K;
use crate::hartley::DenoiseConfig;
use crate::ingestion::ImputePolicy;
use crate::lssv::KernelSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PathsConfig {
    /// Hourly station CSV.
    pub input: PathBuf,
    /// Optional daily station CSV; empty means daily means of the hourly input.
    pub daily: PathBuf,
    /// Optional breakpoint and band tables; empty means the bundled CPCB tables.
    pub breakpoints: PathBuf,
    pub bands: PathBuf,
    /// Model file; empty means `model.drlssv` inside `output`.
    pub model: PathBuf,
    pub output: PathBuf,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            input: PathBuf::from("data/hourly.csv"),
            daily: PathBuf::new(),
            breakpoints: PathBuf::new(),
            bands: PathBuf::new(),
            model: PathBuf::new(),
            output: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HartleyConfig {
    pub keep_fraction: f64,
}

impl Default for HartleyConfig {
    fn default() -> Self {
        HartleyConfig {
            keep_fraction: DenoiseConfig::DEFAULT_KEEP_FRACTION,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ImputationConfig {
    pub policy: String,
}

impl Default for ImputationConfig {
    fn default() -> Self {
        ImputationConfig {
            policy: "linear".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SelectionConfig {
    pub k: usize,
    pub ridge: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            k: DEFAULT_K,
            ridge: 1e-4,
        }
    }
}

/// `"median"` or a positive bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SigmaSetting {
    Value(f64),
    Named(MedianTag),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MedianTag {
    Median,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LssvConfig {
    /// `"rbf"` or `"linear"`.
    pub kernel: String,
    pub sigma: SigmaSetting,
    pub gamma: f64,
    /// Training rows beyond this count are subsampled.
    pub cap_n: usize,
}

impl Default for LssvConfig {
    fn default() -> Self {
        LssvConfig {
            kernel: "rbf".into(),
            sigma: SigmaSetting::Named(MedianTag::Median),
            gamma: 10.0,
            cap_n: 5000,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitKind {
    /// Earliest rows of every station train, the rest test.
    #[default]
    Chronological,
    /// Seeded shuffle of all rows.
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub positive_set: String,
    /// `"chronological"` or `"random"`.
    pub split: String,
    pub train_fraction: f64,
    pub seed: u64,
    /// Evaluate on the first `test_n` test rows; 0 means all of them.
    pub test_n: usize,
    /// `"per-station"` or `"pooled"`.
    pub tau_scope: String,
    /// Sample counts for the report sweep; empty means steps of 2000 up to
    /// the test size.
    pub sizes: Vec<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            positive_set: PositiveSet::default().to_string(),
            split: "chronological".into(),
            train_fraction: 0.7,
            seed: 42,
            test_n: 0,
            tau_scope: "per-station".into(),
            sizes: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub paths: PathsConfig,
    pub hartley: HartleyConfig,
    pub imputation: ImputationConfig,
    pub selection: SelectionConfig,
    pub lssv: LssvConfig,
    pub eval: EvalConfig,
}

fn parse_override(item: &str) -> Result<(Vec<String>, toml::Value)> {
    let (key, raw) = item
        .split_once('=')
        .ok_or_else(|| Error::config(item, "override must look like section.key=value"))?;
    let path: Vec<String> = key.trim().split('.').map(str::to_string).collect();
    if path.len() != 2 || path.iter().any(String::is_empty) {
        return Err(Error::config(key.trim(), "override key must be section.key"));
    }
    let raw = raw.trim();
    // Bare words are taken as strings.
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((path, value))
}

fn field_of(message: &str) -> String {
    // serde reports "unknown field `x`"; name it when we can.
    message
        .split('`')
        .nth(1)
        .map(str::to_string)
        .unwrap_or_else(|| "config".into())
}

impl PipelineConfig {
    /// Parses TOML text, applies overrides and validates.
    pub fn from_toml_with(text: &str, overrides: &[String]) -> Result<Self> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| Error::config(field_of(e.message()), e.message().trim()))?;
        for item in overrides {
            let (path, value) = parse_override(item)?;
            let section = table
                .entry(path[0].clone())
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            match section {
                toml::Value::Table(t) => {
                    t.insert(path[1].clone(), value);
                }
                _ => return Err(Error::config(&path[0], "not a section")),
            }
        }
        let cfg: PipelineConfig = toml::Value::Table(table).try_into().map_err(
            |e: toml::de::Error| Error::config(field_of(e.message()), e.message().trim()),
        )?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads `path` when given (defaults otherwise) and applies overrides.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?,
            None => String::new(),
        };
        Self::from_toml_with(&text, overrides)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        let kf = self.hartley.keep_fraction;
        if !(kf > 0.0 && kf <= 1.0) {
            return Err(Error::config("hartley.keep_fraction", format!("{kf} is not in (0, 1]")));
        }
        self.impute_policy()?;
        if self.selection.k == 0 || self.selection.k > crate::pollutant::N_POLLUTANTS {
            return Err(Error::config("selection.k", "must be between 1 and 7"));
        }
        if !(self.selection.ridge >= 0.0 && self.selection.ridge.is_finite()) {
            return Err(Error::config("selection.ridge", "must be a non-negative number"));
        }
        match self.lssv.kernel.as_str() {
            "rbf" | "linear" => {}
            other => return Err(Error::config("lssv.kernel", format!("unknown kernel `{other}`"))),
        }
        if let SigmaSetting::Value(s) = self.lssv.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::config("lssv.sigma", "must be \"median\" or a positive number"));
            }
        }
        if !(self.lssv.gamma > 0.0 && self.lssv.gamma.is_finite()) {
            return Err(Error::config("lssv.gamma", "must be positive"));
        }
        if self.lssv.cap_n < 2 {
            return Err(Error::config("lssv.cap_n", "must be at least 2"));
        }
        self.positive_set()?;
        self.split_kind()?;
        self.tau_scope()?;
        let tf = self.eval.train_fraction;
        if !(tf > 0.0 && tf < 1.0) {
            return Err(Error::config("eval.train_fraction", format!("{tf} is not in (0, 1)")));
        }
        if self.eval.sizes.windows(2).any(|w| w[0] >= w[1]) || self.eval.sizes.contains(&0) {
            return Err(Error::config("eval.sizes", "must be positive and strictly ascending"));
        }
        Ok(())
    }

    pub fn impute_policy(&self) -> Result<ImputePolicy> {
        self.imputation
            .policy
            .parse()
            .map_err(|e: Error| Error::config("imputation.policy", e.to_string()))
    }

    pub fn positive_set(&self) -> Result<PositiveSet> {
        self.eval
            .positive_set
            .parse()
            .map_err(|e: Error| Error::config("eval.positive_set", e.to_string()))
    }

    pub fn split_kind(&self) -> Result<SplitKind> {
        match self.eval.split.to_ascii_lowercase().as_str() {
            "chronological" => Ok(SplitKind::Chronological),
            "random" => Ok(SplitKind::Random),
            other => Err(Error::config("eval.split", format!("unknown split `{other}`"))),
        }
    }

    pub fn tau_scope(&self) -> Result<TauScope> {
        self.eval
            .tau_scope
            .parse()
            .map_err(|e: Error| Error::config("eval.tau_scope", e.to_string()))
    }

    pub fn denoise(&self) -> Result<DenoiseConfig> {
        DenoiseConfig::new(self.hartley.keep_fraction)
            .map_err(|e| Error::config("hartley.keep_fraction", e.to_string()))
    }

    /// Kernel for standardized training inputs; `median_sigma` is used when
    /// the bandwidth is set to `"median"`.
    pub fn kernel(&self, median_sigma: impl FnOnce() -> f64) -> Result<KernelSpec> {
        match self.lssv.kernel.as_str() {
            "linear" => Ok(KernelSpec::Linear),
            _ => KernelSpec::rbf(match self.lssv.sigma {
                SigmaSetting::Value(s) => s,
                SigmaSetting::Named(MedianTag::Median) => median_sigma(),
            }),
        }
    }

    pub fn model_path(&self) -> PathBuf {
        if self.paths.model.as_os_str().is_empty() {
            self.paths.output.join(super::MODEL_FILE)
        } else {
            self.paths.model.clone()
        }
    }

    pub fn daily_path(&self) -> Option<&Path> {
        (!self.paths.daily.as_os_str().is_empty()).then_some(self.paths.daily.as_path())
    }
}
