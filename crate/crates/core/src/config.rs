//! Flat `key = value` configuration.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::anfis::TrainingConfig;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnsembleVariant {
    Fis,
    Anfis,
    Hybrid,
}

impl EnsembleVariant {
    pub fn as_str(&self) -> &'static str {
        match self {
            EnsembleVariant::Fis => "fis",
            EnsembleVariant::Anfis => "anfis",
            EnsembleVariant::Hybrid => "hybrid",
        }
    }
}

impl fmt::Display for EnsembleVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EnsembleVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "fis" => Ok(EnsembleVariant::Fis),
            "anfis" => Ok(EnsembleVariant::Anfis),
            "hybrid" => Ok(EnsembleVariant::Hybrid),
            other => Err(Error::Config(format!("variant must be fis, anfis or hybrid, got '{other}'"))),
        }
    }
}

/// What the grid confidences are relative to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfidenceDenominator {
    /// Records of the expert's own label.
    Subset,
    /// All training records.
    Global,
}

impl FromStr for ConfidenceDenominator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "subset" => Ok(Self::Subset),
            "global" => Ok(Self::Global),
            other => Err(Error::Config(format!(
                "confidence_denominator must be subset or global, got '{other}'"
            ))),
        }
    }
}

impl fmt::Display for ConfidenceDenominator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Subset => "subset",
            Self::Global => "global",
        })
    }
}

/// Records an anfis expert's consequents and premises are fitted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnfisFitRecords {
    /// Every training record, each scored against the expert's own grid.
    All,
    /// Only records carrying the expert's label.
    Label,
}

impl FromStr for AnfisFitRecords {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(Self::All),
            "label" => Ok(Self::Label),
            other => Err(Error::Config(format!("anfis_fit_records must be all or label, got '{other}'"))),
        }
    }
}

impl fmt::Display for AnfisFitRecords {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::All => "all",
            Self::Label => "label",
        })
    }
}

/// Which records the experts are fitted on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrainOn {
    /// Every record, test block included.
    All,
    /// Only records before the selection and test blocks.
    Train,
}

impl FromStr for TrainOn {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "all" => Ok(Self::All),
            "train" => Ok(Self::Train),
            other => Err(Error::Config(format!("train_on must be all or train, got '{other}'"))),
        }
    }
}

impl fmt::Display for TrainOn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::All => "all",
            Self::Train => "train",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub data_path: Option<PathBuf>,
    pub holiday_calendar_path: Option<PathBuf>,
    pub mf_counts: Vec<usize>,
    pub variant: EnsembleVariant,
    pub training: TrainingConfig,
    pub test_fraction: f64,
    /// Overrides `test_fraction` when set.
    pub test_count: Option<usize>,
    pub confidence_denominator: ConfidenceDenominator,
    pub anfis_fit_records: AnfisFitRecords,
    pub model_dir: PathBuf,
    pub train_on: TrainOn,
    /// Fraction of records, just before the test block, used to pick the
    /// hybrid. Zero means the test block itself is used.
    pub selection_split: f64,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            data_path: None,
            holiday_calendar_path: None,
            mf_counts: vec![4, 4, 2, 2],
            variant: EnsembleVariant::Hybrid,
            training: TrainingConfig::default(),
            test_fraction: 0.2,
            test_count: None,
            confidence_denominator: ConfidenceDenominator::Subset,
            anfis_fit_records: AnfisFitRecords::All,
            model_dir: PathBuf::from("models"),
            train_on: TrainOn::All,
            selection_split: 0.0,
        }
    }
}

pub const KEYS: &[&str] = &[
    "data_path",
    "holiday_calendar_path",
    "mf_counts",
    "variant",
    "epochs",
    "learning_rate",
    "min_sigma",
    "rmse_tolerance",
    "test_fraction",
    "test_count",
    "confidence_denominator",
    "anfis_fit_records",
    "model_dir",
    "train_on",
    "selection_split",
];

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::Config(format!("{key}: invalid value '{value}': {e}")))
}

impl Config {
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        match key {
            "data_path" => self.data_path = Some(PathBuf::from(value)),
            "holiday_calendar_path" => self.holiday_calendar_path = Some(PathBuf::from(value)),
            "mf_counts" => {
                self.mf_counts = value
                    .split(',')
                    .map(|v| parse_value(key, v))
                    .collect::<Result<Vec<usize>>>()?;
            }
            "variant" => self.variant = value.parse()?,
            "epochs" => self.training.epochs = parse_value(key, value)?,
            "learning_rate" => self.training.learning_rate = parse_value(key, value)?,
            "min_sigma" => self.training.min_sigma = parse_value(key, value)?,
            "rmse_tolerance" => self.training.rmse_tolerance = parse_value(key, value)?,
            "test_fraction" => self.test_fraction = parse_value(key, value)?,
            "test_count" => self.test_count = Some(parse_value(key, value)?),
            "confidence_denominator" => self.confidence_denominator = value.parse()?,
            "anfis_fit_records" => self.anfis_fit_records = value.parse()?,
            "model_dir" => self.model_dir = PathBuf::from(value),
            "train_on" => self.train_on = value.parse()?,
            "selection_split" => self.selection_split = parse_value(key, value)?,
            other => return Err(Error::Config(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines; `#` starts a comment line.
    pub fn parse(text: &str) -> Result<Self> {
        let mut config = Config::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value", i + 1)))?;
            config
                .set(key.trim(), value)
                .map_err(|e| Error::Config(format!("line {}: {e}", i + 1)))?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut config = Self::parse(&text)?;
        // relative paths in a config file are relative to that file
        if let Some(base) = path.parent() {
            for p in [&mut config.data_path, &mut config.holiday_calendar_path] {
                if let Some(p) = p.as_mut() {
                    if p.is_relative() {
                        *p = base.join(&*p);
                    }
                }
            }
            if config.model_dir.is_relative() {
                config.model_dir = base.join(&config.model_dir);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.mf_counts.is_empty() || self.mf_counts.contains(&0) {
            return Err(Error::Config(format!("mf_counts must all be >= 1, got {:?}", self.mf_counts)));
        }
        if self.mf_counts.len() != crate::dataset::DIMENSION_NAMES.len() {
            return Err(Error::Config(format!(
                "mf_counts needs {} entries (latitude, longitude, day, holiday_diff)",
                crate::dataset::DIMENSION_NAMES.len()
            )));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config(format!("test_fraction must be in (0, 1), got {}", self.test_fraction)));
        }
        if !(0.0..1.0).contains(&self.selection_split) {
            return Err(Error::Config(format!(
                "selection_split must be in [0, 1), got {}",
                self.selection_split
            )));
        }
        self.training.validate()
    }

    pub fn require_data_path(&self) -> Result<&Path> {
        self.data_path
            .as_deref()
            .ok_or_else(|| Error::Config("data_path is not set".into()))
    }

    /// `key = value` text that parses back to this configuration.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut line = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        if let Some(p) = &self.data_path {
            line("data_path", p.display().to_string());
        }
        if let Some(p) = &self.holiday_calendar_path {
            line("holiday_calendar_path", p.display().to_string());
        }
        line(
            "mf_counts",
            self.mf_counts.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(","),
        );
        line("variant", self.variant.to_string());
        line("epochs", self.training.epochs.to_string());
        line("learning_rate", self.training.learning_rate.to_string());
        line("min_sigma", self.training.min_sigma.to_string());
        line("rmse_tolerance", self.training.rmse_tolerance.to_string());
        line("test_fraction", self.test_fraction.to_string());
        if let Some(n) = self.test_count {
            line("test_count", n.to_string());
        }
        line("confidence_denominator", self.confidence_denominator.to_string());
        line("anfis_fit_records", self.anfis_fit_records.to_string());
        line("model_dir", self.model_dir.display().to_string());
        line("train_on", self.train_on.to_string());
        line("selection_split", self.selection_split.to_string());
        out
    }
}
