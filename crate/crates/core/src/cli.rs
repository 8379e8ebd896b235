//! `crimefis` subcommands. Each command is a plain function so it can be
//! driven from tests; [`run`] adds argument parsing and exit codes.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use log::{info, warn};

use crate::anfis::TrainingReport;
use crate::config::{Config, EnsembleVariant};
use crate::dataset::{self, HolidayCalendar, InputVector, ProcessedRecord, DIMENSION_NAMES};
use crate::error::{Error, Result};
use crate::experts::{build_hybrid, evaluate_accuracy, EvaluationTable, ExpertEnsemble, Prediction};
use crate::fuzzy::Variant;
use crate::grid::render_grid;
use crate::model_io::{load_ensemble, manifest_path, save_ensemble};
use crate::pipeline::{grid_for_subset, split_records, train_ensemble, EnsembleSpec, Split};

#[derive(Debug, Parser)]
#[command(name = "crimefis", version, about = "Fuzzy-inference crime-type experts")]
pub struct Cli {
    /// Flat key = value configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    #[command(flatten)]
    pub overrides: Overrides,

    #[command(subcommand)]
    pub command: Command,
}

/// One flag per configuration key.
#[derive(Debug, Default, Args)]
pub struct Overrides {
    #[arg(long = "data_path", visible_alias = "data-path", global = true)]
    pub data_path: Option<String>,
    #[arg(long = "holiday_calendar_path", visible_alias = "holiday-calendar-path", global = true)]
    pub holiday_calendar_path: Option<String>,
    #[arg(long = "mf_counts", visible_alias = "mf-counts", global = true)]
    pub mf_counts: Option<String>,
    #[arg(long, global = true, value_parser = ["fis", "anfis", "hybrid"])]
    pub variant: Option<String>,
    #[arg(long, global = true)]
    pub epochs: Option<String>,
    #[arg(long = "learning_rate", visible_alias = "learning-rate", global = true)]
    pub learning_rate: Option<String>,
    #[arg(long = "min_sigma", visible_alias = "min-sigma", global = true)]
    pub min_sigma: Option<String>,
    #[arg(long = "rmse_tolerance", visible_alias = "rmse-tolerance", global = true)]
    pub rmse_tolerance: Option<String>,
    #[arg(long = "test_fraction", visible_alias = "test-fraction", global = true)]
    pub test_fraction: Option<String>,
    #[arg(long = "test_count", visible_alias = "test-count", global = true)]
    pub test_count: Option<String>,
    #[arg(long = "confidence_denominator", visible_alias = "confidence-denominator", global = true)]
    pub confidence_denominator: Option<String>,
    #[arg(long = "anfis_fit_records", visible_alias = "anfis-fit-records", global = true)]
    pub anfis_fit_records: Option<String>,
    #[arg(long = "model_dir", visible_alias = "model-dir", global = true)]
    pub model_dir: Option<String>,
    #[arg(long = "train_on", visible_alias = "train-on", global = true)]
    pub train_on: Option<String>,
    /// Fraction of records held out (before the test block) for hybrid selection.
    #[arg(long = "selection_split", visible_alias = "selection-split", global = true)]
    pub selection_split: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> Vec<(&'static str, &str)> {
        let fields: [(&'static str, &Option<String>); 15] = [
            ("data_path", &self.data_path),
            ("holiday_calendar_path", &self.holiday_calendar_path),
            ("mf_counts", &self.mf_counts),
            ("variant", &self.variant),
            ("epochs", &self.epochs),
            ("learning_rate", &self.learning_rate),
            ("min_sigma", &self.min_sigma),
            ("rmse_tolerance", &self.rmse_tolerance),
            ("test_fraction", &self.test_fraction),
            ("test_count", &self.test_count),
            ("confidence_denominator", &self.confidence_denominator),
            ("anfis_fit_records", &self.anfis_fit_records),
            ("model_dir", &self.model_dir),
            ("train_on", &self.train_on),
            ("selection_split", &self.selection_split),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.as_deref().map(|v| (k, v)))
            .collect()
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert raw `label,latitude,longitude,date` rows into processed rows.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Defaults to standard output.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Build and train one expert per label and write the model files.
    Train {
        /// Per-epoch `epoch,rmse` CSV for every anfis expert, one file per label.
        #[arg(long = "rmse-log")]
        rmse_log: Option<PathBuf>,
    },
    /// Classify one location and date.
    Predict {
        #[arg(long, allow_negative_numbers = true)]
        lat: f64,
        #[arg(long, allow_negative_numbers = true)]
        lon: f64,
        /// YYYY-MM-DD
        #[arg(long)]
        date: String,
    },
    /// Accuracy tables for the fis, anfis and hybrid ensembles on the test block.
    Evaluate {
        /// Print CSV tables instead of aligned text.
        #[arg(long)]
        csv: bool,
    },
    /// Grid cells with bounds, counts and confidences for each label.
    ExportGrid {
        /// Only this label.
        #[arg(long)]
        label: Option<String>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

pub fn resolve_config(config_path: Option<&Path>, overrides: &Overrides) -> Result<Config> {
    let mut config = match config_path {
        Some(p) => Config::from_path(p)?,
        None => Config::default(),
    };
    for (key, value) in overrides.pairs() {
        config.set(key, value)?;
    }
    config.validate()?;
    Ok(config)
}

fn calendar(config: &Config) -> Result<Option<HolidayCalendar>> {
    config
        .holiday_calendar_path
        .as_deref()
        .map(HolidayCalendar::from_path)
        .transpose()
}

fn require_calendar(config: &Config) -> Result<HolidayCalendar> {
    calendar(config)?.ok_or_else(|| Error::Config("holiday_calendar_path is not set".into()))
}

pub fn load_records(config: &Config) -> Result<Vec<ProcessedRecord>> {
    let cal = calendar(config)?;
    dataset::load_dataset(config.require_data_path()?, cal.as_ref())
}

pub fn cmd_ingest(input: &Path, calendar: &HolidayCalendar) -> Result<String> {
    let records = dataset::load_dataset(input, Some(calendar))?;
    let mut out = Vec::new();
    dataset::write_processed(&mut out, &records)?;
    Ok(String::from_utf8(out).expect("csv output is utf-8"))
}

fn label_order(records: &[ProcessedRecord]) -> Vec<String> {
    dataset::split_by_label(records).keys().cloned().collect()
}

fn dataset_split(config: &Config, records: &[ProcessedRecord]) -> Result<Split> {
    split_records(
        records,
        config.test_fraction,
        config.test_count,
        config.selection_split,
        config.train_on,
    )
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Saved ensembles by variant name.
    pub ensembles: Vec<(EnsembleVariant, ExpertEnsemble)>,
    /// Training reports of anfis experts, by label.
    pub reports: Vec<(String, TrainingReport)>,
}

pub fn cmd_train(config: &Config) -> Result<TrainOutcome> {
    let records = load_records(config)?;
    if records.is_empty() {
        return Err(Error::Data("no records to train on".into()));
    }
    let split = dataset_split(config, &records)?;
    let labels = label_order(&records);
    let spec = EnsembleSpec {
        mf_counts: &config.mf_counts,
        denominator: config.confidence_denominator,
        anfis_fit: config.anfis_fit_records,
        training: &config.training,
    };
    let train_with = |variant| train_ensemble(&split.train, Some(&labels), &spec, variant);

    let mut ensembles = Vec::new();
    let mut reports = Vec::new();
    if matches!(config.variant, EnsembleVariant::Fis | EnsembleVariant::Hybrid) {
        let (ensemble, _) = train_with(Variant::Fis)?;
        ensembles.push((EnsembleVariant::Fis, ensemble));
    }
    if matches!(config.variant, EnsembleVariant::Anfis | EnsembleVariant::Hybrid) {
        let (ensemble, builds) = train_with(Variant::Anfis)?;
        reports = builds
            .into_iter()
            .filter_map(|b| b.report.map(|r| (b.label, r)))
            .collect();
        ensembles.push((EnsembleVariant::Anfis, ensemble));
    }
    if config.variant == EnsembleVariant::Hybrid {
        if split.selection_is_test {
            warn!("selecting the hybrid on the test block (set selection_split for a disjoint selection set)");
        }
        let hybrid = build_hybrid(&ensembles[0].1, &ensembles[1].1, &split.selection)?;
        ensembles.push((EnsembleVariant::Hybrid, hybrid));
    }
    for (variant, ensemble) in &ensembles {
        save_ensemble(&config.model_dir, variant.as_str(), ensemble)?;
        info!("wrote {} ensemble to {}", variant, config.model_dir.display());
    }
    Ok(TrainOutcome { ensembles, reports })
}

/// `<path stem>_<label>.<ext>` for each label's RMSE log.
pub fn rmse_log_path(base: &Path, label: &str) -> PathBuf {
    let stem = base.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ext = base.extension().map(|e| e.to_string_lossy().into_owned()).unwrap_or_else(|| "csv".into());
    let safe: String = label
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    base.with_file_name(format!("{stem}_{safe}.{ext}"))
}

pub fn write_rmse_logs(base: &Path, reports: &[(String, TrainingReport)]) -> Result<Vec<PathBuf>> {
    reports
        .iter()
        .map(|(label, report)| {
            let path = rmse_log_path(base, label);
            fs::write(&path, report.to_csv()).map_err(|e| Error::io(&path, e))?;
            Ok(path)
        })
        .collect()
}

pub fn cmd_predict(
    model_dir: &Path,
    variant: EnsembleVariant,
    latitude: f64,
    longitude: f64,
    date: &str,
    calendar: &HolidayCalendar,
) -> Result<Prediction> {
    let date = NaiveDate::parse_from_str(date.trim(), "%Y-%m-%d")
        .map_err(|e| Error::Usage(format!("invalid date '{date}': {e}")))?;
    let ensemble = load_ensemble(model_dir, variant.as_str())?;
    let input = InputVector::from_date(latitude, longitude, date, calendar);
    Ok(ensemble.predict(&input))
}

pub fn render_prediction(p: &Prediction) -> String {
    let mut out = format!("prediction: {} (confidence {})\n", p.label, p.confidence);
    let width = p.all_scores.iter().map(|(l, _)| l.len()).max().unwrap_or(0);
    for (label, score) in &p.all_scores {
        out.push_str(&format!("  {label:<width$}  {score}\n"));
    }
    out
}

#[derive(Debug, Clone)]
pub struct EvaluationReport {
    pub tables: Vec<(EnsembleVariant, EvaluationTable)>,
    pub selection_is_test: bool,
}

impl EvaluationReport {
    pub fn table(&self, variant: EnsembleVariant) -> Option<&EvaluationTable> {
        self.tables.iter().find(|(v, _)| *v == variant).map(|(_, t)| t)
    }

    pub fn render(&self, csv: bool) -> String {
        let mut out = String::new();
        for (variant, table) in &self.tables {
            out.push_str(&format!("== {variant}\n"));
            out.push_str(&if csv { table.render_csv() } else { table.render_text() });
            out.push('\n');
        }
        for (variant, table) in &self.tables {
            out.push_str(&format!(
                "{variant}: {}/{} correct, accuracy {:.2}%\n",
                table.total_predicted(),
                table.total_actual(),
                table.total_accuracy()
            ));
        }
        if self.selection_is_test && self.tables.iter().any(|(v, _)| *v == EnsembleVariant::Hybrid) {
            out.push_str("note: hybrid was selected on these same test records\n");
        }
        out
    }
}

/// Scores every saved ensemble on the test block. The hybrid is rebuilt from
/// the saved fis and anfis models when it was not saved itself.
pub fn cmd_evaluate(config: &Config) -> Result<EvaluationReport> {
    let records = load_records(config)?;
    let split = dataset_split(config, &records)?;
    let exists = |v: EnsembleVariant| manifest_path(&config.model_dir, v.as_str()).exists();
    let mut ensembles: Vec<(EnsembleVariant, ExpertEnsemble)> = Vec::new();
    for v in [EnsembleVariant::Fis, EnsembleVariant::Anfis] {
        if exists(v) {
            ensembles.push((v, load_ensemble(&config.model_dir, v.as_str())?));
        }
    }
    if exists(EnsembleVariant::Hybrid) {
        ensembles.push((
            EnsembleVariant::Hybrid,
            load_ensemble(&config.model_dir, EnsembleVariant::Hybrid.as_str())?,
        ));
    } else if ensembles.len() == 2 {
        let hybrid = build_hybrid(&ensembles[0].1, &ensembles[1].1, &split.selection)?;
        ensembles.push((EnsembleVariant::Hybrid, hybrid));
    }
    if ensembles.is_empty() {
        return Err(Error::Data(format!(
            "no trained ensembles in {}",
            config.model_dir.display()
        )));
    }
    let tables = ensembles
        .iter()
        .map(|(v, e)| Ok((*v, evaluate_accuracy(e, &split.test)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(EvaluationReport {
        tables,
        selection_is_test: split.selection_is_test,
    })
}

pub fn cmd_export_grid(config: &Config, only_label: Option<&str>) -> Result<String> {
    let records = load_records(config)?;
    let split = dataset_split(config, &records)?;
    let groups = dataset::split_by_label(&split.train);
    if let Some(l) = only_label {
        let l = dataset::normalize_label(l);
        if !groups.contains_key(&l) {
            return Err(Error::Data(format!("no training records with label '{l}'")));
        }
    }
    let mut out = String::new();
    for (label, subset) in &groups {
        if only_label.is_some_and(|l| dataset::normalize_label(l) != *label) {
            continue;
        }
        let total = match config.confidence_denominator {
            crate::config::ConfidenceDenominator::Subset => subset.len(),
            crate::config::ConfidenceDenominator::Global => split.train.len(),
        };
        let (partition, stats, _) = grid_for_subset(subset, &config.mf_counts, total)?;
        out.push_str(&format!("# label: {label} ({} records)\n", subset.len()));
        out.push_str(&render_grid(&partition, &stats, &DIMENSION_NAMES));
    }
    Ok(out)
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Error::io(p, e)),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn execute(cli: &Cli) -> Result<()> {
    let config = resolve_config(cli.config.as_deref(), &cli.overrides)?;
    match &cli.command {
        Command::Ingest { input, output } => {
            let text = cmd_ingest(input, &require_calendar(&config)?)?;
            write_output(output.as_deref(), &text)
        }
        Command::Train { rmse_log } => {
            let outcome = cmd_train(&config)?;
            if let Some(base) = rmse_log {
                for p in write_rmse_logs(base, &outcome.reports)? {
                    info!("wrote {}", p.display());
                }
            }
            let mut summary = String::new();
            for (variant, ensemble) in &outcome.ensembles {
                let members: Vec<String> = ensemble
                    .experts()
                    .iter()
                    .map(|(l, f)| format!("{l}={}", f.variant()))
                    .collect();
                summary.push_str(&format!("{variant}: {}\n", members.join(" ")));
            }
            for (label, r) in &outcome.reports {
                summary.push_str(&format!(
                    "{label}: {} epochs, rmse {} -> {}\n",
                    r.epochs_run, r.rmse_history[0], r.final_rmse
                ));
            }
            write_output(None, &summary)
        }
        Command::Predict { lat, lon, date } => {
            let p = cmd_predict(&config.model_dir, config.variant, *lat, *lon, date, &require_calendar(&config)?)?;
            write_output(None, &render_prediction(&p))
        }
        Command::Evaluate { csv } => write_output(None, &cmd_evaluate(&config)?.render(*csv)),
        Command::ExportGrid { label, output } => {
            write_output(output.as_deref(), &cmd_export_grid(&config, label.as_deref())?)
        }
    }
}

/// Parses arguments, runs one command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
