//! From labeled records to trained experts: grid, targets, model, training.

use log::{info, warn};

use crate::anfis::{train_hybrid, TrainingConfig, TrainingReport};
use crate::config::{AnfisFitRecords, ConfidenceDenominator, TrainOn};
use crate::dataset::{split_by_label, ProcessedRecord, DIMENSION_NAMES};
use crate::error::{Error, Result};
use crate::experts::ExpertEnsemble;
use crate::fuzzy::{SugenoFis, Variant};
use crate::grid::{
    assign_target_confidence, assign_targets, count_per_cell, generate_fis, GridPartition, GridStats,
};

/// Everything produced while building one label's expert.
#[derive(Debug, Clone)]
pub struct ExpertBuild {
    pub label: String,
    pub partition: GridPartition,
    pub stats: GridStats,
    pub targets: Vec<f64>,
    pub model: SugenoFis,
    /// Present for trained (anfis) experts.
    pub report: Option<TrainingReport>,
}

pub fn record_points(records: &[ProcessedRecord]) -> Vec<[f64; 4]> {
    records.iter().map(|r| r.input().to_array()).collect()
}

/// Grid and per-record targets for one label subset.
pub fn grid_for_subset(
    records: &[ProcessedRecord],
    mf_counts: &[usize],
    denominator: usize,
) -> Result<(GridPartition, GridStats, Vec<f64>)> {
    let points = record_points(records);
    let partition = GridPartition::build(&points, mf_counts)?;
    let stats = count_per_cell(&partition, &points, denominator)?;
    let targets = assign_targets(&partition, &stats, &points)?;
    Ok((partition, stats, targets))
}

/// Target for an arbitrary record under one label's grid: the confidence of
/// its last containing cell, or 0 outside the grid (no support there).
pub fn target_or_zero(partition: &GridPartition, stats: &GridStats, point: &[f64]) -> f64 {
    assign_target_confidence(partition, stats, point).unwrap_or(0.0)
}

/// Builds one label's expert. The grid comes from `records` (the label's own
/// subset); an anfis expert is fitted on `fit_records`, which defaults to that
/// same subset.
pub fn build_expert(
    label: &str,
    records: &[ProcessedRecord],
    fit_records: Option<&[ProcessedRecord]>,
    mf_counts: &[usize],
    denominator: usize,
    variant: Variant,
    training: &TrainingConfig,
) -> Result<ExpertBuild> {
    if records.is_empty() {
        return Err(Error::Data(format!("label '{label}' has no training records")));
    }
    let (partition, stats, own_targets) = grid_for_subset(records, mf_counts, denominator)?;
    let initial = generate_fis(&partition, &stats, variant, &DIMENSION_NAMES)?;
    let (model, targets, report) = match variant {
        Variant::Fis => (initial, own_targets, None),
        Variant::Anfis => {
            let (points, targets) = match fit_records {
                None => (record_points(records), own_targets),
                Some(all) => {
                    let points = record_points(all);
                    let targets = points
                        .iter()
                        .map(|p| target_or_zero(&partition, &stats, p))
                        .collect();
                    (points, targets)
                }
            };
            let (model, report) = train_hybrid(&initial, &points, &targets, training)?;
            info!(
                "{label}: trained {} epochs on {} records, rmse {:.6} -> {:.6}",
                report.epochs_run,
                points.len(),
                report.rmse_history[0],
                report.final_rmse
            );
            (model, targets, Some(report))
        }
    };
    Ok(ExpertBuild {
        label: label.to_string(),
        partition,
        stats,
        targets,
        model,
        report,
    })
}

/// How an ensemble is built from labeled records.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleSpec<'a> {
    pub mf_counts: &'a [usize],
    pub denominator: ConfidenceDenominator,
    pub anfis_fit: AnfisFitRecords,
    pub training: &'a TrainingConfig,
}

/// One expert per label, in the order of `label_order` (or first occurrence in
/// `records` when no order is given).
pub fn train_ensemble(
    records: &[ProcessedRecord],
    label_order: Option<&[String]>,
    spec: &EnsembleSpec<'_>,
    variant: Variant,
) -> Result<(ExpertEnsemble, Vec<ExpertBuild>)> {
    let groups = split_by_label(records);
    let labels: Vec<String> = match label_order {
        Some(order) => order.to_vec(),
        None => groups.keys().cloned().collect(),
    };
    let fit_records = match spec.anfis_fit {
        AnfisFitRecords::All => Some(records),
        AnfisFitRecords::Label => None,
    };
    let builds = labels
        .iter()
        .map(|label| {
            let subset = groups
                .get(label)
                .ok_or_else(|| Error::Data(format!("label '{label}' has no training records")))?;
            let total = match spec.denominator {
                ConfidenceDenominator::Subset => subset.len(),
                ConfidenceDenominator::Global => records.len(),
            };
            build_expert(label, subset, fit_records, spec.mf_counts, total, variant, spec.training)
        })
        .collect::<Result<Vec<_>>>()?;
    let ensemble = ExpertEnsemble::new(
        builds
            .iter()
            .map(|b| (b.label.clone(), b.model.clone()))
            .collect(),
    )?;
    Ok((ensemble, builds))
}

/// Ordered record blocks: `[train | selection | test]`, taken from the end of the file.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<ProcessedRecord>,
    pub selection: Vec<ProcessedRecord>,
    pub test: Vec<ProcessedRecord>,
    /// True when the selection block is the test block itself.
    pub selection_is_test: bool,
}

/// `round(n * fraction)`, kept within [1, n - 1] when n >= 2.
pub fn block_size(n: usize, fraction: f64) -> usize {
    let k = (n as f64 * fraction).round() as usize;
    if n < 2 {
        return k.min(n);
    }
    k.clamp(1, n - 1)
}

pub fn split_records(
    records: &[ProcessedRecord],
    test_fraction: f64,
    test_count: Option<usize>,
    selection_fraction: f64,
    train_on: TrainOn,
) -> Result<Split> {
    let n = records.len();
    let test_n = match test_count {
        Some(k) if k > n => {
            return Err(Error::Config(format!("test_count {k} exceeds {n} records")));
        }
        Some(k) => k,
        None => block_size(n, test_fraction),
    };
    let selection_n = if selection_fraction > 0.0 {
        block_size(n, selection_fraction)
    } else {
        0
    };
    if test_n + selection_n > n {
        return Err(Error::Config(format!(
            "{test_n} test + {selection_n} selection records exceed {n} records"
        )));
    }
    let test_start = n - test_n;
    let selection_start = test_start - selection_n;
    let test = records[test_start..].to_vec();
    let (selection, selection_is_test) = if selection_n == 0 {
        warn!("hybrid selection uses the test records; reported hybrid accuracy is optimistic");
        (test.clone(), true)
    } else {
        (records[selection_start..test_start].to_vec(), false)
    };
    let train = match train_on {
        TrainOn::All => records.to_vec(),
        TrainOn::Train => records[..selection_start].to_vec(),
    };
    Ok(Split {
        train,
        selection,
        test,
        selection_is_test,
    })
}
