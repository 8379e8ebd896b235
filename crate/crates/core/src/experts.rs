//! One model per label; the label of the highest-scoring model wins.

use std::fmt::Write as _;

use indexmap::IndexMap;
use log::info;

use crate::dataset::{InputVector, ProcessedRecord};
use crate::error::{Error, Result};
use crate::fuzzy::{SugenoFis, Variant};

#[derive(Debug, Clone, PartialEq)]
pub struct ExpertEnsemble {
    experts: Vec<(String, SugenoFis)>,
}

impl ExpertEnsemble {
    pub fn new(experts: Vec<(String, SugenoFis)>) -> Result<Self> {
        if experts.is_empty() {
            return Err(Error::Config("an ensemble needs at least one expert".into()));
        }
        for (i, (label, fis)) in experts.iter().enumerate() {
            if experts[..i].iter().any(|(l, _)| l == label) {
                return Err(Error::Config(format!("duplicate expert label '{label}'")));
            }
            if fis.dimension_names() != experts[0].1.dimension_names() {
                return Err(Error::Config(format!(
                    "expert '{label}' has dimensions {:?}, expected {:?}",
                    fis.dimension_names(),
                    experts[0].1.dimension_names()
                )));
            }
        }
        Ok(Self { experts })
    }

    pub fn experts(&self) -> &[(String, SugenoFis)] {
        &self.experts
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.experts.iter().map(|(l, _)| l.as_str())
    }

    pub fn get(&self, label: &str) -> Option<&SugenoFis> {
        self.experts.iter().find(|(l, _)| l == label).map(|(_, f)| f)
    }

    pub fn len(&self) -> usize {
        self.experts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experts.is_empty()
    }

    /// Raw expert outputs in expert order.
    pub fn scores(&self, input: &[f64]) -> Vec<(String, f64)> {
        self.experts
            .iter()
            .map(|(label, fis)| (label.clone(), fis.evaluate(input)))
            .collect()
    }

    pub fn predict(&self, input: &InputVector) -> Prediction {
        self.predict_raw(&input.to_array())
    }

    pub fn predict_raw(&self, input: &[f64]) -> Prediction {
        Prediction::from_scores(self.scores(input))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: String,
    pub confidence: f64,
    pub all_scores: Vec<(String, f64)>,
}

impl Prediction {
    /// First strictly greatest score wins, so ties go to the earlier expert.
    pub fn from_scores(all_scores: Vec<(String, f64)>) -> Self {
        assert!(!all_scores.is_empty(), "no scores to choose from");
        let mut best = 0;
        for (i, (_, score)) in all_scores.iter().enumerate().skip(1) {
            if *score > all_scores[best].1 {
                best = i;
            }
        }
        Self {
            label: all_scores[best].0.clone(),
            confidence: all_scores[best].1,
            all_scores,
        }
    }
}

pub fn predict(ensemble: &ExpertEnsemble, input: &InputVector) -> Prediction {
    ensemble.predict(input)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabelAccuracy {
    pub label: String,
    pub actual: usize,
    pub predicted: usize,
}

impl LabelAccuracy {
    pub fn accuracy(&self) -> f64 {
        if self.actual == 0 {
            0.0
        } else {
            self.predicted as f64 / self.actual as f64 * 100.0
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationTable {
    pub rows: Vec<LabelAccuracy>,
}

impl EvaluationTable {
    pub fn total_actual(&self) -> usize {
        self.rows.iter().map(|r| r.actual).sum()
    }

    pub fn total_predicted(&self) -> usize {
        self.rows.iter().map(|r| r.predicted).sum()
    }

    pub fn total_accuracy(&self) -> f64 {
        match self.total_actual() {
            0 => 0.0,
            n => self.total_predicted() as f64 / n as f64 * 100.0,
        }
    }

    pub fn row(&self, label: &str) -> Option<&LabelAccuracy> {
        self.rows.iter().find(|r| r.label == label)
    }

    fn display_rows(&self) -> Vec<[String; 4]> {
        let mut rows: Vec<[String; 4]> = self
            .rows
            .iter()
            .map(|r| {
                [
                    capitalize(&r.label),
                    r.actual.to_string(),
                    r.predicted.to_string(),
                    format!("{}%", r.accuracy().round() as i64),
                ]
            })
            .collect();
        rows.push([
            "Total".into(),
            self.total_actual().to_string(),
            self.total_predicted().to_string(),
            format!("{}%", self.total_accuracy().round() as i64),
        ]);
        rows
    }

    /// Aligned `Label Actual Predicted Accuracy` table with a Total row.
    pub fn render_text(&self) -> String {
        let header = ["Label", "Actual", "Predicted", "Accuracy"].map(String::from);
        let rows = self.display_rows();
        let widths: Vec<usize> = (0..4)
            .map(|c| {
                std::iter::once(&header)
                    .chain(&rows)
                    .map(|r| r[c].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for r in std::iter::once(&header).chain(&rows) {
            let line = format!(
                "{:<w0$}  {:>w1$}  {:>w2$}  {:>w3$}",
                r[0],
                r[1],
                r[2],
                r[3],
                w0 = widths[0],
                w1 = widths[1],
                w2 = widths[2],
                w3 = widths[3]
            );
            let _ = writeln!(out, "{}", line.trim_end());
        }
        out
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("Label,Actual,Predicted,Accuracy\n");
        for r in self.display_rows() {
            let _ = writeln!(out, "{}", r.join(","));
        }
        out
    }
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

/// Per-label count of test records whose prediction matches their label.
pub fn evaluate_accuracy(ensemble: &ExpertEnsemble, records: &[ProcessedRecord]) -> Result<EvaluationTable> {
    let mut unknown: Vec<String> = records
        .iter()
        .filter(|r| ensemble.get(&r.label).is_none())
        .map(|r| r.label.clone())
        .collect();
    if !unknown.is_empty() {
        unknown.sort();
        unknown.dedup();
        return Err(Error::UnknownLabels(unknown));
    }
    let mut rows: IndexMap<&str, LabelAccuracy> = ensemble
        .labels()
        .map(|l| {
            (
                l,
                LabelAccuracy {
                    label: l.to_string(),
                    actual: 0,
                    predicted: 0,
                },
            )
        })
        .collect();
    for r in records {
        let row = rows.get_mut(r.label.as_str()).expect("checked above");
        row.actual += 1;
        if ensemble.predict(&r.input()).label == r.label {
            row.predicted += 1;
        }
    }
    Ok(EvaluationTable {
        rows: rows.into_values().collect(),
    })
}

/// Per label, keeps whichever variant predicts its own label more accurately
/// on the selection records (ties keep the anfis model). If that mix scores a
/// lower total than the better pure ensemble, the pure ensemble is returned.
pub fn build_hybrid(
    fis_ensemble: &ExpertEnsemble,
    anfis_ensemble: &ExpertEnsemble,
    selection: &[ProcessedRecord],
) -> Result<ExpertEnsemble> {
    let fis_labels: Vec<&str> = fis_ensemble.labels().collect();
    let mut anfis_labels: Vec<&str> = anfis_ensemble.labels().collect();
    let mut sorted_fis = fis_labels.clone();
    sorted_fis.sort_unstable();
    anfis_labels.sort_unstable();
    if sorted_fis != anfis_labels {
        return Err(Error::Config(format!(
            "fis labels {fis_labels:?} differ from anfis labels {anfis_labels:?}"
        )));
    }
    let fis_table = evaluate_accuracy(fis_ensemble, selection)?;
    let anfis_table = evaluate_accuracy(anfis_ensemble, selection)?;
    let experts = fis_ensemble
        .experts()
        .iter()
        .map(|(label, fis_model)| {
            let fis_acc = fis_table.row(label).map_or(0.0, LabelAccuracy::accuracy);
            let anfis_acc = anfis_table.row(label).map_or(0.0, LabelAccuracy::accuracy);
            let model = if fis_acc > anfis_acc {
                fis_model.clone()
            } else {
                anfis_ensemble.get(label).expect("same label set").clone()
            };
            info!(
                "hybrid: '{label}' uses {} (fis {fis_acc:.1}%, anfis {anfis_acc:.1}%)",
                model.variant()
            );
            (label.clone(), model)
        })
        .collect();
    let mixed = ExpertEnsemble::new(experts)?;

    // Experts compete inside the argmax, so mixing can lose records that a
    // pure ensemble got right. Never return something worse than either.
    let mixed_total = evaluate_accuracy(&mixed, selection)?.total_predicted();
    let best_pure = if fis_table.total_predicted() > anfis_table.total_predicted() {
        fis_ensemble
    } else {
        anfis_ensemble
    };
    let best_pure_total = fis_table.total_predicted().max(anfis_table.total_predicted());
    if mixed_total < best_pure_total {
        info!("hybrid: per-label mix scores {mixed_total}, below the best single variant ({best_pure_total}); using it");
        return ExpertEnsemble::new(
            fis_ensemble
                .labels()
                .map(|l| (l.to_string(), best_pure.get(l).expect("same label set").clone()))
                .collect(),
        );
    }
    Ok(mixed)
}

/// Variant of each expert, in order.
pub fn variant_map(ensemble: &ExpertEnsemble) -> Vec<(String, Variant)> {
    ensemble
        .experts()
        .iter()
        .map(|(l, f)| (l.clone(), f.variant()))
        .collect()
}
