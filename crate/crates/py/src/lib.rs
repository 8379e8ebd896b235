//! Python bindings: models, grids, ensembles and the training entry point.

use std::path::PathBuf;

use chrono::NaiveDate;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

use crimefis::grid::{assign_targets, count_per_cell, generate_fis, render_grid};
use crimefis::model_io::{load_ensemble, model_from_str, model_to_string, save_ensemble};
use crimefis::{Error, ExpertEnsemble, GridPartition, GridStats, HolidayCalendar, SugenoFis, TrainingConfig, Variant};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyOSError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn parse_variant(s: &str) -> PyResult<Variant> {
    s.parse().map_err(to_py)
}

fn parse_date(s: &str) -> PyResult<NaiveDate> {
    NaiveDate::parse_from_str(s, "%Y-%m-%d").map_err(|e| PyValueError::new_err(format!("invalid date '{s}': {e}")))
}

fn check_width(points: &[Vec<f64>], dims: usize) -> PyResult<()> {
    match points.iter().position(|p| p.len() != dims) {
        Some(i) => Err(PyValueError::new_err(format!(
            "point {i} has {} components, expected {dims}",
            points[i].len()
        ))),
        None => Ok(()),
    }
}

/// One Takagi-Sugeno model.
#[pyclass(name = "Fis", module = "crimefis", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyFis {
    inner: SugenoFis,
}

#[pymethods]
impl PyFis {
    /// Parse the text model format.
    #[staticmethod]
    fn from_text(text: &str) -> PyResult<Self> {
        Ok(Self { inner: model_from_str(text).map_err(to_py)? })
    }

    fn to_text(&self) -> String {
        model_to_string(&self.inner)
    }

    fn evaluate(&self, x: Vec<f64>) -> PyResult<f64> {
        check_width(std::slice::from_ref(&x), self.inner.dims())?;
        Ok(self.inner.evaluate(&x))
    }

    fn evaluate_many(&self, points: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        check_width(&points, self.inner.dims())?;
        Ok(points.iter().map(|p| self.inner.evaluate(p)).collect())
    }

    #[getter]
    fn rule_count(&self) -> usize {
        self.inner.rule_count()
    }

    #[getter]
    fn variant(&self) -> &'static str {
        self.inner.variant().as_str()
    }

    #[getter]
    fn dimension_names(&self) -> Vec<String> {
        self.inner.dimension_names().to_vec()
    }

    /// `(center, sigma)` pairs per input.
    fn membership_functions(&self) -> Vec<Vec<(f64, f64)>> {
        self.inner
            .mf_banks()
            .iter()
            .map(|b| b.iter().map(|m| (m.center(), m.sigma())).collect())
            .collect()
    }

    /// Hybrid training; returns the trained model and its per-epoch RMSE.
    #[pyo3(signature = (points, targets, epochs=100, learning_rate=0.01, min_sigma=1e-6, rmse_tolerance=1e-6))]
    #[allow(clippy::too_many_arguments)]
    fn train(
        &self,
        py: Python<'_>,
        points: Vec<Vec<f64>>,
        targets: Vec<f64>,
        epochs: usize,
        learning_rate: f64,
        min_sigma: f64,
        rmse_tolerance: f64,
    ) -> PyResult<(PyFis, Vec<f64>)> {
        check_width(&points, self.inner.dims())?;
        let config = TrainingConfig { epochs, learning_rate, min_sigma, rmse_tolerance };
        let fis = self.inner.clone();
        let (model, report) = py
            .detach(move || crimefis::train_hybrid(&fis, &points, &targets, &config))
            .map_err(to_py)?;
        Ok((PyFis { inner: model }, report.rmse_history))
    }

    fn __repr__(&self) -> String {
        format!(
            "Fis(variant='{}', inputs={}, rules={})",
            self.inner.variant(),
            self.inner.dims(),
            self.inner.rule_count()
        )
    }
}

/// Uniform grid over a point set, with per-cell counts and confidences.
#[pyclass(name = "Grid", module = "crimefis", frozen)]
pub struct PyGrid {
    partition: GridPartition,
    stats: GridStats,
}

#[pymethods]
impl PyGrid {
    /// `denominator` defaults to the number of points.
    #[new]
    #[pyo3(signature = (points, mf_counts, denominator=None))]
    fn new(points: Vec<Vec<f64>>, mf_counts: Vec<usize>, denominator: Option<usize>) -> PyResult<Self> {
        check_width(&points, mf_counts.len())?;
        let partition = GridPartition::build(&points, &mf_counts).map_err(to_py)?;
        let stats = count_per_cell(&partition, &points, denominator.unwrap_or(points.len())).map_err(to_py)?;
        Ok(Self { partition, stats })
    }

    #[getter]
    fn boundaries(&self) -> Vec<Vec<f64>> {
        self.partition.boundaries().to_vec()
    }

    /// Cell index tuples in rule order.
    fn cells(&self) -> Vec<Vec<usize>> {
        self.partition.cells().into_iter().map(|c| c.0).collect()
    }

    fn counts(&self) -> Vec<usize> {
        self.stats.counts()
    }

    fn confidences(&self) -> Vec<f64> {
        self.stats.confidences()
    }

    /// Confidence target of each point (last containing cell).
    fn targets(&self, points: Vec<Vec<f64>>) -> PyResult<Vec<f64>> {
        check_width(&points, self.partition.dims())?;
        assign_targets(&self.partition, &self.stats, &points).map_err(to_py)
    }

    #[pyo3(signature = (variant="fis", dimension_names=None))]
    fn to_fis(&self, variant: &str, dimension_names: Option<Vec<String>>) -> PyResult<PyFis> {
        let names = dimension_names.unwrap_or_else(|| (0..self.partition.dims()).map(|d| format!("x{d}")).collect());
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        let inner = generate_fis(&self.partition, &self.stats, parse_variant(variant)?, &names).map_err(to_py)?;
        Ok(PyFis { inner })
    }

    #[pyo3(signature = (dimension_names=None))]
    fn render(&self, dimension_names: Option<Vec<String>>) -> String {
        let names = dimension_names.unwrap_or_else(|| (0..self.partition.dims()).map(|d| format!("x{d}")).collect());
        let names: Vec<&str> = names.iter().map(String::as_str).collect();
        render_grid(&self.partition, &self.stats, &names)
    }
}

/// Result of an ensemble query.
#[pyclass(name = "Prediction", module = "crimefis", frozen, get_all)]
pub struct PyPrediction {
    label: String,
    confidence: f64,
    scores: Vec<(String, f64)>,
}

#[pymethods]
impl PyPrediction {
    fn __repr__(&self) -> String {
        format!("Prediction(label='{}', confidence={})", self.label, self.confidence)
    }
}

/// One expert per label; the highest output wins, ties go to the earlier expert.
#[pyclass(name = "Ensemble", module = "crimefis", frozen)]
pub struct PyEnsemble {
    inner: ExpertEnsemble,
}

#[pymethods]
impl PyEnsemble {
    #[new]
    fn new(experts: Vec<(String, PyFis)>) -> PyResult<Self> {
        let inner = ExpertEnsemble::new(experts.into_iter().map(|(l, f)| (l, f.inner)).collect()).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Load `ensemble.<variant>.txt` and its model files from a directory.
    #[staticmethod]
    #[pyo3(signature = (model_dir, variant="hybrid"))]
    fn load(model_dir: PathBuf, variant: &str) -> PyResult<Self> {
        Ok(Self { inner: load_ensemble(&model_dir, variant).map_err(to_py)? })
    }

    #[pyo3(signature = (model_dir, variant))]
    fn save(&self, model_dir: PathBuf, variant: &str) -> PyResult<()> {
        save_ensemble(&model_dir, variant, &self.inner).map_err(to_py)
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().map(str::to_string).collect()
    }

    fn expert(&self, label: &str) -> Option<PyFis> {
        self.inner.get(label).map(|f| PyFis { inner: f.clone() })
    }

    /// Classify one `[latitude, longitude, day, holiday_diff]` vector.
    fn predict(&self, x: Vec<f64>) -> PyResult<PyPrediction> {
        if let Some((_, first)) = self.inner.experts().first() {
            check_width(std::slice::from_ref(&x), first.dims())?;
        }
        let p = self.inner.predict_raw(&x);
        Ok(PyPrediction { label: p.label, confidence: p.confidence, scores: p.all_scores })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }
}

#[pyfunction]
fn rmse(predictions: Vec<f64>, targets: Vec<f64>) -> PyResult<f64> {
    crimefis::rmse(&predictions, &targets).map_err(to_py)
}

/// Days from `date` to the nearest of `holidays` (ISO dates).
#[pyfunction]
fn holiday_difference(date: &str, holidays: Vec<String>) -> PyResult<u32> {
    let days = holidays.iter().map(|h| parse_date(h)).collect::<PyResult<Vec<_>>>()?;
    let calendar = HolidayCalendar::new(days).map_err(to_py)?;
    Ok(crimefis::holiday_difference(parse_date(date)?, &calendar))
}

#[pymodule]
#[pyo3(name = "crimefis")]
fn crimefis_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFis>()?;
    m.add_class::<PyGrid>()?;
    m.add_class::<PyEnsemble>()?;
    m.add_class::<PyPrediction>()?;
    m.add_function(wrap_pyfunction!(rmse, m)?)?;
    m.add_function(wrap_pyfunction!(holiday_difference, m)?)?;
    Ok(())
}
