//! Hybrid learning for Sugeno models with linear consequents.
//!
//! Each epoch takes one normalized gradient step on the Gaussian premise
//! parameters and then refits every consequent by linear least squares with
//! the premises held fixed. Steps that raise the training RMSE are undone and
//! the step size is halved; four accepted steps in a row grow it by 10%.

use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fuzzy::{Consequent, SugenoFis};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingConfig {
    pub epochs: usize,
    /// Premise step length, measured in units of each dimension's data range.
    pub learning_rate: f64,
    /// Lower bound on every sigma, as a fraction of the dimension's data range.
    pub min_sigma: f64,
    /// Training stops once an accepted epoch improves RMSE by less than this.
    pub rmse_tolerance: f64,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 0.01,
            min_sigma: 1e-6,
            rmse_tolerance: 1e-6,
        }
    }
}

impl TrainingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!("learning_rate must be > 0, got {}", self.learning_rate)));
        }
        if !(self.min_sigma > 0.0 && self.min_sigma.is_finite()) {
            return Err(Error::Config(format!("min_sigma must be > 0, got {}", self.min_sigma)));
        }
        if self.rmse_tolerance.is_nan() || self.rmse_tolerance < 0.0 {
            return Err(Error::Config(format!(
                "rmse_tolerance must be >= 0, got {}",
                self.rmse_tolerance
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    /// `rmse_history[0]` is the RMSE after the first least-squares fit (or of
    /// the untouched model when no epochs run); one entry per epoch follows.
    pub rmse_history: Vec<f64>,
    pub final_rmse: f64,
    pub epochs_run: usize,
}

impl TrainingReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,rmse\n");
        for (epoch, r) in self.rmse_history.iter().enumerate() {
            out.push_str(&format!("{epoch},{r:.17e}\n"));
        }
        out
    }
}

/// Root mean square error.
pub fn rmse(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::Usage(format!(
            "rmse: {} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::Usage("rmse of an empty sequence".into()));
    }
    let sse: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok((sse / predictions.len() as f64).sqrt())
}

pub fn model_rmse<P: AsRef<[f64]>>(fis: &SugenoFis, points: &[P], targets: &[f64]) -> Result<f64> {
    let outputs: Vec<f64> = points.iter().map(|p| fis.evaluate(p.as_ref())).collect();
    rmse(&outputs, targets)
}

fn check_training_set<P: AsRef<[f64]>>(fis: &SugenoFis, points: &[P], targets: &[f64]) -> Result<()> {
    if points.is_empty() {
        return Err(Error::Usage("training needs at least one record".into()));
    }
    if points.len() != targets.len() {
        return Err(Error::Usage(format!(
            "{} records for {} targets",
            points.len(),
            targets.len()
        )));
    }
    if let Some(p) = points.iter().find(|p| p.as_ref().len() != fis.dims()) {
        return Err(Error::Usage(format!(
            "record has {} components, model expects {}",
            p.as_ref().len(),
            fis.dims()
        )));
    }
    Ok(())
}

/// Rows `[wbar_i * x, wbar_i]` for every rule i, one row per record.
pub fn design_matrix<P: AsRef<[f64]>>(fis: &SugenoFis, points: &[P]) -> DMatrix<f64> {
    let dims = fis.dims();
    let width = dims + 1;
    let mut a = DMatrix::zeros(points.len(), fis.rule_count() * width);
    for (j, p) in points.iter().enumerate() {
        let x = p.as_ref();
        for (i, wbar) in fis.normalized_strengths(x).into_iter().enumerate() {
            let col = i * width;
            for d in 0..dims {
                a[(j, col + d)] = wbar * x[d];
            }
            a[(j, col + dims)] = wbar;
        }
    }
    a
}

/// Minimum-norm least-squares consequents for fixed premises.
pub fn lse_consequents<P: AsRef<[f64]>>(
    fis: &SugenoFis,
    points: &[P],
    targets: &[f64],
) -> Result<Vec<Consequent>> {
    check_training_set(fis, points, targets)?;
    if !fis.has_linear_consequents() {
        return Err(Error::ModelStructure(
            "least-squares fitting needs linear consequents".into(),
        ));
    }
    let a = design_matrix(fis, points);
    let t = DVector::from_column_slice(targets);
    let svd = a.svd(true, true);
    let max_sv = svd.singular_values.max();
    let eps = max_sv * (svd.singular_values.len().max(points.len()) as f64) * f64::EPSILON;
    let theta = svd
        .solve(&t, eps)
        .map_err(|e| Error::Numeric(format!("least-squares solve failed: {e}")))?;
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("least-squares solution is not finite".into()));
    }
    let width = fis.dims() + 1;
    Ok(theta
        .as_slice()
        .chunks(width)
        .map(|c| Consequent::Linear {
            coefficients: c[..width - 1].to_vec(),
            bias: c[width - 1],
        })
        .collect())
}

pub fn set_consequents(fis: &mut SugenoFis, consequents: Vec<Consequent>) {
    assert_eq!(consequents.len(), fis.rule_count());
    for (rule, c) in fis.rules_mut().iter_mut().zip(consequents) {
        rule.consequent = c;
    }
}

/// Partials of the summed squared error with respect to one Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PremiseGradient {
    pub center: f64,
    pub sigma: f64,
}

/// Analytic dE/d(center) and dE/d(sigma) for every MF, `[dim][mf]`, with
/// E the sum of squared errors over the records.
pub fn premise_gradients<P: AsRef<[f64]>>(
    fis: &SugenoFis,
    points: &[P],
    targets: &[f64],
) -> Result<Vec<Vec<PremiseGradient>>> {
    check_training_set(fis, points, targets)?;
    let banks = fis.mf_banks();
    let mut grads: Vec<Vec<PremiseGradient>> = banks
        .iter()
        .map(|b| vec![PremiseGradient::default(); b.len()])
        .collect();
    for (p, &target) in points.iter().zip(targets) {
        let x = p.as_ref();
        let w = fis.firing_strengths(x);
        let total: f64 = w.iter().sum();
        if total < crate::fuzzy::FIRING_EPSILON {
            // output is piecewise constant in the premises here
            continue;
        }
        let z: Vec<f64> = fis.rules().iter().map(|r| r.consequent.output(x)).collect();
        let y = w.iter().zip(&z).map(|(wi, zi)| wi * zi).sum::<f64>() / total;
        let residual = 2.0 * (y - target);
        for (i, rule) in fis.rules().iter().enumerate() {
            // dE/dw_i
            let de_dw = residual * (z[i] - y) / total;
            if de_dw == 0.0 || w[i] == 0.0 {
                continue;
            }
            for (d, &m) in rule.antecedent.iter().enumerate() {
                let mf = banks[d][m];
                let diff = x[d] - mf.center();
                let s2 = mf.sigma() * mf.sigma();
                let g = &mut grads[d][m];
                g.center += de_dw * w[i] * diff / s2;
                g.sigma += de_dw * w[i] * diff * diff / (s2 * mf.sigma());
            }
        }
    }
    Ok(grads)
}

/// Per-dimension data range (1 where the data is constant).
fn dimension_scales<P: AsRef<[f64]>>(points: &[P], dims: usize) -> Vec<f64> {
    (0..dims)
        .map(|d| {
            let (lo, hi) = points.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
                let v = p.as_ref()[d];
                (lo.min(v), hi.max(v))
            });
            let range = hi - lo;
            if range > 0.0 && range.is_finite() {
                range
            } else {
                1.0
            }
        })
        .collect()
}

/// Moves every premise a total distance `step` (in range-scaled units) against
/// the gradient. Returns false when the gradient vanishes.
fn premise_step(
    fis: &mut SugenoFis,
    grads: &[Vec<PremiseGradient>],
    scales: &[f64],
    step: f64,
    min_sigma: f64,
) -> bool {
    let norm = grads
        .iter()
        .zip(scales)
        .flat_map(|(bank, s)| bank.iter().map(move |g| (g.center * s).powi(2) + (g.sigma * s).powi(2)))
        .sum::<f64>()
        .sqrt();
    if !(norm > 0.0 && norm.is_finite()) {
        return false;
    }
    for (d, bank) in fis.mf_banks_mut().iter_mut().enumerate() {
        let s = scales[d];
        for (mf, g) in bank.iter_mut().zip(&grads[d]) {
            // scaled coordinate u = p / s, so dp = s * du and dE/du = s * dE/dp
            let center = mf.center() - step * s * (g.center * s) / norm;
            let sigma = (mf.sigma() - step * s * (g.sigma * s) / norm).max(min_sigma * s);
            mf.set(center, sigma);
        }
    }
    true
}

fn fit_consequents<P: AsRef<[f64]>>(fis: &mut SugenoFis, points: &[P], targets: &[f64]) -> Result<f64> {
    let consequents = lse_consequents(fis, points, targets)?;
    set_consequents(fis, consequents);
    model_rmse(fis, points, targets)
}

/// Hybrid least-squares / gradient-descent training.
pub fn train_hybrid<P: AsRef<[f64]>>(
    fis: &SugenoFis,
    points: &[P],
    targets: &[f64],
    config: &TrainingConfig,
) -> Result<(SugenoFis, TrainingReport)> {
    config.validate()?;
    check_training_set(fis, points, targets)?;
    if !fis.has_linear_consequents() {
        return Err(Error::ModelStructure("hybrid training needs linear consequents".into()));
    }
    let mut model = fis.clone();
    if config.epochs == 0 {
        let r = model_rmse(&model, points, targets)?;
        return Ok((
            model,
            TrainingReport {
                rmse_history: vec![r],
                final_rmse: r,
                epochs_run: 0,
            },
        ));
    }

    let mut current = fit_consequents(&mut model, points, targets)?;
    if !current.is_finite() {
        return Err(Error::Numeric("initial least-squares fit gave a non-finite RMSE".into()));
    }
    let scales = dimension_scales(points, model.dims());
    let mut history = vec![current];
    let mut step = config.learning_rate;
    let mut accepted_streak = 0;
    let mut epochs_run = 0;

    for epoch in 1..=config.epochs {
        let grads = premise_gradients(&model, points, targets)?;
        let mut candidate = model.clone();
        if !premise_step(&mut candidate, &grads, &scales, step, config.min_sigma) {
            break;
        }
        epochs_run = epoch;
        let r = match fit_consequents(&mut candidate, points, targets) {
            Ok(r) => r,
            Err(Error::Numeric(msg)) => {
                warn!("epoch {epoch}: {msg}; keeping the last finite model");
                break;
            }
            Err(e) => return Err(e),
        };
        if !r.is_finite() {
            warn!("epoch {epoch}: RMSE became non-finite; keeping the last finite model");
            break;
        }
        if r > current {
            step *= 0.5;
            accepted_streak = 0;
            history.push(current);
            continue;
        }
        accepted_streak += 1;
        if accepted_streak % 4 == 0 {
            step *= 1.1;
        }
        let improvement = current - r;
        model = candidate;
        current = r;
        history.push(r);
        if improvement < config.rmse_tolerance {
            break;
        }
    }

    Ok((
        model,
        TrainingReport {
            final_rmse: current,
            rmse_history: history,
            epochs_run,
        },
    ))
}
