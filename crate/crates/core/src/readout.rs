//! Linear readout: ridge regression, one-step prediction, autonomous
//! closed-loop forecasting and forecast metrics.

use nalgebra::{DMatrix, DVector};

use crate::reservoir::HybridReservoir;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutModel {
    /// `m × F`, mapping feature vectors to outputs.
    pub w_out: DMatrix<f64>,
    pub eta: f64,
}

/// Stacks feature/target pairs as columns, dropping the first `washout - 1`.
///
/// Pair `t` is `(R_t, u_{t+1})`: the target of each column is the next
/// sample after the input that produced its features.
pub fn collect(features: &[Vec<f64>], targets: &[Vec<f64>], washout: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if features.len() != targets.len() {
        return Err(Error::Training(format!(
            "{} feature vectors but {} targets",
            features.len(),
            targets.len()
        )));
    }
    if washout < 1 || washout > features.len() {
        return Err(Error::Training(format!(
            "washout {washout} leaves no training columns out of {}",
            features.len()
        )));
    }
    let kept = &features[washout - 1..];
    let kept_t = &targets[washout - 1..];
    let f = kept[0].len();
    let m = kept_t[0].len();
    if kept.iter().any(|v| v.len() != f) || kept_t.iter().any(|v| v.len() != m) {
        return Err(Error::Training("ragged feature or target vectors".into()));
    }
    let r = DMatrix::from_fn(f, kept.len(), |i, j| kept[j][i]);
    let u = DMatrix::from_fn(m, kept.len(), |i, j| kept_t[j][i]);
    Ok((r, u))
}

/// `W = U Rᵀ (R Rᵀ + ηI)⁻¹`, solved as the linear system
/// `(R Rᵀ + ηI) Wᵀ = R Uᵀ`.
pub fn fit_ridge(r: &DMatrix<f64>, u: &DMatrix<f64>, eta: f64) -> Result<ReadoutModel> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(Error::Training(format!("eta must be finite and >= 0, got {eta}")));
    }
    if r.ncols() != u.ncols() || r.ncols() == 0 {
        return Err(Error::Training(format!(
            "R has {} columns, U has {}",
            r.ncols(),
            u.ncols()
        )));
    }
    let f = r.nrows();
    let mut a = r * r.transpose();
    for i in 0..f {
        a[(i, i)] += eta;
    }
    let b = r * u.transpose();
    let wt = match a.clone().cholesky() {
        Some(ch) => ch.solve(&b),
        None if eta == 0.0 => return Err(Error::RankDeficient),
        None => a
            .clone()
            .svd(true, true)
            .solve(&b, f64::EPSILON * a.norm())
            .map_err(|e| Error::Training(format!("ridge solve failed: {e}")))?,
    };
    if eta == 0.0 && normal_equation_residual(&a, &wt, &b) > 1e-8 {
        return Err(Error::RankDeficient);
    }
    if wt.iter().any(|v| !v.is_finite()) {
        return Err(Error::Training("ridge solution is not finite".into()));
    }
    Ok(ReadoutModel {
        w_out: wt.transpose(),
        eta,
    })
}

/// `‖A X - B‖_F / ‖B‖_F`.
pub fn normal_equation_residual(a: &DMatrix<f64>, x: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    let bn = b.norm();
    let res = (a * x - b).norm();
    if bn == 0.0 {
        res
    } else {
        res / bn
    }
}

impl ReadoutModel {
    pub fn output_dim(&self) -> usize {
        self.w_out.nrows()
    }

    pub fn feature_dim(&self) -> usize {
        self.w_out.ncols()
    }

    /// `W_out R_t`.
    pub fn predict_one(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.feature_dim() {
            return Err(Error::Training(format!(
                "feature vector of length {} expected, got {}",
                self.feature_dim(),
                features.len()
            )));
        }
        let y = &self.w_out * DVector::from_column_slice(features);
        Ok(y.iter().copied().collect())
    }
}

/// Autonomous forecast, possibly truncated by divergence.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecast {
    pub predictions: Vec<Vec<f64>>,
    /// Index of the first prediction that left the divergence bound.
    pub diverged_at: Option<usize>,
}

/// Feeds each prediction back as the next input to both the measurement
/// source and the reservoir.
///
/// Starting from `seed_input` (the last observed sample), step `k`
/// updates the reservoir with the current input, forms `R`, and predicts
/// `y = W_out R`, which becomes the next input. Stops early once any
/// component of `y` exceeds `divergence_limit` in magnitude.
pub fn closed_loop<F>(
    model: &ReadoutModel,
    reservoir: &mut HybridReservoir,
    mut measure: F,
    seed_input: &[f64],
    horizon: usize,
    divergence_limit: f64,
) -> Result<Forecast>
where
    F: FnMut(&[f64]) -> Result<Vec<f64>>,
{
    if horizon == 0 {
        return Err(Error::Training("horizon must be >= 1".into()));
    }
    if model.output_dim() != reservoir.input_dim() {
        return Err(Error::Training(format!(
            "readout produces {} outputs but the reservoir consumes {} inputs",
            model.output_dim(),
            reservoir.input_dim()
        )));
    }
    let uses_m = reservoir.config().f_m.is_some();
    let mut u = seed_input.to_vec();
    let mut predictions = Vec::with_capacity(horizon);
    for k in 0..horizon {
        let m = if uses_m { measure(&u)? } else { Vec::new() };
        reservoir.update(&u, &m)?;
        let y = model.predict_one(&reservoir.feature_vector(&u))?;
        if y.iter().any(|v| !(v.abs() <= divergence_limit)) {
            return Ok(Forecast {
                predictions,
                diverged_at: Some(k),
            });
        }
        predictions.push(y.clone());
        u = y;
    }
    Ok(Forecast {
        predictions,
        diverged_at: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForecastMetrics {
    pub nrmse: Vec<f64>,
    pub valid_prediction_time: f64,
    pub horizon: usize,
}

fn check_pair(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<usize> {
    if pred.is_empty() || pred.len() != truth.len() {
        return Err(Error::Metric(format!(
            "prediction length {} vs truth length {}",
            pred.len(),
            truth.len()
        )));
    }
    let m = truth[0].len();
    if pred.iter().chain(truth).any(|v| v.len() != m) {
        return Err(Error::Metric("dimension mismatch between prediction and truth".into()));
    }
    Ok(m)
}

/// Per-component RMSE divided by the truth's standard deviation.
pub fn nrmse(pred: &[Vec<f64>], truth: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = check_pair(pred, truth)?;
    let n = truth.len() as f64;
    (0..m)
        .map(|j| {
            let mean = truth.iter().map(|v| v[j]).sum::<f64>() / n;
            let var = truth.iter().map(|v| (v[j] - mean).powi(2)).sum::<f64>() / n;
            if !(var > 0.0) {
                return Err(Error::Metric(format!("truth component {j} has zero variance")));
            }
            let mse = pred.iter().zip(truth).map(|(p, t)| (p[j] - t[j]).powi(2)).sum::<f64>() / n;
            Ok((mse / var).sqrt())
        })
        .collect()
}

/// Time until `‖pred_t - truth_t‖ / RMS_t ‖truth_t‖` first exceeds `threshold`;
/// the full horizon if it never does.
pub fn valid_time(pred: &[Vec<f64>], truth: &[Vec<f64>], threshold: f64, dt: f64) -> Result<f64> {
    check_pair(pred, truth)?;
    let rms = (truth.iter().map(|v| v.iter().map(|x| x * x).sum::<f64>()).sum::<f64>() / truth.len() as f64).sqrt();
    if !(rms > 0.0) {
        return Err(Error::Metric("truth has zero RMS".into()));
    }
    let steps = pred
        .iter()
        .zip(truth)
        .position(|(p, t)| {
            let e = p.iter().zip(t).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            !(e / rms <= threshold)
        })
        .unwrap_or(truth.len());
    Ok(steps as f64 * dt)
}
