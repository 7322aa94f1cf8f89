//! Sample-weighted binary logistic regression.
//!
//! The fitted model minimizes
//!
//! ```text
//! L(beta, b) = sum_i w_i * bce(y_i, sigmoid(x_i . beta + b)) + (l2 / 2) * |beta|^2
//! ```
//!
//! with weights rescaled to mean 1 and the intercept left unpenalized. The
//! objective is convex (strictly so for `l2 > 0`), so the deterministic
//! optimizers below started from zero agree on the minimizer.

use std::collections::VecDeque;

use ndarray::{Array1, ArrayView1, ArrayView2, CowArray, Ix2};
use serde::{Deserialize, Serialize};

use crate::dataset::DatasetTable;
use crate::error::{Error, Result};
use crate::reweigh::SampleWeights;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Optimizer {
    /// Limited-memory BFGS directions with backtracking.
    #[default]
    Lbfgs,
    /// Steepest descent with an adaptive backtracking step.
    GradientDescent,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub l2_strength: f64,
    pub max_iterations: usize,
    pub gradient_tolerance: f64,
    pub decision_threshold: f64,
    pub optimizer: Optimizer,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            l2_strength: 1.0,
            max_iterations: 1000,
            gradient_tolerance: 1e-6,
            decision_threshold: 0.5,
            optimizer: Optimizer::Lbfgs,
        }
    }
}

impl Hyperparams {
    pub fn validate(&self) -> Result<()> {
        if !(self.l2_strength >= 0.0 && self.l2_strength.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "l2 strength {} must be a nonnegative number",
                self.l2_strength
            )));
        }
        if !(self.decision_threshold > 0.0 && self.decision_threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "decision threshold {} outside (0, 1)",
                self.decision_threshold
            )));
        }
        if !(self.gradient_tolerance >= 0.0) {
            return Err(Error::InvalidArgument("gradient tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub feature_names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

impl Model {
    pub fn zeros(feature_names: Vec<String>) -> Self {
        let d = feature_names.len();
        Self {
            feature_names,
            coefficients: vec![0.0; d],
            intercept: 0.0,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: Model = serde_json::from_str(text)?;
        if model.coefficients.len() != model.feature_names.len() {
            return Err(Error::Shape(format!(
                "{} coefficients for {} feature names",
                model.coefficients.len(),
                model.feature_names.len()
            )));
        }
        Ok(model)
    }
}

/// Numerically stable logistic function.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// The training objective over a parameter vector `[beta..., b]`.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    /// Row-major, so each row is one contiguous slice.
    x: CowArray<'a, f64, Ix2>,
    y: Array1<f64>,
    w: Array1<f64>,
    l2: f64,
}

impl<'a> Objective<'a> {
    /// Builds the objective; `weights` are rescaled to mean 1.
    pub fn new(x: ArrayView2<'a, f64>, labels: &[u8], weights: &SampleWeights, l2: f64) -> Result<Self> {
        if x.nrows() != labels.len() || weights.len() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows, {} labels, {} weights",
                x.nrows(),
                labels.len(),
                weights.len()
            )));
        }
        if weights.as_slice().iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidArgument("sample weights must be finite and nonnegative".into()));
        }
        Ok(Self {
            x: if x.is_standard_layout() {
                CowArray::from(x)
            } else {
                CowArray::from(x.as_standard_layout().into_owned())
            },
            y: labels.iter().map(|&v| f64::from(v)).collect(),
            w: Array1::from(weights.normalized().as_slice().to_vec()),
            l2,
        })
    }

    /// Number of parameters (coefficients plus intercept).
    pub fn dim(&self) -> usize {
        self.x.ncols() + 1
    }

    fn margins(&self, params: &[f64]) -> Array1<f64> {
        let d = self.x.ncols();
        let (beta, b) = params.split_at(d);
        self.x
            .rows()
            .into_iter()
            .map(|row| dot(row.as_slice().expect("row-major rows"), beta) + b[0])
            .collect()
    }

    fn penalty(&self, params: &[f64]) -> f64 {
        let d = self.x.ncols();
        0.5 * self.l2 * params[..d].iter().map(|b| b * b).sum::<f64>()
    }

    pub fn loss(&self, params: &[f64]) -> f64 {
        let z = self.margins(params);
        let data: f64 = z
            .iter()
            .zip(&self.y)
            .zip(&self.w)
            .map(|((&z, &y), &w)| w * (softplus(z) - y * z))
            .sum();
        data + self.penalty(params)
    }

    pub fn loss_and_gradient(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let d = self.x.ncols();
        let z = self.margins(params);
        let mut loss = 0.0;
        let mut residual = Array1::zeros(z.len());
        for (((r, &z), &y), &w) in residual.iter_mut().zip(&z).zip(&self.y).zip(&self.w) {
            // one exponential serves both the softplus and the sigmoid
            let e = (-z.abs()).exp();
            let p = if z >= 0.0 { 1.0 / (1.0 + e) } else { e / (1.0 + e) };
            loss += w * (z.max(0.0) + e.ln_1p() - y * z);
            *r = w * (p - y);
        }
        let mut grad = vec![0.0; d];
        for (row, &r) in self.x.rows().into_iter().zip(&residual) {
            for (g, x) in grad.iter_mut().zip(row.as_slice().expect("row-major rows")) {
                *g += r * x;
            }
        }
        for (g, b) in grad.iter_mut().zip(&params[..d]) {
            *g += self.l2 * b;
        }
        grad.push(residual.sum());
        (loss + self.penalty(params), grad)
    }
}

/// Outcome of an optimizer run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub iterations: usize,
    pub loss: f64,
    pub gradient_max_norm: f64,
    pub converged: bool,
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

struct Point {
    params: Vec<f64>,
    loss: f64,
    grad: Vec<f64>,
}

/// Backtracking along `direction`. Accepts on sufficient decrease, or on a
/// loss change lost in rounding when the gradient still shrinks.
fn line_search(objective: &Objective, at: &Point, direction: &[f64], initial_step: f64) -> Result<Option<(Point, f64)>> {
    const ARMIJO: f64 = 1e-4;
    let slope = dot(&at.grad, direction);
    let noise = 1e-13 * at.loss.abs().max(1.0);
    let mut step = initial_step;
    for _ in 0..60 {
        let params: Vec<f64> = at.params.iter().zip(direction).map(|(p, d)| p + step * d).collect();
        let (loss, grad) = objective.loss_and_gradient(&params);
        if !loss.is_finite() {
            step *= 0.5;
            continue;
        }
        let armijo = loss <= at.loss + ARMIJO * step * slope;
        let flat = loss <= at.loss + noise && max_norm(&grad) < max_norm(&at.grad);
        if armijo || flat {
            return Ok(Some((Point { params, loss, grad }, step)));
        }
        step *= 0.5;
    }
    Ok(None)
}

fn minimize(objective: &Objective, hp: &Hyperparams) -> Result<(Vec<f64>, FitReport)> {
    let start = vec![0.0; objective.dim()];
    let (loss, grad) = objective.loss_and_gradient(&start);
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss);
    }
    let mut at = Point {
        params: start,
        loss,
        grad,
    };
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    const MEMORY: usize = 30;
    let mut step_hint = 1.0;
    let mut iterations = 0;

    while iterations < hp.max_iterations {
        if max_norm(&at.grad) <= hp.gradient_tolerance {
            break;
        }
        let (direction, initial_step) = match hp.optimizer {
            Optimizer::Lbfgs if !history.is_empty() => {
                let d = two_loop(&at.grad, &history);
                if dot(&d, &at.grad) < 0.0 {
                    (d, 1.0)
                } else {
                    history.clear();
                    let d: Vec<f64> = at.grad.iter().map(|g| -g).collect();
                    let scale = 1.0 / max_norm(&at.grad).max(1.0);
                    (d, scale)
                }
            }
            Optimizer::Lbfgs => {
                let scale = 1.0 / max_norm(&at.grad).max(1.0);
                (at.grad.iter().map(|g| -g).collect(), scale)
            }
            Optimizer::GradientDescent => (at.grad.iter().map(|g| -g).collect(), step_hint * 2.0),
        };

        let Some((next, step)) = line_search(objective, &at, &direction, initial_step)? else {
            if history.is_empty() {
                // no representable decrease left along steepest descent
                break;
            }
            history.clear();
            continue;
        };
        iterations += 1;
        step_hint = step;
        if hp.optimizer == Optimizer::Lbfgs {
            let s: Vec<f64> = next.params.iter().zip(&at.params).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = next.grad.iter().zip(&at.grad).map(|(a, b)| a - b).collect();
            let sy = dot(&s, &y);
            if sy > 1e-16 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() && sy > 0.0 {
                if history.len() == MEMORY {
                    history.pop_front();
                }
                history.push_back((s, y, 1.0 / sy));
            }
        }
        at = next;
    }

    let gradient_max_norm = max_norm(&at.grad);
    if !at.loss.is_finite() || at.params.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFiniteLoss);
    }
    Ok((
        at.params,
        FitReport {
            iterations,
            loss: at.loss,
            gradient_max_norm,
            converged: gradient_max_norm <= hp.gradient_tolerance,
        },
    ))
}

fn two_loop(grad: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = grad.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    let (s, y, _) = history.back().expect("nonempty history");
    let gamma = dot(s, y) / dot(y, y);
    for qi in q.iter_mut() {
        *qi *= gamma;
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

pub fn fit(train: &DatasetTable, weights: &SampleWeights, hp: &Hyperparams) -> Result<Model> {
    fit_with_report(train, weights, hp).map(|(m, _)| m)
}

pub fn fit_with_report(train: &DatasetTable, weights: &SampleWeights, hp: &Hyperparams) -> Result<(Model, FitReport)> {
    hp.validate()?;
    let labels = train.labels();
    let positives = labels.iter().filter(|&&y| y == 1).count();
    if positives == 0 || positives == labels.len() {
        return Err(Error::SingleClass);
    }
    let objective = Objective::new(train.features().view(), labels, weights, hp.l2_strength)?;
    let (params, report) = minimize(&objective, hp)?;
    let d = train.features().ncols();
    Ok((
        Model {
            feature_names: train.feature_names().to_vec(),
            coefficients: params[..d].to_vec(),
            intercept: params[d],
        },
        report,
    ))
}

pub fn predict_proba(model: &Model, features: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    if features.ncols() != model.coefficients.len() {
        return Err(Error::Shape(format!(
            "model has {} coefficients, features have {} columns",
            model.coefficients.len(),
            features.ncols()
        )));
    }
    let beta = ArrayView1::from(&model.coefficients[..]);
    let z = features.dot(&beta);
    Ok(z.mapv(|z| sigmoid(z + model.intercept)))
}

/// Labels `1` where the probability is at least `threshold`.
pub fn predict(model: &Model, features: ArrayView2<'_, f64>, threshold: f64) -> Result<Vec<u8>> {
    Ok(predict_proba(model, features)?
        .iter()
        .map(|&p| u8::from(p >= threshold))
        .collect())
}
