//! L2-regularized, class-balanced logistic regression on the latent
//! embeddings, plus per-fraction risk trajectories from prefix encodings.
//!
//! The fit is plain full-batch gradient descent with backtracking line
//! search on the convex weighted negative log-likelihood; deterministic,
//! no dependencies. Embedding standardization uses training statistics
//! only and is stored with the classifier.

use serde::{Deserialize, Serialize};

use crate::error::{CompassError, Result};
use crate::gru::{self, AutoencoderParams};
use crate::volume::OrganId;

const GRAD_TOL: f64 = 1e-8;
const MAX_ITERS: usize = 10_000;

/// Fitted classifier: weights over the standardized latent space plus the
/// training-embedding scaler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegParams {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub scaler_means: Vec<f64>,
    pub scaler_stds: Vec<f64>,
    pub lambda_reg: f64,
}

/// Per-fraction toxicity probabilities for one (patient, organ).
#[derive(Debug, Clone, PartialEq)]
pub struct RiskTrajectory {
    pub patient_id: String,
    pub organ: OrganId,
    pub probs: Vec<f64>,
}

impl RiskTrajectory {
    /// Final aggregate: probability at the last delivered fraction.
    pub fn p_final(&self) -> f64 {
        *self.probs.last().expect("nonempty trajectory")
    }
}

/// Balanced class weights w_c = N/(2·N_c); returns (w_pos, w_neg).
pub fn class_weights(labels: &[bool]) -> Result<(f64, f64)> {
    let n = labels.len() as f64;
    let n_pos = labels.iter().filter(|l| **l).count() as f64;
    let n_neg = n - n_pos;
    if n_pos == 0.0 || n_neg == 0.0 {
        return Err(CompassError::SingleClass);
    }
    Ok((n / (2.0 * n_pos), n / (2.0 * n_neg)))
}

/// Mean and population std per latent coordinate over training embeddings;
/// zero std becomes divisor 1.
pub fn fit_embedding_scaler(embeddings: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    if embeddings.is_empty() {
        return Err(CompassError::EmptyInput("embedding scaler input"));
    }
    let dim = embeddings[0].len();
    let n = embeddings.len() as f64;
    let mut means = vec![0.0; dim];
    for e in embeddings {
        for (m, v) in means.iter_mut().zip(e.iter()) {
            *m += v;
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut stds = vec![0.0; dim];
    for e in embeddings {
        for (s, (v, m)) in stds.iter_mut().zip(e.iter().zip(means.iter())) {
            *s += (v - m) * (v - m);
        }
    }
    for s in &mut stds {
        *s = (*s / n).sqrt();
        if *s == 0.0 {
            *s = 1.0;
        }
    }
    Ok((means, stds))
}

fn standardize(z: &[f64], means: &[f64], stds: &[f64]) -> Vec<f64> {
    z.iter()
        .zip(means.iter().zip(stds.iter()))
        .map(|(v, (m, s))| (v - m) / s)
        .collect()
}

/// log(1 + e^a) without overflow.
fn softplus(a: f64) -> f64 {
    a.max(0.0) + (-a.abs()).exp().ln_1p()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct Objective<'a> {
    xs: &'a [Vec<f64>],
    labels: &'a [bool],
    sample_weights: Vec<f64>,
    lambda: f64,
}

impl Objective<'_> {
    fn loss(&self, w: &[f64], b: f64) -> f64 {
        let mut total = 0.0;
        for ((x, y), sw) in self.xs.iter().zip(self.labels.iter()).zip(&self.sample_weights) {
            let s = b + w.iter().zip(x.iter()).map(|(a, v)| a * v).sum::<f64>();
            total += sw * if *y { softplus(-s) } else { softplus(s) };
        }
        total + 0.5 * self.lambda * w.iter().map(|a| a * a).sum::<f64>()
    }

    fn gradient(&self, w: &[f64], b: f64) -> (Vec<f64>, f64) {
        let mut gw = vec![0.0; w.len()];
        let mut gb = 0.0;
        for ((x, y), sw) in self.xs.iter().zip(self.labels.iter()).zip(&self.sample_weights) {
            let s = b + w.iter().zip(x.iter()).map(|(a, v)| a * v).sum::<f64>();
            let resid = sw * (sigmoid(s) - f64::from(*y));
            for (g, v) in gw.iter_mut().zip(x.iter()) {
                *g += resid * v;
            }
            gb += resid;
        }
        for (g, a) in gw.iter_mut().zip(w.iter()) {
            *g += self.lambda * a;
        }
        (gw, gb)
    }
}

/// Fit weights and intercept on standardized embeddings. The intercept is
/// unregularized. Gradient descent with backtracking line search runs to
/// gradient norm 1e-8 (or errors after 10,000 iterations).
pub fn fit(
    embeddings_std: &[Vec<f64>],
    labels: &[bool],
    lambda_reg: f64,
) -> Result<(Vec<f64>, f64)> {
    if embeddings_std.len() < 2 {
        return Err(CompassError::EmptyInput("classifier training set"));
    }
    if embeddings_std.len() != labels.len() {
        return Err(CompassError::LengthMismatch {
            expected: embeddings_std.len(),
            actual: labels.len(),
        });
    }
    let (w_pos, w_neg) = class_weights(labels)?;
    let sample_weights: Vec<f64> =
        labels.iter().map(|y| if *y { w_pos } else { w_neg }).collect();
    let obj = Objective { xs: embeddings_std, labels, sample_weights, lambda: lambda_reg };

    let dim = embeddings_std[0].len();
    let mut w = vec![0.0; dim];
    let mut b = 0.0;
    let mut loss = obj.loss(&w, b);
    // Barzilai-Borwein initial step per iteration, safeguarded by Armijo
    // backtracking; direction is always the plain gradient.
    let mut prev: Option<(Vec<f64>, f64, Vec<f64>, f64)> = None;
    let mut step = 1.0f64;
    for _ in 0..MAX_ITERS {
        let (gw, gb) = obj.gradient(&w, b);
        let gnorm2: f64 = gw.iter().map(|g| g * g).sum::<f64>() + gb * gb;
        if gnorm2.sqrt() <= GRAD_TOL {
            return Ok((w, b));
        }
        if let Some((pw, pb, pgw, pgb)) = &prev {
            let mut s_dot_s = (b - pb) * (b - pb);
            let mut s_dot_y = (b - pb) * (gb - pgb);
            for i in 0..dim {
                let s = w[i] - pw[i];
                let y = gw[i] - pgw[i];
                s_dot_s += s * s;
                s_dot_y += s * y;
            }
            if s_dot_y > 0.0 {
                step = (s_dot_s / s_dot_y).clamp(1e-12, 1e6);
            }
        }
        prev = Some((w.clone(), b, gw.clone(), gb));
        loop {
            let wt: Vec<f64> = w.iter().zip(gw.iter()).map(|(a, g)| a - step * g).collect();
            let bt = b - step * gb;
            let lt = obj.loss(&wt, bt);
            // Armijo, with a few-ulp allowance so that decreases below f64
            // representability of the loss do not stall the search
            if lt <= loss - 1e-4 * step * gnorm2 + 4.0 * f64::EPSILON * loss.abs() {
                w = wt;
                b = bt;
                loss = lt;
                break;
            }
            step *= 0.5;
            if step < 1e-18 {
                return Err(CompassError::NonConvergence { grad_norm: gnorm2.sqrt() });
            }
        }
    }
    let (gw, gb) = obj.gradient(&w, b);
    let gnorm = (gw.iter().map(|g| g * g).sum::<f64>() + gb * gb).sqrt();
    Err(CompassError::NonConvergence { grad_norm: gnorm })
}

/// Standardize a raw embedding and score it: logistic(w·z_std + b).
pub fn predict_proba(z: &[f64], params: &LogRegParams) -> f64 {
    let zs = standardize(z, &params.scaler_means, &params.scaler_stds);
    let s = params.intercept
        + params.weights.iter().zip(zs.iter()).map(|(a, v)| a * v).sum::<f64>();
    sigmoid(s)
}

/// Per-fraction risk trajectory: encode each prefix 1..t in inference mode
/// and score it. `steps` are the preprocessed feature vectors of the
/// delivered fractions, in order.
pub fn predict_trajectory(
    patient_id: &str,
    organ: OrganId,
    steps: &[Vec<f64>],
    autoencoder: &AutoencoderParams,
    params: &LogRegParams,
) -> Result<RiskTrajectory> {
    if steps.is_empty() {
        return Err(CompassError::EmptyInput("trajectory steps"));
    }
    let mut probs = Vec::with_capacity(steps.len());
    for t in 1..=steps.len() {
        let z = gru::encode_prefix(autoencoder, steps, t)?;
        probs.push(predict_proba(&z, params));
    }
    Ok(RiskTrajectory { patient_id: patient_id.to_string(), organ, probs })
}
