//! Masked-reconstruction GRU autoencoder over variable-length trajectories.
//!
//! Encoder: two stacked GRU layers (n_features → 16 → 8) with inverted
//! dropout on layer-1 outputs in training mode; the embedding is the
//! layer-2 hidden state at the last valid timestep. Decoder: a learned
//! tanh dense (8 → 16) provides the initial hidden state, a GRU (8 → 16)
//! consumes the latent vector at every timestep, and a linear projection
//! (16 → n_features) reconstructs each step.
//!
//! Gate convention: z = σ(Wz·x + Uz·h + bz), r = σ(Wr·x + Ur·h + br),
//! h̃ = tanh(Wh·x + Uh·(r⊙h) + bh), h' = (1−z)⊙h + z⊙h̃.
//!
//! Training is full batch: exact backpropagation through time on the
//! batch-masked MSE, global-norm gradient clipping, then Adam with coupled
//! weight decay. Everything is deterministic given the seed; dropout masks
//! come from the seeded stream and are held fixed within each step, so the
//! analytic gradients are checkable against finite differences.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CompassError, Result};
use crate::preprocess::FeatureSequence;

pub const HIDDEN1: usize = 16;
pub const LATENT: usize = 8;
pub const DEC_HIDDEN: usize = 16;

/// Training hyperparameters. Batches are seeded shuffles, so training is
/// deterministic for a given (data, config, seed).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub clip_norm: f64,
    pub dropout_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub rng_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 160,
            batch_size: 4,
            learning_rate: 5e-4,
            weight_decay: 1e-4,
            clip_norm: 1.0,
            dropout_rate: 0.5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            rng_seed: 7,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(CompassError::InvalidConfig("epochs and batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(CompassError::InvalidConfig("learning_rate must be positive".into()));
        }
        if self.weight_decay < 0.0 || self.clip_norm <= 0.0 {
            return Err(CompassError::InvalidConfig(
                "weight_decay must be >= 0 and clip_norm > 0".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(CompassError::InvalidConfig("dropout_rate must lie in [0, 1)".into()));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(CompassError::InvalidConfig("adam betas must lie in [0, 1)".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Parameter layout over one flat vector
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct GruLayout {
    input: usize,
    hidden: usize,
    wz: usize,
    wr: usize,
    wh: usize,
    uz: usize,
    ur: usize,
    uh: usize,
    bz: usize,
    br: usize,
    bh: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Layout {
    enc1: GruLayout,
    enc2: GruLayout,
    init_w: usize, // DEC_HIDDEN × LATENT
    init_b: usize,
    dec: GruLayout,
    out_w: usize, // n_features × DEC_HIDDEN
    out_b: usize,
    total: usize,
}

fn gru_layout(cursor: &mut usize, input: usize, hidden: usize) -> GruLayout {
    let mut take = |len: usize| {
        let off = *cursor;
        *cursor += len;
        off
    };
    GruLayout {
        input,
        hidden,
        wz: take(hidden * input),
        wr: take(hidden * input),
        wh: take(hidden * input),
        uz: take(hidden * hidden),
        ur: take(hidden * hidden),
        uh: take(hidden * hidden),
        bz: take(hidden),
        br: take(hidden),
        bh: take(hidden),
    }
}

fn layout_for(n_features: usize) -> Layout {
    let mut cursor = 0usize;
    let enc1 = gru_layout(&mut cursor, n_features, HIDDEN1);
    let enc2 = gru_layout(&mut cursor, HIDDEN1, LATENT);
    let init_w = cursor;
    cursor += DEC_HIDDEN * LATENT;
    let init_b = cursor;
    cursor += DEC_HIDDEN;
    let dec = gru_layout(&mut cursor, LATENT, DEC_HIDDEN);
    let out_w = cursor;
    cursor += n_features * DEC_HIDDEN;
    let out_b = cursor;
    cursor += n_features;
    Layout { enc1, enc2, init_w, init_b, dec, out_w, out_b, total: cursor }
}

/// All autoencoder weights as one flat vector with a fixed layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub struct AutoencoderParams {
    n_features: usize,
    theta: Vec<f64>,
    #[serde(skip)]
    layout: Layout,
}

#[derive(Serialize, Deserialize)]
struct RawParams {
    n_features: usize,
    theta: Vec<f64>,
}

impl From<AutoencoderParams> for RawParams {
    fn from(p: AutoencoderParams) -> Self {
        RawParams { n_features: p.n_features, theta: p.theta }
    }
}

impl TryFrom<RawParams> for AutoencoderParams {
    type Error = String;

    fn try_from(raw: RawParams) -> std::result::Result<Self, String> {
        let layout = layout_for(raw.n_features);
        if raw.theta.len() != layout.total {
            return Err(format!(
                "parameter vector has {} entries, layout needs {}",
                raw.theta.len(),
                layout.total
            ));
        }
        Ok(Self { n_features: raw.n_features, theta: raw.theta, layout })
    }
}

impl AutoencoderParams {
    /// Zero-initialized parameters (useful for shape tests).
    pub fn zeros(n_features: usize) -> Self {
        let layout = layout_for(n_features);
        Self { n_features, theta: vec![0.0; layout.total], layout }
    }

    /// Seeded initialization: weights uniform in ±1/√fan_in, biases zero.
    pub fn init(n_features: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut p = Self::zeros(n_features);
        let lay = p.layout;
        let mut fill = |range: std::ops::Range<usize>, fan_in: usize, theta: &mut [f64]| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            for v in &mut theta[range] {
                *v = (2.0 * rng.random::<f64>() - 1.0) * bound;
            }
        };
        for cell in [lay.enc1, lay.enc2, lay.dec] {
            let w_len = cell.hidden * cell.input;
            let u_len = cell.hidden * cell.hidden;
            fill(cell.wz..cell.wz + w_len, cell.input, &mut p.theta);
            fill(cell.wr..cell.wr + w_len, cell.input, &mut p.theta);
            fill(cell.wh..cell.wh + w_len, cell.input, &mut p.theta);
            fill(cell.uz..cell.uz + u_len, cell.hidden, &mut p.theta);
            fill(cell.ur..cell.ur + u_len, cell.hidden, &mut p.theta);
            fill(cell.uh..cell.uh + u_len, cell.hidden, &mut p.theta);
        }
        fill(lay.init_w..lay.init_w + DEC_HIDDEN * LATENT, LATENT, &mut p.theta);
        fill(lay.out_w..lay.out_w + n_features * DEC_HIDDEN, DEC_HIDDEN, &mut p.theta);
        p
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_params(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Mutable access for optimizer steps and finite-difference probes.
    pub fn theta_mut(&mut self) -> &mut [f64] {
        &mut self.theta
    }
}

/// Gradient vector in the same layout as [`AutoencoderParams::theta`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    theta: Vec<f64>,
}

impl Gradients {
    fn zeros(len: usize) -> Self {
        Self { theta: vec![0.0; len] }
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn global_norm(&self) -> f64 {
        self.theta.iter().map(|g| g * g).sum::<f64>().sqrt()
    }
}

// ---------------------------------------------------------------------------
// Dense-slice linear algebra
// ---------------------------------------------------------------------------

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// out[r] += W[r,:]·x for a row-major rows×cols matrix slice.
fn mv_acc(w: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let mut acc = 0.0;
        for (a, b) in row.iter().zip(x.iter()) {
            acc += a * b;
        }
        out[r] += acc;
    }
}

/// dx[c] += Wᵀ[c,:]·dy.
fn mv_t_acc(w: &[f64], rows: usize, cols: usize, dy: &[f64], dx: &mut [f64]) {
    for r in 0..rows {
        let row = &w[r * cols..(r + 1) * cols];
        let g = dy[r];
        for (x, a) in dx.iter_mut().zip(row.iter()) {
            *x += g * a;
        }
    }
}

/// dW[r,c] += dy[r]·x[c].
fn outer_acc(dw: &mut [f64], rows: usize, cols: usize, dy: &[f64], x: &[f64]) {
    for r in 0..rows {
        let row = &mut dw[r * cols..(r + 1) * cols];
        let g = dy[r];
        for (w, v) in row.iter_mut().zip(x.iter()) {
            *w += g * v;
        }
    }
}

// ---------------------------------------------------------------------------
// GRU cell forward/backward
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
struct GruStep {
    x: Vec<f64>,
    h_prev: Vec<f64>,
    z: Vec<f64>,
    r: Vec<f64>,
    c: Vec<f64>,
    h: Vec<f64>,
}

fn gru_forward(theta: &[f64], lay: GruLayout, x: &[f64], h_prev: &[f64]) -> GruStep {
    let (nh, ni) = (lay.hidden, lay.input);
    let w_len = nh * ni;
    let u_len = nh * nh;

    let mut az = theta[lay.bz..lay.bz + nh].to_vec();
    mv_acc(&theta[lay.wz..lay.wz + w_len], nh, ni, x, &mut az);
    mv_acc(&theta[lay.uz..lay.uz + u_len], nh, nh, h_prev, &mut az);
    let z: Vec<f64> = az.iter().map(|a| sigmoid(*a)).collect();

    let mut ar = theta[lay.br..lay.br + nh].to_vec();
    mv_acc(&theta[lay.wr..lay.wr + w_len], nh, ni, x, &mut ar);
    mv_acc(&theta[lay.ur..lay.ur + u_len], nh, nh, h_prev, &mut ar);
    let r: Vec<f64> = ar.iter().map(|a| sigmoid(*a)).collect();

    let rh: Vec<f64> = r.iter().zip(h_prev.iter()).map(|(a, b)| a * b).collect();
    let mut ac = theta[lay.bh..lay.bh + nh].to_vec();
    mv_acc(&theta[lay.wh..lay.wh + w_len], nh, ni, x, &mut ac);
    mv_acc(&theta[lay.uh..lay.uh + u_len], nh, nh, &rh, &mut ac);
    let c: Vec<f64> = ac.iter().map(|a| a.tanh()).collect();

    let h: Vec<f64> = z
        .iter()
        .zip(c.iter())
        .zip(h_prev.iter())
        .map(|((z, c), h)| (1.0 - z) * h + z * c)
        .collect();

    GruStep { x: x.to_vec(), h_prev: h_prev.to_vec(), z, r, c, h }
}

/// Backprop one cell step: accumulates parameter gradients, input gradient
/// `dx` and previous-hidden gradient `dh_prev`.
fn gru_backward(
    theta: &[f64],
    lay: GruLayout,
    step: &GruStep,
    dh: &[f64],
    grad: &mut [f64],
    dx: &mut [f64],
    dh_prev: &mut [f64],
) {
    let (nh, ni) = (lay.hidden, lay.input);
    let w_len = nh * ni;
    let u_len = nh * nh;

    let mut da_z = vec![0.0; nh];
    let mut da_r = vec![0.0; nh];
    let mut da_c = vec![0.0; nh];
    let mut d_rh = vec![0.0; nh];

    for i in 0..nh {
        let dz = dh[i] * (step.c[i] - step.h_prev[i]);
        let dc = dh[i] * step.z[i];
        dh_prev[i] += dh[i] * (1.0 - step.z[i]);
        da_z[i] = dz * step.z[i] * (1.0 - step.z[i]);
        da_c[i] = dc * (1.0 - step.c[i] * step.c[i]);
    }

    // candidate path: a_c = Wh x + Uh (r⊙h_prev) + bh
    outer_acc(&mut grad[lay.wh..lay.wh + w_len], nh, ni, &da_c, &step.x);
    let rh: Vec<f64> = step.r.iter().zip(step.h_prev.iter()).map(|(a, b)| a * b).collect();
    outer_acc(&mut grad[lay.uh..lay.uh + u_len], nh, nh, &da_c, &rh);
    for i in 0..nh {
        grad[lay.bh + i] += da_c[i];
    }
    mv_t_acc(&theta[lay.wh..lay.wh + w_len], nh, ni, &da_c, dx);
    mv_t_acc(&theta[lay.uh..lay.uh + u_len], nh, nh, &da_c, &mut d_rh);
    for i in 0..nh {
        let dr = d_rh[i] * step.h_prev[i];
        dh_prev[i] += d_rh[i] * step.r[i];
        da_r[i] = dr * step.r[i] * (1.0 - step.r[i]);
    }

    // update gate path
    outer_acc(&mut grad[lay.wz..lay.wz + w_len], nh, ni, &da_z, &step.x);
    outer_acc(&mut grad[lay.uz..lay.uz + u_len], nh, nh, &da_z, &step.h_prev);
    for i in 0..nh {
        grad[lay.bz + i] += da_z[i];
    }
    mv_t_acc(&theta[lay.wz..lay.wz + w_len], nh, ni, &da_z, dx);
    mv_t_acc(&theta[lay.uz..lay.uz + u_len], nh, nh, &da_z, dh_prev);

    // reset gate path
    outer_acc(&mut grad[lay.wr..lay.wr + w_len], nh, ni, &da_r, &step.x);
    outer_acc(&mut grad[lay.ur..lay.ur + u_len], nh, nh, &da_r, &step.h_prev);
    for i in 0..nh {
        grad[lay.br + i] += da_r[i];
    }
    mv_t_acc(&theta[lay.wr..lay.wr + w_len], nh, ni, &da_r, dx);
    mv_t_acc(&theta[lay.ur..lay.ur + u_len], nh, nh, &da_r, dh_prev);
}

/// Read-only view of one GRU cell inside the flat parameter vector.
#[derive(Clone, Copy)]
pub struct GruCellRef<'a> {
    theta: &'a [f64],
    lay: GruLayout,
}

impl GruCellRef<'_> {
    /// One recurrence step h' = (1−z)⊙h + z⊙h̃.
    pub fn step(&self, x: &[f64], h_prev: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.lay.input {
            return Err(CompassError::LengthMismatch { expected: self.lay.input, actual: x.len() });
        }
        if h_prev.len() != self.lay.hidden {
            return Err(CompassError::LengthMismatch {
                expected: self.lay.hidden,
                actual: h_prev.len(),
            });
        }
        Ok(gru_forward(self.theta, self.lay, x, h_prev).h)
    }

    pub fn input_dim(&self) -> usize {
        self.lay.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.lay.hidden
    }
}

impl AutoencoderParams {
    pub fn encoder1(&self) -> GruCellRef<'_> {
        GruCellRef { theta: &self.theta, lay: self.layout.enc1 }
    }

    pub fn encoder2(&self) -> GruCellRef<'_> {
        GruCellRef { theta: &self.theta, lay: self.layout.enc2 }
    }

    pub fn decoder_gru(&self) -> GruCellRef<'_> {
        GruCellRef { theta: &self.theta, lay: self.layout.dec }
    }
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

/// Per-sequence, per-valid-step, per-unit keep masks for encoder layer 1.
/// Inverted dropout: kept activations scale by 1/(1−rate).
#[derive(Debug, Clone)]
pub struct DropoutPlan {
    pub rate: f64,
    /// masks[seq][valid_step][unit]
    pub masks: Vec<Vec<Vec<bool>>>,
}

/// Draw a dropout plan for every valid timestep of every sequence.
pub fn draw_dropout_plan(seqs: &FeatureSequence, rate: f64, rng: &mut ChaCha8Rng) -> DropoutPlan {
    let masks = seqs
        .valid
        .iter()
        .map(|row| {
            let steps = row.iter().filter(|b| **b).count();
            (0..steps)
                .map(|_| (0..HIDDEN1).map(|_| rng.random::<f64>() >= rate).collect())
                .collect()
        })
        .collect();
    DropoutPlan { rate, masks }
}

// ---------------------------------------------------------------------------
// Forward pass
// ---------------------------------------------------------------------------

struct SeqCache {
    /// Original timestep index of each processed (valid) step.
    t_of: Vec<usize>,
    enc1: Vec<GruStep>,
    /// Layer-2 steps; their cached inputs are the dropped layer-1 outputs.
    enc2: Vec<GruStep>,
    z: Vec<f64>,
    h0: Vec<f64>,
    dec: Vec<GruStep>,
    xhat: Vec<Vec<f64>>,
}

fn forward_sequence(
    params: &AutoencoderParams,
    steps: &[Vec<f64>],
    valid: &[bool],
    drop: Option<(&[Vec<bool>], f64)>,
) -> Result<SeqCache> {
    let lay = params.layout;
    let theta = &params.theta;
    let t_of: Vec<usize> = valid
        .iter()
        .enumerate()
        .filter_map(|(t, v)| v.then_some(t))
        .collect();
    if t_of.is_empty() {
        return Err(CompassError::EmptyInput("valid timesteps"));
    }

    let mut enc1 = Vec::with_capacity(t_of.len());
    let mut d1 = Vec::with_capacity(t_of.len());
    let mut h1 = vec![0.0; HIDDEN1];
    for (k, t) in t_of.iter().enumerate() {
        let x = &steps[*t];
        if x.len() != params.n_features {
            return Err(CompassError::LengthMismatch {
                expected: params.n_features,
                actual: x.len(),
            });
        }
        let step = gru_forward(theta, lay.enc1, x, &h1);
        h1 = step.h.clone();
        let dropped = match drop {
            Some((masks, rate)) => {
                let keep_scale = 1.0 / (1.0 - rate);
                step.h
                    .iter()
                    .zip(masks[k].iter())
                    .map(|(v, keep)| if *keep { v * keep_scale } else { 0.0 })
                    .collect()
            }
            None => step.h.clone(),
        };
        enc1.push(step);
        d1.push(dropped);
    }

    let mut enc2 = Vec::with_capacity(t_of.len());
    let mut h2 = vec![0.0; LATENT];
    for d in d1 {
        let step = gru_forward(theta, lay.enc2, &d, &h2);
        h2 = step.h.clone();
        enc2.push(step);
    }
    let z = h2;

    // decoder init: h0 = tanh(W z + b)
    let mut a0 = theta[lay.init_b..lay.init_b + DEC_HIDDEN].to_vec();
    mv_acc(&theta[lay.init_w..lay.init_w + DEC_HIDDEN * LATENT], DEC_HIDDEN, LATENT, &z, &mut a0);
    let h0: Vec<f64> = a0.iter().map(|a| a.tanh()).collect();

    let mut dec = Vec::with_capacity(t_of.len());
    let mut xhat = Vec::with_capacity(t_of.len());
    let mut hd = h0.clone();
    for _ in 0..t_of.len() {
        let step = gru_forward(theta, lay.dec, &z, &hd);
        hd = step.h.clone();
        let mut y = theta[lay.out_b..lay.out_b + params.n_features].to_vec();
        mv_acc(
            &theta[lay.out_w..lay.out_w + params.n_features * DEC_HIDDEN],
            params.n_features,
            DEC_HIDDEN,
            &hd,
            &mut y,
        );
        dec.push(step);
        xhat.push(y);
    }

    Ok(SeqCache { t_of, enc1, enc2, z, h0, dec, xhat })
}

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

/// Inference-mode embedding of one padded row: layer-2 hidden state at the
/// last valid timestep. Deterministic (no dropout).
pub fn encode(params: &AutoencoderParams, steps: &[Vec<f64>], valid: &[bool]) -> Result<Vec<f64>> {
    Ok(forward_sequence(params, steps, valid, None)?.z)
}

/// Embedding of the first `t` steps (all treated as valid).
pub fn encode_prefix(params: &AutoencoderParams, steps: &[Vec<f64>], t: usize) -> Result<Vec<f64>> {
    if t == 0 || t > steps.len() {
        return Err(CompassError::OutOfRange(format!(
            "prefix length {t} not in 1..={}",
            steps.len()
        )));
    }
    encode(params, &steps[..t], &vec![true; t])
}

/// Reconstruct `t` timesteps from a latent vector.
pub fn decode(params: &AutoencoderParams, z: &[f64], t: usize) -> Result<Vec<Vec<f64>>> {
    if z.len() != LATENT {
        return Err(CompassError::LengthMismatch { expected: LATENT, actual: z.len() });
    }
    if t == 0 {
        return Err(CompassError::EmptyInput("decode timestep count"));
    }
    let lay = params.layout;
    let theta = &params.theta;
    let mut a0 = theta[lay.init_b..lay.init_b + DEC_HIDDEN].to_vec();
    mv_acc(&theta[lay.init_w..lay.init_w + DEC_HIDDEN * LATENT], DEC_HIDDEN, LATENT, z, &mut a0);
    let mut hd: Vec<f64> = a0.iter().map(|a| a.tanh()).collect();
    let mut out = Vec::with_capacity(t);
    for _ in 0..t {
        let step = gru_forward(theta, lay.dec, z, &hd);
        hd = step.h;
        let mut y = theta[lay.out_b..lay.out_b + params.n_features].to_vec();
        mv_acc(
            &theta[lay.out_w..lay.out_w + params.n_features * DEC_HIDDEN],
            params.n_features,
            DEC_HIDDEN,
            &hd,
            &mut y,
        );
        out.push(y);
    }
    Ok(out)
}

/// Mean squared error over valid (timestep, feature) entries only;
/// denominator = (#valid timesteps)·n_features.
pub fn masked_mse(x: &[Vec<f64>], xhat: &[Vec<f64>], valid: &[bool]) -> Result<f64> {
    if x.len() != valid.len() {
        return Err(CompassError::LengthMismatch { expected: x.len(), actual: valid.len() });
    }
    let mut sum = 0.0;
    let mut n_steps = 0usize;
    let mut width = None;
    let mut k = 0usize;
    for (t, v) in valid.iter().enumerate() {
        if !*v {
            continue;
        }
        // reconstructions may cover only the valid prefix
        let row_hat = xhat
            .get(k)
            .ok_or(CompassError::EmptyInput("reconstruction row"))?;
        if x[t].len() != row_hat.len() {
            return Err(CompassError::LengthMismatch {
                expected: x[t].len(),
                actual: row_hat.len(),
            });
        }
        width = Some(x[t].len());
        for (a, b) in x[t].iter().zip(row_hat.iter()) {
            sum += (a - b) * (a - b);
        }
        n_steps += 1;
        k += 1;
    }
    match width {
        None => Err(CompassError::EmptyInput("valid timesteps")),
        Some(w) => Ok(sum / (n_steps * w) as f64),
    }
}

/// Inference-mode encode→decode round-trip error of one row.
pub fn reconstruction_error(
    params: &AutoencoderParams,
    steps: &[Vec<f64>],
    valid: &[bool],
) -> Result<f64> {
    let cache = forward_sequence(params, steps, valid, None)?;
    masked_mse(steps, &cache.xhat, valid)
}

/// Batch-masked MSE over all sequences: total squared error over valid
/// entries divided by (total valid timesteps × n_features).
pub fn batch_loss(
    params: &AutoencoderParams,
    seqs: &FeatureSequence,
    plan: Option<&DropoutPlan>,
) -> Result<f64> {
    if seqs.is_empty() {
        return Err(CompassError::EmptyInput("training sequences"));
    }
    let mut sum = 0.0;
    let mut steps_total = 0usize;
    for (s, row) in seqs.tensor.iter().enumerate() {
        let drop = plan.map(|p| (p.masks[s].as_slice(), p.rate));
        let cache = forward_sequence(params, row, &seqs.valid[s], drop)?;
        for (k, t) in cache.t_of.iter().enumerate() {
            for (a, b) in row[*t].iter().zip(cache.xhat[k].iter()) {
                sum += (a - b) * (a - b);
            }
        }
        steps_total += cache.t_of.len();
    }
    Ok(sum / (steps_total * seqs.n_features) as f64)
}

/// Exact gradients of [`batch_loss`] w.r.t. every parameter, with dropout
/// masks held fixed. Returns (loss, gradients).
pub fn batch_gradients(
    params: &AutoencoderParams,
    seqs: &FeatureSequence,
    plan: Option<&DropoutPlan>,
) -> Result<(f64, Gradients)> {
    let all: Vec<usize> = (0..seqs.len()).collect();
    let (se, steps, grads) = gradients_over(params, seqs, plan, &all)?;
    Ok((se / (steps * seqs.n_features) as f64, grads))
}

/// Squared-error sum, valid-step count and gradients of the masked MSE over
/// a subset of sequences. The gradient is of the subset-normalized loss.
fn gradients_over(
    params: &AutoencoderParams,
    seqs: &FeatureSequence,
    plan: Option<&DropoutPlan>,
    indices: &[usize],
) -> Result<(f64, usize, Gradients)> {
    if indices.is_empty() || seqs.is_empty() {
        return Err(CompassError::EmptyInput("training sequences"));
    }
    let lay = params.layout;
    let theta = &params.theta;
    let nf = params.n_features;
    let mut grad = Gradients::zeros(theta.len());

    // forward everything first: the loss denominator scales every gradient
    let mut caches = Vec::with_capacity(indices.len());
    let mut sum = 0.0;
    let mut steps_total = 0usize;
    for s in indices {
        let row = &seqs.tensor[*s];
        let drop = plan.map(|p| (p.masks[*s].as_slice(), p.rate));
        let cache = forward_sequence(params, row, &seqs.valid[*s], drop)?;
        for (k, t) in cache.t_of.iter().enumerate() {
            for (a, b) in row[*t].iter().zip(cache.xhat[k].iter()) {
                sum += (a - b) * (a - b);
            }
        }
        steps_total += cache.t_of.len();
        caches.push(cache);
    }
    let scale = 2.0 / (steps_total * nf) as f64;

    for (s, cache) in indices.iter().zip(caches.iter()) {
        let row = &seqs.tensor[*s];
        let n_steps = cache.t_of.len();

        // output layer and decoder GRU, last step to first
        let mut dhd = vec![0.0; DEC_HIDDEN];
        let mut dz = vec![0.0; LATENT];
        for k in (0..n_steps).rev() {
            let t = cache.t_of[k];
            let dy: Vec<f64> = cache.xhat[k]
                .iter()
                .zip(row[t].iter())
                .map(|(hat, x)| scale * (hat - x))
                .collect();
            for i in 0..nf {
                grad.theta[lay.out_b + i] += dy[i];
            }
            outer_acc(
                &mut grad.theta[lay.out_w..lay.out_w + nf * DEC_HIDDEN],
                nf,
                DEC_HIDDEN,
                &dy,
                &cache.dec[k].h,
            );
            mv_t_acc(&theta[lay.out_w..lay.out_w + nf * DEC_HIDDEN], nf, DEC_HIDDEN, &dy, &mut dhd);

            let mut dh_prev = vec![0.0; DEC_HIDDEN];
            gru_backward(theta, lay.dec, &cache.dec[k], &dhd, &mut grad.theta, &mut dz, &mut dh_prev);
            dhd = dh_prev;
        }

        // decoder init dense: h0 = tanh(W z + b); dhd now holds dL/dh0
        let mut da0 = vec![0.0; DEC_HIDDEN];
        for i in 0..DEC_HIDDEN {
            da0[i] = dhd[i] * (1.0 - cache.h0[i] * cache.h0[i]);
            grad.theta[lay.init_b + i] += da0[i];
        }
        outer_acc(
            &mut grad.theta[lay.init_w..lay.init_w + DEC_HIDDEN * LATENT],
            DEC_HIDDEN,
            LATENT,
            &da0,
            &cache.z,
        );
        mv_t_acc(&theta[lay.init_w..lay.init_w + DEC_HIDDEN * LATENT], DEC_HIDDEN, LATENT, &da0, &mut dz);

        // encoder layer 2: gradient enters only at the last valid step
        let mut dh2 = dz;
        let mut dd1 = vec![vec![0.0; HIDDEN1]; n_steps];
        for k in (0..n_steps).rev() {
            let mut dh_prev = vec![0.0; LATENT];
            gru_backward(theta, lay.enc2, &cache.enc2[k], &dh2, &mut grad.theta, &mut dd1[k], &mut dh_prev);
            dh2 = dh_prev;
        }

        // dropout backward, then encoder layer 1
        if let Some(p) = plan {
            let keep_scale = 1.0 / (1.0 - p.rate);
            for (k, d) in dd1.iter_mut().enumerate() {
                for (v, keep) in d.iter_mut().zip(p.masks[*s][k].iter()) {
                    *v = if *keep { *v * keep_scale } else { 0.0 };
                }
            }
        }
        let mut dh1 = vec![0.0; HIDDEN1];
        for k in (0..n_steps).rev() {
            let dh: Vec<f64> = dh1.iter().zip(dd1[k].iter()).map(|(a, b)| a + b).collect();
            let mut dh_prev = vec![0.0; HIDDEN1];
            let mut dx_sink = vec![0.0; nf];
            gru_backward(theta, lay.enc1, &cache.enc1[k], &dh, &mut grad.theta, &mut dx_sink, &mut dh_prev);
            dh1 = dh_prev;
        }
    }

    Ok((sum, steps_total, grad))
}

/// Scale all gradients so the global L2 norm is at most `max_norm`.
pub fn clip_global_norm(grads: &mut Gradients, max_norm: f64) -> f64 {
    let norm = grads.global_norm();
    if norm > max_norm {
        let s = max_norm / norm;
        for g in &mut grads.theta {
            *g *= s;
        }
    }
    norm
}

/// Adam optimizer state.
#[derive(Debug, Clone)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    t: usize,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self { m: vec![0.0; n_params], v: vec![0.0; n_params], t: 0 }
    }
}

/// One Adam step with coupled weight decay: λ·θ joins the gradient, then
/// standard bias-corrected Adam.
pub fn adam_step(
    params: &mut AutoencoderParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &TrainConfig,
) -> Result<()> {
    if grads.theta.iter().any(|g| !g.is_finite()) {
        return Err(CompassError::NonFinite { context: "adam gradients".into() });
    }
    state.t += 1;
    let t = state.t as i32;
    let bc1 = 1.0 - cfg.beta1.powi(t);
    let bc2 = 1.0 - cfg.beta2.powi(t);
    for i in 0..params.theta.len() {
        let g = grads.theta[i] + cfg.weight_decay * params.theta[i];
        state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
        state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params.theta[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
    }
    Ok(())
}

/// Mini-batch training over seeded shuffles; deterministic given
/// (data, config, seed). Returns the trained parameters and the per-epoch
/// training loss (squared error pooled over the epoch's batches).
pub fn train(seqs: &FeatureSequence, cfg: &TrainConfig) -> Result<(AutoencoderParams, Vec<f64>)> {
    cfg.validate()?;
    if seqs.is_empty() {
        return Err(CompassError::EmptyInput("training sequences"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    let mut params = AutoencoderParams::init(seqs.n_features, &mut rng);
    let mut state = AdamState::new(params.n_params());
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        // masks are drawn per sequence index, independent of batch order
        let plan = if cfg.dropout_rate > 0.0 {
            Some(draw_dropout_plan(seqs, cfg.dropout_rate, &mut rng))
        } else {
            None
        };
        let mut order: Vec<usize> = (0..seqs.len()).collect();
        use rand::seq::SliceRandom;
        order.shuffle(&mut rng);

        let mut epoch_se = 0.0;
        let mut epoch_steps = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            let (se, steps, mut grads) = gradients_over(&params, seqs, plan.as_ref(), batch)?;
            if !se.is_finite() {
                return Err(CompassError::Divergence {
                    epoch: epoch + 1,
                    loss: se / (steps * seqs.n_features) as f64,
                });
            }
            clip_global_norm(&mut grads, cfg.clip_norm);
            adam_step(&mut params, &grads, &mut state, cfg)?;
            epoch_se += se;
            epoch_steps += steps;
        }
        history.push(epoch_se / (epoch_steps * seqs.n_features) as f64);
    }
    Ok((params, history))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::OrganId;

    fn tiny_seqs(n_features: usize, lens: &[usize], seed: u64) -> FeatureSequence {
        let max = *lens.iter().max().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tensor = Vec::new();
        let mut valid = Vec::new();
        let mut ids = Vec::new();
        for (i, len) in lens.iter().enumerate() {
            let mut steps = Vec::new();
            let mut mask = Vec::new();
            for t in 0..max {
                if t < *len {
                    steps.push((0..n_features).map(|_| rng.random::<f64>() * 2.0 - 1.0).collect());
                    mask.push(true);
                } else {
                    steps.push(vec![0.0; n_features]);
                    mask.push(false);
                }
            }
            tensor.push(steps);
            valid.push(mask);
            ids.push((format!("P{i:02}"), OrganId::Heart));
        }
        FeatureSequence {
            labels: vec![false; ids.len()],
            ids,
            max_fractions: max,
            n_features,
            tensor,
            valid,
        }
    }

    #[test]
    fn zero_params_give_zero_hidden_state() {
        let p = AutoencoderParams::zeros(4);
        let h = p.encoder1().step(&[0.3, -0.2, 0.9, 0.0], &vec![0.0; HIDDEN1]).unwrap();
        assert!(h.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn closed_update_gate_keeps_hidden_state() {
        let mut p = AutoencoderParams::zeros(2);
        let lay = p.layout;
        // huge negative update bias forces z ≈ 0 ⇒ h' ≈ h_prev
        for i in 0..HIDDEN1 {
            p.theta[lay.enc1.bz + i] = -40.0;
        }
        let h_prev: Vec<f64> = (0..HIDDEN1).map(|i| (i as f64 / 16.0) - 0.4).collect();
        let h = p.encoder1().step(&[1.0, -1.0], &h_prev).unwrap();
        for (a, b) in h.iter().zip(h_prev.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hidden_states_are_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = AutoencoderParams::init(6, &mut rng);
        let mut h = vec![0.0; HIDDEN1];
        for _ in 0..50 {
            let x: Vec<f64> = (0..6).map(|_| rng.random::<f64>() * 6.0 - 3.0).collect();
            h = p.encoder1().step(&x, &h).unwrap();
            assert!(h.iter().all(|v| v.abs() < 1.0));
        }
        // extreme inputs saturate tanh at the f64 boundary but never escape it
        let mut h = vec![0.0; HIDDEN1];
        for _ in 0..10 {
            h = p.encoder1().step(&[1e6; 6], &h).unwrap();
            assert!(h.iter().all(|v| v.abs() <= 1.0));
        }
    }

    #[test]
    fn cell_rejects_dimension_mismatch() {
        let p = AutoencoderParams::zeros(4);
        assert!(p.encoder1().step(&[0.0; 3], &vec![0.0; HIDDEN1]).is_err());
        assert!(p.encoder1().step(&[0.0; 4], &vec![0.0; HIDDEN1 + 1]).is_err());
    }

    #[test]
    fn encode_ignores_padded_tail() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = AutoencoderParams::init(5, &mut rng);
        let steps: Vec<Vec<f64>> = (0..4)
            .map(|_| (0..5).map(|_| rng.random::<f64>()).collect())
            .collect();
        let mut padded = steps.clone();
        padded.push(vec![999.0; 5]); // garbage in the padded slot
        let valid = vec![true, true, true, true, false];
        let a = encode(&p, &padded, &valid).unwrap();
        let b = encode(&p, &steps, &[true; 4]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn encode_is_deterministic_in_inference_mode() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = AutoencoderParams::init(5, &mut rng);
        let steps: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..5).map(|_| rng.random::<f64>()).collect())
            .collect();
        let a = encode(&p, &steps, &[true; 3]).unwrap();
        let b = encode(&p, &steps, &[true; 3]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn encode_single_step_and_empty_mask() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let p = AutoencoderParams::init(5, &mut rng);
        let steps = vec![vec![0.1; 5]];
        assert_eq!(encode(&p, &steps, &[true]).unwrap().len(), LATENT);
        assert!(encode(&p, &steps, &[false]).is_err());
    }

    #[test]
    fn decode_shapes_and_zero_params_emit_bias() {
        let mut p = AutoencoderParams::zeros(3);
        let lay = p.layout;
        p.theta[lay.out_b] = 1.5;
        p.theta[lay.out_b + 1] = -0.5;
        let out = decode(&p, &vec![0.7; LATENT], 4).unwrap();
        assert_eq!(out.len(), 4);
        for row in &out {
            assert_eq!(row.as_slice(), &[1.5, -0.5, 0.0]);
        }
        assert_eq!(decode(&p, &vec![0.0; LATENT], 1).unwrap().len(), 1);
    }

    #[test]
    fn masked_mse_examples() {
        let x = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
        assert_eq!(masked_mse(&x, &x, &[true, true]).unwrap(), 0.0);

        // error only in the padded step
        let xhat = vec![vec![1.0, 2.0]];
        let x2 = vec![vec![1.0, 2.0], vec![99.0, -99.0]];
        assert_eq!(masked_mse(&x2, &xhat, &[true, false]).unwrap(), 0.0);

        // single valid step, errors (1, −1) over 2 features
        let xhat = vec![vec![2.0, 1.0]];
        let x3 = vec![vec![1.0, 2.0]];
        assert_eq!(masked_mse(&x3, &xhat, &[true]).unwrap(), 1.0);

        assert!(masked_mse(&x3, &xhat, &[false]).is_err());
    }

    #[test]
    fn reconstruction_error_matches_definition_and_is_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let p = AutoencoderParams::init(4, &mut rng);
        let steps: Vec<Vec<f64>> = (0..3)
            .map(|_| (0..4).map(|_| rng.random::<f64>()).collect())
            .collect();
        let valid = [true, true, true];
        let err = reconstruction_error(&p, &steps, &valid).unwrap();
        assert!(err >= 0.0);

        let z = encode(&p, &steps, &valid).unwrap();
        let xhat = decode(&p, &z, 3).unwrap();
        let direct = masked_mse(&steps, &xhat, &valid).unwrap();
        assert!((err - direct).abs() < 1e-15);
    }

    #[test]
    fn clip_examples() {
        let mut g = Gradients { theta: vec![0.3, 0.4] }; // norm 0.5
        assert_eq!(clip_global_norm(&mut g, 1.0), 0.5);
        assert_eq!(g.theta, vec![0.3, 0.4]);

        let mut g = Gradients { theta: vec![3.0] };
        clip_global_norm(&mut g, 1.0);
        assert!((g.theta[0] - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut g = Gradients {
            theta: (0..100).map(|_| rng.random::<f64>() * 10.0 - 5.0).collect(),
        };
        clip_global_norm(&mut g, 1.0);
        assert!(g.global_norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn adam_first_step_and_decay_only() {
        let cfg = TrainConfig { weight_decay: 0.0, ..TrainConfig::default() };
        let mut p = AutoencoderParams::zeros(2);
        let n = p.n_params();
        let mut g = Gradients::zeros(n);
        g.theta[0] = 2.0;
        let mut st = AdamState::new(n);
        adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        let expected = -cfg.learning_rate * 2.0 / (2.0 + cfg.epsilon);
        assert!((p.theta[0] - expected).abs() < 1e-12);
        // zero-gradient coordinates do not move
        assert!(p.theta[1..].iter().all(|v| *v == 0.0));

        // decay-only: θ shrinks toward 0
        let cfg = TrainConfig { weight_decay: 1e-2, ..TrainConfig::default() };
        let mut p = AutoencoderParams::zeros(2);
        p.theta[3] = 1.0;
        let g = Gradients::zeros(n);
        let mut st = AdamState::new(n);
        adam_step(&mut p, &g, &mut st, &cfg).unwrap();
        assert!(p.theta[3] < 1.0 && p.theta[3] > 0.0);
    }

    #[test]
    fn perfect_reconstruction_gives_zero_gradients() {
        // constant zero sequences and zero params: xhat = 0 = x everywhere
        let seqs = FeatureSequence {
            ids: vec![("P01".into(), OrganId::Heart)],
            labels: vec![false],
            max_fractions: 3,
            n_features: 2,
            tensor: vec![vec![vec![0.0; 2]; 3]],
            valid: vec![vec![true, true, true]],
        };
        let p = AutoencoderParams::zeros(2);
        let (loss, g) = batch_gradients(&p, &seqs, None).unwrap();
        assert_eq!(loss, 0.0);
        assert!(g.theta.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn training_is_deterministic_and_history_has_epoch_count() {
        let seqs = tiny_seqs(4, &[3, 4, 5], 99);
        let cfg = TrainConfig { epochs: 12, rng_seed: 17, ..TrainConfig::default() };
        let (p1, h1) = train(&seqs, &cfg).unwrap();
        let (p2, h2) = train(&seqs, &cfg).unwrap();
        assert_eq!(p1.theta(), p2.theta());
        assert_eq!(h1, h2);
        assert_eq!(h1.len(), 12);
    }

    #[test]
    fn training_reduces_loss_on_tiny_problem() {
        let seqs = tiny_seqs(3, &[3, 3, 4, 5], 5);
        let cfg = TrainConfig {
            epochs: 400,
            dropout_rate: 0.0,
            learning_rate: 5e-3,
            rng_seed: 2,
            ..TrainConfig::default()
        };
        let (_, hist) = train(&seqs, &cfg).unwrap();
        assert!(
            hist.last().unwrap() < &(0.5 * hist[0]),
            "final loss {} vs first {}",
            hist.last().unwrap(),
            hist[0]
        );
    }

    #[test]
    fn params_serde_roundtrip() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = AutoencoderParams::init(7, &mut rng);
        let json = serde_json::to_string(&p).unwrap();
        let back: AutoencoderParams = serde_json::from_str(&json).unwrap();
        assert_eq!(p, back);
    }

    /// Spot finite-difference check; the full oracle lives in the
    /// acceptance suite.
    #[test]
    fn gradients_match_finite_differences_spot_check() {
        let seqs = tiny_seqs(5, &[3, 5], 31);
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut params = AutoencoderParams::init(5, &mut rng);
        let plan = draw_dropout_plan(&seqs, 0.5, &mut rng);
        let (_, grads) = batch_gradients(&params, &seqs, Some(&plan)).unwrap();

        let n = params.n_params();
        let h = 1e-5;
        for idx in (0..n).step_by(n / 17) {
            let orig = params.theta()[idx];
            params.theta_mut()[idx] = orig + h;
            let up = batch_loss(&params, &seqs, Some(&plan)).unwrap();
            params.theta_mut()[idx] = orig - h;
            let down = batch_loss(&params, &seqs, Some(&plan)).unwrap();
            params.theta_mut()[idx] = orig;
            let fd = (up - down) / (2.0 * h);
            let an = grads.theta()[idx];
            let denom = fd.abs().max(an.abs()).max(1e-6);
            assert!(
                ((fd - an) / denom).abs() < 1e-4,
                "param {idx}: fd={fd:.3e} analytic={an:.3e}"
            );
        }
    }
}
