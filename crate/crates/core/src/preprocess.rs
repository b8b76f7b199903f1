//! Fold-scoped feature hygiene: Spearman culling, median imputation and
//! z-scoring, all fitted on training observations only, plus padded
//! sequence assembly for the autoencoder.
//!
//! Culling is sign-agnostic (|rho| > 0.90 drops the later feature); the
//! deviation is echoed into run reports. Scaling uses the population std
//! (divide by n), the same convention as the shape statistics.

use serde::{Deserialize, Serialize};

use crate::error::{CompassError, Result};
use crate::features::{is_sentinel, FeatureSpec, FeatureVector, SENTINEL};
use crate::volume::OrganId;

pub const SPEARMAN_CUTOFF: f64 = 0.90;

/// Deviation flags echoed into every run report.
pub const DEVIATION_FLAGS: [&str; 1] = ["spearman_culling_uses_absolute_rho"];

/// Fitted preprocessing state for one fold; serialized as
/// `fold_<k>_prep.json` for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessModel {
    pub kept_feature_indices: Vec<usize>,
    pub kept_feature_names: Vec<String>,
    /// Training medians for the kept features.
    pub medians: Vec<f64>,
    /// Training means for the kept features, post imputation.
    pub means: Vec<f64>,
    /// Training population stds (zero replaced by 1 as scale divisor).
    pub stds: Vec<f64>,
    pub fitted_on: Vec<String>,
}

impl PreprocessModel {
    pub fn n_features(&self) -> usize {
        self.kept_feature_indices.len()
    }
}

// ---------------------------------------------------------------------------
// Spearman correlation
// ---------------------------------------------------------------------------

/// Average fractional ranks; ties share the mean rank.
fn average_ranks(vals: &[f64]) -> Vec<f64> {
    let n = vals.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| vals[*a].partial_cmp(&vals[*b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && vals[order[j + 1]] == vals[order[i]] {
            j += 1;
        }
        // ranks are 1-based; tied block shares the mean of its positions
        let mean_rank = (i + j + 2) as f64 / 2.0;
        for k in i..=j {
            ranks[order[k]] = mean_rank;
        }
        i = j + 1;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        None
    } else {
        Some(cov / (va * vb).sqrt())
    }
}

/// Spearman rank correlation with pairwise sentinel exclusion; returns the
/// NaN sentinel when either side is constant over the complete pairs.
pub fn spearman_rho(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(CompassError::LengthMismatch {
            expected: a.len(),
            actual: b.len(),
        });
    }
    let mut xs = Vec::with_capacity(a.len());
    let mut ys = Vec::with_capacity(a.len());
    for (x, y) in a.iter().zip(b.iter()) {
        if !is_sentinel(*x) && !is_sentinel(*y) {
            xs.push(*x);
            ys.push(*y);
        }
    }
    if xs.len() < 2 {
        return Err(CompassError::TooFewPairs(xs.len()));
    }
    let ra = average_ranks(&xs);
    let rb = average_ranks(&ys);
    Ok(pearson(&ra, &rb).unwrap_or(SENTINEL))
}

// ---------------------------------------------------------------------------
// Fitting (training rows only)
// ---------------------------------------------------------------------------

fn column<'a>(matrix: &'a [Vec<f64>], j: usize) -> impl Iterator<Item = f64> + 'a {
    matrix.iter().map(move |row| row[j])
}

fn is_constant_or_all_sentinel(matrix: &[Vec<f64>], j: usize) -> bool {
    let mut first: Option<f64> = None;
    let mut any = false;
    for v in column(matrix, j) {
        if is_sentinel(v) {
            continue;
        }
        any = true;
        match first {
            None => first = Some(v),
            Some(f) if f != v => return false,
            _ => {}
        }
    }
    // all-sentinel counts as droppable too
    !any || first.is_some()
}

/// Correlation-based culling: drop all-sentinel/constant features, then
/// scan pairs in enumeration order and drop the later one of any pair with
/// |rho| above the cutoff. Deterministic.
pub fn fit_culler(train_matrix: &[Vec<f64>]) -> Result<Vec<usize>> {
    if train_matrix.len() < 2 {
        return Err(CompassError::EmptyInput("culler training matrix"));
    }
    let width = train_matrix[0].len();
    let mut dropped = vec![false; width];
    for j in 0..width {
        if is_constant_or_all_sentinel(train_matrix, j) {
            dropped[j] = true;
        }
    }
    for i in 0..width {
        if dropped[i] {
            continue;
        }
        for j in (i + 1)..width {
            if dropped[j] {
                continue;
            }
            let a: Vec<f64> = column(train_matrix, i).collect();
            let b: Vec<f64> = column(train_matrix, j).collect();
            match spearman_rho(&a, &b) {
                Ok(rho) if !is_sentinel(rho) && rho.abs() > SPEARMAN_CUTOFF => dropped[j] = true,
                // constant-after-pairing or too few pairs: keep both
                _ => {}
            }
        }
    }
    Ok((0..width).filter(|j| !dropped[*j]).collect())
}

/// Linear-interpolation median of the non-sentinel values.
fn median(vals: &mut Vec<f64>) -> Option<f64> {
    vals.retain(|v| !is_sentinel(*v));
    if vals.is_empty() {
        return None;
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = vals.len();
    Some(if n % 2 == 1 {
        vals[n / 2]
    } else {
        (vals[n / 2 - 1] + vals[n / 2]) / 2.0
    })
}

/// Training medians per kept feature (columns of the culled matrix).
pub fn fit_imputer(train_kept: &[Vec<f64>]) -> Result<Vec<f64>> {
    if train_kept.is_empty() {
        return Err(CompassError::EmptyInput("imputer training matrix"));
    }
    let width = train_kept[0].len();
    let mut medians = Vec::with_capacity(width);
    for j in 0..width {
        let mut col: Vec<f64> = column(train_kept, j).collect();
        match median(&mut col) {
            Some(m) => medians.push(m),
            None => {
                return Err(CompassError::InvalidConfig(format!(
                    "kept feature {j} is entirely sentinel on training data"
                )))
            }
        }
    }
    Ok(medians)
}

/// Replace sentinels with the fitted training medians.
pub fn apply_imputer(matrix: &mut [Vec<f64>], medians: &[f64]) {
    for row in matrix.iter_mut() {
        for (v, m) in row.iter_mut().zip(medians.iter()) {
            if is_sentinel(*v) {
                *v = *m;
            }
        }
    }
}

/// Training means and population stds per kept feature (imputed matrix);
/// a zero std becomes divisor 1.
pub fn fit_scaler(train_imputed: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<f64>)> {
    if train_imputed.is_empty() {
        return Err(CompassError::EmptyInput("scaler training matrix"));
    }
    let n = train_imputed.len() as f64;
    let width = train_imputed[0].len();
    let mut means = Vec::with_capacity(width);
    let mut stds = Vec::with_capacity(width);
    for j in 0..width {
        let mean = column(train_imputed, j).sum::<f64>() / n;
        let var = column(train_imputed, j).map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let std = var.sqrt();
        means.push(mean);
        stds.push(if std == 0.0 { 1.0 } else { std });
    }
    Ok((means, stds))
}

pub fn apply_scaler(matrix: &mut [Vec<f64>], means: &[f64], stds: &[f64]) {
    for row in matrix.iter_mut() {
        for j in 0..row.len() {
            row[j] = (row[j] - means[j]) / stds[j];
        }
    }
}

/// Fit cull → impute → scale on the training observations only.
pub fn fit(train_obs: &[FeatureVector], fitted_on: Vec<String>) -> Result<PreprocessModel> {
    let raw: Vec<Vec<f64>> = train_obs.iter().map(|o| o.values.clone()).collect();
    let kept = fit_culler(&raw)?;
    let names = FeatureSpec::names();
    let kept_names: Vec<String> = kept.iter().map(|j| names[*j].to_string()).collect();

    let mut train_kept: Vec<Vec<f64>> = raw
        .iter()
        .map(|row| kept.iter().map(|j| row[*j]).collect())
        .collect();
    let medians = fit_imputer(&train_kept)?;
    apply_imputer(&mut train_kept, &medians);
    let (means, stds) = fit_scaler(&train_kept)?;

    Ok(PreprocessModel {
        kept_feature_indices: kept,
        kept_feature_names: kept_names,
        medians,
        means,
        stds,
        fitted_on,
    })
}

/// Apply a fitted model to any observation set (training or held out).
pub fn apply(model: &PreprocessModel, obs: &[FeatureVector]) -> Vec<Vec<f64>> {
    let mut matrix: Vec<Vec<f64>> = obs
        .iter()
        .map(|o| model.kept_feature_indices.iter().map(|j| o.values[*j]).collect())
        .collect();
    apply_imputer(&mut matrix, &model.medians);
    apply_scaler(&mut matrix, &model.means, &model.stds);
    matrix
}

// ---------------------------------------------------------------------------
// Sequence assembly
// ---------------------------------------------------------------------------

/// Padded rank-3 tensor of preprocessed trajectories with a validity mask.
/// Rows are sorted by (patient, organ); padded positions are exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    pub ids: Vec<(String, OrganId)>,
    pub labels: Vec<bool>,
    pub max_fractions: usize,
    pub n_features: usize,
    /// `tensor[row][t]` is the feature vector at timestep t (zeros when padded).
    pub tensor: Vec<Vec<Vec<f64>>>,
    pub valid: Vec<Vec<bool>>,
}

impl FeatureSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn valid_len(&self, row: usize) -> usize {
        self.valid[row].iter().filter(|b| **b).count()
    }
}

/// Group preprocessed rows by (patient, organ), sort by fraction, check
/// 3..5 consecutive fractions, and zero-pad to the longest trajectory.
pub fn build_sequences(
    obs: &[FeatureVector],
    transformed: &[Vec<f64>],
    labels: impl Fn(&str, OrganId) -> bool,
) -> Result<FeatureSequence> {
    if obs.is_empty() {
        return Err(CompassError::EmptyInput("sequence observations"));
    }
    if obs.len() != transformed.len() {
        return Err(CompassError::LengthMismatch {
            expected: obs.len(),
            actual: transformed.len(),
        });
    }
    let n_features = transformed[0].len();

    let mut groups: std::collections::BTreeMap<(String, OrganId), Vec<(usize, usize)>> =
        std::collections::BTreeMap::new();
    for (i, o) in obs.iter().enumerate() {
        groups
            .entry((o.patient_id.clone(), o.organ))
            .or_default()
            .push((o.fraction_index, i));
    }

    let max_fractions = groups
        .values()
        .map(|g| g.len())
        .max()
        .expect("nonempty groups");

    let mut ids = Vec::with_capacity(groups.len());
    let mut label_vec = Vec::with_capacity(groups.len());
    let mut tensor = Vec::with_capacity(groups.len());
    let mut valid = Vec::with_capacity(groups.len());
    for ((patient, organ), mut entries) in groups {
        entries.sort_by_key(|(frac, _)| *frac);
        let len = entries.len();
        if !(3..=5).contains(&len) {
            return Err(CompassError::InvalidConfig(format!(
                "trajectory {patient}/{organ} has {len} fractions, need 3..5"
            )));
        }
        for (k, (frac, _)) in entries.iter().enumerate() {
            if *frac != k + 1 {
                return Err(CompassError::MissingFraction {
                    patient,
                    organ: organ.name().into(),
                    index: k + 1,
                });
            }
        }
        let mut steps = Vec::with_capacity(max_fractions);
        let mut mask = Vec::with_capacity(max_fractions);
        for t in 0..max_fractions {
            if t < len {
                steps.push(transformed[entries[t].1].clone());
                mask.push(true);
            } else {
                steps.push(vec![0.0; n_features]);
                mask.push(false);
            }
        }
        ids.push((patient, organ));
        label_vec.push(labels(&ids.last().unwrap().0, organ));
        tensor.push(steps);
        valid.push(mask);
    }

    Ok(FeatureSequence {
        ids,
        labels: label_vec,
        max_fractions,
        n_features,
        tensor,
        valid,
    })
}
