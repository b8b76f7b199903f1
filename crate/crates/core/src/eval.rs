//! Leave-one-patient-out evaluation with strictly fold-scoped fitting,
//! plus discrimination, calibration and classification metrics.
//!
//! Per fold: fit preprocessing on the training patients, train the
//! autoencoder, standardize training embeddings, fit the classifier, then
//! predict per-fraction trajectories for the held-out patient. Folds run
//! in parallel; pooling order is fixed (patient, then organ), so reports
//! are byte-stable.
//!
//! Preprocessing and autoencoder fitting never see labels, so the
//! label-permutation control reuses the fold embeddings and refits only
//! the classifier — identical to rerunning the full fold with permuted
//! labels, at a fraction of the cost.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{self, LogRegParams, RiskTrajectory};
use crate::cohort::PatientCase;
use crate::error::{CompassError, Result};
use crate::features::{self, FeatureSpec, FeatureVector};
use crate::gru::{self, AutoencoderParams, TrainConfig};
use crate::par;
use crate::preprocess::{self, PreprocessModel, DEVIATION_FLAGS};
use crate::volume::OrganId;

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Evaluation configuration; the autoencoder seed is per fold:
/// `train.rng_seed + fold_index`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub train: TrainConfig,
    pub lambda_reg: f64,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self { train: TrainConfig::default(), lambda_reg: 1.0 }
    }
}

/// One LOPO fold: the held-out patient and the training patients.
#[derive(Debug, Clone, PartialEq)]
pub struct Fold {
    pub held_out: String,
    pub train_patients: Vec<String>,
}

/// One fold per patient; train = all others.
pub fn lopo_folds(cohort: &[PatientCase]) -> Result<Vec<Fold>> {
    if cohort.len() < 2 {
        return Err(CompassError::InvalidConfig(format!(
            "LOPO needs >= 2 patients, got {}",
            cohort.len()
        )));
    }
    Ok(cohort
        .iter()
        .map(|held| Fold {
            held_out: held.id.clone(),
            train_patients: cohort
                .iter()
                .filter(|c| c.id != held.id)
                .map(|c| c.id.clone())
                .collect(),
        })
        .collect())
}

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

/// Mann–Whitney AUC via average ranks; ties get half credit.
pub fn auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(CompassError::LengthMismatch { expected: scores.len(), actual: labels.len() });
    }
    let n_pos = labels.iter().filter(|l| **l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(CompassError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|a, b| scores[*a].partial_cmp(&scores[*b]).unwrap());
    let mut rank_sum_pos = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let mean_rank = (i + j + 2) as f64 / 2.0;
        for k in i..=j {
            if labels[order[k]] {
                rank_sum_pos += mean_rank;
            }
        }
        i = j + 1;
    }
    let n_pos_f = n_pos as f64;
    Ok((rank_sum_pos - n_pos_f * (n_pos_f + 1.0) / 2.0) / (n_pos_f * n_neg as f64))
}

/// Brier score: mean squared error against binary outcomes.
pub fn brier(probs: &[f64], labels: &[bool]) -> Result<f64> {
    if probs.is_empty() {
        return Err(CompassError::EmptyInput("brier input"));
    }
    if probs.len() != labels.len() {
        return Err(CompassError::LengthMismatch { expected: probs.len(), actual: labels.len() });
    }
    let sum: f64 = probs
        .iter()
        .zip(labels.iter())
        .map(|(p, y)| {
            let e = p - f64::from(*y);
            e * e
        })
        .sum();
    Ok(sum / probs.len() as f64)
}

/// Aggregated confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_positives: usize,
    pub false_positives: usize,
    pub true_negatives: usize,
    pub false_negatives: usize,
}

impl Confusion {
    pub fn sensitivity(&self) -> f64 {
        self.true_positives as f64 / (self.true_positives + self.false_negatives) as f64
    }

    pub fn specificity(&self) -> f64 {
        self.true_negatives as f64 / (self.true_negatives + self.false_positives) as f64
    }

    pub fn accuracy(&self) -> f64 {
        (self.true_positives + self.true_negatives) as f64
            / (self.true_positives + self.true_negatives + self.false_positives + self.false_negatives)
                as f64
    }
}

/// Threshold each final probability at its organ's cut (ties classify
/// toxic) and aggregate counts.
pub fn classify(cases: &[(OrganId, f64, bool)]) -> Confusion {
    let mut c = Confusion {
        true_positives: 0,
        false_positives: 0,
        true_negatives: 0,
        false_negatives: 0,
    };
    for (organ, p_final, label) in cases {
        let predicted = *p_final >= organ.classification_threshold();
        match (predicted, *label) {
            (true, true) => c.true_positives += 1,
            (true, false) => c.false_positives += 1,
            (false, false) => c.true_negatives += 1,
            (false, true) => c.false_negatives += 1,
        }
    }
    c
}

// ---------------------------------------------------------------------------
// Fold pipeline
// ---------------------------------------------------------------------------

/// Label-independent fold state: everything fitted before the classifier.
struct FoldEmbeddings {
    fold_index: usize,
    held_out: String,
    prep: PreprocessModel,
    autoencoder: AutoencoderParams,
    loss_history: Vec<f64>,
    scaler: (Vec<f64>, Vec<f64>),
    /// Training trajectories: ids aligned with standardized embeddings.
    train_ids: Vec<(String, OrganId)>,
    train_embeddings_std: Vec<Vec<f64>>,
    /// Held-out organs with prefix embeddings for t = 1..=T.
    test_organs: Vec<(OrganId, Vec<Vec<f64>>)>,
}

fn fold_train_config(cfg: &EvalConfig, fold_index: usize) -> TrainConfig {
    TrainConfig {
        rng_seed: cfg.train.rng_seed + fold_index as u64,
        ..cfg.train.clone()
    }
}

fn prepare_fold(
    obs: &[FeatureVector],
    fold: &Fold,
    fold_index: usize,
    cfg: &EvalConfig,
) -> Result<FoldEmbeddings> {
    let train_obs: Vec<FeatureVector> = obs
        .iter()
        .filter(|o| o.patient_id != fold.held_out)
        .cloned()
        .collect();
    let test_obs: Vec<FeatureVector> = obs
        .iter()
        .filter(|o| o.patient_id == fold.held_out)
        .cloned()
        .collect();
    if train_obs.is_empty() || test_obs.is_empty() {
        return Err(CompassError::EmptyInput("fold observations"));
    }

    let prep = preprocess::fit(&train_obs, fold.train_patients.clone())?;
    let train_matrix = preprocess::apply(&prep, &train_obs);
    // labels are irrelevant here; sequences only order the features
    let train_seqs = preprocess::build_sequences(&train_obs, &train_matrix, |_, _| false)?;

    let train_cfg = fold_train_config(cfg, fold_index);
    let (autoencoder, loss_history) = gru::train(&train_seqs, &train_cfg)?;

    let mut train_embeddings = Vec::with_capacity(train_seqs.len());
    for s in 0..train_seqs.len() {
        train_embeddings.push(gru::encode(&autoencoder, &train_seqs.tensor[s], &train_seqs.valid[s])?);
    }
    let scaler = classifier::fit_embedding_scaler(&train_embeddings)?;
    let train_embeddings_std: Vec<Vec<f64>> = train_embeddings
        .iter()
        .map(|z| {
            z.iter()
                .zip(scaler.0.iter().zip(scaler.1.iter()))
                .map(|(v, (m, s))| (v - m) / s)
                .collect()
        })
        .collect();

    // held-out prefix embeddings per organ
    let test_matrix = preprocess::apply(&prep, &test_obs);
    let mut test_organs = Vec::new();
    for organ in OrganId::ALL {
        let mut rows: Vec<(usize, usize)> = test_obs
            .iter()
            .enumerate()
            .filter(|(_, o)| o.organ == organ)
            .map(|(i, o)| (o.fraction_index, i))
            .collect();
        rows.sort_by_key(|(frac, _)| *frac);
        for (k, (frac, _)) in rows.iter().enumerate() {
            if *frac != k + 1 {
                return Err(CompassError::MissingFraction {
                    patient: fold.held_out.clone(),
                    organ: organ.name().into(),
                    index: k + 1,
                });
            }
        }
        let steps: Vec<Vec<f64>> = rows.iter().map(|(_, i)| test_matrix[*i].clone()).collect();
        let mut prefixes = Vec::with_capacity(steps.len());
        for t in 1..=steps.len() {
            prefixes.push(gru::encode_prefix(&autoencoder, &steps, t)?);
        }
        test_organs.push((organ, prefixes));
    }

    Ok(FoldEmbeddings {
        fold_index,
        held_out: fold.held_out.clone(),
        prep,
        autoencoder,
        loss_history,
        scaler,
        train_ids: train_seqs.ids.clone(),
        train_embeddings_std,
        test_organs,
    })
}

fn fit_fold_classifier<L>(emb: &FoldEmbeddings, labels: &L, lambda_reg: f64) -> Result<LogRegParams>
where
    L: Fn(&str, OrganId) -> bool,
{
    let train_labels: Vec<bool> =
        emb.train_ids.iter().map(|(p, o)| labels(p, *o)).collect();
    let (weights, intercept) = classifier::fit(&emb.train_embeddings_std, &train_labels, lambda_reg)?;
    Ok(LogRegParams {
        weights,
        intercept,
        scaler_means: emb.scaler.0.clone(),
        scaler_stds: emb.scaler.1.clone(),
        lambda_reg,
    })
}

fn fold_trajectories(emb: &FoldEmbeddings, clf: &LogRegParams) -> Vec<RiskTrajectory> {
    emb.test_organs
        .iter()
        .map(|(organ, prefixes)| RiskTrajectory {
            patient_id: emb.held_out.clone(),
            organ: *organ,
            probs: prefixes.iter().map(|z| classifier::predict_proba(z, clf)).collect(),
        })
        .collect()
}

/// Everything produced by one fold.
#[derive(Debug, Clone)]
pub struct FoldResult {
    pub fold_index: usize,
    pub held_out: String,
    pub prep: PreprocessModel,
    pub autoencoder: AutoencoderParams,
    pub classifier: LogRegParams,
    pub loss_history: Vec<f64>,
    pub trajectories: Vec<RiskTrajectory>,
    /// Ground-truth labels aligned with `trajectories`.
    pub labels: Vec<bool>,
}

/// Run one fold end to end: fit preprocess → train autoencoder →
/// standardize embeddings → fit classifier on the training patients only,
/// then predict the held-out patient's trajectories.
pub fn run_fold(
    cohort: &[PatientCase],
    obs: &[FeatureVector],
    fold: &Fold,
    fold_index: usize,
    cfg: &EvalConfig,
) -> Result<FoldResult> {
    let emb = prepare_fold(obs, fold, fold_index, cfg)?;
    let label_of = |p: &str, o: OrganId| {
        cohort
            .iter()
            .find(|c| c.id == p)
            .map(|c| c.label(o))
            .expect("patient in cohort")
    };
    let clf = fit_fold_classifier(&emb, &label_of, cfg.lambda_reg)?;
    let trajectories = fold_trajectories(&emb, &clf);
    let labels = trajectories.iter().map(|t| label_of(&t.patient_id, t.organ)).collect();
    Ok(FoldResult {
        fold_index: emb.fold_index,
        held_out: emb.held_out,
        prep: emb.prep,
        autoencoder: emb.autoencoder,
        classifier: clf,
        loss_history: emb.loss_history,
        trajectories,
        labels,
    })
}

// ---------------------------------------------------------------------------
// Report
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrganOutcome {
    pub organ: OrganId,
    pub label: bool,
    pub probabilities: Vec<f64>,
    pub p_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldSummary {
    pub held_out: String,
    pub train_seed: u64,
    pub kept_features: usize,
    pub first_epoch_loss: f64,
    pub final_epoch_loss: f64,
    pub organs: Vec<OrganOutcome>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub eval: EvalConfig,
    pub feature_spec_hash: String,
    pub deviation_flags: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema_version: u32,
    pub auc: f64,
    pub brier: f64,
    pub confusion: Confusion,
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub folds: Vec<FoldSummary>,
    pub config: ConfigEcho,
}

fn pooled_metrics(results: &[FoldResult]) -> Result<(f64, f64, Confusion)> {
    let mut pool: Vec<(OrganId, f64, bool)> = Vec::new();
    for r in results {
        for (traj, label) in r.trajectories.iter().zip(r.labels.iter()) {
            pool.push((traj.organ, traj.p_final(), *label));
        }
    }
    let scores: Vec<f64> = pool.iter().map(|(_, p, _)| *p).collect();
    let labels: Vec<bool> = pool.iter().map(|(_, _, l)| *l).collect();
    Ok((auc(&scores, &labels)?, brier(&scores, &labels)?, classify(&pool)))
}

/// Full LOPO evaluation: run every fold (in parallel), pool the held-out
/// final probabilities, and report discrimination, calibration and
/// classification metrics.
pub fn evaluate(cohort: &[PatientCase], cfg: &EvalConfig) -> Result<(EvalReport, Vec<FoldResult>)> {
    let folds = lopo_folds(cohort)?;
    let obs = features::extract_observations(cohort)?;
    let results: Vec<FoldResult> = par::map_tasks(folds.len(), |k| {
        run_fold(cohort, &obs, &folds[k], k, cfg)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let (auc_value, brier_value, confusion) = pooled_metrics(&results)?;
    let fold_summaries = results
        .iter()
        .map(|r| FoldSummary {
            held_out: r.held_out.clone(),
            train_seed: cfg.train.rng_seed + r.fold_index as u64,
            kept_features: r.prep.n_features(),
            first_epoch_loss: r.loss_history[0],
            final_epoch_loss: *r.loss_history.last().expect("nonempty history"),
            organs: r
                .trajectories
                .iter()
                .zip(r.labels.iter())
                .map(|(t, label)| OrganOutcome {
                    organ: t.organ,
                    label: *label,
                    probabilities: t.probs.clone(),
                    p_final: t.p_final(),
                })
                .collect(),
        })
        .collect();

    let report = EvalReport {
        schema_version: REPORT_SCHEMA_VERSION,
        auc: auc_value,
        brier: brier_value,
        confusion,
        sensitivity: confusion.sensitivity(),
        specificity: confusion.specificity(),
        accuracy: confusion.accuracy(),
        folds: fold_summaries,
        config: ConfigEcho {
            eval: cfg.clone(),
            feature_spec_hash: FeatureSpec::hash_hex(),
            deviation_flags: DEVIATION_FLAGS.iter().map(|s| s.to_string()).collect(),
        },
    };
    Ok((report, results))
}

/// Pooled AUC under seeded label permutations. Preprocessing and the
/// autoencoder are label-independent, so fold embeddings are computed once
/// and only the classifier is refitted per permutation.
pub fn permutation_aucs(
    cohort: &[PatientCase],
    cfg: &EvalConfig,
    n_permutations: usize,
    perm_seed: u64,
) -> Result<Vec<f64>> {
    let folds = lopo_folds(cohort)?;
    let obs = features::extract_observations(cohort)?;
    let embeddings: Vec<FoldEmbeddings> = par::map_tasks(folds.len(), |k| {
        prepare_fold(&obs, &folds[k], k, cfg)
    })
    .into_iter()
    .collect::<Result<_>>()?;

    // trajectory slots in pooled order, with their true labels
    let mut slots: Vec<(String, OrganId)> = Vec::new();
    let mut true_labels: Vec<bool> = Vec::new();
    for case in cohort {
        for organ in OrganId::ALL {
            slots.push((case.id.clone(), organ));
            true_labels.push(case.label(organ));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(perm_seed);
    let mut aucs = Vec::with_capacity(n_permutations);
    for _ in 0..n_permutations {
        let mut permuted = true_labels.clone();
        permuted.shuffle(&mut rng);
        let lookup: std::collections::BTreeMap<(String, OrganId), bool> =
            slots.iter().cloned().zip(permuted.iter().copied()).collect();
        let label_of = |p: &str, o: OrganId| lookup[&(p.to_string(), o)];

        let mut scores = Vec::new();
        let mut labels = Vec::new();
        for emb in &embeddings {
            let clf = fit_fold_classifier(emb, &label_of, cfg.lambda_reg)?;
            for (organ, prefixes) in &emb.test_organs {
                let z_final = prefixes.last().expect("nonempty prefixes");
                scores.push(classifier::predict_proba(z_final, &clf));
                labels.push(label_of(&emb.held_out, *organ));
            }
        }
        aucs.push(auc(&scores, &labels)?);
    }
    Ok(aucs)
}

// ---------------------------------------------------------------------------
// Output files
// ---------------------------------------------------------------------------

/// `patient,organ,fraction,probability,label` rows in pooled order.
pub fn trajectories_csv(results: &[FoldResult]) -> String {
    let mut out = String::from("patient,organ,fraction,probability,label\n");
    for r in results {
        for (traj, label) in r.trajectories.iter().zip(r.labels.iter()) {
            for (t, p) in traj.probs.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{}\n",
                    traj.patient_id,
                    traj.organ.name(),
                    t + 1,
                    p,
                    u8::from(*label)
                ));
            }
        }
    }
    out
}

#[derive(Debug, Serialize, Deserialize)]
struct FoldModelFile {
    schema_version: u32,
    held_out: String,
    train_seed: u64,
    feature_spec_hash: String,
    train_config: TrainConfig,
    autoencoder: AutoencoderParams,
    classifier: LogRegParams,
}

fn io_err(path: &Path, source: std::io::Error) -> CompassError {
    CompassError::Io { path: path.to_path_buf(), source }
}

/// Write `eval_report.json`, `trajectories.csv`, and per-fold model and
/// preprocessing files under `dir`.
pub fn write_eval_outputs(
    dir: &Path,
    report: &EvalReport,
    results: &[FoldResult],
) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let report_path = dir.join("eval_report.json");
    let body = serde_json::to_string_pretty(report)
        .map_err(|e| CompassError::MalformedManifest(e.to_string()))?;
    fs::write(&report_path, body).map_err(|e| io_err(&report_path, e))?;

    let csv_path = dir.join("trajectories.csv");
    fs::write(&csv_path, trajectories_csv(results)).map_err(|e| io_err(&csv_path, e))?;

    for r in results {
        let prep_path = dir.join(format!("fold_{}_prep.json", r.fold_index));
        let prep_body = serde_json::to_string_pretty(&r.prep)
            .map_err(|e| CompassError::MalformedManifest(e.to_string()))?;
        fs::write(&prep_path, prep_body).map_err(|e| io_err(&prep_path, e))?;

        let model = FoldModelFile {
            schema_version: REPORT_SCHEMA_VERSION,
            held_out: r.held_out.clone(),
            train_seed: report.config.eval.train.rng_seed + r.fold_index as u64,
            feature_spec_hash: FeatureSpec::hash_hex(),
            train_config: fold_train_config(&report.config.eval, r.fold_index),
            autoencoder: r.autoencoder.clone(),
            classifier: r.classifier.clone(),
        };
        let model_path = dir.join(format!("fold_{}_model.json", r.fold_index));
        let model_body = serde_json::to_string(&model)
            .map_err(|e| CompassError::MalformedManifest(e.to_string()))?;
        fs::write(&model_path, model_body).map_err(|e| io_err(&model_path, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lopo_structure() {
        let cfg = crate::cohort::CohortConfig {
            n_patients: 3,
            grid: crate::volume::GridSpec::new((24, 24, 16), (4.0, 4.0, 4.0), (0.0, 0.0, 0.0))
                .unwrap(),
            ..Default::default()
        };
        let cohort = crate::cohort::generate_cohort(&cfg).unwrap();
        let folds = lopo_folds(&cohort).unwrap();
        assert_eq!(folds.len(), 3);
        for (i, f) in folds.iter().enumerate() {
            assert_eq!(f.held_out, cohort[i].id);
            assert_eq!(f.train_patients.len(), 2);
            assert!(!f.train_patients.contains(&f.held_out));
        }
        // union of held-out sets is the cohort
        let mut held: Vec<&str> = folds.iter().map(|f| f.held_out.as_str()).collect();
        held.sort_unstable();
        let mut ids: Vec<&str> = cohort.iter().map(|c| c.id.as_str()).collect();
        ids.sort_unstable();
        assert_eq!(held, ids);
    }

    #[test]
    fn auc_examples() {
        let perfect = auc(&[0.9, 0.8, 0.2, 0.1], &[true, true, false, false]).unwrap();
        assert_eq!(perfect, 1.0);

        let ties = auc(&[0.5, 0.5, 0.5, 0.5], &[true, false, true, false]).unwrap();
        assert!((ties - 0.5).abs() < 1e-15);

        let mixed = auc(&[0.9, 0.4, 0.4, 0.1], &[true, false, true, false]).unwrap();
        assert!((mixed - 0.875).abs() < 1e-15);

        assert!(matches!(auc(&[0.1, 0.2], &[true, true]), Err(CompassError::SingleClass)));
    }

    #[test]
    fn auc_invariant_under_monotone_transform() {
        let scores = [0.11, 0.52, 0.52, 0.97, 0.03, 0.40];
        let labels = [false, true, false, true, false, true];
        let base = auc(&scores, &labels).unwrap();
        let squashed: Vec<f64> = scores.iter().map(|s| (5.0 * s).tanh()).collect();
        assert!((auc(&squashed, &labels).unwrap() - base).abs() < 1e-15);
    }

    #[test]
    fn brier_examples() {
        assert_eq!(brier(&[1.0, 0.0], &[true, false]).unwrap(), 0.0);
        assert_eq!(brier(&[0.5, 0.5], &[true, false]).unwrap(), 0.25);
        let b = brier(&[0.8, 0.2], &[true, false]).unwrap();
        assert!((b - 0.04).abs() < 1e-15);
    }

    #[test]
    fn confusion_paper_arithmetic() {
        let c = Confusion {
            true_negatives: 11,
            true_positives: 8,
            false_positives: 3,
            false_negatives: 2,
        };
        assert_eq!(format!("{:.1}", 100.0 * c.sensitivity()), "80.0");
        assert_eq!(format!("{:.1}", 100.0 * c.specificity()), "78.6");
        assert_eq!(format!("{:.1}", 100.0 * c.accuracy()), "79.2");
    }

    #[test]
    fn classify_threshold_is_inclusive() {
        // p_final exactly at the organ threshold classifies toxic
        let cases = vec![
            (OrganId::Heart, 0.6, true),
            (OrganId::Esophagus, 0.4, false),
            (OrganId::SpinalCord, 0.49999, false),
        ];
        let c = classify(&cases);
        assert_eq!(c.true_positives, 1);
        assert_eq!(c.false_positives, 1);
        assert_eq!(c.true_negatives, 1);
        assert_eq!(c.false_negatives, 0);
    }

    #[test]
    fn all_correct_classification() {
        let cases = vec![
            (OrganId::Heart, 0.9, true),
            (OrganId::Esophagus, 0.1, false),
            (OrganId::SpinalCord, 0.8, true),
        ];
        let c = classify(&cases);
        assert_eq!(c.sensitivity(), 1.0);
        assert_eq!(c.specificity(), 1.0);
        assert_eq!(c.accuracy(), 1.0);
    }
}
