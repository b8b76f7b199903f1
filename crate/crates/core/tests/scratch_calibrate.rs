// temporary calibration probe; deleted before release
use compass_core::cohort::{generate_cohort, CohortConfig};
use compass_core::eval::{evaluate, permutation_aucs, EvalConfig};
use compass_core::volume::OrganId;

#[test]
#[ignore]
fn probe_label_balance() {
    for threshold in [15.0, 20.0, 24.0, 26.0, 30.0, 36.0] {
        let cfg = CohortConfig { hotspot_threshold_gy: threshold, label_noise: 0.0, ..Default::default() };
        let cohort = generate_cohort(&cfg).unwrap();
        let mut per_organ = std::collections::BTreeMap::new();
        let mut toxic = 0;
        for case in &cohort {
            for organ in OrganId::ALL {
                if case.label(organ) {
                    toxic += 1;
                    *per_organ.entry(organ).or_insert(0) += 1;
                }
            }
        }
        let total = cohort.len() * 3;
        println!(
            "threshold {threshold:5.1}: toxic {toxic}/{total} ({:.2}) per-organ {:?}",
            toxic as f64 / total as f64,
            per_organ
        );
    }
}

#[test]
#[ignore]
fn probe_full_eval() {
    let cfg = CohortConfig::default();
    let cohort = generate_cohort(&cfg).unwrap();
    let mut toxic = 0;
    for case in &cohort {
        for organ in OrganId::ALL {
            if case.label(organ) {
                toxic += 1;
            }
        }
    }
    println!("toxic trajectories: {toxic}/24");
    let t0 = std::time::Instant::now();
    let (report, _) = evaluate(&cohort, &EvalConfig::default()).unwrap();
    println!("evaluate took {:?}", t0.elapsed());
    println!("AUC {:.3} Brier {:.3}", report.auc, report.brier);
    println!(
        "confusion tp={} fp={} tn={} fn={}",
        report.confusion.true_positives,
        report.confusion.false_positives,
        report.confusion.true_negatives,
        report.confusion.false_negatives
    );
    for f in &report.folds {
        println!(
            "fold {}: kept {} loss {:.4} -> {:.4} (ratio {:.3})",
            f.held_out,
            f.kept_features,
            f.first_epoch_loss,
            f.final_epoch_loss,
            f.final_epoch_loss / f.first_epoch_loss
        );
    }
    let t1 = std::time::Instant::now();
    let aucs = permutation_aucs(&cohort, &EvalConfig::default(), 20, 4242).unwrap();
    println!("permutations took {:?}", t1.elapsed());
    println!(
        "perm AUC min {:.3} max {:.3}",
        aucs.iter().cloned().fold(f64::INFINITY, f64::min),
        aucs.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    );
}

#[test]
#[ignore]
fn probe_culling_and_loss() {
    use compass_core::features::{extract_observations, FeatureSpec};
    use compass_core::preprocess;

    let variants: Vec<(&str, CohortConfig)> = vec![
        ("default", CohortConfig::default()),
        ("ct30_pet15", CohortConfig { ct_noise_hu: 30.0, pet_noise: 0.15, ..Default::default() }),
        ("infl06", CohortConfig { pet_inflammation_per_gy: 0.06, ..Default::default() }),
        ("jit12", CohortConfig { aim_jitter_mm: 12.0, ..Default::default() }),
    ];
    for (name, cfg) in variants {
        let cohort = generate_cohort(&cfg).unwrap();
        let obs = extract_observations(&cohort).unwrap();
        // fold 0 = drop P01
        let train: Vec<_> = obs.iter().filter(|o| o.patient_id != "P01").cloned().collect();
        let model = preprocess::fit(&train, vec![]).unwrap();
        println!("{name}: kept {} of {}", model.n_features(), FeatureSpec::TOTAL);
        if name == "default" {
            let names = FeatureSpec::names();
            let kept: std::collections::BTreeSet<usize> = model.kept_feature_indices.iter().cloned().collect();
            let dropped: Vec<&str> = (0..73).filter(|j| !kept.contains(j)).map(|j| names[*&j]).collect();
            println!("  dropped: {dropped:?}");
        }
    }
}

#[test]
#[ignore]
fn probe_inference_loss_curve() {
    use compass_core::features::extract_observations;
    use compass_core::gru::{batch_loss, train, TrainConfig};
    use compass_core::preprocess;

    let cfg = CohortConfig::default();
    let cohort = generate_cohort(&cfg).unwrap();
    let obs = extract_observations(&cohort).unwrap();
    let train_obs: Vec<_> = obs.iter().filter(|o| o.patient_id != "P01").cloned().collect();
    let prep = preprocess::fit(&train_obs, vec![]).unwrap();
    let matrix = preprocess::apply(&prep, &train_obs);
    let seqs = preprocess::build_sequences(&train_obs, &matrix, |_, _| false).unwrap();

    for epochs in [1usize, 40, 80, 160] {
        let tc = TrainConfig { epochs, rng_seed: 7, ..Default::default() };
        let (params, hist) = train(&seqs, &tc).unwrap();
        let inf = batch_loss(&params, &seqs, None).unwrap();
        println!("epochs {epochs:3}: train-mode last {:.4}, inference {:.4}", hist.last().unwrap(), inf);
    }
}
