//! Multimodal feature extraction: the 73-feature vector per
//! (patient, organ, fraction) observation.
//!
//! Groups, in order: DVH (10) and plan-quality (4) on cumulative EQD2;
//! dosiomics (25) and the geometric hotspot on per-fraction physical dose;
//! temporal kinetics (2) on the cumulative-mean series; first-order CT and
//! PET intensity statistics (15 each) on the fraction images.
//!
//! Conventions, fixed and oracle-tested:
//! - Dx / Dxp are hottest-x% minima with nearest-rank k = ceil(x%·n);
//!   intensity percentiles use linear interpolation.
//! - VxpMax and the hotspot fraction use strict `>`; Vx (Gy) uses `>=`.
//! - Shape statistics use population moments (divide by n).
//! - Any 0/0 or zero-variance statistic yields the NaN sentinel; downstream
//!   median imputation fills it.
//!
//! Every reduction runs over a descending-sorted copy of the ROI array, so
//! all features are bitwise invariant to voxel ordering within the ROI.

use crate::biodose::{self, BioDoseParams};
use crate::cohort::PatientCase;
use crate::error::{CompassError, Result};
use crate::par;
use crate::volume::{masked_values, organ_volume_cc, OrganId, OrganMask};

/// Missing-value sentinel. Serialized as an empty CSV cell.
pub const SENTINEL: f64 = f64::NAN;

/// True when a feature value is the missing sentinel.
pub fn is_sentinel(v: f64) -> bool {
    v.is_nan()
}

/// The fixed, ordered feature enumeration.
pub struct FeatureSpec;

impl FeatureSpec {
    pub const TOTAL: usize = 73;

    pub const GROUPS: [(&'static str, usize); 7] = [
        ("dvh", 10),
        ("dosiomics", 25),
        ("plan_quality", 4),
        ("temporal_kinetics", 2),
        ("geometric", 2),
        ("ct_intensity", 15),
        ("pet_intensity", 15),
    ];

    /// All 73 feature names in canonical order.
    pub fn names() -> [&'static str; 73] {
        [
            // DVH on cumulative EQD2
            "dvh_dmax",
            "dvh_dmean",
            "dvh_dmin",
            "dvh_d5",
            "dvh_d50",
            "dvh_d95",
            "dvh_d2cc",
            "dvh_v5",
            "dvh_v10",
            "dvh_v20",
            // dosiomics on per-fraction physical dose
            "dos_d2p",
            "dos_d5p",
            "dos_d10p",
            "dos_d20p",
            "dos_d30p",
            "dos_d40p",
            "dos_d50p",
            "dos_d60p",
            "dos_d70p",
            "dos_d80p",
            "dos_d90p",
            "dos_d95p",
            "dos_d98p",
            "dos_v10pmax",
            "dos_v20pmax",
            "dos_v30pmax",
            "dos_v40pmax",
            "dos_v50pmax",
            "dos_v60pmax",
            "dos_v70pmax",
            "dos_v80pmax",
            "dos_v90pmax",
            "dos_skewness",
            "dos_kurtosis",
            "dos_cv",
            // plan quality on cumulative EQD2
            "pq_hi1",
            "pq_hi2",
            "pq_ci",
            "pq_gi",
            // temporal kinetics
            "tk_delta_mean_eqd2",
            "tk_interfraction_days",
            // geometric
            "geo_organ_volume_cc",
            "geo_hotspot_fraction",
            // CT intensity
            "ct_mean",
            "ct_std",
            "ct_min",
            "ct_max",
            "ct_median",
            "ct_p10",
            "ct_p25",
            "ct_p50",
            "ct_p75",
            "ct_p90",
            "ct_skewness",
            "ct_kurtosis",
            "ct_entropy",
            "ct_energy",
            "ct_uniformity",
            // PET intensity
            "pet_mean",
            "pet_std",
            "pet_min",
            "pet_max",
            "pet_median",
            "pet_p10",
            "pet_p25",
            "pet_p50",
            "pet_p75",
            "pet_p90",
            "pet_skewness",
            "pet_kurtosis",
            "pet_entropy",
            "pet_energy",
            "pet_uniformity",
        ]
    }

    /// FNV-1a hash of the canonical names, pinned into model files so a
    /// fold model cannot be replayed against a different enumeration.
    pub fn hash_hex() -> String {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for name in Self::names() {
            for b in name.as_bytes() {
                h ^= u64::from(*b);
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
            h ^= u64::from(b',');
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
        format!("{h:016x}")
    }
}

/// One observation: 73 values aligned to [`FeatureSpec::names`].
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub patient_id: String,
    pub organ: OrganId,
    pub fraction_index: usize,
    pub values: Vec<f64>,
}

impl FeatureVector {
    fn validate(self) -> Result<Self> {
        if self.values.len() != FeatureSpec::TOTAL {
            return Err(CompassError::LengthMismatch {
                expected: FeatureSpec::TOTAL,
                actual: self.values.len(),
            });
        }
        if self.values.iter().any(|v| v.is_infinite()) {
            return Err(CompassError::NonFinite {
                context: format!(
                    "feature vector {} {} fraction {}",
                    self.patient_id, self.organ, self.fraction_index
                ),
            });
        }
        Ok(self)
    }
}

// ---------------------------------------------------------------------------
// Shared ROI statistics base
// ---------------------------------------------------------------------------

fn non_empty(vals: &[f64], what: &'static str) -> Result<()> {
    if vals.is_empty() {
        Err(CompassError::EmptyInput(what))
    } else {
        Ok(())
    }
}

/// Descending-sorted copy; inputs are finite by volume invariants.
fn sorted_desc(vals: &[f64]) -> Vec<f64> {
    let mut v = vals.to_vec();
    v.sort_by(|a, b| b.partial_cmp(a).unwrap());
    v
}

/// Hottest-x% voxel count: k = ceil(x%·n), clamped to [1, n].
/// Exact for integer x and n (the product and quotient round exactly).
fn hottest_count(x_pct: f64, n: usize) -> usize {
    let k = (x_pct * n as f64 / 100.0).ceil() as usize;
    k.clamp(1, n)
}

/// Minimum among the hottest x% of a descending-sorted array.
fn dose_to_top_pct(desc: &[f64], x_pct: f64) -> f64 {
    desc[hottest_count(x_pct, desc.len()) - 1]
}

/// Mean over the descending-sorted order (bitwise permutation-invariant).
fn mean_desc(desc: &[f64]) -> f64 {
    desc.iter().sum::<f64>() / desc.len() as f64
}

/// Central moments m2..m4 about the given mean, population convention.
fn central_moments(desc: &[f64], mean: f64) -> (f64, f64, f64) {
    let n = desc.len() as f64;
    let (mut m2, mut m3, mut m4) = (0.0, 0.0, 0.0);
    for v in desc {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    (m2 / n, m3 / n, m4 / n)
}

fn percent_at_least(desc: &[f64], threshold: f64) -> f64 {
    let count = desc.iter().filter(|v| **v >= threshold).count();
    100.0 * count as f64 / desc.len() as f64
}

fn percent_strictly_above(desc: &[f64], threshold: f64) -> f64 {
    let count = desc.iter().filter(|v| **v > threshold).count();
    100.0 * count as f64 / desc.len() as f64
}

fn fraction_at_least(desc: &[f64], threshold: f64) -> f64 {
    desc.iter().filter(|v| **v >= threshold).count() as f64 / desc.len() as f64
}

/// Linear-interpolation percentile over a descending-sorted array.
fn percentile_linear(desc: &[f64], p: f64) -> f64 {
    let n = desc.len();
    let h = (n as f64 - 1.0) * p / 100.0;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    // ascending index i maps to desc[n-1-i]
    let vlo = desc[n - 1 - lo];
    let vhi = desc[n - 1 - hi];
    vlo + (h - lo as f64) * (vhi - vlo)
}

// ---------------------------------------------------------------------------
// Feature-group operations
// ---------------------------------------------------------------------------

const DXP_GRID: [f64; 13] = [2.0, 5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 95.0, 98.0];
const VXP_GRID: [f64; 9] = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0];

/// DVH block on cumulative EQD2 within the ROI:
/// Dmax, Dmean, Dmin, D5, D50, D95, D2cc, V5, V10, V20.
pub fn dvh_features(cum_eqd2_in_roi: &[f64], voxel_cc: f64) -> Result<[f64; 10]> {
    non_empty(cum_eqd2_in_roi, "dvh_features ROI")?;
    let desc = sorted_desc(cum_eqd2_in_roi);
    let n = desc.len();
    let k_2cc = ((2.0 / voxel_cc).ceil() as usize).clamp(1, n);
    Ok([
        desc[0],
        mean_desc(&desc),
        desc[n - 1],
        dose_to_top_pct(&desc, 5.0),
        dose_to_top_pct(&desc, 50.0),
        dose_to_top_pct(&desc, 95.0),
        desc[k_2cc - 1],
        percent_at_least(&desc, 5.0),
        percent_at_least(&desc, 10.0),
        percent_at_least(&desc, 20.0),
    ])
}

/// Dosiomics block on per-fraction physical dose within the ROI:
/// 13 Dxp, 9 VxpMax, skewness, excess kurtosis, coefficient of variation.
pub fn dosiomic_features(fraction_dose_in_roi: &[f64]) -> Result<[f64; 25]> {
    non_empty(fraction_dose_in_roi, "dosiomic_features ROI")?;
    let desc = sorted_desc(fraction_dose_in_roi);
    let max = desc[0];
    let mean = mean_desc(&desc);
    let (m2, m3, m4) = central_moments(&desc, mean);

    let mut out = [0.0f64; 25];
    for (i, x) in DXP_GRID.iter().enumerate() {
        out[i] = dose_to_top_pct(&desc, *x);
    }
    for (i, x) in VXP_GRID.iter().enumerate() {
        out[13 + i] = percent_strictly_above(&desc, x / 100.0 * max);
    }
    out[22] = if m2 > 0.0 { m3 / m2.powf(1.5) } else { SENTINEL };
    out[23] = if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { SENTINEL };
    out[24] = if mean != 0.0 { m2.sqrt() / mean } else { SENTINEL };
    Ok(out)
}

/// Plan-quality indices on cumulative EQD2 within the ROI:
/// HI1 = (D2p−D98p)/D50p, HI2 = Dmax/Dmean, CI = fraction >= 95% Dmax,
/// GI = (fraction >= 50% Dmax)/(fraction >= 90% Dmax). All sentinel when
/// the field is identically zero.
pub fn plan_quality(cum_eqd2_in_roi: &[f64]) -> Result<[f64; 4]> {
    non_empty(cum_eqd2_in_roi, "plan_quality ROI")?;
    let desc = sorted_desc(cum_eqd2_in_roi);
    let dmax = desc[0];
    if dmax == 0.0 {
        return Ok([SENTINEL; 4]);
    }
    let dmean = mean_desc(&desc);
    let d2p = dose_to_top_pct(&desc, 2.0);
    let d50p = dose_to_top_pct(&desc, 50.0);
    let d98p = dose_to_top_pct(&desc, 98.0);
    let hi1 = if d50p != 0.0 { (d2p - d98p) / d50p } else { SENTINEL };
    let hi2 = if dmean != 0.0 { dmax / dmean } else { SENTINEL };
    let ci = fraction_at_least(&desc, 0.95 * dmax);
    let f50 = fraction_at_least(&desc, 0.5 * dmax);
    let f90 = fraction_at_least(&desc, 0.9 * dmax);
    let gi = if f90 > 0.0 { f50 / f90 } else { SENTINEL };
    Ok([hi1, hi2, ci, gi])
}

/// Temporal kinetics at 1-based fraction `t`: change in cumulative mean
/// EQD2 (cumMean(0) = 0) and the interfraction gap in days (0 at t = 1).
pub fn temporal_kinetics(
    cum_mean_eqd2_series: &[f64],
    times_days: &[f64],
    t: usize,
) -> Result<[f64; 2]> {
    if t == 0 || t > cum_mean_eqd2_series.len() || t > times_days.len() {
        return Err(CompassError::OutOfRange(format!(
            "fraction index {t} outside series of length {}",
            cum_mean_eqd2_series.len()
        )));
    }
    if times_days.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CompassError::InvalidConfig(
            "fraction times must be strictly increasing".into(),
        ));
    }
    let prev_mean = if t >= 2 { cum_mean_eqd2_series[t - 2] } else { 0.0 };
    let delta = cum_mean_eqd2_series[t - 1] - prev_mean;
    let gap = if t >= 2 { times_days[t - 1] - times_days[t - 2] } else { 0.0 };
    Ok([delta, gap])
}

/// Geometric block: organ volume (cc) and hotspot fraction, the percentage
/// of ROI voxels with fraction dose strictly above 80% of Dmax.
pub fn geometric_features(mask: &OrganMask, fraction_dose_in_roi: &[f64]) -> Result<[f64; 2]> {
    non_empty(fraction_dose_in_roi, "geometric_features ROI")?;
    let desc = sorted_desc(fraction_dose_in_roi);
    let max = desc[0];
    let hotspot = if max == 0.0 {
        0.0
    } else {
        percent_strictly_above(&desc, 0.8 * max)
    };
    Ok([organ_volume_cc(mask), hotspot])
}

/// First-order intensity statistics: mean, std, min, max, median,
/// P10/P25/P50/P75/P90, skewness, excess kurtosis, entropy, energy,
/// uniformity. Entropy and uniformity use a 64-bin histogram over
/// [min, max]; a zero-variance input gives entropy 0 and uniformity 1.
pub fn intensity_firstorder(vals: &[f64]) -> Result<[f64; 15]> {
    non_empty(vals, "intensity_firstorder ROI")?;
    let desc = sorted_desc(vals);
    let n = desc.len();
    let mean = mean_desc(&desc);
    let (m2, m3, m4) = central_moments(&desc, mean);
    let min = desc[n - 1];
    let max = desc[0];

    let (entropy, uniformity) = if max == min {
        (0.0, 1.0)
    } else {
        const BINS: usize = 64;
        let mut counts = [0usize; BINS];
        let width = max - min;
        for v in &desc {
            let bin = (((v - min) / width) * BINS as f64) as usize;
            counts[bin.min(BINS - 1)] += 1;
        }
        let mut entropy = 0.0;
        let mut uniformity = 0.0;
        for c in counts {
            if c > 0 {
                let p = c as f64 / n as f64;
                entropy -= p * p.log2();
                uniformity += p * p;
            }
        }
        (entropy, uniformity)
    };
    let energy: f64 = desc.iter().map(|v| v * v).sum();

    Ok([
        mean,
        m2.sqrt(),
        min,
        max,
        percentile_linear(&desc, 50.0),
        percentile_linear(&desc, 10.0),
        percentile_linear(&desc, 25.0),
        percentile_linear(&desc, 50.0),
        percentile_linear(&desc, 75.0),
        percentile_linear(&desc, 90.0),
        if m2 > 0.0 { m3 / m2.powf(1.5) } else { SENTINEL },
        if m2 > 0.0 { m4 / (m2 * m2) - 3.0 } else { SENTINEL },
        entropy,
        energy,
        uniformity,
    ])
}

// ---------------------------------------------------------------------------
// Observation assembly
// ---------------------------------------------------------------------------

/// Build the full 73-feature vector for (patient, organ, fraction `t`).
///
/// Cumulative EQD2 is accumulated within the ROI under the organ's alpha/beta;
/// dosiomics and the hotspot use the fraction-`t` physical dose; intensity
/// blocks use the fraction-`t` CT and PET.
pub fn assemble_observation(case: &PatientCase, organ: OrganId, t: usize) -> Result<FeatureVector> {
    if t == 0 || t > case.fractions.len() {
        return Err(CompassError::OutOfRange(format!(
            "patient {} has no fraction {t}",
            case.id
        )));
    }
    let mask = case.mask(organ);
    let params = BioDoseParams::new(organ.alpha_beta_gy())?;
    let voxel_cc = mask.grid().voxel_volume_cc();

    // Per-fraction dose within the ROI, then BED and running cumulative EQD2.
    let ab = params.alpha_beta_gy;
    let eqd2_denom = 1.0 + 2.0 / ab;
    let roi_len = mask.count();
    let mut cum_bed = vec![0.0f64; roi_len];
    let mut cum_mean_series = Vec::with_capacity(t);
    let mut cum_eqd2_at_t = Vec::new();
    let mut times = Vec::with_capacity(t);
    for (k, frac) in case.fractions[..t].iter().enumerate() {
        let dose_roi = masked_values(&frac.dose, mask)?;
        for (acc, d) in cum_bed.iter_mut().zip(dose_roi.iter()) {
            *acc += biodose::bed_scalar(*d, ab);
        }
        let eqd2_roi: Vec<f64> = cum_bed.iter().map(|b| b / eqd2_denom).collect();
        cum_mean_series.push(mean_desc(&sorted_desc(&eqd2_roi)));
        if k + 1 == t {
            cum_eqd2_at_t = eqd2_roi;
        }
        times.push(frac.time_offset_days);
    }

    let fraction_dose_roi = masked_values(&case.fractions[t - 1].dose, mask)?;
    let ct_roi = masked_values(&case.fractions[t - 1].ct, mask)?;
    let pet_roi = masked_values(&case.fractions[t - 1].pet, mask)?;

    let dvh = dvh_features(&cum_eqd2_at_t, voxel_cc)?;
    let dos = dosiomic_features(&fraction_dose_roi)?;
    let pq = plan_quality(&cum_eqd2_at_t)?;
    let tk = temporal_kinetics(&cum_mean_series, &times, t)?;
    let geo = geometric_features(mask, &fraction_dose_roi)?;
    let ct = intensity_firstorder(&ct_roi)?;
    let pet = intensity_firstorder(&pet_roi)?;

    let mut values = Vec::with_capacity(FeatureSpec::TOTAL);
    values.extend_from_slice(&dvh);
    values.extend_from_slice(&dos);
    values.extend_from_slice(&pq);
    values.extend_from_slice(&tk);
    values.extend_from_slice(&geo);
    values.extend_from_slice(&ct);
    values.extend_from_slice(&pet);

    FeatureVector {
        patient_id: case.id.clone(),
        organ,
        fraction_index: t,
        values,
    }
    .validate()
}

/// Extract all observations of a cohort, ordered by (patient, organ,
/// fraction). Parallel across observations; output order is fixed.
pub fn extract_observations(cohort: &[PatientCase]) -> Result<Vec<FeatureVector>> {
    let mut keys = Vec::new();
    for (pi, case) in cohort.iter().enumerate() {
        for organ in OrganId::ALL {
            for t in 1..=case.fractions.len() {
                keys.push((pi, organ, t));
            }
        }
    }
    par::map_slice(&keys, |(pi, organ, t)| {
        assemble_observation(&cohort[*pi], *organ, *t)
    })
    .into_iter()
    .collect()
}

/// Write observations as CSV: `patient_id,organ,fraction,<73 names>`;
/// sentinels become empty cells.
pub fn feature_table_csv(rows: &[FeatureVector]) -> String {
    let mut out = String::from("patient_id,organ,fraction");
    for name in FeatureSpec::names() {
        out.push(',');
        out.push_str(name);
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.patient_id);
        out.push(',');
        out.push_str(row.organ.name());
        out.push(',');
        out.push_str(&row.fraction_index.to_string());
        for v in &row.values {
            out.push(',');
            if !is_sentinel(*v) {
                out.push_str(&format!("{v}"));
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::GridSpec;

    fn seq_1_to_100() -> Vec<f64> {
        (1..=100).map(f64::from).collect()
    }

    #[test]
    fn spec_names_are_unique_and_73() {
        let names = FeatureSpec::names();
        assert_eq!(names.len(), 73);
        let mut set = std::collections::HashSet::new();
        for n in names {
            assert!(set.insert(n), "duplicate feature name {n}");
        }
        assert_eq!(FeatureSpec::GROUPS.iter().map(|g| g.1).sum::<usize>(), 73);
    }

    #[test]
    fn dvh_on_1_to_100() {
        let f = dvh_features(&seq_1_to_100(), 0.001).unwrap();
        assert_eq!(f[3], 96.0); // D5
        assert_eq!(f[4], 51.0); // D50
        assert_eq!(f[9], 81.0); // V20
        assert_eq!(f[0], 100.0);
        assert_eq!(f[2], 1.0);
    }

    #[test]
    fn dvh_constant_field() {
        let f = dvh_features(&[10.0; 64], 0.001).unwrap();
        for idx in 0..7 {
            assert_eq!(f[idx], 10.0);
        }
        assert_eq!(f[7], 100.0); // V5
        assert_eq!(f[9], 0.0); // V20
    }

    #[test]
    fn dvh_all_zero() {
        let f = dvh_features(&[0.0; 32], 0.001).unwrap();
        for idx in 0..7 {
            assert_eq!(f[idx], 0.0);
        }
        assert_eq!(f[7], 0.0);
        assert_eq!(f[8], 0.0);
        assert_eq!(f[9], 0.0);
    }

    #[test]
    fn d2cc_caps_at_dmin_for_small_organs() {
        // 10 voxels of 0.1 cc = 1 cc organ; hottest ceil(2/0.1)=20 capped at 10
        let vals: Vec<f64> = (1..=10).map(f64::from).collect();
        let f = dvh_features(&vals, 0.1).unwrap();
        assert_eq!(f[6], 1.0); // falls back to Dmin
    }

    #[test]
    fn dosiomics_on_1_to_100() {
        let f = dosiomic_features(&seq_1_to_100()).unwrap();
        assert_eq!(f[0], 99.0); // D2p
        assert_eq!(f[12], 3.0); // D98p
        assert_eq!(f[17], 50.0); // V50pMax: voxels strictly > 50
    }

    #[test]
    fn dosiomics_constant_field() {
        let f = dosiomic_features(&[7.0; 50]).unwrap();
        assert!(is_sentinel(f[22]));
        assert!(is_sentinel(f[23]));
        assert_eq!(f[24], 0.0); // CV
        for i in 13..22 {
            assert_eq!(f[i], 100.0); // every voxel strictly exceeds x%*max for x<100
        }
    }

    #[test]
    fn dosiomics_single_voxel() {
        let f = dosiomic_features(&[5.0]).unwrap();
        for i in 0..13 {
            assert_eq!(f[i], 5.0);
        }
        for i in 13..22 {
            assert_eq!(f[i], 100.0);
        }
    }

    #[test]
    fn dosiomics_all_zero() {
        let f = dosiomic_features(&[0.0; 20]).unwrap();
        for i in 0..13 {
            assert_eq!(f[i], 0.0);
        }
        for i in 13..22 {
            assert_eq!(f[i], 0.0); // no voxel strictly exceeds 0
        }
        assert!(is_sentinel(f[22]));
        assert!(is_sentinel(f[23]));
        assert!(is_sentinel(f[24]));
    }

    #[test]
    fn plan_quality_examples() {
        let f = plan_quality(&[4.0; 30]).unwrap();
        assert_eq!(f, [0.0, 1.0, 1.0, 1.0]);

        let f = plan_quality(&seq_1_to_100()).unwrap();
        assert!((f[0] - 96.0 / 51.0).abs() < 1e-15);

        let f = plan_quality(&[0.0; 30]).unwrap();
        assert!(f.iter().all(|v| is_sentinel(*v)));
    }

    #[test]
    fn temporal_kinetics_examples() {
        let f = temporal_kinetics(&[4.0], &[0.0], 1).unwrap();
        assert_eq!(f, [4.0, 0.0]);

        let f = temporal_kinetics(&[4.0, 8.0], &[0.0, 3.0], 2).unwrap();
        assert_eq!(f, [4.0, 3.0]);

        let f = temporal_kinetics(&[4.0, 4.0], &[0.0, 2.0], 2).unwrap();
        assert_eq!(f[0], 0.0);

        assert!(temporal_kinetics(&[4.0], &[0.0], 2).is_err());
        assert!(temporal_kinetics(&[4.0, 8.0], &[3.0, 3.0], 2).is_err());
    }

    #[test]
    fn geometric_examples() {
        let g = GridSpec::new((10, 10, 10), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).unwrap();
        let mask = OrganMask::new(g, vec![true; 1000]).unwrap();

        let f = geometric_features(&mask, &[3.0; 1000]).unwrap();
        assert_eq!(f[0], 1.0);
        assert_eq!(f[1], 100.0);

        let f = geometric_features(&mask, &[0.0; 1000]).unwrap();
        assert_eq!(f[1], 0.0);
    }

    #[test]
    fn intensity_constant_and_two_level() {
        let f = intensity_firstorder(&[2.5; 40]).unwrap();
        assert_eq!(f[12], 0.0); // entropy
        assert_eq!(f[14], 1.0); // uniformity
        assert!(is_sentinel(f[10]));
        assert!(is_sentinel(f[11]));

        let mut vals = vec![0.0; 8];
        vals.extend_from_slice(&[1.0; 8]);
        let f = intensity_firstorder(&vals).unwrap();
        assert!((f[12] - 1.0).abs() < 1e-12); // 1 bit
        assert!((f[14] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn intensity_median_interpolates() {
        let f = intensity_firstorder(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(f[4], 2.5);
        assert_eq!(f[7], 2.5); // P50 duplicates the median by enumeration
    }

    #[test]
    fn dx_non_increasing_and_vxpmax_non_increasing() {
        let vals: Vec<f64> = (0..257).map(|i| ((i * 37) % 101) as f64).collect();
        let f = dosiomic_features(&vals).unwrap();
        for w in f[..13].windows(2) {
            assert!(w[1] <= w[0], "Dxp must be non-increasing in x");
        }
        for w in f[13..22].windows(2) {
            assert!(w[1] <= w[0], "VxpMax must be non-increasing in x");
        }
    }

    #[test]
    fn empty_roi_rejected() {
        assert!(dvh_features(&[], 0.001).is_err());
        assert!(dosiomic_features(&[]).is_err());
        assert!(plan_quality(&[]).is_err());
        assert!(intensity_firstorder(&[]).is_err());
    }
}
