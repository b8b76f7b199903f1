//! Voxel-wise linear-quadratic biological dose: per-fraction BED,
//! cumulative BED, and EQD2 conversion.
//!
//! BED = d·(1 + d/(α/β)) per fraction, summed voxel-wise across fractions;
//! EQD2 = BED/(1 + 2/(α/β)). One α/β per organ trajectory: BED volumes
//! carry their α/β and accumulation rejects mixing.

use serde::{Deserialize, Serialize};

use crate::error::{CompassError, Result};
use crate::par;
use crate::volume::{ensure_same_grid, VolumeRole, VoxelVolume};

/// Linear-quadratic parameters for one organ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BioDoseParams {
    pub alpha_beta_gy: f64,
}

impl BioDoseParams {
    pub fn new(alpha_beta_gy: f64) -> Result<Self> {
        if !alpha_beta_gy.is_finite() || alpha_beta_gy <= 0.0 {
            return Err(CompassError::InvalidConfig(format!(
                "alpha/beta must be positive, got {alpha_beta_gy}"
            )));
        }
        Ok(Self { alpha_beta_gy })
    }
}

/// A BED volume tagged with the α/β it was computed under.
#[derive(Debug, Clone, PartialEq)]
pub struct BedVolume {
    volume: VoxelVolume,
    alpha_beta_gy: f64,
}

impl BedVolume {
    pub fn volume(&self) -> &VoxelVolume {
        &self.volume
    }

    pub fn alpha_beta_gy(&self) -> f64 {
        self.alpha_beta_gy
    }
}

/// Per-voxel BED of one physical dose fraction.
pub fn bed_fraction(dose: &VoxelVolume, params: BioDoseParams) -> Result<BedVolume> {
    if let Some((i, v)) = dose
        .values()
        .iter()
        .enumerate()
        .find(|(_, v)| **v < 0.0)
    {
        return Err(CompassError::NegativeDose { index: i, value: *v });
    }
    let ab = params.alpha_beta_gy;
    let values = par::map_range(dose.len(), |i| {
        let d = dose.values()[i];
        d * (1.0 + d / ab)
    });
    Ok(BedVolume {
        volume: dose.with_values(VolumeRole::Bed, values)?,
        alpha_beta_gy: ab,
    })
}

/// Voxel-wise sum of per-fraction BED volumes. All inputs must share one
/// grid and one α/β.
pub fn accumulate_bed(per_fraction: &[BedVolume]) -> Result<BedVolume> {
    let first = per_fraction
        .first()
        .ok_or(CompassError::EmptyInput("accumulate_bed input"))?;
    for b in &per_fraction[1..] {
        ensure_same_grid(first.volume.grid(), b.volume.grid())?;
        if b.alpha_beta_gy != first.alpha_beta_gy {
            return Err(CompassError::InvalidConfig(format!(
                "mixed alpha/beta in one trajectory: {} vs {}",
                first.alpha_beta_gy, b.alpha_beta_gy
            )));
        }
    }
    // <= 5 fractions per voxel: summation order is the fraction order.
    let values = par::map_range(first.volume.len(), |i| {
        let mut acc = 0.0;
        for b in per_fraction {
            acc += b.volume.values()[i];
        }
        acc
    });
    Ok(BedVolume {
        volume: first.volume.with_values(VolumeRole::Bed, values)?,
        alpha_beta_gy: first.alpha_beta_gy,
    })
}

/// Convert cumulative BED to equivalent dose in 2-Gy fractions.
pub fn eqd2(cum_bed: &BedVolume) -> Result<VoxelVolume> {
    let denom = 1.0 + 2.0 / cum_bed.alpha_beta_gy;
    let values = par::map_range(cum_bed.volume.len(), |i| cum_bed.volume.values()[i] / denom);
    cum_bed.volume.with_values(VolumeRole::Eqd2, values)
}

/// Scalar BED for one fraction dose; same formula as [`bed_fraction`].
pub fn bed_scalar(dose_gy: f64, alpha_beta_gy: f64) -> f64 {
    dose_gy * (1.0 + dose_gy / alpha_beta_gy)
}

/// Scalar EQD2 from cumulative BED.
pub fn eqd2_scalar(cum_bed_gy: f64, alpha_beta_gy: f64) -> f64 {
    cum_bed_gy / (1.0 + 2.0 / alpha_beta_gy)
}

/// Cumulative EQD2 after the first `through` fractions of physical dose,
/// all under one α/β.
pub fn cumulative_eqd2(doses: &[VoxelVolume], through: usize, params: BioDoseParams) -> Result<VoxelVolume> {
    if through == 0 || through > doses.len() {
        return Err(CompassError::OutOfRange(format!(
            "fraction index {through} not in 1..={}",
            doses.len()
        )));
    }
    let beds: Vec<BedVolume> = doses[..through]
        .iter()
        .map(|d| bed_fraction(d, params))
        .collect::<Result<_>>()?;
    eqd2(&accumulate_bed(&beds)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::volume::GridSpec;
    use proptest::prelude::*;

    fn one_voxel(val: f64) -> VoxelVolume {
        let g = GridSpec::new((1, 1, 1), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).unwrap();
        VoxelVolume::new(g, VolumeRole::Dose, vec![val]).unwrap()
    }

    #[test]
    fn bed_zero_dose_is_zero() {
        let b = bed_fraction(&one_voxel(0.0), BioDoseParams::new(3.0).unwrap()).unwrap();
        assert_eq!(b.volume().values(), &[0.0]);
    }

    #[test]
    fn bed_hand_values() {
        let b = bed_fraction(&one_voxel(2.0), BioDoseParams::new(2.0).unwrap()).unwrap();
        assert!((b.volume().values()[0] - 4.0).abs() < 1e-15);

        let b = bed_fraction(&one_voxel(10.0), BioDoseParams::new(3.0).unwrap()).unwrap();
        assert!((b.volume().values()[0] - 130.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn bed_rejects_negative_dose() {
        assert!(matches!(
            bed_fraction(&one_voxel(-0.1), BioDoseParams::new(3.0).unwrap()),
            Err(CompassError::NegativeDose { .. })
        ));
    }

    #[test]
    fn accumulate_identity_linearity_and_hand_sum() {
        let p = BioDoseParams::new(3.0).unwrap();
        let b1 = bed_fraction(&one_voxel(2.0), p).unwrap();
        let acc = accumulate_bed(std::slice::from_ref(&b1)).unwrap();
        assert_eq!(acc.volume().values(), b1.volume().values());

        let twice = accumulate_bed(&[b1.clone(), b1.clone()]).unwrap();
        assert!((twice.volume().values()[0] - 2.0 * b1.volume().values()[0]).abs() < 1e-15);

        let a = bed_fraction(&one_voxel(2.0), BioDoseParams::new(2.0).unwrap()).unwrap();
        let b = bed_fraction(&one_voxel(10.0), BioDoseParams::new(2.0).unwrap()).unwrap();
        let sum = accumulate_bed(&[a, b]).unwrap();
        // 4.0 + 60.0
        assert!((sum.volume().values()[0] - 64.0).abs() < 1e-12);
    }

    #[test]
    fn accumulate_rejects_mixed_alpha_beta() {
        let a = bed_fraction(&one_voxel(2.0), BioDoseParams::new(3.0).unwrap()).unwrap();
        let b = bed_fraction(&one_voxel(2.0), BioDoseParams::new(2.0).unwrap()).unwrap();
        assert!(accumulate_bed(&[a, b]).is_err());
    }

    #[test]
    fn eqd2_hand_values() {
        let p = BioDoseParams::new(3.0).unwrap();
        let zero = bed_fraction(&one_voxel(0.0), p).unwrap();
        assert_eq!(eqd2(&zero).unwrap().values(), &[0.0]);

        // single 2-Gy fraction is its own EQD2 by construction
        for ab in [0.5, 2.0, 3.0, 10.0] {
            let b = bed_fraction(&one_voxel(2.0), BioDoseParams::new(ab).unwrap()).unwrap();
            let e = eqd2(&b).unwrap();
            assert!((e.values()[0] - 2.0).abs() < 1e-12, "ab={ab}");
        }

        let b = bed_fraction(&one_voxel(10.0), p).unwrap();
        let e = eqd2(&b).unwrap();
        assert!((e.values()[0] - 26.0).abs() < 1e-12);
    }

    #[test]
    fn order_preservation_of_argmax() {
        let g = GridSpec::new((4, 1, 1), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).unwrap();
        let dose =
            VoxelVolume::new(g, VolumeRole::Dose, vec![1.0, 7.5, 3.0, 7.4]).unwrap();
        let p = BioDoseParams::new(3.0).unwrap();
        let bed = bed_fraction(&dose, p).unwrap();
        let e = eqd2(&bed).unwrap();
        let argmax = |v: &[f64]| {
            v.iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap()
                .0
        };
        assert_eq!(argmax(dose.values()), 1);
        assert_eq!(argmax(bed.volume().values()), 1);
        assert_eq!(argmax(e.values()), 1);
    }

    proptest! {
        /// n fractions of exactly 2 Gy must come back as EQD2 = 2n.
        #[test]
        fn eqd2_round_trip_identity(ab in 0.5f64..20.0, n in 1usize..8) {
            let p = BioDoseParams::new(ab).unwrap();
            let beds: Vec<BedVolume> = (0..n)
                .map(|_| bed_fraction(&one_voxel(2.0), p).unwrap())
                .collect();
            let e = eqd2(&accumulate_bed(&beds).unwrap()).unwrap();
            prop_assert!((e.values()[0] - 2.0 * n as f64).abs() < 1e-12);
        }

        /// BED and EQD2 are strictly increasing in d for d > 0.
        #[test]
        fn monotone_in_dose(ab in 0.5f64..20.0, d in 0.01f64..50.0, bump in 0.01f64..5.0) {
            let lo = bed_scalar(d, ab);
            let hi = bed_scalar(d + bump, ab);
            prop_assert!(hi > lo);
            prop_assert!(eqd2_scalar(hi, ab) > eqd2_scalar(lo, ab));
        }

        /// One big fraction beats the same dose split across two fractions.
        #[test]
        fn superlinearity(ab in 0.5f64..20.0, d1 in 0.0f64..25.0, d2 in 0.0f64..25.0) {
            let joint = bed_scalar(d1 + d2, ab);
            let split = bed_scalar(d1, ab) + bed_scalar(d2, ab);
            prop_assert!(joint >= split - 1e-9);
            if d1 > 0.0 && d2 > 0.0 {
                prop_assert!(joint > split);
            }
        }

        /// BED dominates physical dose.
        #[test]
        fn bed_at_least_dose(ab in 0.5f64..20.0, d in 0.0f64..50.0) {
            prop_assert!(bed_scalar(d, ab) >= d);
        }
    }
}
