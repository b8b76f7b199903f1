//! Seeded synthetic cohort generator with a planted dose→toxicity rule,
//! plus the on-disk cohort manifest.
//!
//! Anatomy is analytic: an ellipsoidal heart, a curved esophageal tube and
//! a straight spinal-cord cylinder, all placed relative to the grid. Dose
//! per fraction is a sum of anisotropic Gaussian beam kernels aimed near a
//! mediastinal target with per-patient jitter, so organ hotspots vary
//! across patients. An organ is destined for toxicity iff the hottest-2%
//! minimum of its cumulative EQD2 exceeds the configured threshold; the
//! recorded label is that verdict flipped with the label-noise probability.
//! PET adds an inflammation term proportional to local cumulative dose
//! inside organs destined for toxicity, so imaging carries signal too.
//!
//! Randomness is counter-based: one ChaCha8 stream per (patient, purpose),
//! derived from the config seed, so per-patient generation can fan out in
//! parallel and still produce byte-identical cohorts.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::biodose::bed_scalar;
use crate::error::{CompassError, Result};
use crate::par;
use crate::volume::{
    self, ensure_same_grid, GridSpec, OrganId, OrganMask, VolumeRole, VoxelVolume,
};

/// Generator configuration; every field is echoed into run reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CohortConfig {
    pub n_patients: usize,
    pub min_fractions: usize,
    pub max_fractions: usize,
    pub grid: GridSpec,
    pub beam_count: usize,
    pub beam_sigma_mm: (f64, f64, f64),
    /// Summed per-fraction beam amplitude at kernel centers, Gy.
    pub beam_peak_gy: f64,
    /// Std of the per-patient aim offset, mm.
    pub aim_jitter_mm: f64,
    pub ct_noise_hu: f64,
    pub pet_noise: f64,
    /// PET inflammation slope per Gy of local cumulative dose.
    pub pet_inflammation_per_gy: f64,
    /// Planted rule: organ toxic iff hottest-2% cumulative EQD2 > this.
    pub hotspot_threshold_gy: f64,
    /// Probability of flipping a planted label.
    pub label_noise: f64,
    pub rng_seed: u64,
}

impl Default for CohortConfig {
    fn default() -> Self {
        Self {
            n_patients: 8,
            min_fractions: 3,
            max_fractions: 5,
            grid: GridSpec::new((48, 48, 32), (2.0, 2.0, 2.0), (0.0, 0.0, 0.0))
                .expect("default grid is valid"),
            beam_count: 3,
            beam_sigma_mm: (10.0, 10.0, 18.0),
            beam_peak_gy: 9.0,
            aim_jitter_mm: 9.0,
            ct_noise_hu: 15.0,
            pet_noise: 0.08,
            pet_inflammation_per_gy: 0.03,
            hotspot_threshold_gy: 20.0,
            label_noise: 0.05,
            rng_seed: 42,
        }
    }
}

impl CohortConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_patients < 2 {
            return Err(CompassError::InvalidConfig(format!(
                "n_patients must be >= 2, got {}",
                self.n_patients
            )));
        }
        if self.min_fractions < 3 || self.max_fractions > 5 || self.min_fractions > self.max_fractions
        {
            return Err(CompassError::InvalidConfig(format!(
                "fractions range must lie in [3, 5], got {}..{}",
                self.min_fractions, self.max_fractions
            )));
        }
        if !(0.0..0.5).contains(&self.label_noise) {
            return Err(CompassError::InvalidConfig(format!(
                "label_noise must lie in [0, 0.5), got {}",
                self.label_noise
            )));
        }
        if self.beam_count < 1 {
            return Err(CompassError::InvalidConfig("beam_count must be >= 1".into()));
        }
        let s = self.beam_sigma_mm;
        if s.0 <= 0.0 || s.1 <= 0.0 || s.2 <= 0.0 {
            return Err(CompassError::InvalidConfig("beam sigma must be positive".into()));
        }
        if self.beam_peak_gy < 0.0 || self.hotspot_threshold_gy < 0.0 {
            return Err(CompassError::InvalidConfig("dose parameters must be >= 0".into()));
        }
        Ok(())
    }
}

/// One treatment fraction: timestamp plus the dose/CT/PET volumes.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionRecord {
    pub index: usize,
    pub time_offset_days: f64,
    pub dose: VoxelVolume,
    pub ct: VoxelVolume,
    pub pet: VoxelVolume,
}

/// One patient: ordered fractions, per-organ masks and binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientCase {
    pub id: String,
    pub fractions: Vec<FractionRecord>,
    pub masks: BTreeMap<OrganId, OrganMask>,
    pub labels: BTreeMap<OrganId, bool>,
}

impl PatientCase {
    pub fn new(
        id: String,
        fractions: Vec<FractionRecord>,
        masks: BTreeMap<OrganId, OrganMask>,
        labels: BTreeMap<OrganId, bool>,
    ) -> Result<Self> {
        if fractions.len() < 3 {
            return Err(CompassError::InvalidConfig(format!(
                "patient {id} has {} fractions, need >= 3",
                fractions.len()
            )));
        }
        let grid = *fractions[0].dose.grid();
        let mut last_time = f64::NEG_INFINITY;
        for (i, f) in fractions.iter().enumerate() {
            if f.index != i + 1 {
                if fractions.iter().filter(|g| g.index == f.index).count() > 1 {
                    return Err(CompassError::DuplicateFraction {
                        patient: id.clone(),
                        index: f.index,
                    });
                }
                return Err(CompassError::MissingFraction {
                    patient: id.clone(),
                    organ: "-".into(),
                    index: i + 1,
                });
            }
            if f.time_offset_days <= last_time || f.time_offset_days < 0.0 {
                return Err(CompassError::InvalidConfig(format!(
                    "patient {id}: fraction times must be >= 0 and strictly increasing"
                )));
            }
            last_time = f.time_offset_days;
            for vol in [&f.dose, &f.ct, &f.pet] {
                ensure_same_grid(&grid, vol.grid())?;
            }
            if let Some((vi, v)) = f.dose.values().iter().enumerate().find(|(_, v)| **v < 0.0) {
                return Err(CompassError::NegativeDose { index: vi, value: *v });
            }
        }
        for organ in OrganId::ALL {
            let mask = masks.get(&organ).ok_or_else(|| {
                CompassError::MalformedManifest(format!("patient {id}: missing {organ} mask"))
            })?;
            ensure_same_grid(&grid, mask.grid())?;
            if !labels.contains_key(&organ) {
                return Err(CompassError::MalformedManifest(format!(
                    "patient {id}: missing {organ} label"
                )));
            }
        }
        Ok(Self { id, fractions, masks, labels })
    }

    pub fn mask(&self, organ: OrganId) -> &OrganMask {
        &self.masks[&organ]
    }

    pub fn label(&self, organ: OrganId) -> bool {
        self.labels[&organ]
    }

    pub fn grid(&self) -> &GridSpec {
        self.fractions[0].dose.grid()
    }
}

// ---------------------------------------------------------------------------
// Deterministic streams
// ---------------------------------------------------------------------------

/// Stream purposes; combined with the patient index into a stream id.
#[derive(Clone, Copy)]
enum StreamKind {
    Plan = 1,
    CtNoise = 2,
    PetNoise = 3,
    LabelFlip = 4,
    Anatomy = 5,
    Biology = 6,
}

fn stream_rng(seed: u64, patient: usize, kind: StreamKind, sub: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((patient as u64) << 16) | ((kind as u64) << 8) | sub as u64);
    rng
}

/// Standard normal via Box-Muller; two uniforms per draw keeps the stream
/// layout independent of call parity.
fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

// ---------------------------------------------------------------------------
// Analytic anatomy
// ---------------------------------------------------------------------------

struct Anatomy {
    masks: BTreeMap<OrganId, OrganMask>,
    tumor_center_mm: (f64, f64, f64),
}

/// Analytic organ shapes. `jitter` perturbs placement and size per patient
/// so organ volumes and intensity statistics vary across the cohort; None
/// gives the nominal atlas (used for the config-time fit check).
fn build_anatomy(grid: &GridSpec, jitter: Option<&mut ChaCha8Rng>) -> Result<Anatomy> {
    let (nx, ny, nz) = grid.dims;
    let (fx, fy, fz) = (nx as f64, ny as f64, nz as f64);

    // per-patient multiplicative size scales and center shifts
    let (scales, shift) = match jitter {
        Some(rng) => {
            let mut s = [0.0f64; 6];
            for v in &mut s {
                *v = 0.85 + 0.3 * rng.random::<f64>();
            }
            let shift = (
                0.03 * fx * (2.0 * rng.random::<f64>() - 1.0),
                0.03 * fy * (2.0 * rng.random::<f64>() - 1.0),
            );
            (s, shift)
        }
        None => ([1.0; 6], (0.0, 0.0)),
    };

    // Shape parameters in voxel units, relative to the grid.
    let heart_c = (0.36 * fx + shift.0, 0.42 * fy + shift.1, 0.48 * fz);
    let heart_r = (
        0.18 * fx * scales[0],
        0.15 * fy * scales[1],
        0.22 * fz * scales[2],
    );
    let eso_amp = 0.05 * fx * scales[3];
    let eso_x0 = 0.58 * fx + shift.0;
    let eso_y0 = 0.52 * fy + shift.1;
    let eso_r = (0.050 * fx.min(fy) * scales[4]).max(1.6);
    let cord_c = (0.50 * fx + shift.0, 0.74 * fy);
    let cord_r = (0.042 * fx.min(fy) * scales[5]).max(1.4);

    // Fit check with a one-voxel margin.
    let fits = heart_c.0 - heart_r.0 >= 1.0
        && heart_c.0 + heart_r.0 <= fx - 1.0
        && heart_c.1 - heart_r.1 >= 1.0
        && heart_c.1 + heart_r.1 <= fy - 1.0
        && heart_c.2 - heart_r.2 >= 1.0
        && heart_c.2 + heart_r.2 <= fz - 1.0
        && eso_x0 - eso_amp - eso_r >= 1.0
        && eso_x0 + eso_amp + eso_r <= fx - 1.0
        && eso_y0 - eso_r >= 1.0
        && eso_y0 + eso_r <= fy - 1.0
        && cord_c.0 - cord_r >= 1.0
        && cord_c.0 + cord_r <= fx - 1.0
        && cord_c.1 - cord_r >= 1.0
        && cord_c.1 + cord_r <= fy - 1.0;
    if !fits {
        return Err(CompassError::InvalidConfig(format!(
            "organs do not fit grid {grid}"
        )));
    }

    let len = grid.len();
    let mut heart = vec![false; len];
    let mut eso = vec![false; len];
    let mut cord = vec![false; len];
    for idx in 0..len {
        let (x, y, z) = grid.coords(idx);
        let (xf, yf, zf) = (x as f64 + 0.5, y as f64 + 0.5, z as f64 + 0.5);

        let he = ((xf - heart_c.0) / heart_r.0).powi(2)
            + ((yf - heart_c.1) / heart_r.1).powi(2)
            + ((zf - heart_c.2) / heart_r.2).powi(2);
        if he <= 1.0 {
            heart[idx] = true;
        }

        let eso_x = eso_x0 + eso_amp * (std::f64::consts::PI * zf / fz).sin();
        if (xf - eso_x).powi(2) + (yf - eso_y0).powi(2) <= eso_r * eso_r {
            eso[idx] = true;
        }

        if (xf - cord_c.0).powi(2) + (yf - cord_c.1).powi(2) <= cord_r * cord_r {
            cord[idx] = true;
        }
    }

    let mut masks = BTreeMap::new();
    masks.insert(OrganId::Heart, OrganMask::new(*grid, heart)?);
    masks.insert(OrganId::Esophagus, OrganMask::new(*grid, eso)?);
    masks.insert(OrganId::SpinalCord, OrganMask::new(*grid, cord)?);

    let tumor_vox = (0.52 * fx, 0.46 * fy, 0.50 * fz);
    let tumor_center_mm = (
        grid.origin_mm.0 + tumor_vox.0 * grid.spacing_mm.0,
        grid.origin_mm.1 + tumor_vox.1 * grid.spacing_mm.1,
        grid.origin_mm.2 + tumor_vox.2 * grid.spacing_mm.2,
    );
    Ok(Anatomy { masks, tumor_center_mm })
}

// ---------------------------------------------------------------------------
// Generation
// ---------------------------------------------------------------------------

struct Beam {
    center_mm: (f64, f64, f64),
    amplitude_gy: f64,
}

fn dose_volume(grid: &GridSpec, beams: &[Beam], sigma: (f64, f64, f64)) -> Result<VoxelVolume> {
    let inv2 = (
        1.0 / (2.0 * sigma.0 * sigma.0),
        1.0 / (2.0 * sigma.1 * sigma.1),
        1.0 / (2.0 * sigma.2 * sigma.2),
    );
    let values = par::map_range(grid.len(), |idx| {
        let (x, y, z) = grid.coords(idx);
        let p = grid.position_mm(x, y, z);
        let mut d = 0.0;
        for b in beams {
            let dx = p.0 - b.center_mm.0;
            let dy = p.1 - b.center_mm.1;
            let dz = p.2 - b.center_mm.2;
            d += b.amplitude_gy * (-(dx * dx * inv2.0 + dy * dy * inv2.1 + dz * dz * inv2.2)).exp();
        }
        d
    });
    VoxelVolume::new(*grid, VolumeRole::Dose, values)
}

/// Hottest-2% minimum of a value set (the planted-rule statistic).
fn hottest_2pct_min(vals: &[f64]) -> f64 {
    let mut desc = vals.to_vec();
    desc.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let k = ((2.0 * desc.len() as f64 / 100.0).ceil() as usize).clamp(1, desc.len());
    desc[k - 1]
}

/// Smooth additive texture: a handful of random Gaussian blobs per volume,
/// so intensity histograms vary independently of the dose field.
struct TextureBlob {
    center_mm: (f64, f64, f64),
    inv_2s2: f64,
    amplitude: f64,
}

fn draw_blobs(grid: &GridSpec, rng: &mut ChaCha8Rng, count: usize, amp: f64) -> Vec<TextureBlob> {
    let extent = (
        grid.dims.0 as f64 * grid.spacing_mm.0,
        grid.dims.1 as f64 * grid.spacing_mm.1,
        grid.dims.2 as f64 * grid.spacing_mm.2,
    );
    (0..count)
        .map(|_| {
            let center_mm = (
                grid.origin_mm.0 + rng.random::<f64>() * extent.0,
                grid.origin_mm.1 + rng.random::<f64>() * extent.1,
                grid.origin_mm.2 + rng.random::<f64>() * extent.2,
            );
            let sigma = 6.0 + 12.0 * rng.random::<f64>();
            TextureBlob {
                center_mm,
                inv_2s2: 1.0 / (2.0 * sigma * sigma),
                amplitude: amp * normal(rng),
            }
        })
        .collect()
}

fn blob_value(blobs: &[TextureBlob], pos: (f64, f64, f64)) -> f64 {
    let mut v = 0.0;
    for b in blobs {
        let dx = pos.0 - b.center_mm.0;
        let dy = pos.1 - b.center_mm.1;
        let dz = pos.2 - b.center_mm.2;
        v += b.amplitude * (-(dx * dx + dy * dy + dz * dz) * b.inv_2s2).exp();
    }
    v
}

fn generate_patient(config: &CohortConfig, p: usize) -> Result<PatientCase> {
    let grid = &config.grid;
    let id = format!("P{:02}", p + 1);
    let mut plan = stream_rng(config.rng_seed, p, StreamKind::Plan, 0);
    let mut anat_rng = stream_rng(config.rng_seed, p, StreamKind::Anatomy, 0);
    let anatomy = build_anatomy(grid, Some(&mut anat_rng))?;

    let n_frac = plan.random_range(config.min_fractions..=config.max_fractions);

    // Per-patient aim offset shared by all beams and fractions.
    let aim = (
        config.aim_jitter_mm * normal(&mut plan),
        config.aim_jitter_mm * normal(&mut plan),
        config.aim_jitter_mm * normal(&mut plan),
    );
    // Fixed per-beam spread around the jittered aim.
    let beam_offsets: Vec<(f64, f64, f64)> = (0..config.beam_count)
        .map(|_| (6.0 * normal(&mut plan), 6.0 * normal(&mut plan), 4.0 * normal(&mut plan)))
        .collect();

    let mut times = Vec::with_capacity(n_frac);
    let mut t = 0.0;
    for k in 0..n_frac {
        if k > 0 {
            t += 1.0 + 2.0 * plan.random::<f64>(); // gaps in [1, 3) days
        }
        times.push(t);
    }

    // Per-fraction dose: delivery wobble and output variation decorrelate
    // per-fraction dosiomics from the cumulative DVH picture.
    let mut doses = Vec::with_capacity(n_frac);
    for _ in 0..n_frac {
        let beams: Vec<Beam> = beam_offsets
            .iter()
            .map(|off| {
                let wobble = (2.5 * normal(&mut plan), 2.5 * normal(&mut plan), 2.5 * normal(&mut plan));
                let weight = 0.8 + 0.4 * plan.random::<f64>();
                Beam {
                    center_mm: (
                        anatomy.tumor_center_mm.0 + aim.0 + off.0 + wobble.0,
                        anatomy.tumor_center_mm.1 + aim.1 + off.1 + wobble.1,
                        anatomy.tumor_center_mm.2 + aim.2 + off.2 + wobble.2,
                    ),
                    amplitude_gy: config.beam_peak_gy / config.beam_count as f64 * weight,
                }
            })
            .collect();
        doses.push(dose_volume(grid, &beams, config.beam_sigma_mm)?);
    }

    // Planted rule on full-course cumulative EQD2 per organ.
    let mut destined = BTreeMap::new();
    for organ in OrganId::ALL {
        let mask = &anatomy.masks[&organ];
        let ab = organ.alpha_beta_gy();
        let denom = 1.0 + 2.0 / ab;
        let mut cum_bed = vec![0.0f64; mask.count()];
        for dose in &doses {
            let roi = volume::masked_values(dose, mask)?;
            for (acc, d) in cum_bed.iter_mut().zip(roi.iter()) {
                *acc += bed_scalar(*d, ab);
            }
        }
        let eqd2_roi: Vec<f64> = cum_bed.iter().map(|b| b / denom).collect();
        destined.insert(organ, hottest_2pct_min(&eqd2_roi) > config.hotspot_threshold_gy);
    }

    // Labels: planted verdict flipped with label-noise probability.
    let mut labels = BTreeMap::new();
    for (oi, organ) in OrganId::ALL.into_iter().enumerate() {
        let mut flip_rng = stream_rng(config.rng_seed, p, StreamKind::LabelFlip, oi);
        let flip = flip_rng.random::<f64>() < config.label_noise;
        labels.insert(organ, destined[&organ] != flip);
    }

    // Patient biology: organ-specific image baselines independent of dose,
    // so intensity features carry their own variance across the cohort.
    let mut bio = stream_rng(config.rng_seed, p, StreamKind::Biology, 0);
    let background_hu = -750.0 + 12.0 * normal(&mut bio);
    let mut organ_hu = BTreeMap::new();
    let mut organ_suv = BTreeMap::new();
    for (organ, base_hu) in [
        (OrganId::Heart, 40.0),
        (OrganId::Esophagus, 30.0),
        (OrganId::SpinalCord, 25.0),
    ] {
        organ_hu.insert(organ, base_hu + 18.0 * normal(&mut bio));
        organ_suv.insert(organ, 0.35 * (0.5 * normal(&mut bio)).exp());
    }
    let tumor_hu_amp = 820.0 * (0.85 + 0.3 * bio.random::<f64>());
    let tumor_suv_amp = 1.6 * (0.8 + 0.4 * bio.random::<f64>());
    let background_suv = 0.7 * (0.2 * normal(&mut bio)).exp();

    // Cumulative physical dose drives the PET inflammation term.
    let len = grid.len();
    let mut cum_dose = vec![0.0f64; len];
    let mut fractions = Vec::with_capacity(n_frac);
    for (k, dose) in doses.iter().enumerate() {
        for (acc, d) in cum_dose.iter_mut().zip(dose.values().iter()) {
            *acc += *d;
        }

        let mut ct_rng = stream_rng(config.rng_seed, p, StreamKind::CtNoise, k);
        let mut pet_rng = stream_rng(config.rng_seed, p, StreamKind::PetNoise, k);
        let ct_blobs = draw_blobs(grid, &mut ct_rng, 3, 35.0);
        let pet_blobs = draw_blobs(grid, &mut pet_rng, 3, 0.18);

        let mut ct_vals = Vec::with_capacity(len);
        let mut pet_vals = Vec::with_capacity(len);
        for idx in 0..len {
            let (x, y, z) = grid.coords(idx);
            let pos = grid.position_mm(x, y, z);
            let dxm = pos.0 - anatomy.tumor_center_mm.0;
            let dym = pos.1 - anatomy.tumor_center_mm.1;
            let dzm = pos.2 - anatomy.tumor_center_mm.2;
            let r2 = dxm * dxm + dym * dym + dzm * dzm;

            // Lung background with soft-tissue organs and a tumor blob.
            let mut hu = background_hu + tumor_hu_amp * (-r2 / (2.0 * 14.0 * 14.0)).exp();
            for organ in OrganId::ALL {
                if anatomy.masks[&organ].inside()[idx] {
                    hu = organ_hu[&organ];
                    break;
                }
            }
            hu += blob_value(&ct_blobs, pos);
            hu += config.ct_noise_hu * normal(&mut ct_rng);
            ct_vals.push(hu);

            // Metabolic baseline plus inflammation in destined organs.
            let mut suv = background_suv + tumor_suv_amp * (-r2 / (2.0 * 16.0 * 16.0)).exp();
            for organ in OrganId::ALL {
                if anatomy.masks[&organ].inside()[idx] {
                    suv += organ_suv[&organ];
                    if destined[&organ] {
                        suv += config.pet_inflammation_per_gy * cum_dose[idx];
                    }
                    break;
                }
            }
            suv += blob_value(&pet_blobs, pos);
            suv += config.pet_noise * normal(&mut pet_rng);
            pet_vals.push(suv.max(0.0));
        }

        fractions.push(FractionRecord {
            index: k + 1,
            time_offset_days: times[k],
            dose: dose.clone(),
            ct: VoxelVolume::new(*grid, VolumeRole::Ct, ct_vals)?,
            pet: VoxelVolume::new(*grid, VolumeRole::Pet, pet_vals)?,
        });
    }

    PatientCase::new(id, fractions, anatomy.masks.clone(), labels)
}

/// Generate the full cohort; deterministic given the config (seed included).
pub fn generate_cohort(config: &CohortConfig) -> Result<Vec<PatientCase>> {
    config.validate()?;
    // nominal-atlas fit check gives a clean config error before fan-out
    build_anatomy(&config.grid, None)?;
    par::map_tasks(config.n_patients, |p| generate_patient(config, p))
        .into_iter()
        .collect()
}

// ---------------------------------------------------------------------------
// Manifest I/O
// ---------------------------------------------------------------------------

const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_NAME: &str = "cohort.json";

#[derive(Debug, Serialize, Deserialize)]
struct ManifestFraction {
    index: usize,
    time_offset_days: f64,
    dose: String,
    ct: String,
    pet: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestPatient {
    id: String,
    labels: BTreeMap<OrganId, bool>,
    masks: BTreeMap<OrganId, String>,
    fractions: Vec<ManifestFraction>,
}

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    schema_version: u32,
    config: CohortConfig,
    patients: Vec<ManifestPatient>,
}

fn io_err(path: &Path, source: std::io::Error) -> CompassError {
    CompassError::Io { path: path.to_path_buf(), source }
}

/// Write manifest plus all volumes under `dir`.
pub fn write_cohort(cohort: &[PatientCase], config: &CohortConfig, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let mut patients = Vec::with_capacity(cohort.len());
    for case in cohort {
        let pdir = dir.join(&case.id);
        fs::create_dir_all(&pdir).map_err(|e| io_err(&pdir, e))?;

        let mut masks = BTreeMap::new();
        for organ in OrganId::ALL {
            let rel = format!("{}/mask_{}.cvol", case.id, organ.name());
            volume::write_mask(case.mask(organ), &dir.join(&rel))?;
            masks.insert(organ, rel);
        }

        let mut fractions = Vec::with_capacity(case.fractions.len());
        for f in &case.fractions {
            let rel_dose = format!("{}/f{:02}_dose.cvol", case.id, f.index);
            let rel_ct = format!("{}/f{:02}_ct.cvol", case.id, f.index);
            let rel_pet = format!("{}/f{:02}_pet.cvol", case.id, f.index);
            volume::write_volume(&f.dose, &dir.join(&rel_dose))?;
            volume::write_volume(&f.ct, &dir.join(&rel_ct))?;
            volume::write_volume(&f.pet, &dir.join(&rel_pet))?;
            fractions.push(ManifestFraction {
                index: f.index,
                time_offset_days: f.time_offset_days,
                dose: rel_dose,
                ct: rel_ct,
                pet: rel_pet,
            });
        }

        patients.push(ManifestPatient {
            id: case.id.clone(),
            labels: case.labels.clone(),
            masks,
            fractions,
        });
    }

    let manifest = Manifest {
        schema_version: MANIFEST_SCHEMA_VERSION,
        config: config.clone(),
        patients,
    };
    let path = dir.join(MANIFEST_NAME);
    let body = serde_json::to_string_pretty(&manifest)
        .map_err(|e| CompassError::MalformedManifest(e.to_string()))?;
    fs::write(&path, body).map_err(|e| io_err(&path, e))
}

/// Load a cohort written by [`write_cohort`]; returns cases plus the
/// config echo stored in the manifest.
pub fn load_cohort(dir: &Path) -> Result<(Vec<PatientCase>, CohortConfig)> {
    let path = dir.join(MANIFEST_NAME);
    if !path.exists() {
        return Err(CompassError::MissingFile { path });
    }
    let body = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&body).map_err(|e| CompassError::MalformedManifest(e.to_string()))?;
    if manifest.schema_version != MANIFEST_SCHEMA_VERSION {
        return Err(CompassError::MalformedManifest(format!(
            "unsupported schema_version {}",
            manifest.schema_version
        )));
    }

    let mut cohort = Vec::with_capacity(manifest.patients.len());
    for mp in manifest.patients {
        let mut seen = std::collections::BTreeSet::new();
        for f in &mp.fractions {
            if !seen.insert(f.index) {
                return Err(CompassError::DuplicateFraction {
                    patient: mp.id.clone(),
                    index: f.index,
                });
            }
        }

        let mut masks = BTreeMap::new();
        for (organ, rel) in &mp.masks {
            masks.insert(*organ, volume::read_mask(&dir.join(rel))?);
        }

        let mut fractions = Vec::with_capacity(mp.fractions.len());
        for f in &mp.fractions {
            fractions.push(FractionRecord {
                index: f.index,
                time_offset_days: f.time_offset_days,
                dose: volume::read_volume(&dir.join(&f.dose))?,
                ct: volume::read_volume(&dir.join(&f.ct))?,
                pet: volume::read_volume(&dir.join(&f.pet))?,
            });
        }
        cohort.push(PatientCase::new(mp.id, fractions, masks, mp.labels)?);
    }
    Ok((cohort, manifest.config))
}
