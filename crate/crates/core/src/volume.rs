//! Voxel-grid data model: grids, scalar volumes, organ masks, organ
//! constants, average intensity projection, and `.cvol` container I/O.
//!
//! Flat ordering is x-fastest, then y, then z. Values live in memory as
//! f64 (all arithmetic is 64-bit); the on-disk payload is little-endian
//! f32 for volumes and one byte per voxel (0/1) for masks.

use std::fmt;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CompassError, Result};
use crate::par;

/// Voxel grid geometry: counts, spacing and origin in millimeters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: (usize, usize, usize),
    pub spacing_mm: (f64, f64, f64),
    pub origin_mm: (f64, f64, f64),
}

impl GridSpec {
    pub fn new(
        dims: (usize, usize, usize),
        spacing_mm: (f64, f64, f64),
        origin_mm: (f64, f64, f64),
    ) -> Result<Self> {
        if dims.0 < 1 || dims.1 < 1 || dims.2 < 1 {
            return Err(CompassError::InvalidConfig(format!(
                "grid dims must be >= 1, got {dims:?}"
            )));
        }
        let s = [spacing_mm.0, spacing_mm.1, spacing_mm.2];
        if s.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(CompassError::InvalidConfig(format!(
                "grid spacing must be positive, got {spacing_mm:?}"
            )));
        }
        let o = [origin_mm.0, origin_mm.1, origin_mm.2];
        if o.iter().any(|v| !v.is_finite()) {
            return Err(CompassError::InvalidConfig("grid origin must be finite".into()));
        }
        Ok(Self { dims, spacing_mm, origin_mm })
    }

    /// Total voxel count.
    pub fn len(&self) -> usize {
        self.dims.0 * self.dims.1 * self.dims.2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume of one voxel in cubic centimeters.
    pub fn voxel_volume_cc(&self) -> f64 {
        self.spacing_mm.0 * self.spacing_mm.1 * self.spacing_mm.2 / 1000.0
    }

    /// Flat index for (x, y, z); x-fastest ordering.
    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims.0 * (y + self.dims.1 * z)
    }

    /// Inverse of [`GridSpec::index`].
    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize, usize) {
        let (nx, ny, _) = self.dims;
        (idx % nx, (idx / nx) % ny, idx / (nx * ny))
    }

    /// Physical position of a voxel center in millimeters.
    #[inline]
    pub fn position_mm(&self, x: usize, y: usize, z: usize) -> (f64, f64, f64) {
        (
            self.origin_mm.0 + (x as f64 + 0.5) * self.spacing_mm.0,
            self.origin_mm.1 + (y as f64 + 0.5) * self.spacing_mm.1,
            self.origin_mm.2 + (z as f64 + 0.5) * self.spacing_mm.2,
        )
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x{}x{} @ ({}, {}, {}) mm",
            self.dims.0, self.dims.1, self.dims.2,
            self.spacing_mm.0, self.spacing_mm.1, self.spacing_mm.2
        )
    }
}

/// What the scalar at each voxel means; carried into the `.cvol` header.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VolumeRole {
    Ct,
    Pet,
    Dose,
    Bed,
    Eqd2,
    Probability,
    Mask,
}

impl fmt::Display for VolumeRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            VolumeRole::Ct => "ct",
            VolumeRole::Pet => "pet",
            VolumeRole::Dose => "dose",
            VolumeRole::Bed => "bed",
            VolumeRole::Eqd2 => "eqd2",
            VolumeRole::Probability => "probability",
            VolumeRole::Mask => "mask",
        };
        f.write_str(s)
    }
}

/// 3D scalar field on a grid. Immutable after construction.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelVolume {
    grid: GridSpec,
    role: VolumeRole,
    values: Vec<f64>,
}

impl VoxelVolume {
    pub fn new(grid: GridSpec, role: VolumeRole, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(CompassError::LengthMismatch {
                expected: grid.len(),
                actual: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(CompassError::NonFinite {
                context: format!("volume value at voxel {i}"),
            });
        }
        Ok(Self { grid, role, values })
    }

    /// Constant-valued volume.
    pub fn constant(grid: GridSpec, role: VolumeRole, value: f64) -> Result<Self> {
        Self::new(grid, role, vec![value; grid.len()])
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn role(&self) -> VolumeRole {
        self.role
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Same grid, new values and role.
    pub fn with_values(&self, role: VolumeRole, values: Vec<f64>) -> Result<Self> {
        Self::new(self.grid, role, values)
    }
}

fn grid_mismatch(expected: &GridSpec, actual: &GridSpec) -> CompassError {
    CompassError::GridMismatch {
        expected: expected.to_string(),
        actual: actual.to_string(),
    }
}

/// Check two grids for exact equality.
pub fn ensure_same_grid(expected: &GridSpec, actual: &GridSpec) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(grid_mismatch(expected, actual))
    }
}

/// Binary organ mask on a grid; at least one voxel inside.
#[derive(Debug, Clone, PartialEq)]
pub struct OrganMask {
    grid: GridSpec,
    inside: Vec<bool>,
}

impl OrganMask {
    pub fn new(grid: GridSpec, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.len() {
            return Err(CompassError::LengthMismatch {
                expected: grid.len(),
                actual: inside.len(),
            });
        }
        if !inside.iter().any(|b| *b) {
            return Err(CompassError::EmptyMask);
        }
        Ok(Self { grid, inside })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn inside(&self) -> &[bool] {
        &self.inside
    }

    /// Number of voxels inside the mask.
    pub fn count(&self) -> usize {
        self.inside.iter().filter(|b| **b).count()
    }

    /// Flat indices of inside voxels, ascending.
    pub fn indices(&self) -> Vec<usize> {
        self.inside
            .iter()
            .enumerate()
            .filter_map(|(i, b)| b.then_some(i))
            .collect()
    }
}

/// Organs at risk tracked by the pipeline, with their radiobiology
/// constants and classification thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrganId {
    Heart,
    Esophagus,
    SpinalCord,
}

impl OrganId {
    pub const ALL: [OrganId; 3] = [OrganId::Heart, OrganId::Esophagus, OrganId::SpinalCord];

    /// Linear-quadratic alpha/beta ratio in Gy.
    pub fn alpha_beta_gy(&self) -> f64 {
        match self {
            OrganId::Heart => 3.0,
            OrganId::Esophagus => 3.0,
            OrganId::SpinalCord => 2.0,
        }
    }

    /// Probability threshold for calling an organ toxic.
    pub fn classification_threshold(&self) -> f64 {
        match self {
            OrganId::Heart => 0.6,
            OrganId::Esophagus => 0.4,
            OrganId::SpinalCord => 0.5,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OrganId::Heart => "heart",
            OrganId::Esophagus => "esophagus",
            OrganId::SpinalCord => "spinal_cord",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "heart" => Ok(OrganId::Heart),
            "esophagus" => Ok(OrganId::Esophagus),
            "spinal_cord" | "spinalcord" | "cord" => Ok(OrganId::SpinalCord),
            other => Err(CompassError::InvalidConfig(format!("unknown organ '{other}'"))),
        }
    }
}

impl fmt::Display for OrganId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-voxel arithmetic mean of volumes sharing one grid.
pub fn aip(volumes: &[VoxelVolume]) -> Result<VoxelVolume> {
    let first = volumes.first().ok_or(CompassError::EmptyInput("aip input"))?;
    for v in &volumes[1..] {
        ensure_same_grid(first.grid(), v.grid())?;
    }
    let n = volumes.len() as f64;
    let values = par::map_range(first.len(), |i| {
        let mut acc = 0.0;
        for v in volumes {
            acc += v.values[i];
        }
        acc / n
    });
    VoxelVolume::new(*first.grid(), first.role(), values)
}

/// Values of voxels inside the mask, in flat-index order.
pub fn masked_values(vol: &VoxelVolume, mask: &OrganMask) -> Result<Vec<f64>> {
    ensure_same_grid(vol.grid(), mask.grid())?;
    Ok(vol
        .values
        .iter()
        .zip(mask.inside.iter())
        .filter_map(|(v, b)| b.then_some(*v))
        .collect())
}

/// Physical volume of the mask in cubic centimeters.
pub fn organ_volume_cc(mask: &OrganMask) -> f64 {
    mask.count() as f64 * mask.grid().voxel_volume_cc()
}

// ---------------------------------------------------------------------------
// .cvol container: one UTF-8 JSON header line, '\n', little-endian payload.
// ---------------------------------------------------------------------------

const CVOL_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
struct CvolHeader {
    schema_version: u32,
    dims: [usize; 3],
    spacing_mm: [f64; 3],
    origin_mm: [f64; 3],
    dtype: String,
    role: VolumeRole,
}

impl CvolHeader {
    fn grid(&self) -> Result<GridSpec> {
        GridSpec::new(
            (self.dims[0], self.dims[1], self.dims[2]),
            (self.spacing_mm[0], self.spacing_mm[1], self.spacing_mm[2]),
            (self.origin_mm[0], self.origin_mm[1], self.origin_mm[2]),
        )
    }
}

fn io_err(path: &Path, source: std::io::Error) -> CompassError {
    CompassError::Io { path: path.to_path_buf(), source }
}

fn write_container(path: &Path, header: &CvolHeader, payload: &[u8]) -> Result<()> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let head = serde_json::to_string(header)
        .map_err(|e| CompassError::MalformedHeader(e.to_string()))?;
    w.write_all(head.as_bytes()).map_err(|e| io_err(path, e))?;
    w.write_all(b"\n").map_err(|e| io_err(path, e))?;
    w.write_all(payload).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

fn read_container(path: &Path) -> Result<(CvolHeader, Vec<u8>)> {
    if !path.exists() {
        return Err(CompassError::MissingFile { path: path.to_path_buf() });
    }
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut r = BufReader::new(file);
    let mut raw = Vec::new();
    r.read_to_end(&mut raw).map_err(|e| io_err(path, e))?;
    let nl = raw
        .iter()
        .position(|b| *b == b'\n')
        .ok_or_else(|| CompassError::MalformedHeader("missing header newline".into()))?;
    let head_str = std::str::from_utf8(&raw[..nl])
        .map_err(|_| CompassError::MalformedHeader("header is not UTF-8".into()))?;
    let header: CvolHeader = serde_json::from_str(head_str)
        .map_err(|e| CompassError::MalformedHeader(e.to_string()))?;
    if header.schema_version != CVOL_SCHEMA_VERSION {
        return Err(CompassError::MalformedHeader(format!(
            "unsupported schema_version {}",
            header.schema_version
        )));
    }
    Ok((header, raw[nl + 1..].to_vec()))
}

/// Write a volume as `.cvol` (f32 payload).
pub fn write_volume(vol: &VoxelVolume, path: &Path) -> Result<()> {
    let header = CvolHeader {
        schema_version: CVOL_SCHEMA_VERSION,
        dims: [vol.grid.dims.0, vol.grid.dims.1, vol.grid.dims.2],
        spacing_mm: [vol.grid.spacing_mm.0, vol.grid.spacing_mm.1, vol.grid.spacing_mm.2],
        origin_mm: [vol.grid.origin_mm.0, vol.grid.origin_mm.1, vol.grid.origin_mm.2],
        dtype: "f32".into(),
        role: vol.role,
    };
    let mut payload = Vec::with_capacity(vol.len() * 4);
    for v in &vol.values {
        payload.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    write_container(path, &header, &payload)
}

/// Read a `.cvol` volume written by [`write_volume`].
pub fn read_volume(path: &Path) -> Result<VoxelVolume> {
    let (header, payload) = read_container(path)?;
    if header.dtype != "f32" {
        return Err(CompassError::MalformedHeader(format!(
            "expected dtype f32, got {}",
            header.dtype
        )));
    }
    let grid = header.grid()?;
    if payload.len() != grid.len() * 4 {
        return Err(CompassError::LengthMismatch {
            expected: grid.len() * 4,
            actual: payload.len(),
        });
    }
    let mut values = Vec::with_capacity(grid.len());
    for chunk in payload.chunks_exact(4) {
        let v = f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]]);
        values.push(v as f64);
    }
    VoxelVolume::new(grid, header.role, values)
}

/// Write a mask as `.cvol` (byte-per-voxel 0/1 payload).
pub fn write_mask(mask: &OrganMask, path: &Path) -> Result<()> {
    let header = CvolHeader {
        schema_version: CVOL_SCHEMA_VERSION,
        dims: [mask.grid.dims.0, mask.grid.dims.1, mask.grid.dims.2],
        spacing_mm: [mask.grid.spacing_mm.0, mask.grid.spacing_mm.1, mask.grid.spacing_mm.2],
        origin_mm: [mask.grid.origin_mm.0, mask.grid.origin_mm.1, mask.grid.origin_mm.2],
        dtype: "u8".into(),
        role: VolumeRole::Mask,
    };
    let payload: Vec<u8> = mask.inside.iter().map(|b| u8::from(*b)).collect();
    write_container(path, &header, &payload)
}

/// Read a `.cvol` mask written by [`write_mask`].
pub fn read_mask(path: &Path) -> Result<OrganMask> {
    let (header, payload) = read_container(path)?;
    if header.dtype != "u8" {
        return Err(CompassError::MalformedHeader(format!(
            "expected dtype u8, got {}",
            header.dtype
        )));
    }
    let grid = header.grid()?;
    if payload.len() != grid.len() {
        return Err(CompassError::LengthMismatch {
            expected: grid.len(),
            actual: payload.len(),
        });
    }
    let mut inside = Vec::with_capacity(grid.len());
    for b in payload {
        match b {
            0 => inside.push(false),
            1 => inside.push(true),
            other => {
                return Err(CompassError::MalformedHeader(format!(
                    "mask payload byte {other} is not 0/1"
                )))
            }
        }
    }
    OrganMask::new(grid, inside)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid(nx: usize, ny: usize, nz: usize) -> GridSpec {
        GridSpec::new((nx, ny, nz), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).unwrap()
    }

    #[test]
    fn grid_rejects_bad_dims_and_spacing() {
        assert!(GridSpec::new((0, 2, 2), (1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).is_err());
        assert!(GridSpec::new((2, 2, 2), (0.0, 1.0, 1.0), (0.0, 0.0, 0.0)).is_err());
        assert!(GridSpec::new((2, 2, 2), (-1.0, 1.0, 1.0), (0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn flat_ordering_is_x_fastest() {
        let g = grid(3, 4, 5);
        assert_eq!(g.index(1, 0, 0), 1);
        assert_eq!(g.index(0, 1, 0), 3);
        assert_eq!(g.index(0, 0, 1), 12);
        for idx in [0usize, 7, 33, 59] {
            let (x, y, z) = g.coords(idx);
            assert_eq!(g.index(x, y, z), idx);
        }
    }

    #[test]
    fn volume_rejects_length_mismatch_and_nan() {
        let g = grid(2, 2, 2);
        assert!(VoxelVolume::new(g, VolumeRole::Ct, vec![0.0; 7]).is_err());
        let mut vals = vec![0.0; 8];
        vals[3] = f64::NAN;
        assert!(VoxelVolume::new(g, VolumeRole::Ct, vals).is_err());
    }

    #[test]
    fn aip_of_one_and_of_identical_pair_is_identity() {
        let g = grid(2, 2, 1);
        let v = VoxelVolume::new(g, VolumeRole::Ct, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(aip(&[v.clone()]).unwrap().values(), v.values());
        assert_eq!(aip(&[v.clone(), v.clone()]).unwrap().values(), v.values());
    }

    #[test]
    fn aip_hand_mean() {
        let g = grid(1, 1, 1);
        let a = VoxelVolume::new(g, VolumeRole::Ct, vec![2.0]).unwrap();
        let b = VoxelVolume::new(g, VolumeRole::Ct, vec![4.0]).unwrap();
        assert_eq!(aip(&[a, b]).unwrap().values(), &[3.0]);
    }

    #[test]
    fn aip_rejects_empty_and_grid_mismatch() {
        assert!(aip(&[]).is_err());
        let a = VoxelVolume::constant(grid(2, 2, 2), VolumeRole::Ct, 1.0).unwrap();
        let b = VoxelVolume::constant(grid(2, 2, 1), VolumeRole::Ct, 1.0).unwrap();
        assert!(aip(&[a, b]).is_err());
    }

    #[test]
    fn masked_values_full_single_and_checkerboard() {
        let g = grid(2, 2, 2);
        let v =
            VoxelVolume::new(g, VolumeRole::Dose, (1..=8).map(f64::from).collect()).unwrap();

        let full = OrganMask::new(g, vec![true; 8]).unwrap();
        assert_eq!(masked_values(&v, &full).unwrap(), (1..=8).map(f64::from).collect::<Vec<_>>());

        let mut single = vec![false; 8];
        single[5] = true;
        let single = OrganMask::new(g, single).unwrap();
        assert_eq!(masked_values(&v, &single).unwrap(), vec![6.0]);

        // even flat indices inside
        let checker: Vec<bool> = (0..8).map(|i| i % 2 == 0).collect();
        let checker = OrganMask::new(g, checker).unwrap();
        assert_eq!(masked_values(&v, &checker).unwrap(), vec![1.0, 3.0, 5.0, 7.0]);
    }

    #[test]
    fn organ_volume_examples() {
        let g = grid(10, 10, 10);
        let full = OrganMask::new(g, vec![true; 1000]).unwrap();
        assert_eq!(organ_volume_cc(&full), 1.0);

        let g10 = GridSpec::new((1, 1, 1), (10.0, 10.0, 10.0), (0.0, 0.0, 0.0)).unwrap();
        let one = OrganMask::new(g10, vec![true]).unwrap();
        assert_eq!(organ_volume_cc(&one), 1.0);
    }

    #[test]
    fn empty_mask_rejected() {
        let g = grid(2, 2, 2);
        assert!(matches!(
            OrganMask::new(g, vec![false; 8]),
            Err(CompassError::EmptyMask)
        ));
    }

    #[test]
    fn organ_volume_additive_over_disjoint_masks() {
        let g = grid(4, 4, 4);
        let a: Vec<bool> = (0..64).map(|i| i < 10).collect();
        let b: Vec<bool> = (0..64).map(|i| (10..25).contains(&i)).collect();
        let ab: Vec<bool> = (0..64).map(|i| i < 25).collect();
        let va = organ_volume_cc(&OrganMask::new(g, a).unwrap());
        let vb = organ_volume_cc(&OrganMask::new(g, b).unwrap());
        let vab = organ_volume_cc(&OrganMask::new(g, ab).unwrap());
        assert!((va + vb - vab).abs() < 1e-12);
    }

    #[test]
    fn volume_roundtrip_exact_for_stored_precision() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.cvol");
        let g = grid(3, 2, 2);
        // f32-representable values round-trip bit-identically
        let vals: Vec<f64> = (0..12).map(|i| (i as f32 * 0.25 - 1.5) as f64).collect();
        let v = VoxelVolume::new(g, VolumeRole::Pet, vals.clone()).unwrap();
        write_volume(&v, &path).unwrap();
        let back = read_volume(&path).unwrap();
        assert_eq!(back.values(), vals.as_slice());
        assert_eq!(back.grid(), v.grid());
        assert_eq!(back.role(), v.role());
    }

    #[test]
    fn read_rejects_length_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.cvol");
        let head = r#"{"schema_version":1,"dims":[2,2,2],"spacing_mm":[1.0,1.0,1.0],"origin_mm":[0.0,0.0,0.0],"dtype":"f32","role":"dose"}"#;
        let mut bytes = head.as_bytes().to_vec();
        bytes.push(b'\n');
        bytes.extend_from_slice(&[0u8; 7 * 4]); // 7 values for an 8-voxel grid
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(
            read_volume(&path),
            Err(CompassError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn read_rejects_nan_payload() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("nan.cvol");
        let head = r#"{"schema_version":1,"dims":[1,1,1],"spacing_mm":[1.0,1.0,1.0],"origin_mm":[0.0,0.0,0.0],"dtype":"f32","role":"dose"}"#;
        let mut bytes = head.as_bytes().to_vec();
        bytes.push(b'\n');
        bytes.extend_from_slice(&f32::NAN.to_le_bytes());
        std::fs::write(&path, bytes).unwrap();
        assert!(matches!(read_volume(&path), Err(CompassError::NonFinite { .. })));
    }

    #[test]
    fn read_rejects_malformed_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("garbage.cvol");
        std::fs::write(&path, b"not json\n\x00\x00").unwrap();
        assert!(matches!(
            read_volume(&path),
            Err(CompassError::MalformedHeader(_))
        ));
    }

    #[test]
    fn mask_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.cvol");
        let g = grid(3, 3, 1);
        let inside: Vec<bool> = (0..9).map(|i| i % 3 == 0).collect();
        let m = OrganMask::new(g, inside).unwrap();
        write_mask(&m, &path).unwrap();
        assert_eq!(read_mask(&path).unwrap(), m);
    }

    proptest! {
        #[test]
        fn aip_bounded_and_permutation_invariant(
            vals_a in proptest::collection::vec(-100.0f64..100.0, 8),
            vals_b in proptest::collection::vec(-100.0f64..100.0, 8),
            vals_c in proptest::collection::vec(-100.0f64..100.0, 8),
        ) {
            let g = grid(2, 2, 2);
            let a = VoxelVolume::new(g, VolumeRole::Ct, vals_a).unwrap();
            let b = VoxelVolume::new(g, VolumeRole::Ct, vals_b).unwrap();
            let c = VoxelVolume::new(g, VolumeRole::Ct, vals_c).unwrap();

            let abc = aip(&[a.clone(), b.clone(), c.clone()]).unwrap();
            let cab = aip(&[c.clone(), a.clone(), b.clone()]).unwrap();
            for i in 0..8 {
                prop_assert!((abc.values()[i] - cab.values()[i]).abs() <= 1e-12);
                let lo = a.values()[i].min(b.values()[i]).min(c.values()[i]);
                let hi = a.values()[i].max(b.values()[i]).max(c.values()[i]);
                prop_assert!(abc.values()[i] >= lo - 1e-12 && abc.values()[i] <= hi + 1e-12);
            }
        }

        #[test]
        fn cvol_roundtrip_identity_on_f32_values(
            raw in proptest::collection::vec(-1e6f32..1e6, 24)
        ) {
            let dir = tempfile::tempdir().unwrap();
            let path = dir.path().join("v.cvol");
            let g = grid(2, 3, 4);
            let vals: Vec<f64> = raw.iter().map(|v| *v as f64).collect();
            let v = VoxelVolume::new(g, VolumeRole::Dose, vals.clone()).unwrap();
            write_volume(&v, &path).unwrap();
            let back = read_volume(&path).unwrap();
            prop_assert_eq!(back.values(), vals.as_slice());
        }
    }
}
