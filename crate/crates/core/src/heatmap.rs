//! Per-voxel toxicity probability maps from cumulative EQD2 and organ
//! tolerance thresholds, with axial slice overlay export.
//!
//! The dose-response map is a logistic centered at the organ tolerance:
//! p = 1/(1 + exp(−(EQD2 − D_tol)/w)). The esophageal 34 Gy default is a
//! planning constraint; the heart (40 Gy) and spinal cord (50 Gy) defaults
//! are conventional planning values and configurable, not ground truth.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{CompassError, Result};
use crate::par;
use crate::volume::{ensure_same_grid, OrganId, OrganMask, VolumeRole, VoxelVolume};

/// Per-organ tolerance EQD2 and sigmoid width (default 0.1·D_tol).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ToleranceModel {
    pub tolerance_eqd2_gy: BTreeMap<OrganId, f64>,
    pub width_gy: BTreeMap<OrganId, f64>,
}

impl Default for ToleranceModel {
    fn default() -> Self {
        let tolerance_eqd2_gy = BTreeMap::from([
            (OrganId::Esophagus, 34.0),
            (OrganId::Heart, 40.0),
            (OrganId::SpinalCord, 50.0),
        ]);
        let width_gy = tolerance_eqd2_gy.iter().map(|(o, d)| (*o, 0.1 * d)).collect();
        Self { tolerance_eqd2_gy, width_gy }
    }
}

impl ToleranceModel {
    pub fn validate(&self) -> Result<()> {
        for organ in OrganId::ALL {
            let d = self.tolerance_eqd2_gy.get(&organ).copied().unwrap_or(0.0);
            let w = self.width_gy.get(&organ).copied().unwrap_or(0.0);
            if d <= 0.0 || w <= 0.0 {
                return Err(CompassError::InvalidConfig(format!(
                    "tolerance model for {organ} must have positive D_tol and width"
                )));
            }
        }
        Ok(())
    }

    pub fn d_tol(&self, organ: OrganId) -> f64 {
        self.tolerance_eqd2_gy[&organ]
    }

    pub fn width(&self, organ: OrganId) -> f64 {
        self.width_gy[&organ]
    }
}

/// Logistic dose response, strictly increasing in EQD2; 0.5 at D_tol.
pub fn voxel_risk(eqd2: f64, d_tol: f64, w: f64) -> f64 {
    1.0 / (1.0 + (-(eqd2 - d_tol) / w).exp())
}

/// Probability map: [`voxel_risk`] inside the mask, exactly 0 outside.
pub fn heatmap(
    cum_eqd2: &VoxelVolume,
    mask: &OrganMask,
    tol: &ToleranceModel,
    organ: OrganId,
) -> Result<VoxelVolume> {
    ensure_same_grid(cum_eqd2.grid(), mask.grid())?;
    tol.validate()?;
    let d_tol = tol.d_tol(organ);
    let w = tol.width(organ);
    let values = par::map_range(cum_eqd2.len(), |i| {
        if mask.inside()[i] {
            voxel_risk(cum_eqd2.values()[i], d_tol, w)
        } else {
            0.0
        }
    });
    cum_eqd2.with_values(VolumeRole::Probability, values)
}

// ---------------------------------------------------------------------------
// Slice export
// ---------------------------------------------------------------------------

const CT_WINDOW: (f64, f64) = (-1000.0, 400.0);
const CELL_PX: usize = 8;
const LEGEND_W: usize = 56;

fn gray_level(hu: f64) -> u8 {
    let t = ((hu - CT_WINDOW.0) / (CT_WINDOW.1 - CT_WINDOW.0)).clamp(0.0, 1.0);
    (t * 255.0).round() as u8
}

fn overlay_color(p: f64) -> (u8, u8, u8) {
    // blue → red ramp on the fixed 0..1 scale
    let r = (255.0 * p).round() as u8;
    let b = (255.0 * (1.0 - p)).round() as u8;
    (r, 0, b)
}

/// Axial slice as SVG: grayscale CT underlay, probability overlay with a
/// fixed 0.0–1.0 legend. Byte-deterministic for identical inputs.
pub fn slice_svg(heat: &VoxelVolume, base_ct: &VoxelVolume, z: usize) -> Result<String> {
    ensure_same_grid(heat.grid(), base_ct.grid())?;
    let (nx, ny, nz) = heat.grid().dims;
    if z >= nz {
        return Err(CompassError::OutOfRange(format!("slice z={z} outside 0..{nz}")));
    }
    let width = nx * CELL_PX + LEGEND_W;
    let height = ny * CELL_PX;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n"
    ));
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"black\"/>\n");

    for y in 0..ny {
        for x in 0..nx {
            let idx = heat.grid().index(x, y, z);
            let g = gray_level(base_ct.values()[idx]);
            svg.push_str(&format!(
                "<rect x=\"{}\" y=\"{}\" width=\"{CELL_PX}\" height=\"{CELL_PX}\" \
                 fill=\"rgb({g},{g},{g})\"/>\n",
                x * CELL_PX,
                y * CELL_PX,
            ));
            let p = heat.values()[idx];
            if p > 0.0 {
                let (r, gg, b) = overlay_color(p);
                svg.push_str(&format!(
                    "<rect x=\"{}\" y=\"{}\" width=\"{CELL_PX}\" height=\"{CELL_PX}\" \
                     fill=\"rgb({r},{gg},{b})\" fill-opacity=\"{:.4}\"/>\n",
                    x * CELL_PX,
                    y * CELL_PX,
                    0.15 + 0.55 * p,
                ));
            }
        }
    }

    // legend: fixed 0.0–1.0 scale regardless of data range
    let lx = nx * CELL_PX + 16;
    let bar_h = height.saturating_sub(32).max(32);
    let steps = 32;
    for s in 0..steps {
        let p = 1.0 - (s as f64 + 0.5) / steps as f64;
        let (r, g, b) = overlay_color(p);
        svg.push_str(&format!(
            "<rect x=\"{lx}\" y=\"{}\" width=\"14\" height=\"{}\" fill=\"rgb({r},{g},{b})\"/>\n",
            16 + s * bar_h / steps,
            bar_h.div_ceil(steps),
        ));
    }
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"12\" fill=\"white\" font-size=\"10\" font-family=\"monospace\">1.0</text>\n",
        lx - 2
    ));
    svg.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" fill=\"white\" font-size=\"10\" font-family=\"monospace\">0.0</text>\n",
        lx - 2,
        16 + bar_h + 12
    ));
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Probability values of one axial slice as CSV, one row per y line.
pub fn slice_csv(heat: &VoxelVolume, z: usize) -> Result<String> {
    let (nx, ny, nz) = heat.grid().dims;
    if z >= nz {
        return Err(CompassError::OutOfRange(format!("slice z={z} outside 0..{nz}")));
    }
    let mut out = String::new();
    for y in 0..ny {
        for x in 0..nx {
            if x > 0 {
                out.push(',');
            }
            out.push_str(&format!("{}", heat.values()[heat.grid().index(x, y, z)]));
        }
        out.push('\n');
    }
    Ok(out)
}
