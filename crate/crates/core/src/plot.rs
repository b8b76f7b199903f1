//! Risk-trajectory plots as hand-rolled SVG: one panel per organ, one
//! polyline per (patient, organ), ground truth color-coded (green toxic,
//! red non-toxic). Text output keeps the plots byte-deterministic and
//! diffable in tests.

use std::collections::BTreeMap;

use crate::error::{CompassError, Result};
use crate::volume::OrganId;

/// One row of `trajectories.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPoint {
    pub patient: String,
    pub organ: OrganId,
    pub fraction: usize,
    pub probability: f64,
    pub label: bool,
}

/// Parse `patient,organ,fraction,probability,label` rows.
pub fn parse_trajectories_csv(text: &str) -> Result<Vec<TrajectoryPoint>> {
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == "patient,organ,fraction,probability,label" => {}
        Some(other) => {
            return Err(CompassError::MalformedCsv(format!(
                "unexpected header '{other}'"
            )))
        }
        None => return Err(CompassError::MalformedCsv("empty file".into())),
    }
    let mut points = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(CompassError::MalformedCsv(format!(
                "line {}: expected 5 fields, got {}",
                lineno + 2,
                fields.len()
            )));
        }
        let bad = |what: &str| {
            CompassError::MalformedCsv(format!("line {}: bad {what} '{}'", lineno + 2, line))
        };
        points.push(TrajectoryPoint {
            patient: fields[0].to_string(),
            organ: OrganId::parse(fields[1]).map_err(|_| bad("organ"))?,
            fraction: fields[2].parse().map_err(|_| bad("fraction"))?,
            probability: fields[3].parse().map_err(|_| bad("probability"))?,
            label: match fields[4].trim() {
                "0" => false,
                "1" => true,
                _ => return Err(bad("label")),
            },
        });
    }
    Ok(points)
}

const PANEL_W: usize = 260;
const PANEL_H: usize = 220;
const MARGIN: usize = 36;
const MAX_FRACTIONS: usize = 5;

fn x_px(panel: usize, fraction: usize) -> f64 {
    let x0 = (panel * (PANEL_W + 20) + MARGIN) as f64;
    let span = (PANEL_W - MARGIN - 10) as f64;
    x0 + span * (fraction as f64 - 1.0) / (MAX_FRACTIONS as f64 - 1.0)
}

fn y_px(p: f64) -> f64 {
    let span = (PANEL_H - MARGIN - 14) as f64;
    14.0 + span * (1.0 - p)
}

/// Per-organ panels of per-fraction toxicity probability. Empty input
/// yields the bare axes.
pub fn trajectory_plot_svg(points: &[TrajectoryPoint]) -> String {
    let width = 3 * (PANEL_W + 20);
    let height = PANEL_H + 8;
    let mut svg = String::new();
    svg.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         viewBox=\"0 0 {width} {height}\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    ));

    for (panel, organ) in OrganId::ALL.into_iter().enumerate() {
        let x0 = (panel * (PANEL_W + 20) + MARGIN) as f64;
        let x1 = (panel * (PANEL_W + 20) + PANEL_W - 10) as f64;
        let (y_top, y_bot) = (y_px(1.0), y_px(0.0));
        svg.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{y_bot}\" x2=\"{x1}\" y2=\"{y_bot}\" stroke=\"black\"/>\n\
             <line x1=\"{x0}\" y1=\"{y_top}\" x2=\"{x0}\" y2=\"{y_bot}\" stroke=\"black\"/>\n\
             <text x=\"{x0}\" y=\"12\" font-size=\"11\" font-family=\"monospace\">{}</text>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"9\" font-family=\"monospace\">0.0</text>\n\
             <text x=\"{}\" y=\"{}\" font-size=\"9\" font-family=\"monospace\">1.0</text>\n",
            organ.name(),
            x0 - 24.0,
            y_bot + 3.0,
            x0 - 24.0,
            y_top + 3.0,
        ));
        // organ decision threshold
        let thr_y = y_px(organ.classification_threshold());
        svg.push_str(&format!(
            "<line x1=\"{x0}\" y1=\"{thr_y}\" x2=\"{x1}\" y2=\"{thr_y}\" stroke=\"gray\" \
             stroke-dasharray=\"4 3\"/>\n"
        ));

        // group points by patient
        let mut by_patient: BTreeMap<&str, Vec<&TrajectoryPoint>> = BTreeMap::new();
        for p in points.iter().filter(|p| p.organ == organ) {
            by_patient.entry(p.patient.as_str()).or_default().push(p);
        }
        for (_, mut traj) in by_patient {
            traj.sort_by_key(|p| p.fraction);
            let color = if traj[0].label { "green" } else { "red" };
            let coords: Vec<String> = traj
                .iter()
                .map(|p| format!("{:.2},{:.2}", x_px(panel, p.fraction), y_px(p.probability)))
                .collect();
            svg.push_str(&format!(
                "<polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\"/>\n",
                coords.join(" ")
            ));
        }
    }
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_roundtrip_and_errors() {
        let csv = "patient,organ,fraction,probability,label\nP01,heart,1,0.25,0\nP01,heart,2,0.5,0\n";
        let pts = parse_trajectories_csv(csv).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].fraction, 2);
        assert_eq!(pts[1].probability, 0.5);

        assert!(parse_trajectories_csv("bogus header\n").is_err());
        assert!(parse_trajectories_csv(
            "patient,organ,fraction,probability,label\nP01,heart,1,not_a_number,0\n"
        )
        .is_err());
        assert!(parse_trajectories_csv(
            "patient,organ,fraction,probability,label\nP01,gizzard,1,0.5,0\n"
        )
        .is_err());
    }

    #[test]
    fn empty_csv_yields_axes_only() {
        let svg = trajectory_plot_svg(&[]);
        assert!(svg.contains("<svg"));
        assert!(!svg.contains("polyline"));
    }

    #[test]
    fn one_trajectory_one_polyline_with_label_color() {
        let pts = vec![
            TrajectoryPoint {
                patient: "P01".into(),
                organ: OrganId::Heart,
                fraction: 1,
                probability: 0.4,
                label: true,
            },
            TrajectoryPoint {
                patient: "P01".into(),
                organ: OrganId::Heart,
                fraction: 2,
                probability: 0.8,
                label: true,
            },
        ];
        let svg = trajectory_plot_svg(&pts);
        assert_eq!(svg.matches("<polyline").count(), 1);
        assert!(svg.contains("stroke=\"green\""));

        let mut flipped = pts;
        for p in &mut flipped {
            p.label = false;
        }
        let svg = trajectory_plot_svg(&flipped);
        assert!(svg.contains("stroke=\"red\""));
    }

    #[test]
    fn plot_is_deterministic() {
        let pts = vec![TrajectoryPoint {
            patient: "P02".into(),
            organ: OrganId::Esophagus,
            fraction: 1,
            probability: 0.123456,
            label: false,
        }];
        assert_eq!(trajectory_plot_svg(&pts), trajectory_plot_svg(&pts));
    }
}
