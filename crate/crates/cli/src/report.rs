//! Evaluation outputs: per-threshold mAP tables (CSV + JSON) and the
//! robustness report (JSON + per-cell gamma bar chart).

use std::fs;
use std::path::Path;

use serde::Serialize;

use trbench_core::metrics::{MeanAp, RobustnessReport};

use crate::svg;
use crate::{Error, Result};

fn round2(v: f64) -> f64 {
    (v * 100.0).round() / 100.0
}

/// `threshold,map` rows plus an `aggregate` row.
pub fn map_csv(result: &MeanAp) -> String {
    let mut out = String::from("threshold,map\n");
    for (t, m) in &result.per_threshold {
        out.push_str(&format!("{t:.2},{m:.4}\n"));
    }
    out.push_str(&format!("aggregate,{:.4}\n", result.aggregate));
    out
}

#[derive(Serialize)]
struct MapJson<'a> {
    per_threshold: Vec<ThresholdRow>,
    aggregate: f64,
    skipped_unknown_videos: usize,
    protocol: &'a str,
}

#[derive(Serialize)]
struct ThresholdRow {
    threshold: f64,
    map: f64,
}

pub fn write_map_outputs(
    result: &MeanAp,
    protocol_name: &str,
    out_dir: &Path,
) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let csv_path = out_dir.join("map.csv");
    fs::write(&csv_path, map_csv(result)).map_err(|e| Error::io(&csv_path, e))?;
    let json = MapJson {
        per_threshold: result
            .per_threshold
            .iter()
            .map(|(t, m)| ThresholdRow { threshold: *t, map: *m })
            .collect(),
        aggregate: result.aggregate,
        skipped_unknown_videos: result.skipped_unknown_videos,
        protocol: protocol_name,
    };
    let json_path = out_dir.join("map.json");
    let text = serde_json::to_string_pretty(&json)
        .map_err(|e| Error::Json { path: json_path.clone(), source: e })?;
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))
}

#[derive(Serialize)]
struct ReportJson {
    clean_map: f64,
    mean_corrupted_map: f64,
    gamma_overall: f64,
    cells: Vec<CellRow>,
    missing_cells: Vec<String>,
}

#[derive(Serialize)]
struct CellRow {
    ctype: String,
    level: u8,
    map: f64,
    gamma: f64,
}

fn cell_label(ctype: trbench_core::corrupt::CorruptionType, level: u8) -> String {
    format!("{}_l{level}", ctype.name())
}

/// Writes `report.json` and the per-cell gamma bar chart `report.svg`.
/// Gamma values are rounded to two decimals in the JSON, matching how
/// relative robustness is quoted.
pub fn write_robustness_outputs(report: &RobustnessReport, out_dir: &Path) -> Result<()> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let json = ReportJson {
        clean_map: round2(report.clean_map),
        mean_corrupted_map: round2(report.mean_corrupted_map),
        gamma_overall: round2(report.gamma_overall),
        cells: report
            .cell_map
            .iter()
            .map(|(&(ctype, level), &map)| CellRow {
                ctype: ctype.name().into(),
                level,
                map: round2(map),
                gamma: round2(report.cell_gamma[&(ctype, level)]),
            })
            .collect(),
        missing_cells: report
            .missing_cells
            .iter()
            .map(|&(c, l)| cell_label(c, l))
            .collect(),
    };
    let json_path = out_dir.join("report.json");
    let text = serde_json::to_string_pretty(&json)
        .map_err(|e| Error::Json { path: json_path.clone(), source: e })?;
    fs::write(&json_path, text).map_err(|e| Error::io(&json_path, e))?;

    let bars: Vec<(String, f64)> = report
        .cell_gamma
        .iter()
        .map(|(&(ctype, level), &gamma)| (cell_label(ctype, level), round2(gamma)))
        .collect();
    let chart = svg::bar_chart("relative robustness per corruption cell (%)", &bars);
    let svg_path = out_dir.join("report.svg");
    fs::write(&svg_path, chart).map_err(|e| Error::io(&svg_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;
    use trbench_core::corrupt::{CorruptionType, SeverityLevel};
    use trbench_core::metrics::robustness_report_from_maps;

    #[test]
    fn map_csv_has_aggregate_row() {
        let result = MeanAp {
            per_threshold: vec![(0.5, 84.5)],
            aggregate: 84.5,
            skipped_unknown_videos: 0,
        };
        let csv = map_csv(&result);
        assert!(csv.starts_with("threshold,map\n0.50,84.5000\n"));
        assert!(csv.ends_with("aggregate,84.5000\n"));
    }

    #[test]
    fn robustness_outputs_round_to_two_decimals() {
        let mut cells = BTreeMap::new();
        cells.insert((CorruptionType::BlackFrame, 1u8), 55.614999);
        let expected = vec![(CorruptionType::BlackFrame, SeverityLevel::new(1).unwrap())];
        let report = robustness_report_from_maps(61.33, cells, &expected).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_robustness_outputs(&report, dir.path()).unwrap();
        let text = fs::read_to_string(dir.path().join("report.json")).unwrap();
        assert!(text.contains("55.61"), "{text}");
        let svg = fs::read_to_string(dir.path().join("report.svg")).unwrap();
        assert!(svg.contains("black_frame_l1"));
    }
}
