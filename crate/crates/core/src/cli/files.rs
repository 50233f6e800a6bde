//! CSV file formats produced and consumed by the CLI: per-sample metrics,
//! rejection lists, delta tables, complexity distributions and KDE grids.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cli::CliError;
use crate::complexity::{ComplexityDistribution, DensityGrid};
use crate::homogenize::RejectionReason;
use crate::metrics::{DeltaRecord, MetricRecord, RunMeta};

#[derive(Serialize, Deserialize)]
struct MetricsCsvRow {
    model_tag: String,
    train_tag: String,
    test_tag: String,
    scenario_id: String,
    agent_id: String,
    min_ade_1: Option<f64>,
    min_fde_1: Option<f64>,
    min_ade_6: Option<f64>,
    min_fde_6: Option<f64>,
}

fn csv_err(path: &Path, e: csv::Error) -> CliError {
    if e.is_io_error() {
        CliError::Io(format!("{}: {e}", path.display()))
    } else {
        CliError::Validation(format!("{}: {e}", path.display()))
    }
}

/// Write per-sample metric records with their run tags; one row per sample.
pub fn write_metrics_csv(
    path: &Path,
    meta: &RunMeta,
    records: &[MetricRecord],
) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for r in records {
        let row = MetricsCsvRow {
            model_tag: meta.model_tag.clone(),
            train_tag: meta.train_tag.clone(),
            test_tag: meta.test_tag.clone(),
            scenario_id: r.scenario_id.clone(),
            agent_id: r.agent_id.clone(),
            min_ade_1: r.min_ade_1,
            min_fde_1: r.min_fde_1,
            min_ade_6: r.min_ade_6,
            min_fde_6: r.min_fde_6,
        };
        writer.serialize(row).map_err(|e| csv_err(path, e))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(())
}

/// Read a per-sample metrics file back. All rows must carry the same run
/// tags.
pub fn read_metrics_csv(path: &Path) -> Result<(RunMeta, Vec<MetricRecord>), CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut meta: Option<RunMeta> = None;
    let mut records = Vec::new();
    for row in reader.deserialize::<MetricsCsvRow>() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let row_meta = RunMeta {
            model_tag: row.model_tag,
            train_tag: row.train_tag,
            test_tag: row.test_tag,
        };
        match &meta {
            None => meta = Some(row_meta),
            Some(m) if *m != row_meta => {
                return Err(CliError::Validation(format!(
                    "{}: mixed run tags within one metrics file (scenario {})",
                    path.display(),
                    row.scenario_id
                )));
            }
            _ => {}
        }
        records.push(MetricRecord {
            scenario_id: row.scenario_id,
            agent_id: row.agent_id,
            min_ade_1: row.min_ade_1,
            min_fde_1: row.min_fde_1,
            min_ade_6: row.min_ade_6,
            min_fde_6: row.min_fde_6,
        });
    }
    let meta = meta.ok_or_else(|| {
        CliError::Validation(format!("{}: metrics file has no rows", path.display()))
    })?;
    Ok((meta, records))
}

/// Rejects file: scenario_id + rejection reason.
pub fn write_rejects_csv(
    path: &Path,
    rejects: &[(String, RejectionReason)],
) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    writer
        .write_record(["scenario_id", "reason"])
        .map_err(|e| csv_err(path, e))?;
    for (id, reason) in rejects {
        writer
            .write_record([id.as_str(), &reason.to_string()])
            .map_err(|e| csv_err(path, e))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// The `delta` subcommand's output: exactly the columns
/// metric, id_value, ood_value, delta, relative_pct.
pub fn write_delta_csv(path: &Path, records: &[DeltaRecord]) -> Result<(), CliError> {
    let mut out = String::from("metric,id_value,ood_value,delta,relative_pct\n");
    for r in records {
        let rel = r.relative_pct.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{rel}\n",
            r.metric.label(),
            r.id_value,
            r.ood_value,
            r.delta
        ));
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Complexity distribution: one row per focal agent.
pub fn write_dist_csv(path: &Path, dist: &ComplexityDistribution) -> Result<(), CliError> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    writer
        .write_record(["scenario_id", "agent_id", "d_lon", "d_lat", "speed"])
        .map_err(|e| csv_err(path, e))?;
    for e in &dist.entries {
        writer
            .write_record([
                e.scenario_id.as_str(),
                e.agent_id.as_str(),
                &e.vector.d_lon.to_string(),
                &e.vector.d_lat.to_string(),
                &e.vector.speed_at_start.to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
    }
    writer
        .flush()
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// KDE grid: density at every cell center, row-major by y then x.
pub fn write_grid_csv(path: &Path, grid: &DensityGrid) -> Result<(), CliError> {
    let mut out = String::from("x,y,density\n");
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let c = grid.cell_center(ix, iy);
            out.push_str(&format!(
                "{},{},{}\n",
                c.x,
                c.y,
                grid.values[iy * grid.nx + ix]
            ));
        }
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// HDR threshold sidecar next to a grid file.
pub fn write_levels_csv(path: &Path, masses: &[f64], thresholds: &[f64]) -> Result<(), CliError> {
    let mut out = String::from("mass,threshold\n");
    for (m, t) in masses.iter().zip(thresholds) {
        out.push_str(&format!("{m},{t}\n"));
    }
    std::fs::write(path, out).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Sidecar path for HDR levels: `grid.csv` → `grid.levels.csv`.
pub fn levels_sidecar_path(kde_path: &Path) -> std::path::PathBuf {
    let stem = kde_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "grid".to_string());
    kde_path.with_file_name(format!("{stem}.levels.csv"))
}
