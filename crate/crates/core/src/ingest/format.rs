//! Wire records for the canonical scenario and prediction files.
//!
//! The wire layer is kept separate from the domain types so the on-disk
//! schema stays pinned even if in-memory representations evolve. Floats are
//! written in Rust's shortest round-trip form, so `parse(write(s)) == s`
//! exactly and re-writing a parsed file is byte-identical.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;
use crate::ingest::IngestError;
use crate::predictors::PredictionSet;
use crate::scenario::{
    AgentKind, AgentState, MapElement, MapElementKind, Scenario, ScenarioMetadata, SourceProfile,
    Track, SAMPLING_RATE_HZ,
};

/// Version written into every record; parsing rejects anything else.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioRecord {
    schema_version: u32,
    scenario_id: String,
    source_profile: SourceProfile,
    step_count: usize,
    tracks: Vec<TrackRecord>,
    map_elements: Vec<MapElementRecord>,
    focal_agent_id: Option<String>,
    #[serde(default)]
    metadata: ScenarioMetadata,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrackRecord {
    agent_id: String,
    agent_kind: AgentKind,
    is_ego: bool,
    states: Vec<StateRecord>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StateRecord {
    x: f64,
    y: f64,
    heading: f64,
    vx: f64,
    vy: f64,
    observed: bool,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapElementRecord {
    element_id: String,
    kind: MapElementKind,
    points: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PredictionRecord {
    scenario_id: String,
    agent_id: String,
    modes: Vec<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    probabilities: Option<Vec<f64>>,
}

fn to_record(s: &Scenario) -> ScenarioRecord {
    ScenarioRecord {
        schema_version: SCHEMA_VERSION,
        scenario_id: s.scenario_id.clone(),
        source_profile: s.source_profile,
        step_count: s.step_count,
        tracks: s
            .tracks
            .iter()
            .map(|t| TrackRecord {
                agent_id: t.agent_id.clone(),
                agent_kind: t.agent_kind,
                is_ego: t.is_ego,
                states: t
                    .states
                    .iter()
                    .map(|st| StateRecord {
                        x: st.position.x,
                        y: st.position.y,
                        heading: st.heading,
                        vx: st.velocity.x,
                        vy: st.velocity.y,
                        observed: st.observed,
                    })
                    .collect(),
            })
            .collect(),
        map_elements: s
            .map_elements
            .iter()
            .map(|e| MapElementRecord {
                element_id: e.element_id.clone(),
                kind: e.kind,
                points: e.polyline.iter().map(|p| [p.x, p.y]).collect(),
            })
            .collect(),
        focal_agent_id: s.focal_agent_id.clone(),
        metadata: s.metadata.clone(),
    }
}

fn from_record(r: ScenarioRecord) -> Scenario {
    Scenario {
        scenario_id: r.scenario_id,
        source_profile: r.source_profile,
        sampling_rate_hz: SAMPLING_RATE_HZ,
        step_count: r.step_count,
        tracks: r
            .tracks
            .into_iter()
            .map(|t| Track {
                agent_id: t.agent_id,
                agent_kind: t.agent_kind,
                is_ego: t.is_ego,
                states: t
                    .states
                    .into_iter()
                    .map(|st| AgentState {
                        position: Vec2::new(st.x, st.y),
                        heading: st.heading,
                        velocity: Vec2::new(st.vx, st.vy),
                        observed: st.observed,
                    })
                    .collect(),
            })
            .collect(),
        map_elements: r
            .map_elements
            .into_iter()
            .map(|e| MapElement {
                element_id: e.element_id,
                kind: e.kind,
                polyline: e.points.into_iter().map(|[x, y]| Vec2::new(x, y)).collect(),
            })
            .collect(),
        focal_agent_id: r.focal_agent_id,
        metadata: r.metadata,
    }
}

fn io_err(path: &Path, source: std::io::Error) -> IngestError {
    IngestError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Parse a canonical scenario file. Every returned scenario validates
/// cleanly; parse order equals file order.
pub fn parse_scenarios(path: impl AsRef<Path>) -> Result<Vec<Scenario>, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut scenarios = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: ScenarioRecord =
            serde_json::from_str(&line).map_err(|e| IngestError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        if record.schema_version != SCHEMA_VERSION {
            return Err(IngestError::Parse {
                line: line_no,
                message: format!(
                    "unsupported schema_version {} (expected {})",
                    record.schema_version, SCHEMA_VERSION
                ),
            });
        }
        let scenario = from_record(record);
        let report = scenario.validate();
        if !report.is_valid() {
            return Err(IngestError::Validation {
                line: line_no,
                scenario_id: scenario.scenario_id,
                report,
            });
        }
        scenarios.push(scenario);
    }
    Ok(scenarios)
}

/// Write scenarios in canonical form. Output is byte-deterministic for
/// identical input. Returns the record count.
pub fn write_scenarios(
    scenarios: &[Scenario],
    path: impl AsRef<Path>,
) -> Result<usize, IngestError> {
    let path = path.as_ref();
    for s in scenarios {
        let report = s.validate();
        if !report.is_valid() {
            return Err(IngestError::Validation {
                line: 0,
                scenario_id: s.scenario_id.clone(),
                report,
            });
        }
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = BufWriter::new(file);
    for s in scenarios {
        let record = to_record(s);
        serde_json::to_writer(&mut writer, &record).map_err(|e| IngestError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        writer.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(scenarios.len())
}

/// Parse a prediction file: one record per (scenario_id, agent_id).
pub fn parse_predictions(path: impl AsRef<Path>) -> Result<Vec<PredictionSet>, IngestError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let mut sets = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PredictionRecord =
            serde_json::from_str(&line).map_err(|e| IngestError::Parse {
                line: line_no,
                message: e.to_string(),
            })?;
        let set = PredictionSet {
            scenario_id: record.scenario_id,
            agent_id: record.agent_id,
            modes: record
                .modes
                .into_iter()
                .map(|m| m.into_iter().map(|[x, y]| Vec2::new(x, y)).collect())
                .collect(),
            probabilities: record.probabilities,
        };
        if let Err(problem) = set.check() {
            return Err(IngestError::Parse {
                line: line_no,
                message: format!(
                    "invalid prediction for scenario {} agent {}: {problem}",
                    set.scenario_id, set.agent_id
                ),
            });
        }
        sets.push(set);
    }
    Ok(sets)
}

/// Write a prediction file; deterministic like [`write_scenarios`].
pub fn write_predictions(
    sets: &[PredictionSet],
    path: impl AsRef<Path>,
) -> Result<usize, IngestError> {
    let path = path.as_ref();
    for set in sets {
        if let Err(problem) = set.check() {
            return Err(IngestError::Config(format!(
                "invalid prediction for scenario {} agent {}: {problem}",
                set.scenario_id, set.agent_id
            )));
        }
    }
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut writer = BufWriter::new(file);
    for set in sets {
        let record = PredictionRecord {
            scenario_id: set.scenario_id.clone(),
            agent_id: set.agent_id.clone(),
            modes: set
                .modes
                .iter()
                .map(|m| m.iter().map(|p| [p.x, p.y]).collect())
                .collect(),
            probabilities: set.probabilities.clone(),
        };
        serde_json::to_writer(&mut writer, &record).map_err(|e| IngestError::Parse {
            line: 0,
            message: e.to_string(),
        })?;
        writer.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(sets.len())
}
