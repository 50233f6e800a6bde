//! Canonical in-memory representation of scenarios, tracks and maps.
//!
//! All trajectories are sampled at a fixed 10 Hz; time is implicit via the
//! step index. Types are plain immutable data; every structural rule is
//! checkable through [`Scenario::validate`], which reports violations as
//! data rather than failing.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::geom::Vec2;

/// Fixed sampling rate shared by every supported source dataset.
pub const SAMPLING_RATE_HZ: f64 = 10.0;
/// Seconds between consecutive steps.
pub const STEP_DT: f64 = 0.1;

/// Which acquisition pipeline a scenario follows. Determines native step
/// counts and focal-agent labeling rules during homogenization.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceProfile {
    A2,
    Wo,
    Synthetic,
}

impl fmt::Display for SourceProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceProfile::A2 => write!(f, "a2"),
            SourceProfile::Wo => write!(f, "wo"),
            SourceProfile::Synthetic => write!(f, "synthetic"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    Vehicle,
    Pedestrian,
    Cyclist,
    Other,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapElementKind {
    LaneCenter,
    Crosswalk,
    LaneBoundary,
    Other,
}

/// One agent sample: planar pose plus velocity at a single step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AgentState {
    /// Global position, meters.
    pub position: Vec2,
    /// Radians, CCW from +x, in (−π, π].
    pub heading: f64,
    /// Global velocity, m/s.
    pub velocity: Vec2,
    /// Whether this step was actually observed (vs. imputed upstream).
    pub observed: bool,
}

impl AgentState {
    pub fn speed(&self) -> f64 {
        self.velocity.norm()
    }
}

/// A single agent's trajectory over the whole scenario.
#[derive(Clone, Debug, PartialEq)]
pub struct Track {
    pub agent_id: String,
    pub agent_kind: AgentKind,
    pub is_ego: bool,
    /// One state per scenario step.
    pub states: Vec<AgentState>,
}

impl Track {
    /// The stored state at `step`, no interpolation.
    pub fn state_at(&self, step: usize) -> Result<&AgentState, ScenarioError> {
        self.states.get(step).ok_or(ScenarioError::OutOfRange {
            step,
            len: self.states.len(),
        })
    }

    /// True iff every step of the track was observed.
    pub fn fully_observed(&self) -> bool {
        self.states.iter().all(|s| s.observed)
    }

    pub fn position_at(&self, step: usize) -> Result<Vec2, ScenarioError> {
        self.state_at(step).map(|s| s.position)
    }
}

/// Static map geometry as ordered polylines.
#[derive(Clone, Debug, PartialEq)]
pub struct MapElement {
    pub element_id: String,
    pub kind: MapElementKind,
    /// ≥ 2 points, meters.
    pub polyline: Vec<Vec2>,
}

impl MapElement {
    /// Smallest distance from any polyline point to `p`.
    pub fn min_distance_to(&self, p: Vec2) -> f64 {
        self.polyline
            .iter()
            .map(|q| q.distance(p))
            .fold(f64::INFINITY, f64::min)
    }
}

/// Generation-time annotations carried through serialization.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMetadata {
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub maneuver: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub noise_sigma: Option<f64>,
}

/// A complete scenario: agent tracks plus map, sampled at 10 Hz.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub scenario_id: String,
    pub source_profile: SourceProfile,
    pub sampling_rate_hz: f64,
    pub step_count: usize,
    pub tracks: Vec<Track>,
    pub map_elements: Vec<MapElement>,
    pub focal_agent_id: Option<String>,
    pub metadata: ScenarioMetadata,
}

impl Scenario {
    pub fn track(&self, agent_id: &str) -> Option<&Track> {
        self.tracks.iter().find(|t| t.agent_id == agent_id)
    }

    pub fn ego_track(&self) -> Option<&Track> {
        self.tracks.iter().find(|t| t.is_ego)
    }

    pub fn focal_track(&self) -> Option<&Track> {
        self.focal_agent_id.as_deref().and_then(|id| self.track(id))
    }

    /// Check every structural invariant; violations come back as data.
    /// Valid scenarios yield an empty report. Pure: same input, same report.
    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();

        if self.sampling_rate_hz != SAMPLING_RATE_HZ {
            violations.push(Violation {
                code: ViolationCode::BadSamplingRate,
                message: format!(
                    "scenario {}: sampling rate {} Hz, expected {} Hz",
                    self.scenario_id, self.sampling_rate_hz, SAMPLING_RATE_HZ
                ),
            });
        }

        let mut ego_count = 0usize;
        let mut agent_ids = HashSet::new();
        for track in &self.tracks {
            if track.is_ego {
                ego_count += 1;
            }
            if !agent_ids.insert(track.agent_id.as_str()) {
                violations.push(Violation {
                    code: ViolationCode::DuplicateAgentId,
                    message: format!(
                        "scenario {}: duplicate agent id {}",
                        self.scenario_id, track.agent_id
                    ),
                });
            }
            if track.states.len() != self.step_count {
                violations.push(Violation {
                    code: ViolationCode::StepCountMismatch,
                    message: format!(
                        "scenario {}: track {} has {} states, scenario has {} steps",
                        self.scenario_id,
                        track.agent_id,
                        track.states.len(),
                        self.step_count
                    ),
                });
            }
            for (step, state) in track.states.iter().enumerate() {
                if !state.position.is_finite() {
                    violations.push(Violation {
                        code: ViolationCode::NonFinitePosition,
                        message: format!(
                            "scenario {}: track {} step {}: non-finite position",
                            self.scenario_id, track.agent_id, step
                        ),
                    });
                }
                if !state.velocity.is_finite() {
                    violations.push(Violation {
                        code: ViolationCode::NonFiniteVelocity,
                        message: format!(
                            "scenario {}: track {} step {}: non-finite velocity",
                            self.scenario_id, track.agent_id, step
                        ),
                    });
                }
                if !state.heading.is_finite()
                    || state.heading <= -std::f64::consts::PI
                    || state.heading > std::f64::consts::PI
                {
                    violations.push(Violation {
                        code: ViolationCode::HeadingOutOfRange,
                        message: format!(
                            "scenario {}: track {} step {}: heading {} outside (-pi, pi]",
                            self.scenario_id, track.agent_id, step, state.heading
                        ),
                    });
                }
            }
        }
        if ego_count > 1 {
            violations.push(Violation {
                code: ViolationCode::MultipleEgo,
                message: format!(
                    "scenario {}: {} tracks flagged is_ego",
                    self.scenario_id, ego_count
                ),
            });
        }

        if let Some(focal) = self.focal_agent_id.as_deref() {
            if !agent_ids.contains(focal) {
                violations.push(Violation {
                    code: ViolationCode::FocalNotFound,
                    message: format!(
                        "scenario {}: focal agent {} not among tracks",
                        self.scenario_id, focal
                    ),
                });
            }
        }

        let mut element_ids = HashSet::new();
        for element in &self.map_elements {
            if !element_ids.insert(element.element_id.as_str()) {
                violations.push(Violation {
                    code: ViolationCode::DuplicateElementId,
                    message: format!(
                        "scenario {}: duplicate map element id {}",
                        self.scenario_id, element.element_id
                    ),
                });
            }
            if element.polyline.len() < 2 {
                violations.push(Violation {
                    code: ViolationCode::PolylineTooShort,
                    message: format!(
                        "scenario {}: map element {} has {} point(s), need >= 2",
                        self.scenario_id,
                        element.element_id,
                        element.polyline.len()
                    ),
                });
            }
            if element.polyline.iter().any(|p| !p.is_finite()) {
                violations.push(Violation {
                    code: ViolationCode::NonFiniteMapPoint,
                    message: format!(
                        "scenario {}: map element {} has non-finite point",
                        self.scenario_id, element.element_id
                    ),
                });
            }
        }

        ValidationReport { violations }
    }
}

/// Machine-readable invariant violation codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ViolationCode {
    NonFinitePosition,
    NonFiniteVelocity,
    HeadingOutOfRange,
    StepCountMismatch,
    MultipleEgo,
    BadSamplingRate,
    PolylineTooShort,
    NonFiniteMapPoint,
    FocalNotFound,
    DuplicateAgentId,
    DuplicateElementId,
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            ViolationCode::NonFinitePosition => "NON_FINITE_POSITION",
            ViolationCode::NonFiniteVelocity => "NON_FINITE_VELOCITY",
            ViolationCode::HeadingOutOfRange => "HEADING_OUT_OF_RANGE",
            ViolationCode::StepCountMismatch => "STEP_COUNT_MISMATCH",
            ViolationCode::MultipleEgo => "MULTIPLE_EGO",
            ViolationCode::BadSamplingRate => "BAD_SAMPLING_RATE",
            ViolationCode::PolylineTooShort => "POLYLINE_TOO_SHORT",
            ViolationCode::NonFiniteMapPoint => "NON_FINITE_MAP_POINT",
            ViolationCode::FocalNotFound => "FOCAL_NOT_FOUND",
            ViolationCode::DuplicateAgentId => "DUPLICATE_AGENT_ID",
            ViolationCode::DuplicateElementId => "DUPLICATE_ELEMENT_ID",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

/// Outcome of [`Scenario::validate`]: empty means valid.
#[derive(Clone, Debug, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn codes(&self) -> Vec<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}: {}", v.code, v.message)?;
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ScenarioError {
    #[error("OUT_OF_RANGE: step {step} outside track of length {len}")]
    OutOfRange { step: usize, len: usize },
}
