//! Homogenization of heterogeneous scenario recordings into one common
//! 91-step schema: 50 history steps, 41 future steps, a single fully
//! observed non-ego focal agent, and a reduced map vocabulary.
//!
//! Source handling differs by profile:
//! - A2 recordings are 110 steps (5 s history, 6 s horizon); the final
//!   1.9 s of future is dropped and the labeled focal agent kept.
//! - WO recordings are already 91 steps but with an 1.1 s history; the
//!   current step moves from index 10 to index 49 and the focal agent is
//!   re-selected as the first fully observed non-ego track.
//! - Synthetic recordings follow the WO selection rule.

use std::collections::HashSet;
use std::fmt;

use crate::scenario::{MapElement, MapElementKind, Scenario, SourceProfile, Track};

/// Why a scenario could not be homogenized. Rejections are data, recorded
/// per scenario, not hard errors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RejectionReason {
    /// No fully observed non-ego agent to predict.
    NoValidFocal,
    /// Recording shorter than the profile's native length.
    TooShort,
    /// Scenario profile does not match the requested profile.
    InvalidSource,
}

impl fmt::Display for RejectionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RejectionReason::NoValidFocal => "NO_VALID_FOCAL",
            RejectionReason::TooShort => "TOO_SHORT",
            RejectionReason::InvalidSource => "INVALID_SOURCE",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HomogenizeError {
    #[error("MISSING_EGO: scenario {0} has no ego track")]
    MissingEgo(String),
    #[error("INVALID_SAMPLE: scenario {scenario_id}: {reason}")]
    InvalidSample { scenario_id: String, reason: String },
}

/// A scenario in the homogenized 91-step schema with a designated focal
/// agent. Construction enforces every schema invariant.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogenizedSample {
    scenario: Scenario,
    focal_agent_id: String,
}

impl HomogenizedSample {
    /// 9.1 s at 10 Hz.
    pub const STEP_COUNT: usize = 91;
    /// Last history step (0-based); 50 history steps total.
    pub const CURRENT_STEP: usize = 49;
    pub const HISTORY_LEN: usize = 50;
    /// 4.1 s prediction horizon.
    pub const FUTURE_LEN: usize = 41;
    /// Native A2 recording length (11 s).
    pub const A2_NATIVE_STEPS: usize = 110;

    /// Wrap an already-homogenized scenario, checking all invariants.
    pub fn from_scenario(scenario: Scenario) -> Result<Self, HomogenizeError> {
        let fail = |reason: String| {
            Err(HomogenizeError::InvalidSample {
                scenario_id: scenario.scenario_id.clone(),
                reason,
            })
        };
        let report = scenario.validate();
        if !report.is_valid() {
            return fail(report.to_string());
        }
        if scenario.step_count != Self::STEP_COUNT {
            return fail(format!(
                "step_count {} != {}",
                scenario.step_count,
                Self::STEP_COUNT
            ));
        }
        let focal_id = match scenario.focal_agent_id.as_deref() {
            Some(id) => id.to_string(),
            None => return fail("focal_agent_id not set".into()),
        };
        match scenario.track(&focal_id) {
            None => return fail(format!("focal agent {focal_id} not found")),
            Some(track) => {
                if track.is_ego {
                    return fail(format!("focal agent {focal_id} is the ego"));
                }
                if !track.fully_observed() {
                    return fail(format!("focal agent {focal_id} is not fully observed"));
                }
            }
        }
        if let Some(e) = scenario.map_elements.iter().find(|e| {
            !matches!(
                e.kind,
                MapElementKind::LaneCenter | MapElementKind::Crosswalk
            )
        }) {
            return fail(format!(
                "map element {} has kind outside {{lane_center, crosswalk}}",
                e.element_id
            ));
        }
        Ok(HomogenizedSample {
            scenario,
            focal_agent_id: focal_id,
        })
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn into_scenario(self) -> Scenario {
        self.scenario
    }

    pub fn focal_agent_id(&self) -> &str {
        &self.focal_agent_id
    }

    pub fn focal_track(&self) -> &Track {
        self.scenario
            .track(&self.focal_agent_id)
            .expect("focal track checked at construction")
    }

    /// Ground-truth future of `agent_id`: positions at steps 50..=90.
    pub fn future_positions(&self, agent_id: &str) -> Option<Vec<crate::geom::Vec2>> {
        self.scenario.track(agent_id).map(|t| {
            t.states[Self::CURRENT_STEP + 1..Self::STEP_COUNT]
                .iter()
                .map(|s| s.position)
                .collect()
        })
    }
}

/// Keep only lane centers and crosswalks, order preserved. Junction labels
/// do not exist in the canonical schema, so dropping them is implicit.
pub fn filter_map(elements: &[MapElement]) -> Vec<MapElement> {
    elements
        .iter()
        .filter(|e| {
            matches!(
                e.kind,
                MapElementKind::LaneCenter | MapElementKind::Crosswalk
            )
        })
        .cloned()
        .collect()
}

/// The focal-agent selection rule, evaluated on a 91-step scenario.
///
/// A2: the labeled focal agent, provided it is fully observed and not the
/// ego. WO/synthetic: the first fully observed non-ego track in stored
/// order (the stored order stands in for the random draw from the
/// unordered candidate list).
pub fn select_focal_agent(scenario: &Scenario) -> Option<String> {
    match scenario.source_profile {
        SourceProfile::A2 => {
            let id = scenario.focal_agent_id.as_deref()?;
            let track = scenario.track(id)?;
            (!track.is_ego && track.fully_observed()).then(|| id.to_string())
        }
        SourceProfile::Wo | SourceProfile::Synthetic => scenario
            .tracks
            .iter()
            .find(|t| !t.is_ego && t.fully_observed())
            .map(|t| t.agent_id.clone()),
    }
}

fn truncate_steps(scenario: &Scenario, steps: usize) -> Scenario {
    let mut out = scenario.clone();
    out.step_count = steps;
    for track in &mut out.tracks {
        track.states.truncate(steps);
    }
    out
}

/// Homogenize one scenario according to its own source profile.
pub fn homogenize_scenario(raw: &Scenario) -> Result<HomogenizedSample, RejectionReason> {
    homogenize_scenario_as(raw, None)
}

/// Homogenize, additionally requiring the scenario to carry `expected`
/// profile when given (the CLI's `--profile a2|wo` form).
pub fn homogenize_scenario_as(
    raw: &Scenario,
    expected: Option<SourceProfile>,
) -> Result<HomogenizedSample, RejectionReason> {
    if let Some(expected) = expected {
        if raw.source_profile != expected {
            return Err(RejectionReason::InvalidSource);
        }
    }
    let required = match raw.source_profile {
        SourceProfile::A2 => HomogenizedSample::A2_NATIVE_STEPS,
        SourceProfile::Wo | SourceProfile::Synthetic => HomogenizedSample::STEP_COUNT,
    };
    if raw.step_count < required {
        return Err(RejectionReason::TooShort);
    }
    let mut sliced = truncate_steps(raw, HomogenizedSample::STEP_COUNT);
    sliced.map_elements = filter_map(&sliced.map_elements);
    let focal = select_focal_agent(&sliced).ok_or(RejectionReason::NoValidFocal)?;
    sliced.focal_agent_id = Some(focal.clone());
    Ok(HomogenizedSample {
        scenario: sliced,
        focal_agent_id: focal,
    })
}

/// Homogenize a batch, preserving input order for both accepted samples
/// and rejections.
pub fn homogenize_batch(
    scenarios: &[Scenario],
    expected: Option<SourceProfile>,
) -> (Vec<HomogenizedSample>, Vec<(String, RejectionReason)>) {
    let mut samples = Vec::new();
    let mut rejects = Vec::new();
    for s in scenarios {
        match homogenize_scenario_as(s, expected) {
            Ok(sample) => samples.push(sample),
            Err(reason) => rejects.push((s.scenario_id.clone(), reason)),
        }
    }
    (samples, rejects)
}

/// Cap scene complexity: keep the ego, the focal agent, then the
/// `max_agents - 2` remaining agents nearest the ego's position at the
/// current step; keep the `max_map` map elements with smallest minimum
/// point-to-ego distance. Ties break by ascending identifier. Idempotent.
pub fn cap_complexity(
    sample: &HomogenizedSample,
    max_agents: usize,
    max_map: usize,
) -> Result<HomogenizedSample, HomogenizeError> {
    let scenario = sample.scenario();
    let ego = scenario
        .ego_track()
        .ok_or_else(|| HomogenizeError::MissingEgo(scenario.scenario_id.clone()))?;
    let ego_pos = ego.states[HomogenizedSample::CURRENT_STEP].position;
    let ego_id = ego.agent_id.clone();
    let focal_id = sample.focal_agent_id().to_string();

    let mut candidates: Vec<(f64, &str)> = scenario
        .tracks
        .iter()
        .filter(|t| t.agent_id != ego_id && t.agent_id != focal_id)
        .map(|t| {
            (
                t.states[HomogenizedSample::CURRENT_STEP]
                    .position
                    .distance(ego_pos),
                t.agent_id.as_str(),
            )
        })
        .collect();
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(b.1)));
    let extra_slots = max_agents.saturating_sub(2);
    let keep_agents: HashSet<&str> = candidates
        .iter()
        .take(extra_slots)
        .map(|(_, id)| *id)
        .chain([ego_id.as_str(), focal_id.as_str()])
        .collect();

    let mut elements: Vec<(f64, &str)> = scenario
        .map_elements
        .iter()
        .map(|e| (e.min_distance_to(ego_pos), e.element_id.as_str()))
        .collect();
    elements.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then_with(|| a.1.cmp(b.1)));
    let keep_elements: HashSet<&str> = elements.iter().take(max_map).map(|(_, id)| *id).collect();

    let capped = Scenario {
        tracks: scenario
            .tracks
            .iter()
            .filter(|t| keep_agents.contains(t.agent_id.as_str()))
            .cloned()
            .collect(),
        map_elements: scenario
            .map_elements
            .iter()
            .filter(|e| keep_elements.contains(e.element_id.as_str()))
            .cloned()
            .collect(),
        ..scenario.clone()
    };
    Ok(HomogenizedSample {
        scenario: capped,
        focal_agent_id: focal_id,
    })
}
