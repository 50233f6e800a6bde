//! Seeded synthetic scenario generation with controllable maneuver content
//! and Gaussian position noise.
//!
//! Focal-agent motion is piecewise analytic (constant-acceleration straights,
//! constant-curvature arcs), so the deviation of any generated trajectory
//! from a constant-velocity extrapolation has a closed form tests can check
//! against. Determinism: scenario `i` draws only from a stream seeded by
//! `scenario_seed(cfg.seed, i)`, so batches can be produced in any schedule
//! and still serialize byte-identically.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::geom::{wrap_angle, Vec2};
use crate::ingest::IngestError;
use crate::scenario::{
    AgentKind, AgentState, MapElement, MapElementKind, Scenario, ScenarioMetadata, SourceProfile,
    Track, SAMPLING_RATE_HZ, STEP_DT,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ManeuverKind {
    ConstantVelocity,
    Accelerate,
    Brake,
    TurnLeft,
    TurnRight,
    StopAndGo,
}

impl ManeuverKind {
    pub const ALL: [ManeuverKind; 6] = [
        ManeuverKind::ConstantVelocity,
        ManeuverKind::Accelerate,
        ManeuverKind::Brake,
        ManeuverKind::TurnLeft,
        ManeuverKind::TurnRight,
        ManeuverKind::StopAndGo,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ManeuverKind::ConstantVelocity => "constant_velocity",
            ManeuverKind::Accelerate => "accelerate",
            ManeuverKind::Brake => "brake",
            ManeuverKind::TurnLeft => "turn_left",
            ManeuverKind::TurnRight => "turn_right",
            ManeuverKind::StopAndGo => "stop_and_go",
        }
    }
}

impl fmt::Display for ManeuverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ManeuverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ManeuverKind::ALL
            .iter()
            .copied()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| format!("unknown maneuver kind `{s}`"))
    }
}

/// Parameters for one synthetic corpus.
#[derive(Clone, Debug)]
pub struct SyntheticConfig {
    pub scenario_count: usize,
    pub step_count: usize,
    /// Probability weights for the focal agent's maneuver.
    pub maneuver_mix: BTreeMap<ManeuverKind, f64>,
    /// Steps within which non-CV maneuvers play out: [start, end].
    pub maneuver_window: (usize, usize),
    /// Focal/other agent start speeds, m/s: [min, max].
    pub speed_range: (f64, f64),
    /// Std. dev. of isotropic Gaussian position noise, meters.
    pub noise_sigma: f64,
    /// Total tracks per scenario including ego and focal: [min, max].
    pub agent_count_range: (usize, usize),
    pub map_elements_per_scene: usize,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            scenario_count: 100,
            step_count: 91,
            maneuver_mix: BTreeMap::from([(ManeuverKind::ConstantVelocity, 1.0)]),
            maneuver_window: (15, 45),
            speed_range: (2.0, 15.0),
            noise_sigma: 0.0,
            agent_count_range: (2, 6),
            map_elements_per_scene: 6,
            seed: 0,
        }
    }
}

impl SyntheticConfig {
    pub fn validate(&self) -> Result<(), IngestError> {
        let bad = |msg: String| Err(IngestError::Config(msg));
        if self.step_count < 2 {
            return bad(format!("step_count {} must be >= 2", self.step_count));
        }
        if self.maneuver_mix.is_empty() {
            return bad("maneuver_mix must not be empty".into());
        }
        let mut sum = 0.0;
        for (kind, w) in &self.maneuver_mix {
            if !w.is_finite() || *w < 0.0 {
                return bad(format!(
                    "maneuver weight for {kind} must be finite and >= 0"
                ));
            }
            sum += w;
        }
        if sum <= 0.0 {
            return bad("maneuver weights must sum to > 0".into());
        }
        let (ws, we) = self.maneuver_window;
        if ws > we || we >= self.step_count {
            return bad(format!(
                "maneuver_window [{ws}, {we}] must satisfy start <= end < step_count"
            ));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return bad(format!(
                "noise_sigma {} must be finite and >= 0",
                self.noise_sigma
            ));
        }
        let (smin, smax) = self.speed_range;
        if !smin.is_finite() || !smax.is_finite() || smin < 0.0 || smin > smax {
            return bad(format!(
                "speed_range [{smin}, {smax}] must satisfy 0 <= min <= max"
            ));
        }
        let (amin, amax) = self.agent_count_range;
        if amin < 2 || amin > amax {
            return bad(format!(
                "agent_count_range [{amin}, {amax}] must satisfy 2 <= min <= max (ego + focal)"
            ));
        }
        Ok(())
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-scenario RNG seed; independent of generation schedule.
pub fn scenario_seed(seed: u64, index: u64) -> u64 {
    splitmix64(seed ^ splitmix64(index))
}

/// Piecewise-analytic motion segment; `t0` is the segment start time.
#[derive(Clone, Copy, Debug)]
enum Segment {
    /// Constant-acceleration straight along a fixed heading.
    Straight {
        t0: f64,
        p0: Vec2,
        speed0: f64,
        accel: f64,
        heading: f64,
    },
    /// Constant-speed, constant-yaw-rate arc.
    Arc {
        t0: f64,
        p0: Vec2,
        speed: f64,
        heading0: f64,
        yaw_rate: f64,
    },
}

impl Segment {
    fn start_time(&self) -> f64 {
        match self {
            Segment::Straight { t0, .. } | Segment::Arc { t0, .. } => *t0,
        }
    }

    fn state(&self, t: f64) -> AgentState {
        match *self {
            Segment::Straight {
                t0,
                p0,
                speed0,
                accel,
                heading,
            } => {
                let tau = t - t0;
                let u = Vec2::from_angle(heading);
                let v_vec = u * speed0;
                let a_vec = u * accel;
                AgentState {
                    position: p0 + v_vec * tau + a_vec * (0.5 * tau * tau),
                    heading: wrap_angle(heading),
                    velocity: v_vec + a_vec * tau,
                    observed: true,
                }
            }
            Segment::Arc {
                t0,
                p0,
                speed,
                heading0,
                yaw_rate,
            } => {
                let tau = t - t0;
                let theta = heading0 + yaw_rate * tau;
                let radius = speed / yaw_rate;
                let position = p0
                    + Vec2::new(
                        radius * (theta.sin() - heading0.sin()),
                        radius * (heading0.cos() - theta.cos()),
                    );
                AgentState {
                    position,
                    heading: wrap_angle(theta),
                    velocity: Vec2::from_angle(theta) * speed,
                    observed: true,
                }
            }
        }
    }
}

fn sample_track(segments: &[Segment], step_count: usize) -> Vec<AgentState> {
    (0..step_count)
        .map(|k| {
            let t = k as f64 * STEP_DT;
            let seg = segments
                .iter()
                .rev()
                .find(|s| s.start_time() <= t)
                .unwrap_or(&segments[0]);
            seg.state(t)
        })
        .collect()
}

/// Segments for the focal agent's maneuver. The maneuver plays out inside
/// the configured window; motion before and after is constant-velocity.
fn focal_segments(
    kind: ManeuverKind,
    p0: Vec2,
    heading: f64,
    speed: f64,
    window: (f64, f64),
    rng: &mut ChaCha8Rng,
) -> Vec<Segment> {
    let (tw_s, tw_e) = window;
    let duration = tw_e - tw_s;
    let cruise = Segment::Straight {
        t0: 0.0,
        p0,
        speed0: speed,
        accel: 0.0,
        heading,
    };
    if kind == ManeuverKind::ConstantVelocity || duration <= 0.0 {
        return vec![cruise];
    }
    let enter = cruise.state(tw_s);
    match kind {
        ManeuverKind::Accelerate | ManeuverKind::Brake => {
            let factor = if kind == ManeuverKind::Accelerate {
                rng.random_range(1.3..=2.0)
            } else {
                rng.random_range(0.2..=0.7)
            };
            let target = speed * factor;
            let accel = (target - speed) / duration;
            let mid = Segment::Straight {
                t0: tw_s,
                p0: enter.position,
                speed0: speed,
                accel,
                heading,
            };
            let exit = mid.state(tw_e);
            vec![
                cruise,
                mid,
                Segment::Straight {
                    t0: tw_e,
                    p0: exit.position,
                    speed0: target,
                    accel: 0.0,
                    heading,
                },
            ]
        }
        ManeuverKind::TurnLeft | ManeuverKind::TurnRight => {
            let total_angle =
                rng.random_range(std::f64::consts::FRAC_PI_6..=std::f64::consts::FRAC_PI_2);
            let signed = if kind == ManeuverKind::TurnLeft {
                total_angle
            } else {
                -total_angle
            };
            let yaw_rate = signed / duration;
            let arc = Segment::Arc {
                t0: tw_s,
                p0: enter.position,
                speed,
                heading0: heading,
                yaw_rate,
            };
            let exit = arc.state(tw_e);
            vec![
                cruise,
                arc,
                Segment::Straight {
                    t0: tw_e,
                    p0: exit.position,
                    speed0: speed,
                    accel: 0.0,
                    heading: heading + signed,
                },
            ]
        }
        ManeuverKind::StopAndGo => {
            let t_mid = tw_s + duration / 2.0;
            let half = t_mid - tw_s;
            let dec = Segment::Straight {
                t0: tw_s,
                p0: enter.position,
                speed0: speed,
                accel: -speed / half,
                heading,
            };
            let stopped = dec.state(t_mid);
            let acc = Segment::Straight {
                t0: t_mid,
                p0: stopped.position,
                speed0: 0.0,
                accel: speed / (tw_e - t_mid),
                heading,
            };
            let resumed = acc.state(tw_e);
            vec![
                cruise,
                dec,
                acc,
                Segment::Straight {
                    t0: tw_e,
                    p0: resumed.position,
                    speed0: speed,
                    accel: 0.0,
                    heading,
                },
            ]
        }
        ManeuverKind::ConstantVelocity => unreachable!(),
    }
}

fn cv_track(
    agent_id: &str,
    agent_kind: AgentKind,
    is_ego: bool,
    p0: Vec2,
    heading: f64,
    speed: f64,
    step_count: usize,
) -> Track {
    let segments = [Segment::Straight {
        t0: 0.0,
        p0,
        speed0: speed,
        accel: 0.0,
        heading,
    }];
    Track {
        agent_id: agent_id.to_string(),
        agent_kind,
        is_ego,
        states: sample_track(&segments, step_count),
    }
}

/// Generate scenario `index` of the corpus described by `cfg`.
///
/// Pure given (cfg, index): safe to call from any thread or order.
pub fn generate_scenario(cfg: &SyntheticConfig, index: usize) -> Scenario {
    let mut rng = ChaCha8Rng::seed_from_u64(scenario_seed(cfg.seed, index as u64));

    let kinds: Vec<ManeuverKind> = cfg.maneuver_mix.keys().copied().collect();
    let weights: Vec<f64> = cfg.maneuver_mix.values().copied().collect();
    let chooser = WeightedIndex::new(&weights).expect("validated maneuver weights");
    let maneuver = kinds[rng.sample(&chooser)];

    let origin = Vec2::new(
        rng.random_range(-1000.0..=1000.0),
        rng.random_range(-1000.0..=1000.0),
    );
    let focal_heading = wrap_angle(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
    let focal_speed = rng.random_range(cfg.speed_range.0..=cfg.speed_range.1);
    let window = (
        cfg.maneuver_window.0 as f64 * STEP_DT,
        cfg.maneuver_window.1 as f64 * STEP_DT,
    );
    let segments = focal_segments(
        maneuver,
        origin,
        focal_heading,
        focal_speed,
        window,
        &mut rng,
    );
    let focal = Track {
        agent_id: "focal".to_string(),
        agent_kind: AgentKind::Vehicle,
        is_ego: false,
        states: sample_track(&segments, cfg.step_count),
    };

    // Ego trails the focal agent at constant velocity.
    let behind = rng.random_range(8.0..=25.0);
    let lateral = rng.random_range(-2.0..=2.0);
    let ego_p0 = origin - Vec2::from_angle(focal_heading) * behind
        + Vec2::new(-focal_heading.sin(), focal_heading.cos()) * lateral;
    let ego_heading = wrap_angle(focal_heading + rng.random_range(-0.1..=0.1));
    let ego_speed = rng.random_range(cfg.speed_range.0..=cfg.speed_range.1);
    let ego = cv_track(
        "ego",
        AgentKind::Vehicle,
        true,
        ego_p0,
        ego_heading,
        ego_speed,
        cfg.step_count,
    );

    let total_agents = rng.random_range(cfg.agent_count_range.0..=cfg.agent_count_range.1);
    let mut tracks = vec![ego, focal];
    for i in 0..total_agents.saturating_sub(2) {
        let p0 = origin
            + Vec2::new(
                rng.random_range(-60.0..=60.0),
                rng.random_range(-60.0..=60.0),
            );
        let heading = wrap_angle(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        let speed = rng.random_range(cfg.speed_range.0..=cfg.speed_range.1);
        let kind = if rng.random_range(0.0..1.0) < 0.8 {
            AgentKind::Vehicle
        } else {
            AgentKind::Pedestrian
        };
        let mut track = cv_track(
            &format!("agent-{i:03}"),
            kind,
            false,
            p0,
            heading,
            speed,
            cfg.step_count,
        );
        // Non-focal agents are never fully observed: punch one gap so the
        // focal-selection rule has exactly one candidate.
        let gap = rng.random_range(0..cfg.step_count);
        track.states[gap].observed = false;
        tracks.push(track);
    }

    let map_kind_weights = WeightedIndex::new([0.6, 0.2, 0.2]).unwrap();
    let map_kinds = [
        MapElementKind::LaneCenter,
        MapElementKind::Crosswalk,
        MapElementKind::LaneBoundary,
    ];
    let mut map_elements = Vec::with_capacity(cfg.map_elements_per_scene);
    for j in 0..cfg.map_elements_per_scene {
        let kind = map_kinds[rng.sample(&map_kind_weights)];
        let start = origin
            + Vec2::new(
                rng.random_range(-80.0..=80.0),
                rng.random_range(-80.0..=80.0),
            );
        let dir = Vec2::from_angle(rng.random_range(-std::f64::consts::PI..std::f64::consts::PI));
        let n_pts = match kind {
            MapElementKind::Crosswalk => rng.random_range(2..=4),
            _ => rng.random_range(4..=8),
        };
        let spacing = rng.random_range(4.0..=12.0);
        let polyline = (0..n_pts)
            .map(|i| start + dir * (i as f64 * spacing))
            .collect();
        map_elements.push(MapElement {
            element_id: format!("map-{j:03}"),
            kind,
            polyline,
        });
    }

    let mut scenario = Scenario {
        scenario_id: format!("syn-{index:06}"),
        source_profile: SourceProfile::Synthetic,
        sampling_rate_hz: SAMPLING_RATE_HZ,
        step_count: cfg.step_count,
        tracks,
        map_elements,
        focal_agent_id: Some("focal".to_string()),
        metadata: ScenarioMetadata {
            maneuver: Some(maneuver.to_string()),
            noise_sigma: Some(cfg.noise_sigma),
        },
    };
    if cfg.noise_sigma > 0.0 {
        perturb_positions(&mut scenario, cfg.noise_sigma, &mut rng);
    }
    scenario
}

/// Generate the whole corpus in index order.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<Vec<Scenario>, IngestError> {
    cfg.validate()?;
    Ok((0..cfg.scenario_count)
        .map(|i| generate_scenario(cfg, i))
        .collect())
}

/// Add i.i.d. Gaussian position noise N(0, sigma^2) per coordinate to every
/// track state, then recompute velocities and headings from the noisy
/// positions by central finite differences (one-sided at the endpoints).
/// sigma = 0 returns the input unchanged. Deterministic under `seed`.
pub fn add_noise(
    scenarios: &[Scenario],
    sigma: f64,
    seed: u64,
) -> Result<Vec<Scenario>, IngestError> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(IngestError::Config(format!(
            "noise sigma {sigma} must be finite and >= 0"
        )));
    }
    if sigma == 0.0 {
        return Ok(scenarios.to_vec());
    }
    Ok(scenarios
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut noisy = s.clone();
            let mut rng = ChaCha8Rng::seed_from_u64(scenario_seed(seed, i as u64));
            perturb_positions(&mut noisy, sigma, &mut rng);
            let prior = noisy.metadata.noise_sigma.unwrap_or(0.0);
            noisy.metadata.noise_sigma = Some((prior * prior + sigma * sigma).sqrt());
            noisy
        })
        .collect())
}

fn perturb_positions(scenario: &mut Scenario, sigma: f64, rng: &mut ChaCha8Rng) {
    for track in &mut scenario.tracks {
        for state in &mut track.states {
            let nx: f64 = rng.sample(StandardNormal);
            let ny: f64 = rng.sample(StandardNormal);
            state.position.x += nx * sigma;
            state.position.y += ny * sigma;
        }
        refit_derivatives(&mut track.states);
    }
}

/// Recompute velocity and heading fields from positions: central differences
/// in the interior, one-sided at the endpoints.
fn refit_derivatives(states: &mut [AgentState]) {
    let n = states.len();
    if n < 2 {
        return;
    }
    let positions: Vec<Vec2> = states.iter().map(|s| s.position).collect();
    for (k, state) in states.iter_mut().enumerate() {
        let v = if k == 0 {
            (positions[1] - positions[0]) * (1.0 / STEP_DT)
        } else if k == n - 1 {
            (positions[n - 1] - positions[n - 2]) * (1.0 / STEP_DT)
        } else {
            (positions[k + 1] - positions[k - 1]) * (1.0 / (2.0 * STEP_DT))
        };
        state.velocity = v;
        state.heading = wrap_angle(v.y.atan2(v.x));
    }
}
