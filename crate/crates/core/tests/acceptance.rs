//! Acceptance suite: one test per release criterion, each printing a
//! PASS line (visible with `--nocapture`). Criteria with runtime budgets
//! assert them; run with `--test-threads=1` for clean timings.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use trajeval::complexity::{complexity_distribution, hdr_levels, kde_2d};
use trajeval::geom::{wrap_angle, Vec2};
use trajeval::homogenize::{
    cap_complexity, homogenize_batch, homogenize_scenario, HomogenizedSample, RejectionReason,
};
use trajeval::ingest::{generate_synthetic, ManeuverKind, SyntheticConfig};
use trajeval::metrics::{
    aggregate, delta_metrics, min_ade, min_fde, DatasetMetrics, MetricKind, MetricRecord, RunMeta,
};
use trajeval::predictors::PredictionSet;
use trajeval::scenario::{MapElementKind, SourceProfile};

fn meta(model: &str) -> RunMeta {
    RunMeta {
        model_tag: model.into(),
        train_tag: "wo".into(),
        test_tag: "wo".into(),
    }
}

fn dataset(model: &str, values: [f64; 4]) -> DatasetMetrics {
    DatasetMetrics::from_means(
        meta(model),
        1,
        Some(values[0]),
        Some(values[1]),
        Some(values[2]),
        Some(values[3]),
    )
}

/// Criterion 1: the published ID benchmark percentages (upper table
/// section) are reproduced from the absolute values within ±0.1 pp.
#[test]
fn c01_reference_relative_percentages() {
    let start = Instant::now();
    let runs = vec![
        dataset("qcnet", [0.820, 2.171, 0.344, 0.696]),
        dataset("fmae", [0.889, 2.318, 0.374, 0.829]),
        dataset("ep-q", [0.821, 2.155, 0.359, 0.802]),
        dataset("ep-f", [0.831, 2.171, 0.370, 0.825]),
    ];
    let expected: [(usize, [f64; 4]); 3] = [
        (1, [108.4, 106.8, 108.7, 119.1]),
        (2, [100.1, 99.3, 104.4, 115.2]),
        (3, [101.3, 100.0, 107.6, 118.5]),
    ];
    let table = trajeval::metrics::relative_to_reference(&runs, "qcnet").unwrap();
    for (row, pcts) in expected {
        for (slot, want) in pcts.iter().enumerate() {
            let (_, pct) = table[row].cells[slot].unwrap();
            let got = pct.unwrap();
            assert!(
                (got - want).abs() <= 0.1,
                "row {row} slot {slot}: {got:.3} vs published {want}"
            );
        }
    }
    for cell in table[0].cells.iter().flatten() {
        assert_eq!(cell.1, Some(100.0));
    }
    assert!(start.elapsed() < Duration::from_secs(1));
    println!(
        "ACCEPTANCE 01 table percentages: PASS [{:.2?}]",
        start.elapsed()
    );
}

/// Criterion 2: every published (ID value, delta) pair reproduces its
/// quoted relative percentage within ±0.5 pp.
#[test]
fn c02_delta_relative_percentages() {
    let start = Instant::now();
    let pairs: [(f64, f64, f64); 8] = [
        (0.359, 0.252, 70.2),
        (0.344, 0.351, 102.0),
        (0.696, 0.516, 74.1),
        (0.802, 0.394, 49.1),
        (0.829, 0.540, 65.1),
        (0.821, 0.643, 78.3),
        (1.161, -0.022, 1.9),
        (0.825, 0.508, 61.9),
    ];
    for (id_value, delta, quoted_pct) in pairs {
        let id = DatasetMetrics::from_means(meta("m"), 1, Some(id_value), None, None, None);
        let ood =
            DatasetMetrics::from_means(meta("m"), 1, Some(id_value + delta), None, None, None);
        let records = delta_metrics(&id, &ood).unwrap();
        assert_eq!(records.len(), 1);
        let got = records[0].relative_pct.unwrap();
        assert!(
            (got.abs() - quoted_pct).abs() <= 0.5,
            "pair ({id_value}, {delta:+}): {got:.3}% vs quoted {quoted_pct}%"
        );
        assert!((records[0].delta - delta).abs() < 1e-12);
    }
    assert!(start.elapsed() < Duration::from_secs(1));
    println!(
        "ACCEPTANCE 02 delta percentages: PASS [{:.2?}]",
        start.elapsed()
    );
}

/// Criterion 3: noiseless constant-velocity agents sit exactly on the
/// d = [1, 0] anchor.
#[test]
fn c03_constant_velocity_anchor() {
    let cfg = SyntheticConfig {
        scenario_count: 1000,
        maneuver_mix: BTreeMap::from([(ManeuverKind::ConstantVelocity, 1.0)]),
        speed_range: (0.5, 30.0),
        noise_sigma: 0.0,
        agent_count_range: (2, 4),
        seed: 301,
        ..SyntheticConfig::default()
    };
    let scenarios = generate_synthetic(&cfg).unwrap();
    let dist = complexity_distribution(&scenarios, 5.0, 4.1, 0.1).unwrap();
    assert_eq!(dist.entries.len(), 1000);
    assert_eq!(dist.excluded_low_speed + dist.excluded_out_of_range, 0);
    let max_err = dist
        .entries
        .iter()
        .map(|e| (e.vector.d_lon - 1.0).abs().max(e.vector.d_lat.abs()))
        .fold(0.0, f64::max);
    assert!(max_err < 1e-9, "max |d - [1,0]| = {max_err:e}");
    println!("ACCEPTANCE 03 CV anchor: PASS (max error {max_err:.3e})");
}

/// Criterion 4: with maneuvers placed inside [1.1 s, 5 s], the complexity
/// spread at a 1.1 s history exceeds the spread at a 5 s history by at
/// least 2x.
#[test]
fn c04_history_length_complexity_spread() {
    let start = Instant::now();
    let cfg = SyntheticConfig {
        scenario_count: 5000,
        maneuver_mix: BTreeMap::from([
            (ManeuverKind::Accelerate, 1.0),
            (ManeuverKind::Brake, 1.0),
            (ManeuverKind::TurnLeft, 1.0),
            (ManeuverKind::TurnRight, 1.0),
        ]),
        // Steps 15..45 = seconds 1.5..4.5, inside (1.1, 5.0).
        maneuver_window: (15, 45),
        speed_range: (3.0, 15.0),
        noise_sigma: 0.05,
        agent_count_range: (2, 2),
        map_elements_per_scene: 2,
        seed: 401,
        ..SyntheticConfig::default()
    };
    let scenarios = generate_synthetic(&cfg).unwrap();
    let short_history = complexity_distribution(&scenarios, 1.1, 4.1, 0.1).unwrap();
    let long_history = complexity_distribution(&scenarios, 5.0, 4.1, 0.1).unwrap();
    let trace_short = short_history.covariance_trace().unwrap();
    let trace_long = long_history.covariance_trace().unwrap();
    assert!(
        trace_short >= 2.0 * trace_long,
        "tr(cov) at 1.1s = {trace_short:.4}, at 5.0s = {trace_long:.4}"
    );
    assert!(start.elapsed() < Duration::from_secs(30));
    println!(
        "ACCEPTANCE 04 complexity spread: PASS (ratio {:.1}) [{:.2?}]",
        trace_short / trace_long,
        start.elapsed()
    );
}

/// Canonical displacement used by the brute-force oracles; written out
/// independently of the library's Vec2 helpers.
fn oracle_dist(a: Vec2, b: Vec2) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    (dx * dx + dy * dy).sqrt()
}

/// Brute-force enumeration of min over the best-K per-mode errors.
fn oracle_min(pred: &PredictionSet, gt: &[Vec2], k: usize, final_only: bool) -> f64 {
    let mut order: Vec<usize> = (0..pred.modes.len()).collect();
    if let Some(probs) = &pred.probabilities {
        // Stable insertion sort by descending probability.
        for i in 1..order.len() {
            let mut j = i;
            while j > 0 && probs[order[j - 1]] < probs[order[j]] {
                order.swap(j - 1, j);
                j -= 1;
            }
        }
    }
    let mut best = f64::INFINITY;
    for &m in &order[..k] {
        let mode = &pred.modes[m];
        let err = if final_only {
            oracle_dist(mode[40], gt[40])
        } else {
            let mut sum = 0.0;
            for i in 0..41 {
                sum += oracle_dist(mode[i], gt[i]);
            }
            sum / 41.0
        };
        if err < best {
            best = err;
        }
    }
    best
}

/// Criterion 5: metric implementations match the brute-force oracle
/// bit-for-bit on 1000 random instances.
#[test]
fn c05_metric_oracle_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(501);
    let random_points = |rng: &mut ChaCha8Rng| -> Vec<Vec2> {
        (0..41)
            .map(|_| Vec2::new(rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)))
            .collect()
    };
    for case in 0..1000 {
        let n_modes = rng.random_range(1..=8);
        let modes: Vec<Vec<Vec2>> = (0..n_modes).map(|_| random_points(&mut rng)).collect();
        let probabilities = if rng.random_range(0.0..1.0) < 0.5 {
            let raw: Vec<f64> = (0..n_modes).map(|_| rng.random_range(0.01..1.0)).collect();
            let sum: f64 = raw.iter().sum();
            Some(raw.into_iter().map(|w| w / sum).collect())
        } else {
            None
        };
        let gt = random_points(&mut rng);
        let pred = PredictionSet {
            scenario_id: format!("case-{case}"),
            agent_id: "a".into(),
            modes,
            probabilities,
        };
        let k = rng.random_range(1..=n_modes);
        let ade = min_ade(&pred, &gt, k).unwrap();
        let fde = min_fde(&pred, &gt, k).unwrap();
        assert_eq!(
            ade.to_bits(),
            oracle_min(&pred, &gt, k, false).to_bits(),
            "case {case}: minADE mismatch"
        );
        assert_eq!(
            fde.to_bits(),
            oracle_min(&pred, &gt, k, true).to_bits(),
            "case {case}: minFDE mismatch"
        );
    }
    println!("ACCEPTANCE 05 metric oracle equivalence: PASS (1000 cases, bit-identical)");
}

// ---------------------------------------------------------------------------
// Criterion 6: invariance property suites, >= 200 random cases each.
// ---------------------------------------------------------------------------

fn transform_points(points: &[Vec2], angle: f64, shift: Vec2) -> Vec<Vec2> {
    points.iter().map(|p| p.rotated(angle) + shift).collect()
}

fn arb_mode() -> impl Strategy<Value = Vec<Vec2>> {
    proptest::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 41)
        .prop_map(|pts| pts.into_iter().map(|(x, y)| Vec2::new(x, y)).collect())
}

fn arb_pred() -> impl Strategy<Value = PredictionSet> {
    (proptest::collection::vec(arb_mode(), 1..=6), any::<bool>())
        .prop_flat_map(|(modes, with_probs)| {
            let n = modes.len();
            let probs = if with_probs {
                proptest::collection::vec(0.01..1.0f64, n)
                    .prop_map(|raw| {
                        let sum: f64 = raw.iter().sum();
                        Some(raw.into_iter().map(|w| w / sum).collect::<Vec<_>>())
                    })
                    .boxed()
            } else {
                Just(None).boxed()
            };
            (Just(modes), probs)
        })
        .prop_map(|(modes, probabilities)| PredictionSet {
            scenario_id: "p".into(),
            agent_id: "a".into(),
            modes,
            probabilities,
        })
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 256,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    /// Rotating and translating prediction and ground truth together
    /// leaves both metrics unchanged to 1e-9.
    #[test]
    fn c06_metric_rigid_invariance(
        pred in arb_pred(),
        gt in arb_mode(),
        angle in -PI..PI,
        tx in -500.0..500.0f64,
        ty in -500.0..500.0f64,
    ) {
        let shift = Vec2::new(tx, ty);
        let k = pred.modes.len();
        let moved = PredictionSet {
            modes: pred.modes.iter().map(|m| transform_points(m, angle, shift)).collect(),
            ..pred.clone()
        };
        let gt_moved = transform_points(&gt, angle, shift);
        for kk in [1, k] {
            prop_assert!((min_ade(&pred, &gt, kk).unwrap() - min_ade(&moved, &gt_moved, kk).unwrap()).abs() <= 1e-9);
            prop_assert!((min_fde(&pred, &gt, kk).unwrap() - min_fde(&moved, &gt_moved, kk).unwrap()).abs() <= 1e-9);
        }
    }

    /// The complexity vector is expressed in the agent frame, so a global
    /// rigid transform leaves it unchanged to 1e-9.
    #[test]
    fn c06_complexity_rigid_invariance(
        states in proptest::collection::vec(
            ((-200.0..200.0f64, -200.0..200.0f64), -PI..PI, 0.2..30.0f64),
            91,
        ),
        angle in -PI..PI,
        tx in -500.0..500.0f64,
        ty in -500.0..500.0f64,
    ) {
        use trajeval::scenario::{AgentKind, AgentState, Track};
        let build = |xform: bool| -> Track {
            let shift = Vec2::new(tx, ty);
            Track {
                agent_id: "t".into(),
                agent_kind: AgentKind::Vehicle,
                is_ego: false,
                states: states
                    .iter()
                    .map(|((x, y), heading, speed)| {
                        let p = Vec2::new(*x, *y);
                        let v = Vec2::from_angle(*heading) * *speed;
                        if xform {
                            AgentState {
                                position: p.rotated(angle) + shift,
                                heading: wrap_angle(heading + angle),
                                velocity: v.rotated(angle),
                                observed: true,
                            }
                        } else {
                            AgentState { position: p, heading: *heading, velocity: v, observed: true }
                        }
                    })
                    .collect(),
            }
        };
        use trajeval::complexity::{complexity_vector, ComplexityOutcome};
        let base = complexity_vector(&build(false), 5.0, 4.1, 0.1).unwrap();
        let moved = complexity_vector(&build(true), 5.0, 4.1, 0.1).unwrap();
        match (base, moved) {
            (ComplexityOutcome::Vector(a), ComplexityOutcome::Vector(b)) => {
                prop_assert!((a.d_lon - b.d_lon).abs() <= 1e-9, "d_lon {} vs {}", a.d_lon, b.d_lon);
                prop_assert!((a.d_lat - b.d_lat).abs() <= 1e-9, "d_lat {} vs {}", a.d_lat, b.d_lat);
            }
            other => prop_assert!(false, "unexpected outcome {other:?}"),
        }
    }

    /// Appending a mode never increases the best-of-all-modes error.
    #[test]
    fn c06_mode_monotonicity(
        modes in proptest::collection::vec(arb_mode(), 1..=6),
        extra in arb_mode(),
        gt in arb_mode(),
    ) {
        let base = PredictionSet {
            scenario_id: "p".into(),
            agent_id: "a".into(),
            modes: modes.clone(),
            probabilities: None,
        };
        let mut extended = base.clone();
        extended.modes.push(extra);
        let k = base.modes.len();
        prop_assert!(min_ade(&extended, &gt, k + 1).unwrap() <= min_ade(&base, &gt, k).unwrap());
        prop_assert!(min_fde(&extended, &gt, k + 1).unwrap() <= min_fde(&base, &gt, k).unwrap());
    }

    /// Aggregation is order-insensitive to 1e-9.
    #[test]
    fn c06_aggregation_order_insensitive(
        pair in proptest::collection::vec(0.0..100.0f64, 1..500)
            .prop_flat_map(|v| (Just(v.clone()), Just(v).prop_shuffle())),
    ) {
        let (original, shuffled) = pair;
        let records = |values: &[f64]| -> Vec<MetricRecord> {
            values
                .iter()
                .enumerate()
                .map(|(i, v)| {
                    let mut r = MetricRecord {
                        scenario_id: format!("s{i}"),
                        agent_id: "a".into(),
                        ..MetricRecord::default()
                    };
                    r.set(MetricKind::MinAde1, *v);
                    r
                })
                .collect()
        };
        let a = aggregate(&records(&original), RunMeta::default()).unwrap();
        let b = aggregate(&records(&shuffled), RunMeta::default()).unwrap();
        let (ma, mb) = (a.mean(MetricKind::MinAde1).unwrap(), b.mean(MetricKind::MinAde1).unwrap());
        prop_assert!((ma - mb).abs() <= 1e-9, "{ma} vs {mb}");
    }

    /// Swapping ID and OoD negates the delta, and delta/relative always
    /// share a sign.
    #[test]
    fn c06_delta_antisymmetry(
        id_vals in [0.01..10.0f64, 0.01..10.0f64, 0.01..10.0f64, 0.01..10.0f64],
        ood_vals in [0.01..10.0f64, 0.01..10.0f64, 0.01..10.0f64, 0.01..10.0f64],
    ) {
        let a = dataset("m", id_vals);
        let b = dataset("m", ood_vals);
        let fwd = delta_metrics(&a, &b).unwrap();
        let rev = delta_metrics(&b, &a).unwrap();
        for (f, r) in fwd.iter().zip(&rev) {
            prop_assert_eq!(f.delta.to_bits(), (-r.delta).to_bits());
            let rel = f.relative_pct.unwrap();
            prop_assert!(f.delta == 0.0 || (f.delta > 0.0) == (rel > 0.0));
        }
    }
}

/// Criterion 7: homogenization bookkeeping: exactly the scenarios lacking
/// a fully observed non-ego agent are rejected, everything else becomes a
/// valid sample.
#[test]
fn c07_homogenization_bookkeeping() {
    let cfg = SyntheticConfig {
        scenario_count: 100,
        agent_count_range: (3, 6),
        maneuver_mix: BTreeMap::from_iter(ManeuverKind::ALL.map(|k| (k, 1.0))),
        seed: 701,
        ..SyntheticConfig::default()
    };
    let mut scenarios = generate_synthetic(&cfg).unwrap();
    for s in &mut scenarios {
        s.source_profile = SourceProfile::Wo;
    }
    // Gap every non-ego track of every fifth scenario: 20 scenarios lose
    // their only fully observed non-ego agent.
    for (i, s) in scenarios.iter_mut().enumerate() {
        if i % 5 == 0 {
            for t in s.tracks.iter_mut().filter(|t| !t.is_ego) {
                t.states[40].observed = false;
            }
        }
    }
    let (samples, rejects) = homogenize_batch(&scenarios, None);
    assert_eq!(samples.len(), 80);
    assert_eq!(rejects.len(), 20);
    for (_, reason) in &rejects {
        assert_eq!(*reason, RejectionReason::NoValidFocal);
    }
    for sample in &samples {
        let s = sample.scenario();
        assert_eq!(s.step_count, 91);
        let focal = sample.focal_track();
        assert!(focal.fully_observed() && !focal.is_ego);
        assert!(s.map_elements.iter().all(|e| matches!(
            e.kind,
            MapElementKind::LaneCenter | MapElementKind::Crosswalk
        )));
    }
    println!("ACCEPTANCE 07 homogenization bookkeeping: PASS (80 samples, 20 rejections)");
}

/// Criterion 8: the complexity cap keeps exactly the nearest agents and
/// map elements, always retains ego and focal, is idempotent, and matches
/// a brute-force nearest-k oracle on 100 random scenes.
#[test]
fn c08_complexity_cap() {
    let cfg = SyntheticConfig {
        scenario_count: 100,
        agent_count_range: (60, 60),
        map_elements_per_scene: 200,
        maneuver_mix: BTreeMap::from_iter(ManeuverKind::ALL.map(|k| (k, 1.0))),
        seed: 801,
        ..SyntheticConfig::default()
    };
    let scenarios = generate_synthetic(&cfg).unwrap();
    for raw in &scenarios {
        let sample = homogenize_scenario(raw).unwrap();
        let s = sample.scenario();
        assert_eq!(s.tracks.len(), 60);
        assert!(
            s.map_elements.len() >= 120,
            "need >= 120 map elements post-filter, got {}",
            s.map_elements.len()
        );

        let capped = cap_complexity(&sample, 50, 80).unwrap();
        assert_eq!(capped.scenario().tracks.len(), 50);
        assert_eq!(capped.scenario().map_elements.len(), 80);
        assert!(capped.scenario().ego_track().is_some());
        assert!(capped.scenario().track(sample.focal_agent_id()).is_some());
        assert_eq!(cap_complexity(&capped, 50, 80).unwrap(), capped);

        // Brute-force nearest-k oracle.
        let ego = s.ego_track().unwrap();
        let ego_pos = ego.states[HomogenizedSample::CURRENT_STEP].position;
        let mut others: Vec<(f64, &str)> = s
            .tracks
            .iter()
            .filter(|t| !t.is_ego && t.agent_id != sample.focal_agent_id())
            .map(|t| {
                (
                    t.states[HomogenizedSample::CURRENT_STEP]
                        .position
                        .distance(ego_pos),
                    t.agent_id.as_str(),
                )
            })
            .collect();
        others.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(b.1)));
        let mut expected_agents: BTreeSet<&str> = others[..48].iter().map(|(_, id)| *id).collect();
        expected_agents.insert(ego.agent_id.as_str());
        expected_agents.insert(sample.focal_agent_id());
        let got_agents: BTreeSet<&str> = capped
            .scenario()
            .tracks
            .iter()
            .map(|t| t.agent_id.as_str())
            .collect();
        assert_eq!(got_agents, expected_agents, "scenario {}", s.scenario_id);

        let mut elements: Vec<(f64, &str)> = s
            .map_elements
            .iter()
            .map(|e| (e.min_distance_to(ego_pos), e.element_id.as_str()))
            .collect();
        elements.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(b.1)));
        let expected_elements: BTreeSet<&str> = elements[..80].iter().map(|(_, id)| *id).collect();
        let got_elements: BTreeSet<&str> = capped
            .scenario()
            .map_elements
            .iter()
            .map(|e| e.element_id.as_str())
            .collect();
        assert_eq!(
            got_elements, expected_elements,
            "scenario {}",
            s.scenario_id
        );
    }
    println!("ACCEPTANCE 08 complexity cap: PASS (100 scenes vs brute-force oracle)");
}

/// Criterion 9: on 50k standard-normal samples the 90% HDR encloses
/// 88-92% of the empirical mass and thresholds decrease strictly.
#[test]
fn c09_kde_hdr_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(901);
    let points: Vec<Vec2> = (0..50_000)
        .map(|_| {
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            Vec2::new(x, y)
        })
        .collect();
    let grid = kde_2d(&points, 200).unwrap();
    let mass = grid.total_mass();
    assert!((0.98..=1.02).contains(&mass), "grid mass {mass}");

    let levels = hdr_levels(&grid, &[0.3, 0.6, 0.9]).unwrap();
    assert!(
        levels[0] > levels[1] && levels[1] > levels[2],
        "thresholds not strictly decreasing: {levels:?}"
    );

    let c90 = levels[2];
    let enclosed = points
        .iter()
        .filter(|p| grid.density_at(**p).is_some_and(|d| d >= c90))
        .count() as f64
        / points.len() as f64;
    assert!(
        (0.88..=0.92).contains(&enclosed),
        "90% HDR encloses {enclosed:.4} of the empirical mass"
    );

    // Analytic disk oracle: for a standard normal smoothed with bandwidth
    // h, the 90% HDR is a disk of radius ~ sqrt(-2 ln 0.1) * sqrt(1 + h^2)
    // ~= 2.175. Allow a cell of slack on either side.
    for iy in 0..grid.ny {
        for ix in 0..grid.nx {
            let r = grid.cell_center(ix, iy).norm();
            let above = grid.values[iy * grid.nx + ix] >= c90;
            if above {
                assert!(r <= 2.45, "super-level cell at radius {r:.3}");
            } else {
                assert!(r >= 1.9, "sub-level cell at radius {r:.3}");
            }
        }
    }
    println!("ACCEPTANCE 09 KDE/HDR oracle: PASS (90% region holds {enclosed:.3} of samples)");
}

// ---------------------------------------------------------------------------
// Criterion 10: end-to-end pipeline determinism and performance.
// ---------------------------------------------------------------------------

fn run_cli(args: &[&str], dir: &Path) {
    let output = Command::new(env!("CARGO_BIN_EXE_trajeval"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "trajeval {args:?} failed:\n{}",
        String::from_utf8_lossy(&output.stderr)
    );
}

fn pipeline(dir: &Path, jobs: &str) -> Duration {
    std::fs::create_dir_all(dir.join("runs")).unwrap();
    std::fs::write(
        dir.join("gen.cfg"),
        "scenario_count = 10000\n\
         seed = 42\n\
         noise_sigma = 0.1\n\
         speed_min = 2.0\n\
         speed_max = 15.0\n\
         agent_count_min = 2\n\
         agent_count_max = 2\n\
         map_elements_per_scene = 2\n\
         maneuver_window_start = 15\n\
         maneuver_window_end = 45\n\
         maneuver.constant_velocity = 1.0\n\
         maneuver.accelerate = 1.0\n\
         maneuver.brake = 1.0\n\
         maneuver.turn_left = 1.0\n\
         maneuver.turn_right = 1.0\n\
         maneuver.stop_and_go = 1.0\n",
    )
    .unwrap();
    let start = Instant::now();
    run_cli(
        &[
            "generate",
            "--config",
            "gen.cfg",
            "--out",
            "raw.jsonl",
            "--jobs",
            jobs,
        ],
        dir,
    );
    run_cli(
        &[
            "homogenize",
            "--in",
            "raw.jsonl",
            "--out",
            "homog.jsonl",
            "--profile",
            "auto",
            "--rejects",
            "rejects.csv",
            "--jobs",
            jobs,
        ],
        dir,
    );
    run_cli(
        &[
            "predict",
            "--in",
            "homog.jsonl",
            "--out",
            "preds.jsonl",
            "--model",
            "poly",
            "--degrees",
            "1,2,3,4,5,6",
            "--jobs",
            jobs,
        ],
        dir,
    );
    run_cli(
        &[
            "eval",
            "--scenarios",
            "homog.jsonl",
            "--predictions",
            "preds.jsonl",
            "--k",
            "1,6",
            "--out",
            "runs/metrics.csv",
            "--model-tag",
            "poly6",
            "--train-tag",
            "syn",
            "--test-tag",
            "syn",
            "--jobs",
            jobs,
        ],
        dir,
    );
    run_cli(
        &[
            "report",
            "table",
            "--runs",
            "runs",
            "--reference",
            "poly6",
            "--out",
            "table",
        ],
        dir,
    );
    start.elapsed()
}

fn assert_files_identical(a: &Path, b: &Path) {
    use std::io::Read;
    let (mut fa, mut fb) = (
        std::fs::File::open(a).unwrap(),
        std::fs::File::open(b).unwrap(),
    );
    let (mut ba, mut bb) = (vec![0u8; 1 << 20], vec![0u8; 1 << 20]);
    loop {
        let na = fa.read(&mut ba).unwrap();
        let nb = fb.read(&mut bb).unwrap();
        assert_eq!(
            na,
            nb,
            "{} and {} differ in length",
            a.display(),
            b.display()
        );
        if na == 0 {
            return;
        }
        assert_eq!(
            ba[..na],
            bb[..nb],
            "{} and {} differ",
            a.display(),
            b.display()
        );
    }
}

#[test]
fn c10_pipeline_determinism_and_performance() {
    let root = tempfile::tempdir().unwrap();
    let (dir_a, dir_b, dir_c) = (
        root.path().join("a"),
        root.path().join("b"),
        root.path().join("c"),
    );
    for d in [&dir_a, &dir_b, &dir_c] {
        std::fs::create_dir_all(d).unwrap();
    }

    let elapsed = pipeline(&dir_a, "1");
    assert!(
        elapsed < Duration::from_secs(60),
        "single-threaded pipeline took {elapsed:.2?}"
    );
    pipeline(&dir_b, "1");
    for file in [
        "raw.jsonl",
        "homog.jsonl",
        "preds.jsonl",
        "rejects.csv",
        "runs/metrics.csv",
        "table.csv",
        "table.txt",
    ] {
        assert_files_identical(&dir_a.join(file), &dir_b.join(file));
    }

    // Same pipeline with 8 workers: results equal within 1e-9.
    pipeline(&dir_c, "8");
    let read_metrics = |dir: &Path| -> Vec<Vec<f64>> {
        let content = std::fs::read_to_string(dir.join("runs/metrics.csv")).unwrap();
        content
            .lines()
            .skip(1)
            .map(|line| {
                line.split(',')
                    .skip(5)
                    .map(|cell| cell.parse::<f64>().unwrap())
                    .collect()
            })
            .collect()
    };
    let (ma, mc) = (read_metrics(&dir_a), read_metrics(&dir_c));
    assert_eq!(ma.len(), mc.len());
    for (ra, rc) in ma.iter().zip(&mc) {
        for (va, vc) in ra.iter().zip(rc) {
            assert!((va - vc).abs() <= 1e-9, "{va} vs {vc}");
        }
    }
    assert_files_identical(&dir_a.join("table.csv"), &dir_c.join("table.csv"));
    println!(
        "ACCEPTANCE 10 pipeline determinism: PASS (single-threaded run {elapsed:.2?}, byte-identical; --jobs 8 within 1e-9)"
    );
}
