//! Baseline prediction generators: constant velocity and polynomial
//! fit-and-extrapolate.
//!
//! The polynomial predictor fits each axis independently by least squares
//! over step indices normalized to [−1, 1], then evaluates the fit at the
//! 41 future steps. A degree ensemble (default 1..=6) yields a K-mode
//! prediction with uniform probabilities, enough to exercise best-of-K
//! metrics without a learned model.

use nalgebra::DMatrix;

use crate::geom::Vec2;
use crate::homogenize::HomogenizedSample;
use crate::scenario::STEP_DT;

/// Condition-number cutoff beyond which a fit is reported instead of
/// silently returning garbage.
const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, thiserror::Error)]
pub enum PredictError {
    #[error("UNKNOWN_AGENT: agent {agent_id} not in scenario {scenario_id}")]
    UnknownAgent {
        scenario_id: String,
        agent_id: String,
    },
    #[error("FIT_ERROR: degree {degree}: {reason} (condition {condition:.3e})")]
    Fit {
        degree: usize,
        condition: f64,
        reason: String,
    },
    #[error("PREDICTION_ERROR: {0}")]
    Prediction(String),
}

/// K candidate future trajectories for one agent, aligned to future steps
/// 50..=90 of a homogenized sample.
#[derive(Clone, Debug, PartialEq)]
pub struct PredictionSet {
    pub scenario_id: String,
    pub agent_id: String,
    /// K modes, each exactly 41 points.
    pub modes: Vec<Vec<Vec2>>,
    /// Optional per-mode weights, non-negative, summing to 1 ± 1e-6.
    pub probabilities: Option<Vec<f64>>,
}

impl PredictionSet {
    pub fn mode_count(&self) -> usize {
        self.modes.len()
    }

    /// Structural invariant check; returns the first problem found.
    pub fn check(&self) -> Result<(), String> {
        if self.modes.is_empty() {
            return Err("needs at least one mode".into());
        }
        for (i, mode) in self.modes.iter().enumerate() {
            if mode.len() != HomogenizedSample::FUTURE_LEN {
                return Err(format!(
                    "mode {i} has {} points, expected {}",
                    mode.len(),
                    HomogenizedSample::FUTURE_LEN
                ));
            }
            if mode.iter().any(|p| !p.is_finite()) {
                return Err(format!("mode {i} contains a non-finite point"));
            }
        }
        if let Some(probs) = &self.probabilities {
            if probs.len() != self.modes.len() {
                return Err(format!(
                    "{} probabilities for {} modes",
                    probs.len(),
                    self.modes.len()
                ));
            }
            if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err("probabilities must be finite and non-negative".into());
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > 1e-6 {
                return Err(format!("probabilities sum to {sum}, expected 1 ± 1e-6"));
            }
        }
        Ok(())
    }
}

/// Per-axis polynomial coefficients over normalized time.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyCoeffs {
    pub degree: usize,
    /// Ascending powers, length degree + 1, per axis.
    pub coeffs_x: Vec<f64>,
    pub coeffs_y: Vec<f64>,
    /// Affine step-index → [−1, 1] map: t_norm = (step − center) / half_span.
    pub center: f64,
    pub half_span: f64,
}

impl PolyCoeffs {
    fn normalize(&self, step: f64) -> f64 {
        (step - self.center) / self.half_span
    }

    /// Evaluate the fit at a (possibly fractional or extrapolated) step
    /// index, using the stored time normalization.
    pub fn eval_at_step(&self, step: f64) -> Vec2 {
        let t = self.normalize(step);
        Vec2::new(horner(&self.coeffs_x, t), horner(&self.coeffs_y, t))
    }
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

/// Constant-velocity extrapolation from the state at the current step:
/// mode = p(49) + (step − 49)·0.1 s · v(49), for steps 50..=90. K = 1.
pub fn predict_constant_velocity(
    sample: &HomogenizedSample,
    agent_id: &str,
) -> Result<PredictionSet, PredictError> {
    let track = sample
        .scenario()
        .track(agent_id)
        .ok_or_else(|| PredictError::UnknownAgent {
            scenario_id: sample.scenario().scenario_id.clone(),
            agent_id: agent_id.to_string(),
        })?;
    let current = &track.states[HomogenizedSample::CURRENT_STEP];
    let mode: Vec<Vec2> = (1..=HomogenizedSample::FUTURE_LEN)
        .map(|k| current.position + current.velocity * (k as f64 * STEP_DT))
        .collect();
    Ok(PredictionSet {
        scenario_id: sample.scenario().scenario_id.clone(),
        agent_id: agent_id.to_string(),
        modes: vec![mode],
        probabilities: Some(vec![1.0]),
    })
}

/// Least-squares polynomial fit of a position history, one polynomial per
/// axis, over step indices normalized to [−1, 1]. Solved through an SVD
/// rather than normal equations; degree ≤ 7.
pub fn fit_polynomial(history: &[Vec2], degree: usize) -> Result<PolyCoeffs, PredictError> {
    if !(1..=7).contains(&degree) {
        return Err(PredictError::Fit {
            degree,
            condition: f64::NAN,
            reason: "degree must be in 1..=7".into(),
        });
    }
    let n = history.len();
    if n < degree + 1 {
        return Err(PredictError::Fit {
            degree,
            condition: f64::NAN,
            reason: format!("{n} history points cannot determine degree {degree}"),
        });
    }
    let center = (n - 1) as f64 / 2.0;
    let half_span = (n - 1) as f64 / 2.0;
    let design = DMatrix::from_fn(n, degree + 1, |i, j| {
        ((i as f64 - center) / half_span).powi(j as i32)
    });
    let rhs = DMatrix::from_fn(n, 2, |i, axis| {
        if axis == 0 {
            history[i].x
        } else {
            history[i].y
        }
    });
    let svd = design.svd(true, true);
    let sv = &svd.singular_values;
    let (s_max, s_min) = (sv.max(), sv.min());
    let condition = s_max / s_min;
    if s_min <= 0.0 || !condition.is_finite() || condition > MAX_CONDITION {
        return Err(PredictError::Fit {
            degree,
            condition,
            reason: "ill-conditioned design matrix".into(),
        });
    }
    let solution = svd.solve(&rhs, 0.0).map_err(|e| PredictError::Fit {
        degree,
        condition,
        reason: e.to_string(),
    })?;
    let coeffs_x: Vec<f64> = solution.column(0).iter().copied().collect();
    let coeffs_y: Vec<f64> = solution.column(1).iter().copied().collect();
    if coeffs_x.iter().chain(&coeffs_y).any(|c| !c.is_finite()) {
        return Err(PredictError::Fit {
            degree,
            condition,
            reason: "non-finite coefficients".into(),
        });
    }
    Ok(PolyCoeffs {
        degree,
        coeffs_x,
        coeffs_y,
        center,
        half_span,
    })
}

/// Fit the agent's 50-step history once per requested degree and evaluate
/// each fit at the future steps. K = number of degrees that fit cleanly,
/// probabilities uniform 1/K; degrees whose fit fails are dropped, and if
/// every degree fails the whole prediction errors out.
pub fn predict_polynomial(
    sample: &HomogenizedSample,
    agent_id: &str,
    degrees: &[usize],
) -> Result<PredictionSet, PredictError> {
    if degrees.is_empty() {
        return Err(PredictError::Prediction("no degrees requested".into()));
    }
    let track = sample
        .scenario()
        .track(agent_id)
        .ok_or_else(|| PredictError::UnknownAgent {
            scenario_id: sample.scenario().scenario_id.clone(),
            agent_id: agent_id.to_string(),
        })?;
    let history: Vec<Vec2> = track.states[..=HomogenizedSample::CURRENT_STEP]
        .iter()
        .map(|s| s.position)
        .collect();

    let mut modes = Vec::with_capacity(degrees.len());
    let mut failures = Vec::new();
    for &degree in degrees {
        match fit_polynomial(&history, degree) {
            Ok(coeffs) => {
                let mode = (HomogenizedSample::CURRENT_STEP + 1..HomogenizedSample::STEP_COUNT)
                    .map(|step| coeffs.eval_at_step(step as f64))
                    .collect();
                modes.push(mode);
            }
            Err(e) => failures.push(e.to_string()),
        }
    }
    if modes.is_empty() {
        return Err(PredictError::Prediction(format!(
            "all degree fits failed for agent {agent_id}: {}",
            failures.join("; ")
        )));
    }
    let k = modes.len();
    Ok(PredictionSet {
        scenario_id: sample.scenario().scenario_id.clone(),
        agent_id: agent_id.to_string(),
        modes,
        probabilities: Some(vec![1.0 / k as f64; k]),
    })
}
