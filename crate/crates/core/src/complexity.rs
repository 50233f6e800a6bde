//! Prediction-complexity analysis: how far an agent's motion deviates from
//! a constant-velocity extrapolation over the prediction horizon.
//!
//! For a track with start state at `t_start` and end position one horizon
//! later, the normalized deviation is
//!
//! ```text
//! d_lon = Δp · û / (|v_start| · horizon)
//! d_lat = Δp · n̂ / (|v_start| · horizon)
//! ```
//!
//! with û the unit vector along the heading at `t_start` and n̂ its left
//! normal. d = [1, 0] means exactly constant-velocity motion; the spread of
//! d over a dataset measures how demanding its prediction task is. The
//! dataset-level view is a 2D kernel density estimate with
//! highest-density-region contour levels.

use crate::geom::Vec2;
use crate::scenario::{Scenario, Track, SAMPLING_RATE_HZ};

/// Agents slower than this at `t_start` are excluded: the normalization
/// divides by |v_start|.
pub const DEFAULT_LOW_SPEED_THRESHOLD: f64 = 0.1;
/// Prediction horizon of the homogenized task, seconds.
pub const DEFAULT_HORIZON: f64 = 4.1;
pub const DEFAULT_GRID_RESOLUTION: usize = 200;

/// Gaussian kernels are truncated this many bandwidths out; the tail mass
/// beyond 6σ is ~2e-9 per axis.
const KERNEL_CUTOFF: f64 = 6.0;

#[derive(Debug, thiserror::Error)]
pub enum ComplexityError {
    #[error("OUT_OF_RANGE: {0}")]
    OutOfRange(String),
    #[error("DEGENERATE_DATA: {0}")]
    DegenerateData(String),
    #[error("MISSING_FOCAL: scenario {0} has no designated focal agent")]
    MissingFocal(String),
    #[error("INVALID_MASSES: {0}")]
    InvalidMasses(String),
}

/// The normalized longitudinal/lateral deviation of one agent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexityVector {
    pub d_lon: f64,
    pub d_lat: f64,
    pub t_start: f64,
    pub speed_at_start: f64,
}

/// Result of evaluating one track: either a vector or a low-speed exclusion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ComplexityOutcome {
    Vector(ComplexityVector),
    ExcludedLowSpeed { speed: f64 },
}

/// Map a time in seconds onto the step grid: step k spans (k·0.1, (k+1)·0.1]
/// seconds, so t_start = 5.0 s is step 49 and 1.1 s is step 10.
fn step_of_time(t: f64) -> Option<usize> {
    let steps = (t * SAMPLING_RATE_HZ).round();
    if steps >= 1.0 && steps.is_finite() {
        Some(steps as usize - 1)
    } else {
        None
    }
}

fn horizon_steps(horizon: f64) -> Option<usize> {
    let steps = (horizon * SAMPLING_RATE_HZ).round();
    if steps >= 1.0 && steps.is_finite() {
        Some(steps as usize)
    } else {
        None
    }
}

/// Evaluate the normalized deviation of `track` for a history ending at
/// `t_start` and a prediction horizon of `horizon` seconds.
pub fn complexity_vector(
    track: &Track,
    t_start: f64,
    horizon: f64,
    low_speed_threshold: f64,
) -> Result<ComplexityOutcome, ComplexityError> {
    let start_step = step_of_time(t_start).ok_or_else(|| {
        ComplexityError::OutOfRange(format!("t_start {t_start} before recording"))
    })?;
    let span = horizon_steps(horizon)
        .ok_or_else(|| ComplexityError::OutOfRange(format!("horizon {horizon} too short")))?;
    let end_step = start_step + span;
    if end_step >= track.states.len() {
        return Err(ComplexityError::OutOfRange(format!(
            "agent {}: steps {start_step}..{end_step} outside recording of {} steps",
            track.agent_id,
            track.states.len()
        )));
    }
    let start = &track.states[start_step];
    let end = &track.states[end_step];
    let speed = start.velocity.norm();
    if speed < low_speed_threshold {
        return Ok(ComplexityOutcome::ExcludedLowSpeed { speed });
    }
    let dp = end.position - start.position;
    let u = Vec2::from_angle(start.heading);
    let n = Vec2::new(-u.y, u.x);
    let denom = speed * horizon;
    Ok(ComplexityOutcome::Vector(ComplexityVector {
        d_lon: dp.dot(u) / denom,
        d_lat: dp.dot(n) / denom,
        t_start,
        speed_at_start: speed,
    }))
}

#[derive(Clone, Debug)]
pub struct ComplexityEntry {
    pub scenario_id: String,
    pub agent_id: String,
    pub vector: ComplexityVector,
}

/// Deviation vectors of every focal agent in a batch, with exclusion
/// bookkeeping. Entry order follows scenario order.
#[derive(Clone, Debug)]
pub struct ComplexityDistribution {
    pub entries: Vec<ComplexityEntry>,
    pub excluded_low_speed: usize,
    pub excluded_out_of_range: usize,
    pub t_start: f64,
    pub horizon: f64,
}

impl ComplexityDistribution {
    pub fn points(&self) -> Vec<Vec2> {
        self.entries
            .iter()
            .map(|e| Vec2::new(e.vector.d_lon, e.vector.d_lat))
            .collect()
    }

    /// Trace of the 2×2 sample covariance of d (ddof = 1); None with fewer
    /// than two entries.
    pub fn covariance_trace(&self) -> Option<f64> {
        let n = self.entries.len();
        if n < 2 {
            return None;
        }
        let nf = n as f64;
        let (mut mx, mut my) = (0.0, 0.0);
        for e in &self.entries {
            mx += e.vector.d_lon;
            my += e.vector.d_lat;
        }
        mx /= nf;
        my /= nf;
        let (mut vx, mut vy) = (0.0, 0.0);
        for e in &self.entries {
            vx += (e.vector.d_lon - mx) * (e.vector.d_lon - mx);
            vy += (e.vector.d_lat - my) * (e.vector.d_lat - my);
        }
        Some((vx + vy) / (nf - 1.0))
    }
}

/// Evaluate every scenario's focal agent. Out-of-range agents are counted
/// as exclusions rather than aborting the batch; a missing focal
/// designation is a caller error.
pub fn complexity_distribution(
    scenarios: &[Scenario],
    t_start: f64,
    horizon: f64,
    low_speed_threshold: f64,
) -> Result<ComplexityDistribution, ComplexityError> {
    let mut dist = ComplexityDistribution {
        entries: Vec::with_capacity(scenarios.len()),
        excluded_low_speed: 0,
        excluded_out_of_range: 0,
        t_start,
        horizon,
    };
    for s in scenarios {
        let focal = s
            .focal_track()
            .ok_or_else(|| ComplexityError::MissingFocal(s.scenario_id.clone()))?;
        match complexity_vector(focal, t_start, horizon, low_speed_threshold) {
            Ok(ComplexityOutcome::Vector(vector)) => dist.entries.push(ComplexityEntry {
                scenario_id: s.scenario_id.clone(),
                agent_id: focal.agent_id.clone(),
                vector,
            }),
            Ok(ComplexityOutcome::ExcludedLowSpeed { .. }) => dist.excluded_low_speed += 1,
            Err(ComplexityError::OutOfRange(_)) => dist.excluded_out_of_range += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(dist)
}

/// A 2D density estimate evaluated at cell centers of a regular grid.
#[derive(Clone, Debug)]
pub struct DensityGrid {
    pub x0: f64,
    pub y0: f64,
    pub dx: f64,
    pub dy: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major: `values[iy * nx + ix]`.
    pub values: Vec<f64>,
    /// Scott's-rule bandwidth per axis.
    pub bandwidth: (f64, f64),
}

impl DensityGrid {
    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Vec2 {
        Vec2::new(
            self.x0 + (ix as f64 + 0.5) * self.dx,
            self.y0 + (iy as f64 + 0.5) * self.dy,
        )
    }

    /// Density of the cell containing `p`; None outside the grid.
    pub fn density_at(&self, p: Vec2) -> Option<f64> {
        let fx = (p.x - self.x0) / self.dx;
        let fy = (p.y - self.y0) / self.dy;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (ix, iy) = (fx as usize, fy as usize);
        if ix >= self.nx || iy >= self.ny {
            return None;
        }
        Some(self.values[iy * self.nx + ix])
    }

    /// Total probability mass on the grid (midpoint rule).
    pub fn total_mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    /// Cell with the highest density.
    pub fn max_cell(&self) -> (usize, usize, f64) {
        let (mut best, mut best_v) = (0, f64::NEG_INFINITY);
        for (i, v) in self.values.iter().enumerate() {
            if *v > best_v {
                best = i;
                best_v = *v;
            }
        }
        (best % self.nx, best / self.nx, best_v)
    }
}

fn std_dev(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Kernel density estimate of a 2D point cloud on a square grid.
///
/// Isotropic Gaussian kernel per axis with Scott's-rule bandwidth
/// h_j = σ_j · n^(−1/6). The grid covers the data range expanded by a
/// margin of max(5 % of the range, 3 bandwidths) per axis, so the grid
/// mass integrates to 1 within 2 %.
pub fn kde_2d(points: &[Vec2], grid_resolution: usize) -> Result<DensityGrid, ComplexityError> {
    let n = points.len();
    if n < 2 {
        return Err(ComplexityError::DegenerateData(format!(
            "{n} point(s); need at least 2"
        )));
    }
    if grid_resolution < 2 {
        return Err(ComplexityError::DegenerateData(
            "grid resolution must be at least 2".into(),
        ));
    }
    let (_, sx) = std_dev(points.iter().map(|p| p.x));
    let (_, sy) = std_dev(points.iter().map(|p| p.y));
    if !sx.is_finite() || !sy.is_finite() || sx <= 0.0 || sy <= 0.0 {
        return Err(ComplexityError::DegenerateData(
            "no spread on at least one axis".into(),
        ));
    }
    let scott = (n as f64).powf(-1.0 / 6.0);
    let (hx, hy) = (sx * scott, sy * scott);

    let (xmin, xmax) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.x), hi.max(p.x))
        });
    let (ymin, ymax) = points
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| {
            (lo.min(p.y), hi.max(p.y))
        });
    let margin_x = (0.05 * (xmax - xmin)).max(3.0 * hx);
    let margin_y = (0.05 * (ymax - ymin)).max(3.0 * hy);
    let (x0, x1) = (xmin - margin_x, xmax + margin_x);
    let (y0, y1) = (ymin - margin_y, ymax + margin_y);
    let nx = grid_resolution;
    let ny = grid_resolution;
    let dx = (x1 - x0) / nx as f64;
    let dy = (y1 - y0) / ny as f64;

    let mut values = vec![0.0; nx * ny];
    let mut wx = Vec::new();
    let mut wy = Vec::new();
    for p in points {
        // Cells whose center lies within the kernel cutoff.
        let ix_lo = (((p.x - KERNEL_CUTOFF * hx - x0) / dx - 0.5).ceil().max(0.0)) as usize;
        let ix_hi =
            ((((p.x + KERNEL_CUTOFF * hx - x0) / dx - 0.5).floor()) as isize).min(nx as isize - 1);
        let iy_lo = (((p.y - KERNEL_CUTOFF * hy - y0) / dy - 0.5).ceil().max(0.0)) as usize;
        let iy_hi =
            ((((p.y + KERNEL_CUTOFF * hy - y0) / dy - 0.5).floor()) as isize).min(ny as isize - 1);
        if ix_hi < ix_lo as isize || iy_hi < iy_lo as isize {
            continue;
        }
        let (ix_hi, iy_hi) = (ix_hi as usize, iy_hi as usize);
        wx.clear();
        wy.clear();
        for ix in ix_lo..=ix_hi {
            let cx = x0 + (ix as f64 + 0.5) * dx;
            let z = (cx - p.x) / hx;
            wx.push((-0.5 * z * z).exp());
        }
        for iy in iy_lo..=iy_hi {
            let cy = y0 + (iy as f64 + 0.5) * dy;
            let z = (cy - p.y) / hy;
            wy.push((-0.5 * z * z).exp());
        }
        for (j, ky) in wy.iter().enumerate() {
            let row = (iy_lo + j) * nx;
            for (i, kx) in wx.iter().enumerate() {
                values[row + ix_lo + i] += kx * ky;
            }
        }
    }
    let norm = 1.0 / (n as f64 * std::f64::consts::TAU * hx * hy);
    for v in &mut values {
        *v *= norm;
    }
    Ok(DensityGrid {
        x0,
        y0,
        dx,
        dy,
        nx,
        ny,
        values,
        bandwidth: (hx, hy),
    })
}

/// Highest-density-region thresholds: for each mass m, the largest density
/// c such that cells with density ≥ c hold total mass ≥ m. Thresholds are
/// decreasing in m. Masses must be strictly increasing in (0, 1).
pub fn hdr_levels(grid: &DensityGrid, masses: &[f64]) -> Result<Vec<f64>, ComplexityError> {
    if masses.is_empty() {
        return Err(ComplexityError::InvalidMasses("no masses given".into()));
    }
    for pair in masses.windows(2) {
        if pair[1] <= pair[0] {
            return Err(ComplexityError::InvalidMasses(format!(
                "masses must be strictly increasing, got {} then {}",
                pair[0], pair[1]
            )));
        }
    }
    if masses.iter().any(|m| !(0.0..1.0).contains(m) || *m <= 0.0) {
        return Err(ComplexityError::InvalidMasses(format!(
            "masses must lie strictly inside (0, 1): {masses:?}"
        )));
    }
    let mut sorted = grid.values.clone();
    sorted.sort_unstable_by(|a, b| b.partial_cmp(a).unwrap());
    let area = grid.cell_area();
    let mut thresholds = Vec::with_capacity(masses.len());
    for &mass in masses {
        let mut cum = 0.0;
        let mut threshold = *sorted.last().expect("grid has cells");
        for &density in &sorted {
            cum += density * area;
            if cum >= mass {
                threshold = density;
                break;
            }
        }
        thresholds.push(threshold);
    }
    Ok(thresholds)
}
