//! Displacement-error metrics: per-sample minADE_K / minFDE_K, dataset
//! aggregates, ID-vs-OoD deltas with relative percentages, and
//! reference-relative percentage tables.
//!
//! minADE_K is the minimum over the best K modes of the mean Euclidean
//! displacement across all 41 future steps; minFDE_K takes the final step
//! only. "Best K" means the K most probable modes, ties broken by mode
//! index. Aggregation uses compensated summation so results are
//! order-insensitive to 1e-9 and safe to compute in parallel batches.

use crate::geom::Vec2;
use crate::homogenize::HomogenizedSample;
use crate::predictors::PredictionSet;

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("INSUFFICIENT_MODES: requested K={k} but prediction has {modes} mode(s)")]
    InsufficientModes { k: usize, modes: usize },
    #[error("EMPTY_SET: no records to aggregate")]
    EmptySet,
    #[error("TAG_MISMATCH: {0}")]
    TagMismatch(String),
    #[error("MISSING_REFERENCE: model {0} not present in the registry")]
    MissingReference(String),
    #[error("INCONSISTENT_RECORDS: {metric} present in {have} of {total} records")]
    InconsistentRecords {
        metric: &'static str,
        have: usize,
        total: usize,
    },
    #[error("INVALID_INPUT: {0}")]
    InvalidInput(String),
}

/// The four reported metrics (K ∈ {1, 6}).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MetricKind {
    MinAde1,
    MinFde1,
    MinAde6,
    MinFde6,
}

impl MetricKind {
    pub const ALL: [MetricKind; 4] = [
        MetricKind::MinAde1,
        MetricKind::MinFde1,
        MetricKind::MinAde6,
        MetricKind::MinFde6,
    ];

    pub fn label(&self) -> &'static str {
        match self {
            MetricKind::MinAde1 => "minADE_1",
            MetricKind::MinFde1 => "minFDE_1",
            MetricKind::MinAde6 => "minADE_6",
            MetricKind::MinFde6 => "minFDE_6",
        }
    }

    pub fn k(&self) -> usize {
        match self {
            MetricKind::MinAde1 | MetricKind::MinFde1 => 1,
            MetricKind::MinAde6 | MetricKind::MinFde6 => 6,
        }
    }
}

/// Per-sample errors; an entry is present only when the prediction carried
/// at least K modes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MetricRecord {
    pub scenario_id: String,
    pub agent_id: String,
    pub min_ade_1: Option<f64>,
    pub min_fde_1: Option<f64>,
    pub min_ade_6: Option<f64>,
    pub min_fde_6: Option<f64>,
}

impl MetricRecord {
    pub fn value(&self, kind: MetricKind) -> Option<f64> {
        match kind {
            MetricKind::MinAde1 => self.min_ade_1,
            MetricKind::MinFde1 => self.min_fde_1,
            MetricKind::MinAde6 => self.min_ade_6,
            MetricKind::MinFde6 => self.min_fde_6,
        }
    }

    pub fn set(&mut self, kind: MetricKind, v: f64) {
        match kind {
            MetricKind::MinAde1 => self.min_ade_1 = Some(v),
            MetricKind::MinFde1 => self.min_fde_1 = Some(v),
            MetricKind::MinAde6 => self.min_ade_6 = Some(v),
            MetricKind::MinFde6 => self.min_fde_6 = Some(v),
        }
    }
}

/// Identifies one evaluation run.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct RunMeta {
    pub model_tag: String,
    pub train_tag: String,
    pub test_tag: String,
}

/// Dataset-level arithmetic means over exactly `sample_count` records.
#[derive(Clone, Debug, PartialEq)]
pub struct DatasetMetrics {
    pub meta: RunMeta,
    pub sample_count: usize,
    means: [Option<f64>; 4],
}

impl DatasetMetrics {
    /// Build directly from known means (e.g. published table values).
    pub fn from_means(
        meta: RunMeta,
        sample_count: usize,
        min_ade_1: Option<f64>,
        min_fde_1: Option<f64>,
        min_ade_6: Option<f64>,
        min_fde_6: Option<f64>,
    ) -> Self {
        DatasetMetrics {
            meta,
            sample_count,
            means: [min_ade_1, min_fde_1, min_ade_6, min_fde_6],
        }
    }

    pub fn mean(&self, kind: MetricKind) -> Option<f64> {
        self.means[MetricKind::ALL.iter().position(|k| *k == kind).unwrap()]
    }
}

/// ID-vs-OoD difference for one metric.
#[derive(Clone, Debug, PartialEq)]
pub struct DeltaRecord {
    pub metric: MetricKind,
    pub id_value: f64,
    pub ood_value: f64,
    /// ood − id, meters.
    pub delta: f64,
    /// 100·delta/id, percent; None when id_value = 0.
    pub relative_pct: Option<f64>,
}

fn check_pair(pred: &PredictionSet, gt: &[Vec2], k: usize) -> Result<(), MetricsError> {
    if k == 0 || k > pred.mode_count() {
        return Err(MetricsError::InsufficientModes {
            k,
            modes: pred.mode_count(),
        });
    }
    if gt.len() != HomogenizedSample::FUTURE_LEN {
        return Err(MetricsError::InvalidInput(format!(
            "ground truth has {} points, expected {}",
            gt.len(),
            HomogenizedSample::FUTURE_LEN
        )));
    }
    if gt.iter().any(|p| !p.is_finite()) {
        return Err(MetricsError::InvalidInput(
            "ground truth contains non-finite points".into(),
        ));
    }
    if let Some((i, mode)) = pred
        .modes
        .iter()
        .enumerate()
        .find(|(_, m)| m.len() != gt.len())
    {
        return Err(MetricsError::InvalidInput(format!(
            "mode {i} has {} points, expected {}",
            mode.len(),
            gt.len()
        )));
    }
    if let Some(probs) = &pred.probabilities {
        if probs.len() != pred.mode_count() || probs.iter().any(|w| !w.is_finite()) {
            return Err(MetricsError::InvalidInput(
                "probabilities must be finite and one per mode".into(),
            ));
        }
    }
    Ok(())
}

/// Mode indices ordered by descending probability, ties by index. Without
/// probabilities, index order.
fn selection_order(pred: &PredictionSet) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pred.mode_count()).collect();
    if let Some(probs) = &pred.probabilities {
        order.sort_by(|&a, &b| probs[b].partial_cmp(&probs[a]).unwrap().then(a.cmp(&b)));
    }
    order
}

fn mode_ade(mode: &[Vec2], gt: &[Vec2]) -> f64 {
    let mut sum = 0.0;
    for (p, g) in mode.iter().zip(gt) {
        sum += p.distance(*g);
    }
    sum / gt.len() as f64
}

fn mode_fde(mode: &[Vec2], gt: &[Vec2]) -> f64 {
    mode[gt.len() - 1].distance(gt[gt.len() - 1])
}

/// Minimum over the best K modes of the average displacement.
pub fn min_ade(pred: &PredictionSet, gt: &[Vec2], k: usize) -> Result<f64, MetricsError> {
    check_pair(pred, gt, k)?;
    Ok(selection_order(pred)[..k]
        .iter()
        .map(|&i| mode_ade(&pred.modes[i], gt))
        .fold(f64::INFINITY, f64::min))
}

/// Minimum over the best K modes of the final-step displacement.
pub fn min_fde(pred: &PredictionSet, gt: &[Vec2], k: usize) -> Result<f64, MetricsError> {
    check_pair(pred, gt, k)?;
    Ok(selection_order(pred)[..k]
        .iter()
        .map(|&i| mode_fde(&pred.modes[i], gt))
        .fold(f64::INFINITY, f64::min))
}

/// Compute a full record for one (prediction, ground truth) pair. Entries
/// for a K larger than the mode count are left absent.
pub fn metric_record(
    pred: &PredictionSet,
    gt: &[Vec2],
    ks: &[usize],
) -> Result<MetricRecord, MetricsError> {
    let mut record = MetricRecord {
        scenario_id: pred.scenario_id.clone(),
        agent_id: pred.agent_id.clone(),
        ..MetricRecord::default()
    };
    for &k in ks {
        if k != 1 && k != 6 {
            return Err(MetricsError::InvalidInput(format!(
                "K = {k} unsupported; reported metrics use K in {{1, 6}}"
            )));
        }
        if k > pred.mode_count() {
            continue;
        }
        let (ade_kind, fde_kind) = if k == 1 {
            (MetricKind::MinAde1, MetricKind::MinFde1)
        } else {
            (MetricKind::MinAde6, MetricKind::MinFde6)
        };
        record.set(ade_kind, min_ade(pred, gt, k)?);
        record.set(fde_kind, min_fde(pred, gt, k)?);
    }
    Ok(record)
}

struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    fn new() -> Self {
        KahanSum {
            sum: 0.0,
            carry: 0.0,
        }
    }

    fn add(&mut self, v: f64) {
        let y = v - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }
}

/// Arithmetic means over all records. Each metric must be present in all
/// records or in none.
pub fn aggregate(records: &[MetricRecord], meta: RunMeta) -> Result<DatasetMetrics, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::EmptySet);
    }
    let mut means = [None; 4];
    for (slot, kind) in MetricKind::ALL.iter().enumerate() {
        let mut acc = KahanSum::new();
        let mut have = 0usize;
        for r in records {
            if let Some(v) = r.value(*kind) {
                acc.add(v);
                have += 1;
            }
        }
        if have == 0 {
            continue;
        }
        if have != records.len() {
            return Err(MetricsError::InconsistentRecords {
                metric: kind.label(),
                have,
                total: records.len(),
            });
        }
        means[slot] = Some(acc.sum / records.len() as f64);
    }
    Ok(DatasetMetrics {
        meta,
        sample_count: records.len(),
        means,
    })
}

/// ID-vs-OoD deltas per metric present in both runs. Requires matching
/// model tags.
pub fn delta_metrics(
    id: &DatasetMetrics,
    ood: &DatasetMetrics,
) -> Result<Vec<DeltaRecord>, MetricsError> {
    if id.meta.model_tag != ood.meta.model_tag {
        return Err(MetricsError::TagMismatch(format!(
            "ID run is model {}, OoD run is model {}",
            id.meta.model_tag, ood.meta.model_tag
        )));
    }
    let mut out = Vec::new();
    for kind in MetricKind::ALL {
        let (Some(id_value), Some(ood_value)) = (id.mean(kind), ood.mean(kind)) else {
            continue;
        };
        let delta = ood_value - id_value;
        let relative_pct = (id_value != 0.0).then(|| 100.0 * delta / id_value);
        out.push(DeltaRecord {
            metric: kind,
            id_value,
            ood_value,
            delta,
            relative_pct,
        });
    }
    Ok(out)
}

/// One run's cells in a reference-relative table.
#[derive(Clone, Debug)]
pub struct RelativeRow {
    pub meta: RunMeta,
    /// Per metric: absolute value and 100·value/reference.
    pub cells: [Option<(f64, Option<f64>)>; 4],
}

/// Express every run's metrics as percentages of a reference model's
/// (the reference row reads 100.0%). Input order is preserved.
pub fn relative_to_reference(
    runs: &[DatasetMetrics],
    reference_model: &str,
) -> Result<Vec<RelativeRow>, MetricsError> {
    let reference = runs
        .iter()
        .find(|r| r.meta.model_tag == reference_model)
        .ok_or_else(|| MetricsError::MissingReference(reference_model.to_string()))?;
    Ok(runs
        .iter()
        .map(|run| {
            let mut cells = [None; 4];
            for (slot, kind) in MetricKind::ALL.iter().enumerate() {
                if let Some(v) = run.mean(*kind) {
                    let pct = reference
                        .mean(*kind)
                        .filter(|r| *r > 0.0)
                        .map(|r| 100.0 * v / r);
                    cells[slot] = Some((v, pct));
                }
            }
            RelativeRow {
                meta: run.meta.clone(),
                cells,
            }
        })
        .collect())
}

/// Ground truth and record computation for a homogenized sample's focal
/// agent against one prediction set.
pub fn evaluate_sample(
    sample: &HomogenizedSample,
    pred: &PredictionSet,
    ks: &[usize],
) -> Result<MetricRecord, MetricsError> {
    if pred.scenario_id != sample.scenario().scenario_id {
        return Err(MetricsError::InvalidInput(format!(
            "prediction for scenario {} evaluated against scenario {}",
            pred.scenario_id,
            sample.scenario().scenario_id
        )));
    }
    if pred.agent_id != sample.focal_agent_id() {
        return Err(MetricsError::InvalidInput(format!(
            "scenario {}: prediction targets agent {} but the focal agent is {}",
            pred.scenario_id,
            pred.agent_id,
            sample.focal_agent_id()
        )));
    }
    let gt = sample
        .future_positions(&pred.agent_id)
        .expect("focal agent exists");
    metric_record(pred, &gt, ks)
}
