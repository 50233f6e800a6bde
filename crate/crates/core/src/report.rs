//! Rendering of benchmark tables and ID/OoD delta summaries as aligned
//! text plus plot-ready CSV.
//!
//! Numeric presentation: meters to 3 decimals, percentages to 1 decimal,
//! rounded half-even at render time only; text and CSV carry identical
//! numeric content.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::metrics::{
    delta_metrics, relative_to_reference, DatasetMetrics, MetricKind, MetricsError,
};

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("DUPLICATE_RUN: (model {model}, train {train}, test {test}) already registered")]
    DuplicateRun {
        model: String,
        train: String,
        test: String,
    },
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// A set of evaluation runs plus the model whose results serve as the
/// 100 % reference.
#[derive(Clone, Debug)]
pub struct RunRegistry {
    runs: Vec<DatasetMetrics>,
    reference_model: String,
}

impl RunRegistry {
    pub fn new(reference_model: impl Into<String>) -> Self {
        RunRegistry {
            runs: Vec::new(),
            reference_model: reference_model.into(),
        }
    }

    /// Register a run; (model, train, test) triples must be unique.
    pub fn add(&mut self, run: DatasetMetrics) -> Result<(), ReportError> {
        if self.runs.iter().any(|r| r.meta == run.meta) {
            return Err(ReportError::DuplicateRun {
                model: run.meta.model_tag,
                train: run.meta.train_tag,
                test: run.meta.test_tag,
            });
        }
        self.runs.push(run);
        Ok(())
    }

    pub fn runs(&self) -> &[DatasetMetrics] {
        &self.runs
    }

    pub fn reference_model(&self) -> &str {
        &self.reference_model
    }
}

/// Text and CSV renderings with identical numeric content.
#[derive(Clone, Debug, PartialEq)]
pub struct Rendered {
    pub text: String,
    pub csv: String,
}

fn fmt_m(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.3}")).unwrap_or_default()
}

fn fmt_pct(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.1}")).unwrap_or_default()
}

fn render_text_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (i, cell) in row.iter().enumerate() {
            widths[i] = widths[i].max(cell.len());
        }
    }
    let mut out = String::new();
    let write_row = |out: &mut String, cells: &[String]| {
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                out.push_str("  ");
            }
            let _ = write!(out, "{cell:<width$}", width = widths[i]);
        }
        while out.ends_with(' ') {
            out.pop();
        }
        out.push('\n');
    };
    write_row(&mut out, header);
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    write_row(&mut out, &rule);
    for row in rows {
        write_row(&mut out, row);
    }
    out
}

/// Render absolute errors with reference-relative percentages, grouped by
/// training set. Deterministic: group order follows first appearance,
/// rows follow registration order, reference row reads 100.0 %.
pub fn render_table(registry: &RunRegistry) -> Result<Rendered, ReportError> {
    // Group by evaluation setting so the reference lookup is unambiguous
    // even when a registry mixes ID and OoD runs of the same model.
    let mut group_order: Vec<(&str, &str)> = Vec::new();
    for run in registry.runs() {
        let key = (run.meta.train_tag.as_str(), run.meta.test_tag.as_str());
        if !group_order.contains(&key) {
            group_order.push(key);
        }
    }

    let header: Vec<String> = [
        "training",
        "model",
        "minADE_1 [m]",
        "minFDE_1 [m]",
        "minADE_6 [m]",
        "minFDE_6 [m]",
    ]
    .map(str::to_string)
    .to_vec();
    let mut text_rows: Vec<Vec<String>> = Vec::new();
    let mut csv = String::from(
        "train_tag,model_tag,min_ade_1_m,min_ade_1_pct,min_fde_1_m,min_fde_1_pct,\
         min_ade_6_m,min_ade_6_pct,min_fde_6_m,min_fde_6_pct\n",
    );

    for (train_tag, test_tag) in group_order {
        let group: Vec<DatasetMetrics> = registry
            .runs()
            .iter()
            .filter(|r| r.meta.train_tag == train_tag && r.meta.test_tag == test_tag)
            .cloned()
            .collect();
        let rows = relative_to_reference(&group, registry.reference_model())?;
        for row in rows {
            let mut text_row = vec![row.meta.train_tag.clone(), row.meta.model_tag.clone()];
            let mut csv_row = vec![row.meta.train_tag.clone(), row.meta.model_tag.clone()];
            for cell in &row.cells {
                match cell {
                    Some((value, pct)) => {
                        let vs = fmt_m(Some(*value));
                        let ps = fmt_pct(*pct);
                        if ps.is_empty() {
                            text_row.push(vs.clone());
                        } else {
                            text_row.push(format!("{vs} ({ps}%)"));
                        }
                        csv_row.push(vs);
                        csv_row.push(ps);
                    }
                    None => {
                        text_row.push("-".into());
                        csv_row.push(String::new());
                        csv_row.push(String::new());
                    }
                }
            }
            text_rows.push(text_row);
            let _ = writeln!(csv, "{}", csv_row.join(","));
        }
    }

    Ok(Rendered {
        text: render_text_table(&header, &text_rows),
        csv,
    })
}

/// Render per-model ID value, OoD increase and relative increase for each
/// metric: the numbers annotated on an ID/OoD bar chart. Runs are matched
/// across registries by (model, train); both sides must carry the same
/// set of runs.
pub fn render_delta_summary(
    id_registry: &RunRegistry,
    ood_registry: &RunRegistry,
) -> Result<Rendered, ReportError> {
    let key = |m: &DatasetMetrics| (m.meta.model_tag.clone(), m.meta.train_tag.clone());
    let id_keys: HashSet<_> = id_registry.runs().iter().map(key).collect();
    let ood_keys: HashSet<_> = ood_registry.runs().iter().map(key).collect();
    if let Some(missing) = id_keys.symmetric_difference(&ood_keys).next() {
        let side = if id_keys.contains(missing) {
            "OoD"
        } else {
            "ID"
        };
        return Err(MetricsError::TagMismatch(format!(
            "model {} (train {}) missing from the {side} registry",
            missing.0, missing.1
        ))
        .into());
    }

    let header: Vec<String> = [
        "model",
        "train",
        "metric",
        "ID [m]",
        "delta [m]",
        "relative [%]",
    ]
    .map(str::to_string)
    .to_vec();
    let mut text_rows = Vec::new();
    let mut csv = String::from("model_tag,train_tag,metric,id_value_m,delta_m,relative_pct\n");
    for id_run in id_registry.runs() {
        let ood_run = ood_registry
            .runs()
            .iter()
            .find(|r| key(r) == key(id_run))
            .expect("key sets checked equal");
        for record in delta_metrics(id_run, ood_run)? {
            let id_s = fmt_m(Some(record.id_value));
            let delta_s = fmt_m(Some(record.delta));
            let pct_s = fmt_pct(record.relative_pct);
            text_rows.push(vec![
                id_run.meta.model_tag.clone(),
                id_run.meta.train_tag.clone(),
                record.metric.label().to_string(),
                id_s.clone(),
                delta_s.clone(),
                if pct_s.is_empty() {
                    "-".into()
                } else {
                    pct_s.clone()
                },
            ]);
            let _ = writeln!(
                csv,
                "{},{},{},{},{},{}",
                id_run.meta.model_tag,
                id_run.meta.train_tag,
                record.metric.label(),
                id_s,
                delta_s,
                pct_s
            );
        }
    }
    Ok(Rendered {
        text: render_text_table(&header, &text_rows),
        csv,
    })
}

/// The four metric column labels, in table order.
pub fn metric_labels() -> [&'static str; 4] {
    MetricKind::ALL.map(|k| k.label())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::RunMeta;

    fn run(model: &str, train: &str, test: &str, values: [f64; 4]) -> DatasetMetrics {
        DatasetMetrics::from_means(
            RunMeta {
                model_tag: model.into(),
                train_tag: train.into(),
                test_tag: test.into(),
            },
            100,
            Some(values[0]),
            Some(values[1]),
            Some(values[2]),
            Some(values[3]),
        )
    }

    fn upper_section() -> RunRegistry {
        let mut reg = RunRegistry::new("qcnet");
        reg.add(run("qcnet", "wo", "wo", [0.820, 2.171, 0.344, 0.696]))
            .unwrap();
        reg.add(run("fmae", "wo", "wo", [0.889, 2.318, 0.374, 0.829]))
            .unwrap();
        reg.add(run("ep-q", "wo", "wo", [0.821, 2.155, 0.359, 0.802]))
            .unwrap();
        reg.add(run("ep-f", "wo", "wo", [0.831, 2.171, 0.370, 0.825]))
            .unwrap();
        reg
    }

    #[test]
    fn table_reproduces_published_percentages() {
        let rendered = render_table(&upper_section()).unwrap();
        for expected in [
            "(108.4%)", "(106.8%)", "(108.7%)", "(119.1%)", // fmae
            "(100.1%)", "(99.3%)", "(104.4%)", "(115.2%)", // ep-q
            "(101.3%)", "(100.0%)", "(107.6%)", "(118.5%)", // ep-f
        ] {
            assert!(
                rendered.text.contains(expected),
                "missing {expected}:\n{}",
                rendered.text
            );
        }
        let reference_line = rendered.text.lines().find(|l| l.contains("qcnet")).unwrap();
        assert_eq!(reference_line.matches("(100.0%)").count(), 4);
    }

    #[test]
    fn identical_models_both_read_100() {
        let mut reg = RunRegistry::new("a");
        reg.add(run("a", "t", "t", [0.5, 1.0, 0.25, 0.5])).unwrap();
        reg.add(run("b", "t", "t", [0.5, 1.0, 0.25, 0.5])).unwrap();
        let rendered = render_table(&reg).unwrap();
        assert_eq!(rendered.text.matches("(100.0%)").count(), 8);
    }

    #[test]
    fn missing_reference_is_an_error() {
        let mut reg = RunRegistry::new("ghost");
        reg.add(run("a", "t", "t", [0.5, 1.0, 0.25, 0.5])).unwrap();
        assert!(matches!(
            render_table(&reg),
            Err(ReportError::Metrics(MetricsError::MissingReference(_)))
        ));
    }

    #[test]
    fn duplicate_registration_rejected() {
        let mut reg = RunRegistry::new("a");
        reg.add(run("a", "t", "t", [0.5, 1.0, 0.25, 0.5])).unwrap();
        assert!(matches!(
            reg.add(run("a", "t", "t", [0.6, 1.0, 0.25, 0.5])),
            Err(ReportError::DuplicateRun { .. })
        ));
    }

    #[test]
    fn rendering_is_deterministic() {
        let reg = upper_section();
        assert_eq!(render_table(&reg).unwrap(), render_table(&reg).unwrap());
    }

    #[test]
    fn csv_and_text_carry_identical_numbers() {
        let rendered = render_table(&upper_section()).unwrap();
        let mut csv_numbers: Vec<String> = Vec::new();
        for line in rendered.csv.lines().skip(1) {
            for cell in line.split(',').skip(2) {
                if !cell.is_empty() {
                    csv_numbers.push(cell.to_string());
                }
            }
        }
        let mut text_numbers: Vec<String> = Vec::new();
        for line in rendered.text.lines().skip(2) {
            for token in line.split_whitespace().skip(2) {
                let cleaned = token
                    .trim_start_matches('(')
                    .trim_end_matches(')')
                    .trim_end_matches("%)")
                    .trim_end_matches('%');
                if !cleaned.is_empty() && cleaned != "-" {
                    text_numbers.push(cleaned.to_string());
                }
            }
        }
        assert_eq!(csv_numbers, text_numbers);
    }

    #[test]
    fn delta_summary_reproduces_figure_annotations() {
        let mut id_reg = RunRegistry::new("qcnet");
        id_reg
            .add(run("ep-q", "wo", "wo", [0.821, 2.155, 0.359, 0.802]))
            .unwrap();
        let mut ood_reg = RunRegistry::new("qcnet");
        ood_reg
            .add(run("ep-q", "wo", "a2", [1.464, 2.155, 0.359, 0.802]))
            .unwrap();
        let rendered = render_delta_summary(&id_reg, &ood_reg).unwrap();
        let line = rendered
            .csv
            .lines()
            .find(|l| l.contains("minADE_1"))
            .unwrap();
        assert_eq!(line, "ep-q,wo,minADE_1,0.821,0.643,78.3");
        assert!(rendered.text.contains("0.643"));
    }

    #[test]
    fn identical_registries_have_zero_deltas() {
        let mut reg = RunRegistry::new("m");
        reg.add(run("m", "t", "t", [0.5, 1.0, 0.25, 0.5])).unwrap();
        let rendered = render_delta_summary(&reg, &reg).unwrap();
        for line in rendered.csv.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields[4], "0.000");
            assert_eq!(fields[5], "0.0");
        }
    }

    #[test]
    fn one_sided_model_is_a_tag_mismatch() {
        let mut id_reg = RunRegistry::new("m");
        id_reg
            .add(run("m", "t", "t", [0.5, 1.0, 0.25, 0.5]))
            .unwrap();
        id_reg
            .add(run("only-id", "t", "t", [0.5, 1.0, 0.25, 0.5]))
            .unwrap();
        let mut ood_reg = RunRegistry::new("m");
        ood_reg
            .add(run("m", "t", "x", [0.6, 1.1, 0.3, 0.6]))
            .unwrap();
        let err = render_delta_summary(&id_reg, &ood_reg).unwrap_err();
        assert!(err.to_string().contains("only-id"), "got: {err}");
    }
}
