use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use super::concept::write_json;
use super::evaluate::EvaluationReport;
use super::PipelineError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ExportFormat {
    /// `report.csv` plus one histogram table per metric.
    Csv,
    /// `summary.json`: metadata, uniqueness, distributions and annotations.
    Json,
}

impl FromStr for ExportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(format!("unknown export format {other:?}")),
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    metadata: &'a super::evaluate::ReportMetadata,
    uniqueness: &'a super::Uniqueness,
    unscorable: &'a super::evaluate::UnscorableCounts,
    summaries: &'a std::collections::BTreeMap<String, crate::metrics::DistributionSummary>,
    reference_distances: &'a std::collections::BTreeMap<String, f64>,
    annotations: &'a [super::evaluate::Annotation],
}

/// Write the report in each requested format; returns the files written.
pub fn export_report(report: &EvaluationReport, dir: &Path, formats: &[ExportFormat]) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    let mut written = Vec::new();
    if formats.contains(&ExportFormat::Csv) {
        let path = dir.join("report.csv");
        write_rows(report, &path)?;
        written.push(path);
        let hist_dir = dir.join("histograms");
        std::fs::create_dir_all(&hist_dir).map_err(|e| PipelineError::io(&hist_dir, e))?;
        for (metric, summary) in &report.summaries {
            let path = hist_dir.join(format!("{}.csv", metric.replace(':', "_")));
            let mut w = csv_writer(&path)?;
            w.write_record(["bin_start", "bin_end", "count"]).map_err(csv_err)?;
            for (k, count) in summary.counts.iter().enumerate() {
                w.write_record([
                    summary.bin_edges[k].to_string(),
                    summary.bin_edges[k + 1].to_string(),
                    count.to_string(),
                ])
                .map_err(csv_err)?;
            }
            w.flush().map_err(|e| PipelineError::io(&path, e))?;
            written.push(path);
        }
    }
    if formats.contains(&ExportFormat::Json) {
        let path = dir.join("summary.json");
        write_json(
            &path,
            &Summary {
                metadata: &report.metadata,
                uniqueness: &report.uniqueness,
                unscorable: &report.unscorable,
                summaries: &report.summaries,
                reference_distances: &report.reference_distances,
                annotations: &report.annotations,
            },
        )?;
        written.push(path);
    }
    Ok(written)
}

fn write_rows(report: &EvaluationReport, path: &Path) -> Result<(), PipelineError> {
    let task = &report.metadata.task;
    let fields = task.fields();
    let mut header = vec!["concept_id".to_string(), "task_kind".to_string()];
    header.extend(fields.iter().map(|(name, _)| name.to_string()));
    header.push("token_count".into());
    header.extend(report.metadata.references.iter().map(|r| format!("wmd_{r}")));
    header.extend(["min_relevancy".to_string(), "min_pair".to_string()]);

    let kind = serde_json::to_value(task.kind())
        .ok()
        .and_then(|v| v.as_str().map(str::to_owned))
        .unwrap_or_default();
    let mut w = csv_writer(path)?;
    w.write_record(&header).map_err(csv_err)?;
    for row in &report.rows {
        let mut record = vec![row.concept_id.clone(), kind.clone()];
        record.extend(fields.iter().map(|(_, v)| v.to_string()));
        record.push(row.token_count.to_string());
        for r in &report.metadata.references {
            record.push(opt(row.scores.wmd.get(r).copied().flatten()));
        }
        record.push(opt(row.scores.min_relevancy));
        record.push(row.scores.min_pair.as_ref().map(|(a, b)| format!("{a}|{b}")).unwrap_or_default());
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|e| PipelineError::io(path, e))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn csv_writer(path: &Path) -> Result<csv::Writer<std::fs::File>, PipelineError> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(csv_err)
}

fn csv_err(e: csv::Error) -> PipelineError {
    PipelineError::Format(e.to_string())
}
