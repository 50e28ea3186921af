use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::{ExperimentKind, SweepAxis};
use crate::error::{Error, Result};
use crate::qr::Algorithm;
use crate::zoo::Family;

pub const CSV_HEADER: &str = "algorithm,family,param,kappa_measured,trial,seed,breakdown,breakdown_stage,\
orthogonality,residual_abs,residual_rel,orth_bound,res_bound,time_s";

/// Outcome of one algorithm on one generated matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub algorithm: Algorithm,
    pub family: Family,
    pub sweep_index: usize,
    /// The swept value.
    pub param: f64,
    /// `None` when the measured condition number is not finite.
    pub kappa_measured: Option<f64>,
    pub trial: usize,
    pub seed: u64,
    pub breakdown: bool,
    pub breakdown_stage: Option<String>,
    pub error: Option<String>,
    pub orthogonality: Option<f64>,
    pub residual_abs: Option<f64>,
    pub residual_rel: Option<f64>,
    pub orth_bound: Option<f64>,
    pub res_bound: Option<f64>,
    /// Whether the assumptions behind the bounds hold for this matrix.
    pub bounds_apply: bool,
    pub orth_violation: bool,
    pub res_violation: bool,
    pub warnings: Vec<String>,
    pub time_s: f64,
}

/// Aggregates over the trials of one (algorithm, sweep point) cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellSummary {
    pub algorithm: Algorithm,
    pub sweep_index: usize,
    pub param: f64,
    pub trials: usize,
    pub successes: usize,
    pub breakdowns: usize,
    pub mean_kappa: Option<f64>,
    pub mean_orthogonality: Option<f64>,
    pub mean_residual_abs: Option<f64>,
    pub mean_residual_rel: Option<f64>,
    pub orth_violations: usize,
    pub res_violations: usize,
    pub mean_time_s: f64,
    pub min_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub kind: ExperimentKind,
    pub family: Family,
    pub axis: SweepAxis,
    pub sweep: Vec<f64>,
    pub algorithms: Vec<Algorithm>,
    /// Ordered by (algorithm, sweep point, trial) index.
    pub records: Vec<TrialRecord>,
    pub cells: Vec<CellSummary>,
    /// Pre-run assumption failures; the runs go ahead regardless.
    pub warnings: Vec<String>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, count) = values.fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    (count > 0).then(|| sum / count as f64)
}

impl CellSummary {
    pub fn from_records(algorithm: Algorithm, sweep_index: usize, param: f64, records: &[&TrialRecord]) -> Self {
        let ok = || records.iter().filter(|r| !r.breakdown);
        let times = || records.iter().map(|r| r.time_s);
        Self {
            algorithm,
            sweep_index,
            param,
            trials: records.len(),
            successes: ok().count(),
            breakdowns: records.iter().filter(|r| r.breakdown).count(),
            mean_kappa: mean(records.iter().filter_map(|r| r.kappa_measured)),
            mean_orthogonality: mean(ok().filter_map(|r| r.orthogonality)),
            mean_residual_abs: mean(ok().filter_map(|r| r.residual_abs)),
            mean_residual_rel: mean(ok().filter_map(|r| r.residual_rel)),
            orth_violations: records.iter().filter(|r| r.orth_violation).count(),
            res_violations: records.iter().filter(|r| r.res_violation).count(),
            mean_time_s: mean(times()).unwrap_or(0.0),
            min_time_s: times().fold(f64::INFINITY, f64::min),
        }
    }
}

impl ExperimentReport {
    /// Builds the report and its cell aggregates from ordered records.
    #[allow(clippy::too_many_arguments)]
    pub fn from_records(
        name: String,
        kind: ExperimentKind,
        family: Family,
        axis: SweepAxis,
        sweep: Vec<f64>,
        algorithms: Vec<Algorithm>,
        records: Vec<TrialRecord>,
        warnings: Vec<String>,
    ) -> Self {
        let mut cells = Vec::with_capacity(algorithms.len() * sweep.len());
        for &alg in &algorithms {
            for (si, &param) in sweep.iter().enumerate() {
                let cell: Vec<&TrialRecord> = records
                    .iter()
                    .filter(|r| r.algorithm == alg && r.sweep_index == si)
                    .collect();
                cells.push(CellSummary::from_records(alg, si, param, &cell));
            }
        }
        Self {
            name,
            kind,
            family,
            axis,
            sweep,
            algorithms,
            records,
            cells,
            warnings,
        }
    }

    pub fn cell(&self, alg: Algorithm, sweep_index: usize) -> Option<&CellSummary> {
        self.cells
            .iter()
            .find(|c| c.algorithm == alg && c.sweep_index == sweep_index)
    }

    pub fn total_breakdowns(&self) -> usize {
        self.cells.iter().map(|c| c.breakdowns).sum()
    }

    /// Orthogonality plus residual bound violations.
    pub fn total_violations(&self) -> usize {
        self.cells.iter().map(|c| c.orth_violations + c.res_violations).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
    Json,
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ReportFormat::Csv => "csv",
            ReportFormat::Markdown => "md",
            ReportFormat::Json => "json",
        }
    }
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "csv" => Ok(Self::Csv),
            "markdown" | "md" => Ok(Self::Markdown),
            "json" => Ok(Self::Json),
            _ => Err(Error::UnsupportedFormat(s.to_string())),
        }
    }
}

/// Renders `report` as `csv`, `markdown` (or `md`) or `json`.
pub fn emit_report(report: &ExperimentReport, format: &str) -> Result<Vec<u8>> {
    emit(report, format.parse()?)
}

pub fn emit(report: &ExperimentReport, format: ReportFormat) -> Result<Vec<u8>> {
    Ok(match format {
        ReportFormat::Csv => to_csv(report).into_bytes(),
        ReportFormat::Markdown => to_markdown(report).into_bytes(),
        ReportFormat::Json => {
            serde_json::to_vec_pretty(report).map_err(|e| Error::Io(e.to_string()))?
        }
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn to_csv(report: &ExperimentReport) -> String {
    let mut out = String::with_capacity(160 * (report.records.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in &report.records {
        let _ = writeln!(
            out,
            "{},{},{:e},{},{},{},{},{},{},{},{},{},{},{:e}",
            r.algorithm.id(),
            r.family.id(),
            r.param,
            opt(r.kappa_measured),
            r.trial,
            r.seed,
            r.breakdown,
            csv_field(r.breakdown_stage.as_deref().unwrap_or("")),
            opt(r.orthogonality),
            opt(r.residual_abs),
            opt(r.residual_rel),
            opt(r.orth_bound),
            opt(r.res_bound),
            r.time_s,
        );
    }
    out
}

fn sci(v: f64) -> String {
    format!("{v:.2e}")
}

fn value_cell(cell: &CellSummary, v: Option<f64>) -> String {
    match v {
        _ if cell.successes == 0 => "-".to_string(),
        Some(x) if cell.breakdowns > 0 => format!("{} ({}/{} broke)", sci(x), cell.breakdowns, cell.trials),
        Some(x) => sci(x),
        None => "-".to_string(),
    }
}

fn table(out: &mut String, report: &ExperimentReport, title: &str, f: impl Fn(&CellSummary) -> String) {
    let _ = writeln!(out, "### {title}\n");
    let mut head = format!("| {} |", report.axis_label());
    let mut rule = String::from("|---|");
    for (si, v) in report.sweep.iter().enumerate() {
        let kappa = report
            .cells
            .iter()
            .filter(|c| c.sweep_index == si)
            .find_map(|c| c.mean_kappa);
        match kappa {
            Some(k) if report.axis == SweepAxis::Param => {
                let _ = write!(head, " {} (κ₂ {}) |", sci(*v), sci(k));
            }
            _ => {
                let _ = write!(head, " {} |", format_value(*v));
            }
        }
        rule.push_str("---|");
    }
    let _ = writeln!(out, "{head}\n{rule}");
    for &alg in &report.algorithms {
        let mut row = format!("| {} |", alg.label());
        for si in 0..report.sweep.len() {
            let text = report.cell(alg, si).map(&f).unwrap_or_else(|| "-".into());
            let _ = write!(row, " {text} |");
        }
        let _ = writeln!(out, "{row}");
    }
    out.push('\n');
}

fn format_value(v: f64) -> String {
    if v.fract() == 0.0 && v.abs() < 1e9 {
        format!("{v}")
    } else {
        sci(v)
    }
}

impl ExperimentReport {
    fn axis_label(&self) -> &'static str {
        match self.axis {
            SweepAxis::Param => self.family.param_name(),
            other => other.id(),
        }
    }
}

/// Algorithms as rows, sweep points as columns; `-` marks cells where every
/// trial broke down.
pub fn to_markdown(report: &ExperimentReport) -> String {
    let mut out = format!(
        "## {} ({:?}, {}, {} trials per cell)\n\n",
        if report.name.is_empty() { "experiment" } else { &report.name },
        report.kind,
        report.family,
        report.cells.first().map_or(0, |c| c.trials),
    );
    match report.kind {
        ExperimentKind::Timing => {
            table(&mut out, report, "Median wall time (s)", |c| {
                if c.successes == 0 {
                    "-".into()
                } else {
                    format!("{:.4}", c.mean_time_s)
                }
            });
        }
        _ => {
            table(&mut out, report, "Orthogonality ‖QᵀQ − I‖_F", |c| value_cell(c, c.mean_orthogonality));
            table(&mut out, report, "Residual ‖QR − X‖_F", |c| value_cell(c, c.mean_residual_abs));
            if report.kind == ExperimentKind::Robustness {
                table(&mut out, report, "Breakdowns", |c| c.breakdowns.to_string());
                table(&mut out, report, "Orthogonality bound violations", |c| c.orth_violations.to_string());
                table(&mut out, report, "Residual bound violations", |c| c.res_violations.to_string());
            }
        }
    }
    if !report.warnings.is_empty() {
        out.push_str("### Warnings\n\n");
        for w in &report.warnings {
            let _ = writeln!(out, "- {w}");
        }
    }
    out
}
