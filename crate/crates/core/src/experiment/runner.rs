use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, OutputSettings, SweepPoint};
use super::report::{emit, ExperimentReport, ReportFormat, TrialRecord};
use crate::bounds::{
    bounds_apply, orth_bound_for, orthogonality, pre_run_assumptions, residual, residual_bound_for, MatrixFacts,
};
use crate::error::{Error, Result};
use crate::kernels::norms;
use crate::matrix::DenseMatrix;
use crate::qr::{lu_conditioning, run, Algorithm, QrResult, StageRecord};
use crate::sketch::derive_seed;
use crate::zoo::generate;

/// Seed-path tag separating matrix seeds from per-trial sketch seeds.
pub const MATRIX_TAG: u64 = 0x4d41_5452_4958;

/// `derive(base, algorithm_index, sweep_index, trial_index)`.
pub fn trial_seed(base: u64, alg_index: usize, sweep_index: usize, trial: usize) -> u64 {
    derive_seed(base, &[alg_index as u64, sweep_index as u64, trial as u64])
}

/// Seed of the matrix shared by all algorithms at one (sweep point, trial).
pub fn matrix_seed(base: u64, sweep_index: usize, trial: usize) -> u64 {
    derive_seed(base, &[MATRIX_TAG, sweep_index as u64, trial as u64])
}

struct Prepared {
    x: DenseMatrix,
    facts: MatrixFacts,
    kappa: Option<f64>,
    lu: Option<(f64, f64)>,
}

fn needs_lu(algs: &[Algorithm]) -> bool {
    algs.iter()
        .any(|a| matches!(a, Algorithm::Luc2 | Algorithm::Slhc3 | Algorithm::Sslhc3))
}

fn prepare(cfg: &ExperimentConfig, point: &SweepPoint, trial: usize) -> Result<Prepared> {
    let spec = point.matrix.with_seed(matrix_seed(cfg.base_seed, point.index, trial));
    let x = generate(&spec)?;
    let nx = norms(&x)?;
    let facts = MatrixFacts {
        m: x.rows(),
        n: x.cols(),
        norm2: nx.spectral,
        sigma_min: nx.sigma_min,
        max_column_norm: nx.max_column_norm,
    };
    let lu = if needs_lu(&cfg.algorithms) {
        lu_conditioning(&x).ok()
    } else {
        None
    };
    Ok(Prepared {
        x,
        facts,
        kappa: nx.kappa2.is_finite().then_some(nx.kappa2),
        lu,
    })
}

fn stage_warnings(stages: &[StageRecord]) -> Vec<String> {
    stages
        .iter()
        .filter(|s| s.name.contains("warning:"))
        .map(|s| s.name.clone())
        .collect()
}

struct Run {
    outcome: std::result::Result<QrResult, crate::qr::AlgorithmFailure>,
    seconds: f64,
}

fn timed(alg: Algorithm, x: &DenseMatrix, sketch: &crate::qr::SketchConfig) -> Run {
    let start = Instant::now();
    let outcome = run(alg, x, sketch);
    Run {
        outcome,
        seconds: start.elapsed().as_secs_f64(),
    }
}

fn record(
    alg: Algorithm,
    point: &SweepPoint,
    trial: usize,
    seed: u64,
    prep: &Prepared,
    outcome: Run,
) -> Result<TrialRecord> {
    let sketch = point.sketch.resolve(prep.facts.n, seed)?;
    let orth_bound = orth_bound_for(alg, &sketch, prep.facts.m, prep.facts.n);
    let res_bound = residual_bound_for(alg, &sketch, &prep.facts);
    let apply = bounds_apply(alg, &sketch, &prep.facts, prep.lu);
    let mut rec = TrialRecord {
        algorithm: alg,
        family: point.matrix.family,
        sweep_index: point.index,
        param: point.value,
        kappa_measured: prep.kappa,
        trial,
        seed,
        breakdown: false,
        breakdown_stage: None,
        error: None,
        orthogonality: None,
        residual_abs: None,
        residual_rel: None,
        orth_bound,
        res_bound,
        bounds_apply: apply,
        orth_violation: false,
        res_violation: false,
        warnings: Vec::new(),
        time_s: outcome.seconds,
    };
    match outcome.outcome {
        Ok(res) => {
            rec.warnings = stage_warnings(&res.stages);
            let orth = orthogonality(&res.q);
            let r = residual(&res.q, &res.r, &prep.x)?;
            rec.orthogonality = Some(orth);
            rec.residual_abs = Some(r.absolute);
            rec.residual_rel = Some(r.relative);
            // NaN results count as violations
            rec.orth_violation = apply && orth_bound.is_some_and(|b| !(orth <= b));
            rec.res_violation = apply && res_bound.is_some_and(|b| !(r.absolute <= b));
        }
        Err(f) => {
            rec.warnings = stage_warnings(&f.stages);
            rec.breakdown = true;
            rec.breakdown_stage = Some(f.stage);
            rec.error = Some(f.error.to_string());
        }
    }
    Ok(rec)
}

fn pre_run_warnings(cfg: &ExperimentConfig, points: &[SweepPoint]) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for &alg in &cfg.algorithms {
        for p in points {
            let sketch = p.sketch.resolve(p.matrix.n, 0)?;
            if let Some(rep) = pre_run_assumptions(alg, &sketch, p.matrix.m, p.matrix.n) {
                for c in rep.conditions.iter().filter(|c| !c.holds) {
                    out.push(format!(
                        "{} at {} = {}: assumption `{}` fails ({:.3e} vs {:.3e})",
                        alg.id(),
                        cfg.sweep.axis.id(),
                        p.value,
                        c.name,
                        c.lhs,
                        c.rhs
                    ));
                }
            }
        }
    }
    Ok(out)
}

fn with_pool<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(k) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build()
                .map_err(|e| Error::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

fn finish(cfg: &ExperimentConfig, mut records: Vec<TrialRecord>, warnings: Vec<String>) -> ExperimentReport {
    let order = |a: Algorithm| cfg.algorithms.iter().position(|&b| b == a).unwrap_or(usize::MAX);
    records.sort_by_key(|r| (order(r.algorithm), r.sweep_index, r.trial));
    ExperimentReport::from_records(
        cfg.name.clone(),
        cfg.kind,
        cfg.matrix.family,
        cfg.sweep.axis,
        cfg.sweep.values.clone(),
        cfg.algorithms.clone(),
        records,
        warnings,
    )
}

/// Runs every algorithm on every (sweep point, trial) matrix, in parallel
/// over matrices. Report order never depends on completion order.
pub fn run_accuracy_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let points = cfg.points()?;
    let warnings = pre_run_warnings(cfg, &points)?;
    let jobs: Vec<(usize, usize)> = (0..points.len())
        .flat_map(|si| (0..cfg.trials).map(move |t| (si, t)))
        .collect();
    let nested: Vec<Result<Vec<TrialRecord>>> = with_pool(cfg.threads, || {
        jobs.par_iter()
            .map(|&(si, trial)| {
                let point = &points[si];
                let prep = prepare(cfg, point, trial)?;
                cfg.algorithms
                    .iter()
                    .enumerate()
                    .map(|(ai, &alg)| {
                        let seed = trial_seed(cfg.base_seed, ai, si, trial);
                        let sketch = point.sketch.resolve(prep.facts.n, seed)?;
                        let outcome = timed(alg, &prep.x, &sketch);
                        record(alg, point, trial, seed, &prep, outcome)
                    })
                    .collect()
            })
            .collect()
    })?;
    let mut records = Vec::with_capacity(jobs.len() * cfg.algorithms.len());
    for r in nested {
        records.extend(r?);
    }
    Ok(finish(cfg, records, warnings))
}

/// Accuracy sweep whose report is read for breakdown and bound-violation
/// counts.
pub fn run_robustness_suite(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut cfg = cfg.clone();
    cfg.kind = ExperimentKind::Robustness;
    run_accuracy_sweep(&cfg)
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

/// Sequential timing: per cell, `warmup_runs` discarded runs then the
/// median of `measured_runs`.
pub fn run_timing_sweep(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    let mut cfg = cfg.clone();
    cfg.kind = ExperimentKind::Timing;
    cfg.validate()?;
    let points = cfg.points()?;
    let warnings = pre_run_warnings(&cfg, &points)?;
    let mut records = Vec::new();
    for point in &points {
        for trial in 0..cfg.trials {
            let prep = prepare(&cfg, point, trial)?;
            for (ai, &alg) in cfg.algorithms.iter().enumerate() {
                let seed = trial_seed(cfg.base_seed, ai, point.index, trial);
                let sketch = point.sketch.resolve(prep.facts.n, seed)?;
                for _ in 0..cfg.timing.warmup_runs {
                    let _ = run(alg, &prep.x, &sketch);
                }
                let mut times = Vec::with_capacity(cfg.timing.measured_runs);
                let mut last = None;
                for _ in 0..cfg.timing.measured_runs {
                    let r = timed(alg, &prep.x, &sketch);
                    times.push(r.seconds);
                    last = Some(r);
                }
                let mut outcome = last.expect("measured_runs >= 3");
                outcome.seconds = median(times);
                records.push(record(alg, point, trial, seed, &prep, outcome)?);
            }
        }
    }
    Ok(finish(&cfg, records, warnings))
}

/// Dispatches on `cfg.kind`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    match cfg.kind {
        ExperimentKind::Accuracy => run_accuracy_sweep(cfg),
        ExperimentKind::Timing => run_timing_sweep(cfg),
        ExperimentKind::Robustness => run_robustness_suite(cfg),
    }
}

/// Writes every configured output file.
pub fn write_outputs(report: &ExperimentReport, outputs: &OutputSettings) -> Result<()> {
    let targets = [
        (&outputs.csv, ReportFormat::Csv),
        (&outputs.markdown, ReportFormat::Markdown),
        (&outputs.json, ReportFormat::Json),
    ];
    for (path, format) in targets {
        if let Some(path) = path {
            let bytes = emit(report, format)?;
            std::fs::write(path, bytes).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::{preset, Sweep, SweepAxis};
    use crate::experiment::report::to_csv;
    use crate::zoo::{Family, MatrixSpec};

    fn small(algs: &[Algorithm], trials: usize) -> ExperimentConfig {
        let mut cfg = preset("table6-desk").unwrap();
        cfg.algorithms = algs.to_vec();
        cfg.matrix = MatrixSpec::new(Family::SvdConditioned, 400, 10, 1e-6, 0);
        cfg.sweep = Sweep {
            axis: SweepAxis::Param,
            values: vec![1e-6, 1e-15],
        };
        cfg.trials = trials;
        cfg
    }

    #[test]
    fn seeds_are_prefix_stable() {
        let s: Vec<u64> = (0..3).map(|t| trial_seed(5, 1, 2, t)).collect();
        let more: Vec<u64> = (0..6).map(|t| trial_seed(5, 1, 2, t)).collect();
        assert_eq!(&more[..3], &s[..]);
        assert_ne!(trial_seed(5, 0, 2, 0), trial_seed(5, 1, 2, 0));
        assert_ne!(matrix_seed(5, 0, 0), trial_seed(5, 0, 0, 0));
    }

    #[test]
    fn single_cell_report() {
        let mut cfg = small(&[Algorithm::CholeskyQr2], 1);
        cfg.matrix.param = 1.0;
        cfg.sweep.values = vec![1.0];
        let rep = run_accuracy_sweep(&cfg).unwrap();
        assert_eq!(rep.records.len(), 1);
        assert_eq!(rep.total_breakdowns(), 0);
        assert_eq!(to_csv(&rep).lines().count(), 2);
    }

    #[test]
    fn ordering_and_determinism() {
        let cfg = small(&[Algorithm::ShiftedCholeskyQr3, Algorithm::Sslhc3], 3);
        let a = run_accuracy_sweep(&cfg).unwrap();
        let b = run_accuracy_sweep(&cfg).unwrap();
        let keys: Vec<_> = a.records.iter().map(|r| (r.algorithm, r.sweep_index, r.trial)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by_key(|&(alg, s, t)| (cfg.algorithms.iter().position(|&x| x == alg), s, t));
        assert_eq!(keys, sorted);
        let strip = |r: &ExperimentReport| {
            r.records
                .iter()
                .map(|x| {
                    let mut x = x.clone();
                    x.time_s = 0.0;
                    x
                })
                .collect::<Vec<_>>()
        };
        assert_eq!(strip(&a), strip(&b));
        let cell = a.cell(Algorithm::ShiftedCholeskyQr3, 1).unwrap();
        assert!(cell.breakdowns >= 1 && cell.breakdowns + cell.successes == 3);
        assert_eq!(a.cell(Algorithm::Sslhc3, 1).unwrap().breakdowns, 0);
        for r in a.records.iter().filter(|r| r.breakdown) {
            assert!(r.orthogonality.is_none() && r.residual_abs.is_none());
            assert!(r.breakdown_stage.as_deref().unwrap().ends_with("cholesky"));
        }
    }

    #[test]
    fn timing_single_row() {
        let mut cfg = small(&[Algorithm::Slhc3], 1);
        cfg.sweep.values = vec![1e-6];
        let rep = run_timing_sweep(&cfg).unwrap();
        assert_eq!(rep.records.len(), 1);
        assert!(rep.records[0].time_s > 0.0);
    }

    #[test]
    fn smoke_robustness_counts() {
        let cfg = small(&[Algorithm::Slhc3, Algorithm::Sslhc3], 1);
        let rep = run_robustness_suite(&cfg).unwrap();
        for c in &rep.cells {
            assert!(c.breakdowns <= 1 && c.orth_violations <= 1 && c.res_violations <= 1);
        }
    }
}
