use std::fmt::Write as _;
use std::path::Path;

use crate::analysis::BeamPattern;
use crate::error::{Error, Result};
use crate::solvers::Method;

use super::{metric_names, ExperimentConfig, RunResult};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricSummary {
    pub name: String,
    pub median: f64,
    pub iqr: f64,
    /// Per-run values from successful runs, in run order.
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodReport {
    pub method: Method,
    /// Pattern of the first successful run.
    pub pattern: Option<BeamPattern>,
    pub metrics: Vec<MetricSummary>,
    pub failures: usize,
    /// Error messages of the failed runs, paired with their seeds.
    pub errors: Vec<(u64, String)>,
    /// Runs that hit the IRLS or barrier iteration cap.
    pub unconverged: usize,
}

impl MethodReport {
    pub fn metric(&self, name: &str) -> Option<&MetricSummary> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub methods: Vec<MethodReport>,
    /// Seed of every run, for replaying a single realization.
    pub seeds: Vec<u64>,
}

impl ExperimentReport {
    pub fn aggregate(config: &ExperimentConfig, runs: &[RunResult]) -> Self {
        let names = metric_names(config);
        let methods = config
            .methods
            .iter()
            .enumerate()
            .map(|(mi, &method)| {
                let mut values: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
                let mut pattern = None;
                let mut errors = Vec::new();
                let mut unconverged = 0;
                for run in runs {
                    match &run.methods[mi] {
                        Ok(res) => {
                            if pattern.is_none() {
                                pattern = Some(res.pattern.clone());
                            }
                            if !res.weights.diagnostics.converged {
                                unconverged += 1;
                            }
                            for (slot, v) in values.iter_mut().zip(&res.metrics) {
                                slot.push(*v);
                            }
                        }
                        Err(e) => errors.push((run.seed, e.clone())),
                    }
                }
                let metrics = names
                    .iter()
                    .zip(values)
                    .map(|(name, values)| {
                        let (median, iqr) = median_iqr(&values);
                        MetricSummary {
                            name: name.clone(),
                            median,
                            iqr,
                            values,
                        }
                    })
                    .collect();
                MethodReport {
                    method,
                    pattern,
                    metrics,
                    failures: errors.len(),
                    errors,
                    unconverged,
                }
            })
            .collect();
        Self {
            methods,
            seeds: runs.iter().map(|r| r.seed).collect(),
        }
    }

    pub fn method(&self, method: Method) -> Option<&MethodReport> {
        self.methods.iter().find(|m| m.method == method)
    }

    pub fn total_failures(&self) -> usize {
        self.methods.iter().map(|m| m.failures).sum()
    }
}

/// Median and interquartile range with linear interpolation between order
/// statistics. Empty input gives `(NaN, NaN)`.
pub fn median_iqr(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let q = |p: f64| {
        let pos = p * (sorted.len() - 1) as f64;
        let lo = pos.floor() as usize;
        let hi = pos.ceil() as usize;
        sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
    };
    (q(0.5), q(0.75) - q(0.25))
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// `theta_deg,gain_db,raw_gain` with six decimals; a missing pattern writes
/// the header only.
pub fn emit_pattern_csv(pattern: Option<&BeamPattern>, path: &Path) -> Result<()> {
    let mut out = String::from("theta_deg,gain_db,raw_gain\n");
    if let Some(p) = pattern {
        for ((a, g), r) in p.angles_deg().iter().zip(p.gain_db()).zip(p.raw_gain()) {
            writeln!(out, "{:.6},{:.6},{:.6}", a, g, r).expect("writing to a String");
        }
    }
    write_file(path, &out)
}

/// `method,metric,median,iqr,failures`, one row per method and metric.
pub fn emit_metrics_csv(report: &ExperimentReport, path: &Path) -> Result<()> {
    let mut out = String::from("method,metric,median,iqr,failures\n");
    for m in &report.methods {
        for s in &m.metrics {
            writeln!(out, "{},{},{:.6},{:.6},{}", m.method, s.name, s.median, s.iqr, m.failures)
                .expect("writing to a String");
        }
    }
    write_file(path, &out)
}
