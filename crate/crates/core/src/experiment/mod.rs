//! Monte-Carlo experiment runner.
//!
//! Each run draws snapshots with seed `base_seed + run_index`, estimates the
//! covariance, builds whatever each method needs (penalty grid, `Q`,
//! uncertainty ellipsoid), steers every method at `soi + mismatch`, and
//! evaluates the resulting patterns. Runs are independent and execute in
//! parallel; results are collected in run order, so output is deterministic.

mod config;
mod report;

use std::path::Path;

use rayon::prelude::*;

pub use config::{parse_config, parse_config_str, validate, ConfigError, ExperimentConfig};
pub use report::{emit_metrics_csv, emit_pattern_csv, median_iqr, ExperimentReport, MethodReport, MetricSummary};

use crate::analysis::{beam_pattern, null_depth, output_sinr, pointing_error, sidelobe_level, BeamPattern};
use crate::array::{generate_snapshots, steering_matrix, steering_vector, DoaGrid, Scenario};
use crate::covariance::sample_covariance;
use crate::error::Result;
use crate::solvers::{
    build_ellipsoid, mvdr_loaded, solve_rmvb, solve_rwsc, solve_sc, solve_wsc, BeamformerWeights, Method,
};
use crate::weighting::build_q;

/// Names of the per-run metrics, in output order.
pub fn metric_names(config: &ExperimentConfig) -> Vec<String> {
    let mut names: Vec<String> = config
        .scenario
        .interferers
        .iter()
        .map(|i| format!("null_depth_{}", i.doa_deg))
        .collect();
    names.extend(
        ["sidelobe_level", "pointing_error", "abs_pointing_error", "gain_at_soi", "output_sinr"]
            .map(String::from),
    );
    names
}

/// Outcome of one method in one run.
#[derive(Debug, Clone)]
pub struct MethodRun {
    pub weights: BeamformerWeights,
    /// Pattern at the export resolution.
    pub pattern: BeamPattern,
    /// Values aligned with [`metric_names`].
    pub metrics: Vec<f64>,
}

#[derive(Debug)]
pub struct RunResult {
    pub seed: u64,
    /// One entry per configured method, in config order.
    pub methods: Vec<std::result::Result<MethodRun, String>>,
}

/// Executes a single Monte-Carlo run with the given seed.
pub fn run_once(config: &ExperimentConfig, seed: u64) -> RunResult {
    let scenario = Scenario {
        rng_seed: seed,
        ..config.scenario.clone()
    };
    match prepare_run(config, &scenario) {
        Ok(shared) => RunResult {
            seed,
            methods: config
                .methods
                .iter()
                .map(|&m| solve_and_measure(config, &scenario, &shared, m).map_err(|e| e.to_string()))
                .collect(),
        },
        Err(e) => RunResult {
            seed,
            methods: config.methods.iter().map(|_| Err(e.to_string())).collect(),
        },
    }
}

struct SharedInputs {
    r: crate::covariance::CovarianceMatrix,
    a0: crate::CVector,
    a: Option<crate::array::SteeringMatrix>,
    q: Option<crate::weighting::WeightMatrix>,
    ellipsoid: Option<crate::solvers::Ellipsoid>,
}

fn prepare_run(config: &ExperimentConfig, scenario: &Scenario) -> Result<SharedInputs> {
    let geometry = &config.geometry;
    let steer = config.steering_deg();
    let x = generate_snapshots(scenario, geometry)?;
    let r = sample_covariance(&x);
    let a0 = steering_vector(geometry, steer)?;
    let needs_grid = config
        .methods
        .iter()
        .any(|m| matches!(m, Method::Sc | Method::Wsc | Method::Rwsc));
    let a = if needs_grid {
        let grid = DoaGrid::uniform_excluding(steer, config.grid_resolution_deg)?;
        Some(steering_matrix(geometry, &grid))
    } else {
        None
    };
    let q = match (&a, config.methods.iter().any(Method::is_weighted)) {
        (Some(a), true) => Some(build_q(a, &x)?),
        _ => None,
    };
    let ellipsoid = if config.methods.iter().any(Method::is_robust) {
        Some(build_ellipsoid(
            geometry,
            steer,
            config.ellipsoid_half_width_deg,
            config.ellipsoid_samples,
        )?)
    } else {
        None
    };
    Ok(SharedInputs { r, a0, a, q, ellipsoid })
}

fn solve_and_measure(
    config: &ExperimentConfig,
    scenario: &Scenario,
    inputs: &SharedInputs,
    method: Method,
) -> Result<MethodRun> {
    let opts = &config.solver_options;
    let r = &inputs.r;
    // the option is populated whenever a configured method needs it
    let a = || inputs.a.as_ref().expect("penalty grid prepared");
    let q = || inputs.q.as_ref().expect("weighting prepared");
    let e = || inputs.ellipsoid.as_ref().expect("ellipsoid prepared");
    let weights = match method {
        Method::Mvdr => mvdr_loaded(r, &inputs.a0, opts.diagonal_loading)?,
        Method::Sc => solve_sc(r, a(), &inputs.a0, opts)?,
        Method::Wsc => solve_wsc(r, a(), q(), &inputs.a0, opts)?,
        Method::Rmvb => solve_rmvb(r, e(), opts)?,
        Method::Rwsc => solve_rwsc(r, a(), q(), e(), opts)?,
    };
    if weights.w.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(crate::Error::Solver(format!("{method} produced non-finite weights")));
    }

    let geometry = &config.geometry;
    let fine = beam_pattern(&weights.w, geometry, config.metric_resolution_deg)?;
    let true_doa = scenario.soi_doa_deg;
    let mut metrics = Vec::new();
    for intf in &scenario.interferers {
        metrics.push(null_depth(&fine, intf.doa_deg, config.null_window_deg)?);
    }
    let peak = pointing_error(&fine, 0.0);
    metrics.push(sidelobe_level(&fine, peak)?.level_db);
    let pe = pointing_error(&fine, true_doa);
    metrics.push(pe);
    metrics.push(pe.abs());
    metrics.push(fine.gain_db_at(true_doa));
    metrics.push(output_sinr(&weights.w, scenario, geometry)?);

    let pattern = beam_pattern(&weights.w, geometry, config.pattern_resolution_deg)?;
    Ok(MethodRun {
        weights,
        pattern,
        metrics,
    })
}

/// Runs every Monte-Carlo repetition and aggregates the metrics.
pub fn execute(config: &ExperimentConfig) -> ExperimentReport {
    let base = config.scenario.rng_seed;
    let runs: Vec<RunResult> = (0..config.monte_carlo_runs)
        .into_par_iter()
        .map(|i| run_once(config, base.wrapping_add(i as u64)))
        .collect();
    ExperimentReport::aggregate(config, &runs)
}

/// Runs the experiment and writes `pattern_<method>.csv` plus `metrics.csv`
/// into `output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let report = execute(config);
    write_outputs(&report, &config.output_dir)?;
    Ok(report)
}

pub fn write_outputs(report: &ExperimentReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|source| crate::Error::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for m in &report.methods {
        emit_pattern_csv(m.pattern.as_ref(), &dir.join(format!("pattern_{}.csv", m.method)))?;
    }
    emit_metrics_csv(report, &dir.join("metrics.csv"))
}
