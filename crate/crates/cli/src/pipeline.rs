//! solve → reduce → trace, with artifacts on disk.

use std::fs;
use std::path::{Path, PathBuf};

use pucp_core::beltrami::{reduce, AssembleOptions, ReduceSettings, ReductionCoefficient, ReductionResult};
use pucp_core::field::io::{read_real, write_field, AnyField};
use pucp_core::field::RealField;
use pucp_core::singular::TransformPlan;
use pucp_core::solver::{solve_dirichlet, Coefficient, SolveReport};
use pucp_core::ucp::{corrupt_omega, trace_lower_bound, EstimateChain, TraceInput, TraceSettings};

use crate::config::{ExperimentConfig, Overrides};
use crate::error::{CliError, ExitStatus};
use crate::report::{emit_report, to_json, ReportFormat};

pub const SOLUTION_FILE: &str = "solution.pucp";
pub const CHAIN_STEM: &str = "chain";

/// Solves the configured problem and writes `solution.pucp` and `solve.json`.
pub fn solve_stage(cfg: &ExperimentConfig) -> Result<(RealField, SolveReport), CliError> {
    let problem = cfg.problem()?;
    let (v, report) = solve_dirichlet(&problem, cfg.solver.tol, cfg.solver.max_iter)?;
    let dir = &cfg.output_dir;
    fs::create_dir_all(dir)?;
    write_field(dir.join(SOLUTION_FILE), &AnyField::Real(v.clone()))?;
    fs::write(dir.join("solve.json"), to_json(&report))?;
    if !report.achieved_tolerance {
        return Err(CliError::NonConvergence(format!(
            "residual {:e} after {} iterations (tolerance {:e})",
            report.regularized_residual, report.iterations, cfg.solver.tol
        )));
    }
    Ok((v, report))
}

pub fn coefficient(cfg: &ExperimentConfig) -> Result<ReductionCoefficient, CliError> {
    Ok(match cfg.problem()?.coefficient() {
        Coefficient::Drift(w) => ReductionCoefficient::Drift(w.clone()),
        Coefficient::Weight(a) => ReductionCoefficient::Weight(a.clone()),
    })
}

/// Reduces `v` to the Beltrami system and writes the fields and summary to
/// `<out>/reduction`.
pub fn reduce_stage(
    cfg: &ExperimentConfig,
    v: &RealField,
    coef: &ReductionCoefficient,
) -> Result<ReductionResult, CliError> {
    let settings = ReduceSettings {
        assemble: AssembleOptions {
            q: cfg.q,
            ..Default::default()
        },
        ..Default::default()
    };
    let plan = TransformPlan::new(*v.grid());
    let red = reduce(v, coef, cfg.p, cfg.branch.variant(), &settings, &plan)?;
    red.write_dir(cfg.output_dir.join("reduction"))?;
    Ok(red)
}

pub fn trace_stage(
    cfg: &ExperimentConfig,
    v: &RealField,
    coef: &ReductionCoefficient,
    red: &ReductionResult,
) -> Result<EstimateChain, CliError> {
    let corrupted;
    let reduction = match cfg.negative_control {
        Some(nc) => {
            corrupted = corrupt_omega(red, nc.omega_factor);
            &corrupted
        }
        None => red,
    };
    let settings = TraceSettings {
        radii: cfg.radii.clone(),
        rescale: cfg.rescale,
        constants: cfg.calibration.constants(),
        ..Default::default()
    };
    let input = TraceInput {
        v,
        coefficient: coef,
        reduction,
        q: cfg.q,
    };
    Ok(trace_lower_bound(input, cfg.branch, &settings)?)
}

/// Writes the chain in all three formats; returns their paths.
pub fn write_reports(dir: &Path, chain: &EstimateChain) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for format in [ReportFormat::Structured, ReportFormat::Csv, ReportFormat::Plotdata] {
        let path = dir.join(format!("{CHAIN_STEM}.{}", format.extension()));
        fs::write(&path, emit_report(chain, format))?;
        files.push(path);
    }
    Ok(files)
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub config: ExperimentConfig,
    pub chain: EstimateChain,
    pub files: Vec<PathBuf>,
}

impl RunOutcome {
    pub fn status(&self) -> ExitStatus {
        if self.chain.passes {
            ExitStatus::Pass
        } else {
            ExitStatus::ChainFailure
        }
    }
}

/// Full pipeline for a config file. With `solution` set the solve stage is
/// replaced by reading that field.
pub fn run_config(path: &Path, overrides: &Overrides, solution: Option<&Path>) -> Result<RunOutcome, CliError> {
    let cfg = ExperimentConfig::load(path, overrides)?;
    run(cfg, solution)
}

pub fn run(cfg: ExperimentConfig, solution: Option<&Path>) -> Result<RunOutcome, CliError> {
    let v = match solution {
        Some(p) => {
            let v = read_real(p).map_err(CliError::input)?;
            if !v.grid().same_layout(&cfg.grid()?) {
                return Err(CliError::Config(format!("{} is not on the config grid", p.display())));
            }
            v
        }
        None => solve_stage(&cfg)?.0,
    };
    let coef = coefficient(&cfg)?;
    let red = reduce_stage(&cfg, &v, &coef)?;
    let chain = trace_stage(&cfg, &v, &coef, &red)?;
    let files = write_reports(&cfg.output_dir, &chain)?;
    fs::write(cfg.output_dir.join("config.toml"), cfg.to_toml())?;
    Ok(RunOutcome { config: cfg, chain, files })
}
