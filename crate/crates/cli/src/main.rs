use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use pucp_cli::config::{ExperimentConfig, Overrides};
use pucp_cli::pipeline::{self, SOLUTION_FILE};
use pucp_cli::report::{emit_report, fmt_num, parse_structured, to_json, ReportFormat};
use pucp_cli::{CliError, ExitStatus};
use pucp_core::field::io::{read_complex, read_field, read_real, write_field, AnyField};
use pucp_core::field::{DiscSampler, DiskGrid, VectorField2};
use pucp_core::quasiregular::{three_circle_check, ThreeCircleMode};
use pucp_core::singular::{beurling_transform, cauchy_transform, TransformPlan};
use pucp_core::ucp::{landis_infsup, rescale_bourgain_kenig, sucp_contradiction_test, Branch, RescaleParams, SucpVerdict};
use pucp_core::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "pucp", version, about = "Unique-continuation laboratory for planar p-Laplace equations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_parser = parse_branch)]
    branch: Option<Branch>,
    /// Grid nodes per side.
    #[arg(long)]
    n: Option<usize>,
    /// Solver tolerance.
    #[arg(long)]
    tol: Option<f64>,
}

impl ConfigArgs {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let o = Overrides {
            out: self.out.clone(),
            branch: self.branch,
            n: self.n,
            tol: self.tol,
        };
        ExperimentConfig::load(&self.config, &o)
    }
}

fn parse_branch(s: &str) -> Result<Branch, String> {
    Branch::parse(s).ok_or_else(|| format!("unknown branch {s}"))
}

#[derive(Clone, Copy, ValueEnum)]
enum TransformKind {
    Cauchy,
    Beurling,
}

#[derive(Clone, Copy, ValueEnum)]
enum CircleMode {
    Exact,
    Fit,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured Dirichlet problem.
    Solve(ConfigArgs),
    /// Reduce a solution to its Beltrami system.
    Reduce {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Solution field; defaults to the one in the output directory.
        #[arg(long)]
        field: Option<PathBuf>,
    },
    /// Apply the Cauchy or Beurling transform to a field.
    Transform {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, value_enum)]
        kind: TransformKind,
        #[arg(long)]
        out: PathBuf,
    },
    /// Three-circle check of a field about the grid center.
    ThreeCircle {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        r: f64,
        #[arg(long, value_enum, default_value = "fit")]
        mode: CircleMode,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Vanishing order and SUCP verdict at the grid center.
    Vanish {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, default_value_t = 1.0 / 64.0)]
        r_min: f64,
        #[arg(long, default_value_t = 1.0)]
        r_max: f64,
        #[arg(long, default_value_t = 12.0)]
        n_max: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the configured pipeline and certify the estimate chain.
    Trace {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Use this solution instead of solving.
        #[arg(long)]
        field: Option<PathBuf>,
        /// Report printed to stdout.
        #[arg(long, value_enum, default_value = "csv")]
        format: ReportFormat,
    },
    /// Rescale a solution and drift about a point of modulus R.
    Rescale {
        #[arg(long)]
        field: PathBuf,
        /// Complex field `Wx + i Wy`; zero when absent.
        #[arg(long)]
        drift: Option<PathBuf>,
        #[arg(long)]
        scale: f64,
        #[arg(long, default_value_t = 0.0)]
        angle: f64,
        #[arg(long)]
        q: f64,
        /// Target grid nodes per side (domain radius 8).
        #[arg(long, default_value_t = 256)]
        n: usize,
        #[arg(long, default_value_t = 1e-2)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Landis inf-sup curve of a field.
    Landis {
        #[arg(long)]
        field: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        radii: Vec<f64>,
        #[arg(long, default_value_t = 64)]
        probes: usize,
        /// Seeds the rotation of the probe circle.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-emit a structured chain report in another format.
    Report {
        #[arg(long)]
        chain: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: ReportFormat,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("PUCP_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().ok();
    }
    match execute(cli.command) {
        Ok(status) => status.into(),
        Err(e) => {
            eprintln!("pucp: {e}");
            e.status().into()
        }
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir)?;
            }
            fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn pass_if(ok: bool) -> ExitStatus {
    if ok {
        ExitStatus::Pass
    } else {
        ExitStatus::ChainFailure
    }
}

fn read_input(path: &Path) -> Result<AnyField, CliError> {
    read_field(path).map_err(CliError::input)
}

fn sampler(f: &AnyField) -> &dyn DiscSampler {
    match f {
        AnyField::Real(f) => f,
        AnyField::Complex(f) => f,
    }
}

fn execute(command: Command) -> Result<ExitStatus, CliError> {
    match command {
        Command::Solve(args) => {
            let cfg = args.load()?;
            let (_, report) = pipeline::solve_stage(&cfg)?;
            eprintln!(
                "solved in {} iterations, residual {}",
                report.iterations,
                fmt_num(report.final_residual)
            );
            Ok(ExitStatus::Pass)
        }
        Command::Reduce { cfg, field } => {
            let cfg = cfg.load()?;
            let path = field.unwrap_or_else(|| cfg.output_dir.join(SOLUTION_FILE));
            let v = read_real(&path).map_err(CliError::input)?;
            let coef = pipeline::coefficient(&cfg)?;
            let red = pipeline::reduce_stage(&cfg, &v, &coef)?;
            eprintln!(
                "sup |omega| = {}, representation error = {}",
                fmt_num(red.omega_sup),
                fmt_num(red.representation_error)
            );
            Ok(ExitStatus::Pass)
        }
        Command::Transform { field, kind, out } => {
            let g = match read_input(&field)? {
                AnyField::Real(f) => f.to_complex(),
                AnyField::Complex(f) => f,
            };
            let plan = TransformPlan::new(*g.grid());
            let t = match kind {
                TransformKind::Cauchy => cauchy_transform(&plan, &g)?,
                TransformKind::Beurling => beurling_transform(&plan, &g)?,
            };
            write_field(out, &AnyField::Complex(t))?;
            Ok(ExitStatus::Pass)
        }
        Command::ThreeCircle { field, r, mode, out } => {
            let f = read_input(&field)?;
            let mode = match mode {
                CircleMode::Exact => ThreeCircleMode::HolomorphicExact,
                CircleMode::Fit => ThreeCircleMode::QuasiregularFit,
            };
            let report = three_circle_check(sampler(&f), r, f.grid().center(), mode)?;
            emit(out.as_deref(), &to_json(&report))?;
            Ok(pass_if(report.passes()))
        }
        Command::Vanish { field, r_min, r_max, n_max, out } => {
            let f = read_input(&field)?;
            let report = sucp_contradiction_test(sampler(&f), f.grid().center(), r_min, r_max, n_max)?;
            emit(out.as_deref(), &to_json(&report))?;
            Ok(pass_if(!matches!(report.verdict, SucpVerdict::SucpViolationCandidate { .. })))
        }
        Command::Trace { cfg, field, format } => {
            let cfg = cfg.load()?;
            let outcome = pipeline::run(cfg, field.as_deref())?;
            print!("{}", emit_report(&outcome.chain, format));
            if let Some(step) = &outcome.chain.first_failure {
                eprintln!("chain fails first at {step}");
            }
            Ok(outcome.status())
        }
        Command::Rescale { field, drift, scale, angle, q, n, tol, out } => {
            let u = read_real(&field).map_err(CliError::input)?;
            let w = match drift {
                Some(p) => {
                    let w = read_complex(&p).map_err(CliError::input)?;
                    VectorField2::from_components(&w.re(), &w.im())?
                }
                None => VectorField2::zeros(*u.grid()),
            };
            let params = RescaleParams::new(scale, Complex64::from_polar(scale, angle), q)
                .map_err(|e| CliError::Config(e.to_string()))?;
            let target = DiskGrid::new(n, 8.0, 32.0).map_err(|e| CliError::Config(e.to_string()))?;
            let outcome = rescale_bourgain_kenig(&u, &w, &params, &target, tol)?;
            fs::create_dir_all(&out)?;
            write_field(out.join("u_rescaled.pucp"), &AnyField::Real(outcome.u.clone()))?;
            write_field(out.join("w_rescaled.pucp"), &AnyField::Complex(outcome.w.to_complex()))?;
            let summary = serde_json::json!({
                "scale": scale,
                "q": q,
                "measured": outcome.measured,
                "source_norm": outcome.source_norm,
                "bound": outcome.bound,
                "tolerance": outcome.tolerance,
                "passes": outcome.passes,
            });
            fs::write(out.join("rescale.json"), to_json(&summary))?;
            Ok(pass_if(outcome.passes))
        }
        Command::Landis { field, radii, probes, seed, out } => {
            let u = read_real(&field).map_err(CliError::input)?;
            let phase = ChaCha8Rng::seed_from_u64(seed).gen_range(0.0..std::f64::consts::TAU / probes.max(1) as f64);
            let mut text = String::from("radius,infsup\n");
            for r in radii {
                let m = landis_infsup(&u, r, probes, phase)?;
                text.push_str(&format!("{},{}\n", fmt_num(r), fmt_num(m)));
            }
            emit(out.as_deref(), &text)?;
            Ok(ExitStatus::Pass)
        }
        Command::Report { chain, format, out } => {
            let text = fs::read_to_string(&chain)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", chain.display())))?;
            let chain = parse_structured(&text)?;
            emit(out.as_deref(), &emit_report(&chain, format))?;
            Ok(ExitStatus::Pass)
        }
    }
}
