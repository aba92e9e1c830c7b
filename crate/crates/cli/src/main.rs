//! `hybrid-ns`: configuration-driven simulations and parameter studies.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 configuration error, 3 solver
//! failure.

mod config;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use hybrid_ns::diagnostics::{write_csv, write_vtk_snapshot};
use hybrid_ns::linalg::DampingVerdict;
use hybrid_ns::schemes::{run_simulation, step_count, Method, SchemeError, State, StepDiagnostics};
use hybrid_ns::studies::{
    convergence_study, damping_study, eigen_check, format_convergence_csv, relaxation_name, stability_study,
    ConvergenceStudy, DampingStudy, ParameterCoupling, StabilityStudy, StudyError, CONVERGENCE_DTS,
};

use config::{ConfigError, ProblemName, RunConfig};

#[derive(Parser)]
#[command(name = "hybrid-ns", version, about = "Hybrid penalty / artificial-compression Navier-Stokes solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// JSON configuration file; omitted means all defaults.
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set scheme.dt=0.05`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write `timeseries.csv` (plus VTK snapshots).
    Run(ConfigArgs),
    /// Temporal convergence table on the manufactured solution.
    Convergence(ConfigArgs),
    /// Hybrid, penalty and artificial-compression runs on one problem.
    Damping(ConfigArgs),
    /// Smallest Laplacian eigenvalue and the overdamping verdict.
    EigenCheck {
        #[command(flatten)]
        args: ConfigArgs,
        /// Print the report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Taylor-Green runs under large and small parameter couplings.
    Stability(ConfigArgs),
}

/// A failure with its process exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn io(error: anyhow::Error) -> Self {
        Self { code: 1, error }
    }
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self { code: 2, error: anyhow!(e).context("configuration error") }
    }
}

impl From<StudyError> for Failure {
    fn from(e: StudyError) -> Self {
        let code = match &e {
            StudyError::Simulation { solver_failure: true, .. } | StudyError::Eigen(_) => 3,
            StudyError::Diagnostics(_) => 1,
            _ => 2,
        };
        Self { code, error: anyhow!(e) }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => load(&a).and_then(|c| cmd_run(&c)),
        Command::Convergence(a) => load(&a).and_then(|c| cmd_convergence(&c)),
        Command::Damping(a) => load(&a).and_then(|c| cmd_damping(&c)),
        Command::EigenCheck { args, json } => load(&args).and_then(|c| cmd_eigen_check(&c, json)),
        Command::Stability(a) => load(&a).and_then(|c| cmd_stability(&c)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn load(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    Ok(config::load(args.config.as_deref(), &args.overrides)?)
}

fn prepare_output(cfg: &RunConfig) -> Result<PathBuf, Failure> {
    let dir = cfg.output_dir();
    fs::create_dir_all(&dir)
        .with_context(|| format!("cannot create output directory {}", dir.display()))
        .map_err(Failure::io)?;
    Ok(dir)
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display())).map_err(Failure::io)
}

fn cmd_run(cfg: &RunConfig) -> CmdResult {
    let problem = cfg.build_problem(ProblemName::TaylorGreen, 16)?;
    let method = cfg.method(Method::HybridBeDecoupled)?;
    let dt = cfg.dt(0.1)?;
    let t_final = cfg.t_final(1.0)?;
    let coupling = cfg.coupling(ParameterCoupling::default_for(method.time_discretization()))?;
    let scheme = cfg.build_scheme(&problem, method, dt, coupling)?;
    step_count(t_final, dt).map_err(|e| ConfigError(e.to_string()))?;
    let dir = prepare_output(cfg)?;
    println!(
        "run: {} with {method}, dt = {dt}, T = {t_final}, alpha2 = {:e}, beta = {:e}",
        problem.name, scheme.alpha2, scheme.beta
    );

    let every = cfg.snapshots_every;
    let mut snapshot_error = None;
    let mut observer = |state: &State<f64>, _: &StepDiagnostics<f64>| {
        if every > 0 && state.step % every == 0 && snapshot_error.is_none() {
            let path = dir.join(format!("snapshot_{:06}.vtk", state.step));
            if let Err(e) = write_vtk_snapshot(&problem.mesh, state, &path) {
                snapshot_error = Some(e);
            }
        }
    };
    let result = run_simulation(&problem, &scheme, t_final, Some(&mut observer));
    if let Some(e) = snapshot_error {
        return Err(Failure::io(anyhow!(e)));
    }
    let csv = dir.join("timeseries.csv");
    match result {
        Ok(out) => {
            write_csv(&out.records, &csv).map_err(|e| Failure::io(anyhow!(e)))?;
            let last = out.records.last().expect("initial record");
            println!(
                "done: {} steps, final |w| = {:.6e}, |div w| = {:.6e}; wrote {}",
                out.final_state.step,
                last.norm_w,
                last.norm_div_w,
                csv.display()
            );
            Ok(())
        }
        Err(e) => {
            write_csv(&e.partial, &csv).map_err(|e| Failure::io(anyhow!(e)))?;
            let code = match e.source {
                SchemeError::Solver { .. } => 3,
                SchemeError::InvalidConfig(_) => 2,
            };
            let msg = anyhow!("{e}").context(format!("run failed at step {}; partial series in {}", e.step, csv.display()));
            Err(Failure { code, error: msg })
        }
    }
}

fn cmd_convergence(cfg: &RunConfig) -> CmdResult {
    if cfg.problem.name.is_some_and(|n| n != ProblemName::Manufactured) {
        return Err(ConfigError("the convergence study uses the manufactured problem only".into()).into());
    }
    let mesh_n = match &cfg.mesh {
        None => 32,
        Some(config::MeshConfig::UnitSquare { n }) => *n,
        Some(_) => return Err(ConfigError("the convergence study needs a unit_square mesh".into()).into()),
    };
    let dts = cfg.convergence.dts.clone().unwrap_or_else(|| CONVERGENCE_DTS.to_vec());
    if dts.is_empty() || dts.iter().any(|&d| !(d > 0.0 && d.is_finite())) {
        return Err(ConfigError("convergence.dts must be a non-empty list of positive steps".into()).into());
    }
    let study = ConvergenceStudy {
        mesh_n,
        dts,
        method: cfg.method(Method::HybridBeDecoupled)?,
        coupling: cfg.coupling(ParameterCoupling::ReciprocalDt)?,
        t_final: cfg.t_final(1.0)?,
    };
    let dir = prepare_output(cfg)?;
    println!(
        "convergence: {} on {}x{} with {}, T = {}",
        study.method,
        mesh_n,
        mesh_n,
        study.coupling.name(),
        study.t_final
    );
    let rows = convergence_study(&study)?;
    let csv = format_convergence_csv(&rows);
    print!("{csv}");
    write_text(&dir.join("convergence.csv"), &csv)
}

fn cmd_damping(cfg: &RunConfig) -> CmdResult {
    let problem = cfg.build_problem(ProblemName::OffsetCircles, 16)?;
    let time = cfg.damping_time()?;
    let study = DampingStudy {
        time,
        dt: cfg.dt(0.01)?,
        t_final: cfg.t_final(5.0)?,
        coupling: cfg.coupling(ParameterCoupling::default_for(time))?,
        mu: cfg.scheme.mu,
    };
    // Validate the per-method schemes before any work starts.
    for r in hybrid_ns::studies::DAMPING_RELAXATIONS {
        cfg.build_scheme(&problem, Method::from_parts(r, time), study.dt, study.coupling)?;
    }
    step_count(study.t_final, study.dt).map_err(|e| ConfigError(e.to_string()))?;
    let dir = prepare_output(cfg)?;
    println!(
        "damping: {} with {} time stepping, dt = {}, T = {}, {}",
        problem.name,
        time.name(),
        study.dt,
        study.t_final,
        study.coupling.name()
    );
    for run in damping_study(&problem, &study)? {
        let path = dir.join(format!("damping_{}_{}.csv", relaxation_name(run.method.relaxation()), time.name()));
        write_csv(&run.records, &path).map_err(|e| Failure::io(anyhow!(e)))?;
        println!(
            "{:<24} mean kappa {:.4e}  mean |div w| {:.4e}  -> {}",
            run.method.name(),
            run.mean_kappa(),
            run.mean_div(),
            path.display()
        );
    }
    Ok(())
}

fn cmd_eigen_check(cfg: &RunConfig, json: bool) -> CmdResult {
    let name = cfg.problem_name(ProblemName::TaylorGreen);
    let mesh = cfg.build_mesh(name, 32)?;
    let dt = cfg.dt(0.01)?;
    let coupling = cfg.coupling(ParameterCoupling::ReciprocalDt)?;
    let (alpha2, beta) = coupling.parameters(dt);
    let tol = cfg.eigen.rel_tol;
    if !(tol > 0.0 && tol < 1.0) {
        return Err(ConfigError(format!("eigen.rel_tol must lie in (0, 1), got {tol}")).into());
    }
    let report = eigen_check(&mesh, cfg.eigen.boundary.into(), alpha2, beta, tol)?;
    let verdict = match report.verdict {
        DampingVerdict::Overdamped => "overdamped",
        DampingVerdict::NotOverdamped => "not_overdamped",
    };
    if json {
        let v = serde_json::json!({
            "sigma_min": report.sigma_min,
            "iterations": report.iterations,
            "alpha": report.alpha,
            "beta": report.beta,
            "alpha_over_beta": report.ratio,
            "sqrt_sigma_min": report.sigma_min.sqrt(),
            "verdict": verdict,
            "margin": report.margin,
        });
        println!("{}", serde_json::to_string_pretty(&v).expect("serializable report"));
    } else {
        println!("sigma_min      {:.10e} ({} iterations)", report.sigma_min, report.iterations);
        println!("alpha / beta   {:.10e}", report.ratio);
        println!("sqrt(sigma)    {:.10e}", report.sigma_min.sqrt());
        println!("verdict        {verdict}");
        println!("margin         {:.10e}", report.margin);
    }
    Ok(())
}

fn cmd_stability(cfg: &RunConfig) -> CmdResult {
    if cfg.problem.name.is_some_and(|n| n != ProblemName::TaylorGreen) {
        return Err(ConfigError("the stability study uses the Taylor-Green problem only".into()).into());
    }
    let mesh_n = match &cfg.mesh {
        None => 16,
        Some(config::MeshConfig::UnitSquare { n }) => *n,
        Some(_) => return Err(ConfigError("the stability study needs a unit_square mesh".into()).into()),
    };
    let study = StabilityStudy {
        mesh_n,
        dt: cfg.dt(0.1)?,
        t_final: cfg.t_final(10.0)?,
        method: cfg.method(Method::HybridBeDecoupled)?,
        reynolds: cfg.problem.reynolds.unwrap_or(1.0),
    };
    if !(study.reynolds > 0.0) {
        return Err(ConfigError("problem.reynolds must be positive".into()).into());
    }
    let dir = prepare_output(cfg)?;
    println!("stability: Taylor-Green {mesh_n}x{mesh_n}, {}, dt = {}, T = {}", study.method, study.dt, study.t_final);
    for (coupling, records) in stability_study(&study)? {
        let path = dir.join(format!("stability_{}.csv", coupling.name()));
        write_csv(&records, &path).map_err(|e| Failure::io(anyhow!(e)))?;
        let last = records.last().expect("initial record");
        println!(
            "{:<16} final |w| {:.4e}  |div w| {:.4e}  |lambda| {:.4e}  -> {}",
            coupling.name(),
            last.norm_w,
            last.norm_div_w,
            last.norm_lambda,
            path.display()
        );
    }
    Ok(())
}
