use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use pollstop::checks::run_checks;
use pollstop::config::{parse_config, ConfigError, RunConfig, SweepSpec};
use pollstop::output::{self, OutputError, RunMeta};
use pollstop::solver::residual_profile;
use pollstop::{
    simulate_policy, solve_boundary, sweep::sweep, value_surface, Boundary, Model, ModelError,
    PathEngine,
};

/// Optimal adoption timing for an emissions-reduction policy under a
/// learned cost trend.
#[derive(Debug, Parser)]
#[command(name = "pollstop", version)]
struct Cli {
    /// TOML run configuration; defaults are used for anything missing.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for both the solver and the policy simulation.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Paths per policy evaluation and per solver node.
    #[arg(long, global = true)]
    paths: Option<usize>,
    /// Only print warnings and errors.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the boundary and write boundary.csv.
    Solve,
    /// Evaluate the policy from the configured state and write stats.csv.
    Simulate {
        /// Use this boundary.csv instead of solving.
        #[arg(long)]
        boundary: Option<PathBuf>,
    },
    /// Re-solve and evaluate over a list of parameter values.
    Sweep {
        /// Parameter to vary (overrides the config's `[sweep]`).
        #[arg(long)]
        param: Option<String>,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',')]
        values: Option<Vec<f64>>,
    },
    /// Estimate V over the configured (x, pi) grid.
    Surface {
        #[arg(long)]
        boundary: Option<PathBuf>,
    },
    /// Run the fast invariant suite.
    Check,
}

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0} check(s) failed")]
    Check(usize),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("{path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Check(_) => 2,
            CliError::Output(OutputError::Boundary { .. } | OutputError::Format { .. }) => 1,
            CliError::Output(_) | CliError::Read { .. } => 3,
        }
    }
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
                path: path.clone(),
                source,
            })?;
            parse_config(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    if let Some(n) = cli.paths {
        cfg.sim.n_paths = n;
        cfg.solver.n_paths_op = n;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn boundary_for(model: &Model, cfg: &RunConfig, path: Option<&Path>) -> Result<Boundary, CliError> {
    match path {
        Some(p) => Ok(output::read_boundary(p)?),
        None => Ok(solve_boundary(model, &cfg.solver, &cfg.sim)?),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut cfg = load_config(cli)?;
    let model = Model::new(cfg.model)?;
    let dir = cfg.output_dir.clone();

    match &cli.command {
        Command::Solve => {
            let b = solve_boundary(&model, &cfg.solver, &cfg.sim)?;
            let engine = PathEngine::new(model, cfg.sim)?;
            let res = residual_profile(&b, &engine, cfg.solver.n_paths_op, 1, cfg.solver.sampling);
            let path = dir.join("boundary.csv");
            output::write_boundary(&path, &b, Some(&res))?;
            let conv = b.convergence().cloned();
            if let Some(c) = &conv {
                log::info!(
                    "converged: {}, sweeps: {}, sup change {:.3e}, max slope {:.3}",
                    c.converged,
                    c.iterations,
                    c.final_sup_change,
                    b.max_slope()
                );
            }
            let mut meta = RunMeta::new("solve", &cfg);
            meta.files.push("boundary.csv".into());
            meta.convergence = conv;
            output::write_run_meta(&dir, &meta)?;
            println!("{}", path.display());
        }
        Command::Simulate { boundary } => {
            let b = boundary_for(&model, &cfg, boundary.as_deref())?;
            let engine = PathEngine::new(model, cfg.sim)?;
            let stats = simulate_policy(&b, &cfg.state, &engine)?;
            output::write_stats(&dir.join("stats.csv"), &cfg.state, &stats)?;
            let mut meta = RunMeta::new("simulate", &cfg);
            meta.files.push("stats.csv".into());
            meta.convergence = b.convergence().cloned();
            output::write_run_meta(&dir, &meta)?;
            let s = &stats;
            println!("prob_stop = {}", s.prob_stop);
            println!("e_tau     = {} (se {})", s.e_tau, s.se_tau);
            println!("e_p_tau   = {} (se {})", s.e_p_tau, s.se_p_tau);
            println!("u_hat     = {} (se {})", s.u_hat, s.se_u);
            println!("v_hat     = {} (se {})", s.v_hat, s.se_v);
            if !s.boundary_converged {
                println!("warning: boundary solve did not converge");
            }
        }
        Command::Sweep { param, values } => {
            match (param, values) {
                (Some(p), Some(v)) => {
                    cfg.sweep = Some(SweepSpec {
                        param: p.clone(),
                        values: v.clone(),
                    })
                }
                (None, None) => {}
                _ => {
                    return Err(CliError::Validation(
                        "--param and --values must be given together".into(),
                    ))
                }
            }
            cfg.validate()?;
            let Some(spec) = cfg.sweep.clone() else {
                return Err(CliError::Validation(
                    "no sweep given: use --param/--values or a [sweep] section".into(),
                ));
            };
            let rows = sweep(&spec.param, &spec.values, &cfg.model, &cfg.state, &cfg.solver, &cfg.sim)?;
            output::write_sweep(&dir.join("sweep.csv"), &rows)?;
            output::write_sweep_boundaries(&dir.join("sweep_boundaries.csv"), &rows)?;
            let mut meta = RunMeta::new("sweep", &cfg);
            meta.files = vec!["sweep.csv".into(), "sweep_boundaries.csv".into()];
            meta.skipped = rows
                .iter()
                .filter_map(|r| r.error.as_ref().map(|e| format!("{} = {}: {e}", r.param, r.value)))
                .collect();
            output::write_run_meta(&dir, &meta)?;
            for s in &meta.skipped {
                eprintln!("skipped {s}");
            }
            println!("{}", dir.join("sweep.csv").display());
        }
        Command::Surface { boundary } => {
            let b = boundary_for(&model, &cfg, boundary.as_deref())?;
            let engine = PathEngine::new(model, cfg.sim)?;
            let rows = value_surface(&b, &cfg.surface.x, cfg.surface.p, &cfg.surface.pi, &engine)?;
            let path = dir.join("value_surface.csv");
            output::write_surface(&path, &rows)?;
            let mut meta = RunMeta::new("surface", &cfg);
            meta.files.push("value_surface.csv".into());
            meta.convergence = b.convergence().cloned();
            output::write_run_meta(&dir, &meta)?;
            println!("{}", path.display());
        }
        Command::Check => {
            let results = run_checks(&model, cfg.sim.seed, 20_000)?;
            let failed = results.iter().filter(|r| !r.passed).count();
            for r in &results {
                println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
            }
            if failed > 0 {
                return Err(CliError::Check(failed));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new()
        .filter_level(if cli.quiet {
            log::LevelFilter::Warn
        } else {
            log::LevelFilter::Info
        })
        .parse_default_env()
        .init();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
