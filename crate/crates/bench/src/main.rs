use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use cauchy_bench::config::ExperimentConfig;
use cauchy_bench::error::{BenchError, Stage};
use cauchy_bench::pipeline::{self, Stages};
use cauchy_bench::report::write_text;
use cauchy_bench::{emit_plots, RunReport, Timings};
use cauchy_core::singular_values;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cauchy-bench", version, about = "Cauchy data completion and Robin-law identification experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Experiment configuration (TOML); defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Base noise seed.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Comma-separated noise levels.
    #[arg(long, global = true, value_name = "LIST", value_delimiter = ',')]
    eps: Option<Vec<f64>>,

    /// Regularization exponent γ in (0, 1).
    #[arg(long, global = true, value_name = "F")]
    gamma: Option<f64>,

    /// Truncation rule.
    #[arg(long, global = true, value_parser = ["mu-squared", "mu-threshold", "literal"])]
    policy: Option<String>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Solve the direct problem and write the exact traces on the top side.
    Simulate,
    /// Reconstruct the top-side Cauchy data at each noise level.
    Cauchy,
    /// Reconstruct and identify the boundary law at each noise level.
    Identify,
    /// Full run with reports and plot files.
    Pipeline,
    /// One report per noise level plus a summary with error ratios.
    Sweep,
    /// Print analytic and numerical singular values.
    Svdtable,
}

fn config(cli: &Cli) -> Result<ExperimentConfig, BenchError> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.noise.seed = seed;
    }
    if let Some(eps) = &cli.eps {
        cfg.noise.eps = eps.clone();
    }
    if let Some(gamma) = cli.gamma {
        cfg.regularization.gamma = gamma;
    }
    if let Some(policy) = &cli.policy {
        cfg.regularization.policy = policy.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn write_run(report: &RunReport, timings: &Timings, dir: &Path, plots: bool) -> Result<(), BenchError> {
    report.write(dir)?;
    write_text(dir, "timings.csv", &timings.to_csv())?;
    if plots {
        emit_plots(report, dir)?;
    }
    print!("{}", report.errors_csv());
    Ok(())
}

fn svdtable(cfg: &ExperimentConfig, dir: &Path) -> Result<(), BenchError> {
    let basis = cfg.basis()?;
    let mu = singular_values(&basis);
    let numeric = if cfg.general.enabled {
        let sigma = cfg.conductivity()?;
        let opts = cauchy_core::GeneralOptions {
            gamma_modes: cfg.general.gamma_modes,
            sigma_modes: cfg.general.sigma_modes,
            blend: cfg.general.blend,
        };
        let problem = cauchy_core::GeneralProblem::new(cfg.grid()?, sigma, cfg.partition(), opts)
            .map_err(|source| BenchError::Stage { stage: Stage::Setup, source })?;
        let (_, svd) = problem.operator_svd().map_err(|source| BenchError::Stage { stage: Stage::Svd, source })?;
        svd.values().to_vec()
    } else {
        Vec::new()
    };
    let mut out = String::from("k,lambda_k,mu_k_analytic,s_k_numeric\n");
    for (k, m) in basis.modes().iter().enumerate() {
        let s = numeric.get(k).map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{},{}", k + 1, m.eigenvalue, mu[k], s);
    }
    write_text(dir, "svdtable.csv", &out)?;
    print!("{out}");
    Ok(())
}

fn run(cli: &Cli) -> Result<(), BenchError> {
    let cfg = config(cli)?;
    let dir = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    match cli.command {
        Command::Simulate => {
            let sim = pipeline::simulate(&cfg)?;
            let summary = pipeline::direct_summary(&cfg, &sim)?;
            write_text(&dir, "direct.json", &(serde_json::to_string_pretty(&summary)? + "\n"))?;
            let mut csv = String::from("x,u_top,flux_top\n");
            for (i, x) in summary.grid.iter().enumerate() {
                let _ = writeln!(csv, "{x},{},{}", summary.u_gamma1[i], summary.flux_gamma1[i]);
            }
            write_text(&dir, "gamma1_exact.csv", &csv)?;
            println!(
                "iterations={} residual={:e} energy={}",
                summary.iterations,
                summary.residuals.last().copied().unwrap_or(0.0),
                summary.energy
            );
        }
        Command::Cauchy | Command::Identify | Command::Pipeline => {
            let stages = if matches!(cli.command, Command::Cauchy) { Stages::Cauchy } else { Stages::Full };
            let out = pipeline::run_stages(&cfg, stages)?;
            write_run(&out.report, &out.timings, &dir, matches!(cli.command, Command::Pipeline))?;
        }
        Command::Sweep => {
            let out = pipeline::sweep(&cfg, &cfg.noise.eps)?;
            for (i, r) in out.reports.iter().enumerate() {
                let sub = dir.join(format!("eps_{i}"));
                r.write(&sub)?;
                emit_plots(r, &sub)?;
            }
            write_text(&dir, "summary.csv", &out.summary)?;
            write_text(&dir, "timings.csv", &out.timings.to_csv())?;
            print!("{}", out.summary);
        }
        Command::Svdtable => svdtable(&cfg, &dir)?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
