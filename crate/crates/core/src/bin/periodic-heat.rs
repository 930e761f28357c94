use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use periodic_heat::study::{self, emit_csv, solution_csv, MRule, StudyConfig};
use periodic_heat::{Error, ManufacturedProblem, Result};

#[derive(Parser)]
#[command(name = "periodic-heat", version, about = "Time-periodic 1D heat equation: solver, error bounds and convergence study")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the manufactured-solution convergence study and write CSV.
    Study {
        /// JSON config file; built-in defaults are used when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output CSV path (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        nu_list: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        beta_list: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        /// Explicit time-step counts paired with `--n-list`; implies the explicit m rule.
        #[arg(long, value_delimiter = ',')]
        m_list: Option<Vec<usize>>,
        #[arg(long)]
        quad_order: Option<usize>,
        /// Write 0 in the runtime column for reproducible output.
        #[arg(long)]
        no_runtime: bool,
    },
    /// Solve the manufactured problem once and write the coefficient table.
    Solve {
        #[arg(long)]
        nu: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        /// Number of elements.
        #[arg(long)]
        n: usize,
        /// Number of time intervals (default n^2).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 5)]
        quad_order: usize,
        /// Output CSV path; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the a priori bound constants as key=value lines.
    Bounds {
        #[arg(long)]
        nu: f64,
        #[arg(long = "T", default_value_t = 1.0)]
        period: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        m: usize,
        /// L2(0,T;L2) norm of the forcing; defaults to the manufactured forcing's.
        #[arg(long)]
        f_norm: Option<f64>,
    },
}

fn write_output(text: &str, out: Option<&PathBuf>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| Error::Io { path: path.clone(), source }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Study { config, out, nu_list, beta_list, n_list, m_list, quad_order, no_runtime } => {
            let mut cfg = match &config {
                Some(path) => StudyConfig::from_json_file(path)?,
                None => StudyConfig::default(),
            };
            if let Some(v) = nu_list {
                cfg.nu_list = v;
            }
            if let Some(v) = beta_list {
                cfg.beta_list = v;
            }
            if let Some(v) = n_list {
                cfg.n_list = v;
            }
            if let Some(v) = m_list {
                cfg.m_rule = MRule::Explicit;
                cfg.m_list = v;
            }
            if let Some(q) = quad_order {
                cfg.quad_order = q;
            }
            if no_runtime {
                cfg.record_runtime = false;
            }
            if out.is_some() {
                cfg.output = out;
            }
            let outcome = study::run_study(&cfg);
            match &cfg.output {
                Some(path) => emit_csv(&outcome.rows, path)?,
                None => print!("{}", study::csv_string(&outcome.rows)),
            }
            outcome.into_result().map(|_| ())
        }
        Command::Solve { nu, beta, n, m, quad_order, out } => {
            let problem = ManufacturedProblem::new(nu, beta)?;
            let m = m.unwrap_or(n * n);
            let (sol, _) = study::solve_manufactured(&problem, n, m, quad_order)?;
            write_output(&solution_csv(&sol), out.as_ref())
        }
        Command::Bounds { nu, period, n, m, f_norm } => {
            let f_norm = match f_norm {
                Some(v) => v,
                None => ManufacturedProblem::new(nu, 0.0)?.f_norm_analytic(),
            };
            let report = study::bounds_for(nu, period, n, m, f_norm)?;
            print!("{}", report.to_key_values());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
