use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fbvp_cli::commands::{self, Outcome, SolveOptions};
use fbvp_cli::{CliError, Config, Overrides};

#[derive(Debug, Parser)]
#[command(name = "fbvp", version, about = "Certify and solve nonlocal functional boundary value problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print cone and growth constants with the hypothesis checks.
    Constants(Common),
    /// Search for an index ladder and write the certificate.
    Certify(Common),
    /// Solve the discretized equation from the certified seeds.
    Solve(SolveArgs),
    /// Check the hypotheses only.
    Validate(Common),
    /// Compare the built-in reference constants with computed values.
    Reproduce(ReproduceArgs),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long = "rho-max")]
    rho_max: Option<f64>,
    /// Replace the adaptive quadrature by this many fixed panels.
    #[arg(long = "debug-quadrature-panels")]
    debug_quadrature_panels: Option<usize>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    /// Solution CSV path; defaults to the report path with a `.csv` extension.
    #[arg(long)]
    csv: Option<PathBuf>,
    /// Seed for the random cone starts.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solve even if hypotheses fail.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct ReproduceArgs {
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long = "debug-quadrature-panels")]
    debug_quadrature_panels: Option<usize>,
}

impl Common {
    fn overrides(&self) -> Overrides {
        Overrides {
            grid: self.grid,
            tol: self.tol,
            rho_max: self.rho_max,
            quadrature_panels: self.debug_quadrature_panels,
        }
    }

    fn load(&self) -> Result<(Config, Overrides), CliError> {
        let o = self.overrides();
        let mut cfg = Config::load(&self.config)?;
        cfg.apply(&o);
        Ok((cfg, o))
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn run(cli: Cli) -> Result<Outcome, CliError> {
    let (outcome, out, csv_path) = match cli.command {
        Command::Constants(c) => {
            let (cfg, o) = c.load()?;
            (commands::constants(&cfg, &o)?, c.out, None)
        }
        Command::Certify(c) => {
            let (cfg, o) = c.load()?;
            (commands::certify(&cfg, &o)?, c.out, None)
        }
        Command::Validate(c) => {
            let (cfg, o) = c.load()?;
            (commands::validate(&cfg, &o)?, c.out, None)
        }
        Command::Solve(s) => {
            let (cfg, o) = s.common.load()?;
            let opts = SolveOptions {
                seed: s.seed,
                force: s.force,
            };
            let csv = s.csv.or_else(|| s.common.out.as_ref().map(|p| p.with_extension("csv")));
            (commands::solve(&cfg, &o, opts)?, s.common.out, csv)
        }
        Command::Reproduce(r) => {
            let o = Overrides {
                quadrature_panels: r.debug_quadrature_panels,
                ..Overrides::default()
            };
            (commands::reproduce(&o)?, r.out, None)
        }
    };
    match &out {
        Some(path) => write(path, &outcome.report)?,
        None => print!("{}", outcome.report),
    }
    if let (Some(path), Some(csv)) = (&csv_path, &outcome.csv) {
        write(path, csv)?;
    }
    Ok(outcome)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(outcome) => {
            eprintln!("{}", outcome.message);
            ExitCode::from(outcome.code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            if let CliError::Hypotheses { detail, .. } = &e {
                eprintln!("{detail}");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
