use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use roughflow::harness::{self, parse_key_values, Command, ExperimentConfig};

#[derive(Parser)]
#[command(
    name = "roughflow",
    version,
    about = "Rough flows, rough integrals and particle continuity equations"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample one fractional Brownian motion path.
    SampleFbm(Opts),
    /// Lift a driver to a geometric rough path and check Chen and symmetry.
    Lift(Opts),
    /// Rough integral of Dη(X) against X, compared with η(X_t) − η(X_0).
    Integrate(Opts),
    /// Solve the flow φ_t = x + ∫b(φ) + X_t for a particle measure.
    Flow(Opts),
    /// Itô formula residuals over grids 2^(k-4), 2^(k-2), 2^k.
    ItoCheck(Opts),
    /// Lipschitz ratios in the driver and convergence in the drift.
    Stability(Opts),
    /// Mollified discontinuous drift experiment for the continuity equation.
    Continuity(Opts),
}

/// Flags override values from `--config`.
#[derive(Args)]
struct Opts {
    /// key = value file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    hurst: Option<String>,
    #[arg(long)]
    dim: Option<String>,
    #[arg(long)]
    gamma: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    /// grid has N = 2^k intervals
    #[arg(long)]
    grid_k: Option<String>,
    #[arg(long)]
    substeps: Option<String>,
    #[arg(long)]
    particles: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    /// comma-separated, strictly decreasing
    #[arg(long)]
    eps_ladder: Option<String>,
    /// zero, constant, linear, sine or sign-cutoff
    #[arg(long)]
    drift: Option<String>,
    /// gauss-bump-1, gauss-bump-2 or gauss-bump-3
    #[arg(long)]
    eta: Option<String>,
    /// gaussian, uniform or dirac
    #[arg(long)]
    measure: Option<String>,
    /// fbm or smooth
    #[arg(long)]
    driver: Option<String>,
    /// output directory
    #[arg(long)]
    out: Option<String>,
    /// record wall-clock seconds in the report
    #[arg(long)]
    timing: bool,
}

impl Opts {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        let flags = [
            ("hurst", &self.hurst),
            ("dim", &self.dim),
            ("gamma", &self.gamma),
            ("horizon", &self.horizon),
            ("grid-k", &self.grid_k),
            ("substeps", &self.substeps),
            ("particles", &self.particles),
            ("seed", &self.seed),
            ("eps-ladder", &self.eps_ladder),
            ("drift", &self.drift),
            ("eta", &self.eta),
            ("measure", &self.measure),
            ("driver", &self.driver),
            ("out", &self.out),
        ];
        let mut out: Vec<_> = flags
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k, v)))
            .collect();
        if self.timing {
            out.push(("timing", "true".into()));
        }
        out
    }
}

fn configure(command: Command, opts: &Opts) -> roughflow::Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::defaults(command);
    if let Some(path) = &opts.config {
        let text = std::fs::read_to_string(path)?;
        let pairs = parse_key_values(&text)?;
        cfg.apply(pairs.iter().map(|(k, v)| (k.as_str(), v.as_str())))?;
    }
    let flags = opts.pairs();
    cfg.apply(flags.iter().map(|(k, v)| (*k, v.as_str())))?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = match &cli.command {
        Cmd::SampleFbm(o) => (Command::SampleFbm, o),
        Cmd::Lift(o) => (Command::Lift, o),
        Cmd::Integrate(o) => (Command::Integrate, o),
        Cmd::Flow(o) => (Command::Flow, o),
        Cmd::ItoCheck(o) => (Command::ItoCheck, o),
        Cmd::Stability(o) => (Command::Stability, o),
        Cmd::Continuity(o) => (Command::Continuity, o),
    };
    match configure(command, opts).and_then(|cfg| harness::run(&cfg)) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
