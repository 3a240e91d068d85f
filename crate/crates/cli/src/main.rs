use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod report;

/// Numerical laboratory for the gv* functional on 3D almost contact metric
/// charts.
///
/// Scenario arguments are `.scn` files or names of bundled scenarios.
/// Exit codes: 0 all verdicts pass, 1 a verdict failed, 2 bad input,
/// 3 numerical or I/O failure. `GVSTAR_THREADS` caps worker threads.
#[derive(Debug, Parser)]
#[command(name = "gvstar", version, about)]
#[command(args_conflicts_with_subcommands = true)]
pub struct Cli {
    /// Run every bundled scenario against its expected verdicts.
    #[arg(long)]
    regress: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file or bundled scenario name.
    pub scenario: String,
    /// Grid nodes per axis minus one (defaults to the scenario's, else 48).
    #[arg(long)]
    pub grid: Option<usize>,
    /// Override the command's main tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Normalize T with the metric instead of rejecting a non-unit field.
    #[arg(long)]
    pub normalize_t: bool,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args, Default)]
pub struct Output {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Write the command's table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frenet data at every grid node.
    Frenet(Common),
    /// gv* by differential forms and by the Reinhart-Wood integrand.
    Functional(Common),
    /// Euler-Lagrange residual norms.
    ElCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["full", "gtop", "gpitchfork", "umbilic"], default_value = "full")]
        suite: String,
    },
    /// Finite-difference first variations against the analytic integrands.
    Vary {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = ["gtop", "gpitchfork"])]
        kind: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 10)]
        count: usize,
        /// Gauss-Legendre points per axis on the bump box.
        #[arg(long, default_value_t = 48)]
        fd_points: usize,
    },
    /// Integrate the critical (k, H) system from s = 0 in both directions.
    Ode {
        #[arg(long, allow_hyphen_values = true)]
        k0: f64,
        #[arg(long, allow_hyphen_values = true)]
        h0: f64,
        #[arg(long)]
        smax: f64,
        #[arg(long, default_value_t = 1e-4)]
        step: f64,
        /// Allowed relative drift of the first integral.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[command(flatten)]
        out: Output,
    },
    /// Build or recover a double-twisted product and check criticality.
    Twisted(TwistedArgs),
    /// Chinea-Gonzalez class of the almost contact metric structure.
    Classify(Common),
    /// Run scenarios against their expected verdicts.
    Regress(RegressArgs),
}

#[derive(Debug, Args)]
pub struct TwistedArgs {
    /// Use explicit profiles u(s) and v(x, y).
    #[arg(long, conflicts_with = "recover", requires_all = ["u", "v"])]
    pub build: bool,
    /// Recover profiles from k0 on the leaf s = 0 and a constant H0.
    #[arg(long)]
    pub recover: bool,
    #[arg(long)]
    pub u: Option<String>,
    #[arg(long)]
    pub v: Option<String>,
    /// Curvature on the reference line x = y = 0; a number c selects the
    /// critical field c/(1 - c*x).
    #[arg(long, allow_hyphen_values = true, conflicts_with = "k0_field")]
    pub k0: Option<String>,
    /// Arbitrary k0(x, y) expression.
    #[arg(long)]
    pub k0_field: Option<String>,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    pub h0: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub step: f64,
    /// Base metric entries gxx, gxy, gyy.
    #[arg(long, num_args = 3, value_delimiter = ',', default_values = ["1", "0", "1"])]
    pub base: Vec<String>,
    /// Half-width of the x and y range.
    #[arg(long, default_value_t = 0.25)]
    pub x_half: f64,
    /// Half-length of the s range.
    #[arg(long, default_value_t = 0.8)]
    pub s_half: f64,
    #[arg(long, default_value_t = 48)]
    pub grid: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub tol: f64,
    /// Also write the spec as a scenario file.
    #[arg(long)]
    pub emit: Option<PathBuf>,
    #[command(flatten)]
    pub out: Output,
}

#[derive(Debug, Args, Default)]
pub struct RegressArgs {
    /// Scenario files or names; all bundled scenarios if empty.
    pub scenarios: Vec<String>,
    #[arg(long)]
    pub grid: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10)]
    pub count: usize,
    #[arg(long, default_value_t = 48)]
    pub fd_points: usize,
    #[command(flatten)]
    pub out: Output,
}

fn init_threads() {
    if let Some(n) = std::env::var("GVSTAR_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    let command = match (cli.command, cli.regress) {
        (Some(c), _) => c,
        (None, true) => Command::Regress(RegressArgs::default_values()),
        (None, false) => {
            eprintln!("gvstar: no command given; see --help");
            return ExitCode::from(2);
        }
    };
    match commands::run(command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("gvstar: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

impl RegressArgs {
    fn default_values() -> Self {
        RegressArgs {
            count: 10,
            fd_points: 48,
            ..RegressArgs::default()
        }
    }
}
