//! `bigraph`: experiments for the fourth-order cubic Schrödinger equation on star graphs.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use bigraph::forcing_kernel::NegativeOrderRoute;
use bigraph::vertex_algebra::VertexType;
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Numerical(#[from] bigraph::Error),
}

impl CliError {
    fn kind(&self) -> &'static str {
        use bigraph::Error as E;
        match self {
            CliError::Config(_) => "Config",
            CliError::Io(_) => "Io",
            CliError::Numerical(e) => match e {
                E::DegenerateOrder { .. } => "DegenerateOrder",
                E::BadShape { .. } => "BadShape",
                E::SingularMatrix => "SingularMatrix",
                E::SingularClosure { .. } => "SingularClosure",
                E::SingularBlock => "SingularBlock",
                E::BadOrder(_) => "BadOrder",
                E::NoConvergence { .. } => "NoConvergence",
                E::InvalidConfig(_) => "InvalidConfig",
                E::NotReducible(_) => "NotReducible",
                E::Blowup { .. } => "Blowup",
            },
        }
    }

    pub fn exit_code(&self) -> u8 {
        use bigraph::Error as E;
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numerical(
                E::DegenerateOrder { .. } | E::BadShape { .. } | E::BadOrder(_) | E::InvalidConfig(_),
            ) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "bigraph", version, about = "Fourth-order NLS on star graphs: vertex algebra, forcing kernels, simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Vertex-coupling matrices and their determinants
    Coupling {
        #[command(subcommand)]
        cmd: CouplingCmd,
    },
    /// The oscillatory kernel B and boundary-trace checks
    Kernel {
        #[command(subcommand)]
        cmd: KernelCmd,
    },
    /// Crank–Nicolson run on a truncated star graph (TOML config or manifest.json)
    Simulate {
        config: PathBuf,
        /// Repeat with this many simultaneous dx, dt halvings
        #[arg(long, default_value_t = 0)]
        refine: usize,
        /// Run directory name under the output root (default: config file stem)
        #[arg(long)]
        name: Option<String>,
    },
    /// Linear reconstruction u_j = Σ L^λ γ + F_j (TOML config or manifest.json)
    Reconstruct {
        config: PathBuf,
        #[arg(long)]
        name: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
enum CouplingCmd {
    /// Determinant, condition estimate and invertibility of one coupling matrix
    Det {
        #[arg(long = "type")]
        vertex_type: VertexType,
        #[arg(long)]
        edges: usize,
        #[arg(long, default_value_t = -0.5, allow_negative_numbers = true)]
        lambda1: f64,
        #[arg(long, default_value_t = 0.25, allow_negative_numbers = true)]
        lambda2: f64,
    },
    /// Determinant over a uniform (λ₁, λ₂) grid, as CSV
    Scan {
        #[arg(long = "type")]
        vertex_type: VertexType,
        #[arg(long)]
        edges: usize,
        #[arg(long, default_value_t = -0.95, allow_negative_numbers = true)]
        l1_min: f64,
        #[arg(long, default_value_t = 0.45, allow_negative_numbers = true)]
        l1_max: f64,
        #[arg(long, default_value_t = -0.95, allow_negative_numbers = true)]
        l2_min: f64,
        #[arg(long, default_value_t = 0.45, allow_negative_numbers = true)]
        l2_max: f64,
        #[arg(long, default_value_t = 29)]
        points: usize,
        /// Write the CSV here instead of stdout
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Route {
    MinimalDerivative,
    FourthDerivative,
}

impl From<Route> for NegativeOrderRoute {
    fn from(r: Route) -> Self {
        match r {
            Route::MinimalDerivative => NegativeOrderRoute::MinimalDerivative,
            Route::FourthDerivative => NegativeOrderRoute::FourthDerivative,
        }
    }
}

#[derive(Debug, Subcommand)]
enum KernelCmd {
    /// Tabulate B on a uniform grid: x, re, im, err_est
    #[command(name = "B", alias = "b")]
    B {
        #[arg(long, allow_negative_numbers = true)]
        xmin: f64,
        #[arg(long, allow_negative_numbers = true)]
        xmax: f64,
        #[arg(long)]
        points: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
    },
    /// Measured L^λ g(t,0)/g(t) against the closed-form trace coefficient
    TraceCheck {
        #[arg(long, allow_negative_numbers = true)]
        lambda: f64,
        #[arg(long, value_enum, default_value = "minimal-derivative")]
        route: Route,
        #[arg(long, default_value_t = 0.005)]
        dt: f64,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 0.02)]
        dy: f64,
        #[arg(long, default_value_t = 20.0)]
        y_max: f64,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Coupling { cmd } => match cmd {
            CouplingCmd::Det {
                vertex_type,
                edges,
                lambda1,
                lambda2,
            } => commands::coupling_det(vertex_type, edges, lambda1, lambda2),
            CouplingCmd::Scan {
                vertex_type,
                edges,
                l1_min,
                l1_max,
                l2_min,
                l2_max,
                points,
                output,
            } => commands::coupling_scan(
                vertex_type,
                edges,
                [l1_min, l1_max],
                [l2_min, l2_max],
                points,
                output.as_deref(),
            ),
        },
        Command::Kernel { cmd } => match cmd {
            KernelCmd::B {
                xmin,
                xmax,
                points,
                tol,
            } => commands::kernel_table(xmin, xmax, points, tol),
            KernelCmd::TraceCheck {
                lambda,
                route,
                dt,
                steps,
                dy,
                y_max,
            } => commands::kernel_trace_check(
                lambda,
                route.into(),
                bigraph::forcing_kernel::ForcingGrid { dt, steps, dy, y_max },
            ),
        },
        Command::Simulate { config, refine, name } => commands::simulate(&config, refine, name.as_deref()),
        Command::Reconstruct { config, name } => commands::reconstruct(&config, name.as_deref()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let line = serde_json::json!({
                "error": e.kind(),
                "exit_code": e.exit_code(),
                "message": e.to_string(),
            });
            eprintln!("{line}");
            ExitCode::from(e.exit_code())
        }
    }
}
