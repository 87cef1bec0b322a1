use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use flat5::cli::{self, AnalysisOptions, GridOptions, Outcome};
use flat5::distributions::SamplePlan;

#[derive(Parser)]
#[command(name = "flat5", version, about = "Flatness analysis and trajectory planning for two-input systems on R^5")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Sampling {
    /// Sample points per rank test
    #[arg(long, default_value_t = 25)]
    samples: usize,
    /// Relative singular-value threshold
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Half-width of the sampling box around the base point
    #[arg(long = "box", default_value_t = 0.1)]
    radius: f64,
    /// Largest prolongation order tried
    #[arg(long, default_value_t = 3)]
    max_p: usize,
}

impl Sampling {
    fn options(&self) -> AnalysisOptions {
        AnalysisOptions {
            plan: SamplePlan {
                radius: self.radius,
                count: self.samples,
                seed: self.seed,
                tol: self.tol,
            },
            max_p: self.max_p,
        }
    }
}

#[derive(Args)]
struct Grid {
    #[arg(long, default_value_t = 0.0)]
    t0: f64,
    #[arg(long, default_value_t = 1.0)]
    t1: f64,
    #[arg(long, default_value_t = 1e-4)]
    dt: f64,
}

impl Grid {
    fn options(&self) -> GridOptions {
        GridOptions {
            t0: self.t0,
            t1: self.t1,
            dt: self.dt,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Distribution filtration, linearizability and ddiff of a system or normal form
    Analyze {
        input: PathBuf,
        /// Feedback document applied before prolongation
        #[arg(long)]
        feedback: Option<PathBuf>,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Recover states and inputs of a normal form along a flat-output curve
    Parametrize {
        form: PathBuf,
        curve: PathBuf,
        #[command(flatten)]
        grid: Grid,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Round-trip, regularity and ddiff checks for a normal form and curve
    Verify {
        form: PathBuf,
        curve: PathBuf,
        #[command(flatten)]
        grid: Grid,
        #[command(flatten)]
        sampling: Sampling,
    },
    /// Worked reductions: motor or car
    Demo {
        name: String,
        #[command(flatten)]
        sampling: Sampling,
    },
}

fn main() -> ExitCode {
    let out: Outcome = match Cli::parse().command {
        Command::Analyze { input, feedback, sampling } => {
            cli::run_analyze(&input, feedback.as_deref(), &sampling.options())
        }
        Command::Parametrize { form, curve, grid, output } => {
            cli::run_parametrize(&form, &curve, &grid.options(), output.as_ref())
        }
        Command::Verify { form, curve, grid, sampling } => {
            cli::run_verify(&form, &curve, &grid.options(), &sampling.options())
        }
        Command::Demo { name, sampling } => cli::run_demo(&name, &sampling.options()),
    };
    print!("{}", out.stdout);
    eprint!("{}", out.stderr);
    ExitCode::from(out.code as u8)
}
