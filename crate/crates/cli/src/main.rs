use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use gdm_cli::{configure_threads, parse_scenario, run, selftest, CliError, Command, Invocation};

#[derive(Parser)]
#[command(name = "gdm", version, about = "Checks γ-divergence identities and inequalities on scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Equilibrium Hessian identity on a seeded test potential.
    Yano(Common),
    /// Curvature constant and Poincaré bound of μ.
    Kappa(Common),
    /// Optimal Poincaré constant against the curvature bound.
    Poincare(Common),
    /// Gradient flow from ρ₀ with the exponential decay envelope.
    Flow(Common),
    /// Log-Sobolev inequality at ρ₀.
    Lsi(Common),
    /// Transport inequality at ρ₀ (runs the shooting solver).
    Talagrand(Common),
    /// Pearson–H⁻¹–Fisher inequality at ρ₀.
    Ph1i(Common),
    /// Geodesic distance from ρ₀ to μ by shooting.
    Geodesic(Common),
    /// Γ₂ energy against the Hessian form.
    Gamma2(Common),
    /// Built-in battery of exact identities.
    Selftest {
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Replaces the node count on every axis.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
}

fn execute(command: Command, args: &Common) -> Result<(PathBuf, u8, String), CliError> {
    let source = std::fs::read(&args.scenario)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.scenario.display())))?;
    let text = String::from_utf8(source.clone())
        .map_err(|_| CliError::Input(format!("{} is not UTF-8", args.scenario.display())))?;
    let scenario = parse_scenario(&text)?.with_overrides(args.n, args.gamma)?;
    let out = run(&Invocation {
        command,
        scenario: &scenario,
        source: &source,
        overrides: (args.n, args.gamma),
        out: &args.out,
    })?;
    Ok((out.report, out.exit_code, out.summary))
}

fn dispatch(sub: &Sub) -> Result<(PathBuf, u8, String), CliError> {
    let (command, args) = match sub {
        Sub::Selftest { out } => return selftest::run(out),
        Sub::Yano(a) => (Command::Yano, a),
        Sub::Kappa(a) => (Command::Kappa, a),
        Sub::Poincare(a) => (Command::Poincare, a),
        Sub::Flow(a) => (Command::Flow, a),
        Sub::Lsi(a) => (Command::Lsi, a),
        Sub::Talagrand(a) => (Command::Talagrand, a),
        Sub::Ph1i(a) => (Command::Ph1i, a),
        Sub::Geodesic(a) => (Command::Geodesic, a),
        Sub::Gamma2(a) => (Command::Gamma2, a),
    };
    execute(command, args)
}

fn report_line(path: &Path, summary: &str) -> String {
    format!("{summary} ({})", path.display())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| dispatch(&cli.command));
    match result {
        Ok((path, code, summary)) => {
            println!("{}", report_line(&path, &summary));
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
