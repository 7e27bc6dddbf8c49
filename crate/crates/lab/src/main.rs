use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nls_core::exponents::{
    check_subcritical, parse_rational, solve_exponents, verify_exponents, RELATION_NAMES,
};
use nls_core::ground_state::shoot;
use nls_lab::config::ExperimentConfig;
use nls_lab::experiments::{self, SHOOTING_TOLERANCE};
use nls_lab::output::{write_ground_state, Manifest};

#[derive(Parser)]
#[command(name = "nls-lab", version, about = "Spectral NLS experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Io {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the ground state for the configured dimension and power.
    GroundState(Io),
    /// Solve and verify the Strichartz exponent system exactly.
    Exponents(Io),
    /// One evolution with a diagnostics probe per cutoff in `N_list`.
    Simulate(Io),
    #[command(subcommand)]
    Exp(Experiment),
}

#[derive(Subcommand)]
enum Experiment {
    /// Drift of the modified energies against the cutoff N.
    AlmostConservation(Io),
    /// Exit times of perturbed solitons against the perturbation size.
    Stability(Io),
    /// Sobolev norm trace of a defocusing run.
    Growth(Io),
    /// Scaling identities and the choice of (N, λ).
    Rescaling {
        #[command(flatten)]
        io: Io,
        /// Decay exponent from an earlier drift run.
        #[arg(long, conflicts_with = "alpha_from")]
        alpha: Option<f64>,
        /// Almost-conservation summary to read the decay exponent from.
        #[arg(long)]
        alpha_from: Option<PathBuf>,
    },
}

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

fn load(io: &Io) -> Result<ExperimentConfig> {
    Ok(ExperimentConfig::from_path(&io.config)?.with_output(&io.out))
}

fn exponents_report(config: &ExperimentConfig) -> Result<String> {
    let n = config.grid.dim() as u32;
    let p = parse_rational(&config.power_text)?;
    let report = check_subcritical(n, &p)?;
    let mut out = String::new();
    writeln!(out, "n = {n}\np = {p}\ns_c = {}", report.s_c)?;
    writeln!(out, "h1_subcritical = {}\nl2_subcritical = {}", report.h1_subcritical, report.l2_subcritical)?;
    match solve_exponents(n, &p) {
        Ok(e) => {
            writeln!(out, "beta = {}\nq0 = {}\nr0 = {}\nq1 = {}\nr1 = {}", e.beta, e.q0, e.r0, e.q1, e.r1)?;
            for (name, ok) in RELATION_NAMES.iter().zip(verify_exponents(&e)) {
                writeln!(out, "relation.{name} = {ok}")?;
            }
            writeln!(out, "range = {}", e.in_range())?;
            writeln!(out, "r1_below_power = {}", e.r1_below_power())?;
            writeln!(out, "dual_identity = {}", e.dual_identity())?;
        }
        Err(err) => writeln!(out, "error = {err}")?,
    }
    Ok(out)
}

fn write_text(dir: &Path, name: &str, manifest: &Manifest, body: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut text = String::new();
    for (k, v) in manifest.entries() {
        writeln!(text, "# {k} = {v}")?;
    }
    text.push_str(body);
    std::fs::write(dir.join(name), text)?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GroundState(io) => {
            let config = load(&io)?;
            let profile = shoot(&config.params, SHOOTING_TOLERANCE)?;
            let manifest = Manifest::for_run("ground-state", &config);
            write_ground_state(&io.out.join("ground_state.csv"), &manifest, &profile, 10)?;
            println!("Q(0) = {}  residual = {:.3e}", profile.q0(), profile.residual());
        }
        Command::Exponents(io) => {
            let config = load(&io)?;
            let body = exponents_report(&config)?;
            write_text(&io.out, "exponents.txt", &Manifest::for_run("exponents", &config), &body)?;
            print!("{body}");
        }
        Command::Simulate(io) => {
            let config = load(&io)?;
            let result = experiments::simulate(&config)?;
            experiments::write_simulation(&io.out, &config, &result)?;
            println!("mass drift {:.3e}, aborted: {:?}", result.mass_drift, result.aborted);
        }
        Command::Exp(Experiment::AlmostConservation(io)) => {
            let config = load(&io)?;
            let result = experiments::run_almost_conservation(&config)?;
            experiments::write_almost_conservation(&io.out, &config, &result)?;
            for row in &result.rows {
                println!(
                    "N = {:>6}  drift H = {:.4e}  drift L = {:.4e}  commutator = {:.4e}",
                    row.n, row.drift_hamiltonian, row.drift_lyapunov, row.max_commutator
                );
            }
            match result.primary_fit(config.params.sign()) {
                Ok(fit) => println!("slope {:.4}  r^2 {:.4}", fit.slope, fit.r_squared),
                Err(e) => println!("no fit: {e}"),
            }
        }
        Command::Exp(Experiment::Stability(io)) => {
            let config = load(&io)?;
            let result = experiments::run_stability(&config)?;
            experiments::write_stability(&io.out, &config, &result)?;
            for row in std::iter::once(&result.control).chain(&result.rows) {
                println!(
                    "sigma = {:<8} exit = {:<10} max dist = {:.3e}  max norm ratio = {:.6}",
                    row.sigma,
                    row.exit_time.map_or("none".into(), |t| t.to_string()),
                    row.max_distance,
                    row.max_norm_ratio
                );
            }
        }
        Command::Exp(Experiment::Growth(io)) => {
            let config = load(&io)?;
            let result = experiments::run_growth(&config)?;
            experiments::write_growth(&io.out, &config, &result)?;
            println!("max H^s ratio {:.6}", result.max_norm_ratio);
        }
        Command::Exp(Experiment::Rescaling { io, alpha, alpha_from }) => {
            let config = load(&io)?;
            let alpha = match (alpha, alpha_from) {
                (Some(a), _) => a,
                (None, Some(path)) => experiments::alpha_from_summary(&path)?,
                (None, None) => return Err("pass --alpha or --alpha-from".into()),
            };
            let result = experiments::run_rescaling(&config, alpha)?;
            experiments::write_rescaling(&io.out, &config, &result)?;
            println!("{}", serde_json::to_string_pretty(&result)?);
        }
    }
    Ok(())
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
