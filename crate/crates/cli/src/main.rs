use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hamot_cli::config::Config;
use hamot_cli::report;
use hamot_cli::runner::{run_scenario, ScenarioOutcome};
use hamot_cli::scenario::{find_preset, from_config, presets, Overrides};

/// Checks convexity and concavity inequalities for entropy functionals
/// transported along Hamiltonian flows on model geometries.
#[derive(Parser)]
#[command(name = "hamot", version, disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a config file, or a built-in preset by name
    Run {
        /// Path to a key-value config file, or a preset name
        target: String,
        /// Output directory for CSV reports (default: $HAMOT_OUT or ./hamot-out)
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write gnuplot-ready .dat files per inequality track
        #[arg(long)]
        plot_data: bool,
        /// Override time steps for transport and scaling scenarios
        #[arg(long)]
        steps: Option<usize>,
        /// Override particles per axis for transport scenarios
        #[arg(long)]
        particles: Option<usize>,
        /// Override the pass/fail tolerance
        #[arg(long)]
        tol: Option<f64>,
        /// Override the RNG seed for oracle sweeps
        #[arg(long)]
        seed: Option<u64>,
    },
    /// List built-in presets with one-line descriptions
    Presets,
    /// Print the full config text of one preset
    Describe { name: String },
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("HAMOT_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("hamot-out"))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Presets => {
            for p in presets() {
                println!("{:<24} {}", p.name, p.summary);
            }
            ExitCode::SUCCESS
        }
        Cmd::Describe { name } => match find_preset(&name) {
            Some(p) => {
                for (member, text) in &p.members {
                    println!("# scenario: {member}");
                    println!("{}", text.trim());
                    println!();
                }
                ExitCode::SUCCESS
            }
            None => {
                eprintln!("unknown preset '{name}'; see `hamot presets`");
                ExitCode::from(2)
            }
        },
        Cmd::Run {
            target,
            out,
            plot_data,
            steps,
            particles,
            tol,
            seed,
        } => {
            let over = Overrides {
                steps,
                particles,
                tol,
                seed,
            };
            run_command(&target, &out_dir(out), plot_data, &over)
        }
    }
}

/// A target is a config file when it exists on disk, else a preset name.
fn resolve(target: &str) -> Result<Vec<(String, String)>, String> {
    let path = Path::new(target);
    if path.is_file() {
        let text = fs::read_to_string(path)
            .map_err(|e| format!("cannot read config '{target}': {e}"))?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "scenario".to_string());
        return Ok(vec![(name, text)]);
    }
    match find_preset(target) {
        Some(p) => Ok(p
            .members
            .iter()
            .map(|(n, t)| (n.clone(), t.to_string()))
            .collect()),
        None => Err(format!(
            "'{target}' is neither a config file nor a preset; see `hamot presets`"
        )),
    }
}

fn run_command(target: &str, dir: &Path, plot_data: bool, over: &Overrides) -> ExitCode {
    let members = match resolve(target) {
        Ok(m) => m,
        Err(msg) => {
            eprintln!("{msg}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = fs::create_dir_all(dir) {
        eprintln!("cannot create output directory {}: {e}", dir.display());
        return ExitCode::from(2);
    }

    let mut outcomes: Vec<ScenarioOutcome> = Vec::new();
    let stdout = std::io::stdout();
    for (name, text) in &members {
        let cfg = match Config::parse(text) {
            Ok(c) => c,
            Err(e) => {
                eprintln!("{name}: {e}");
                return ExitCode::from(2);
            }
        };
        let scenario = match from_config(name, &cfg, over) {
            Ok(s) => s,
            Err(e) => {
                eprintln!("{name}: {e}");
                return ExitCode::from(2);
            }
        };
        let outcome = match run_scenario(&scenario) {
            Ok(o) => o,
            Err(e) => {
                eprintln!("{name}: aborted: {e}");
                return ExitCode::from(3);
            }
        };
        if let Err(e) = report::write_scenario_csv(dir, &outcome) {
            eprintln!("{name}: cannot write report: {e}");
            return ExitCode::from(2);
        }
        if plot_data {
            if let Err(e) = report::write_plot_data(dir, &outcome) {
                eprintln!("{name}: cannot write plot data: {e}");
                return ExitCode::from(2);
            }
        }
        let _ = report::print_outcome(stdout.lock(), &outcome);
        outcomes.push(outcome);
    }

    if let Err(e) = report::write_summary(dir, &outcomes) {
        eprintln!("cannot write summary: {e}");
        return ExitCode::from(2);
    }
    let all_pass = outcomes.iter().all(|o| o.pass);
    let _ = writeln!(
        stdout.lock(),
        "{} scenario(s), reports in {}",
        outcomes.len(),
        dir.display()
    );
    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(2)
    }
}
