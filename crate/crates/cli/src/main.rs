use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};

use hw_tomo::optics::Layout;
use hw_tomo::wire::{from_json, CoefficientFile, StateFile};
use hw_tomo_cli::{execute, read_text, replay, write_atomic, Failure, Outcome, RunConfig};

/// Qudit tomography from ancilla statistics, and OAM optics compilation.
#[derive(Parser, Debug)]
#[command(name = "hw-tomo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Dump one or all Heisenberg-Weyl observables.
    Observables {
        #[arg(long)]
        d: usize,
        #[command(flatten)]
        setting: OptionalSetting,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate ancilla measurements on a state and reconstruct it.
    Simulate {
        /// State file, or `preset:<name>` with `--d`.
        #[arg(long)]
        state: String,
        #[arg(long)]
        d: Option<usize>,
        /// Shots per setting; 0 uses exact expectation values.
        #[arg(long, default_value_t = 0)]
        shots: u64,
        /// Master seed; generated and logged when omitted.
        #[arg(long)]
        seed: Option<u64>,
        /// Measure the (0, 0) setting instead of fixing it to 1.
        #[arg(long)]
        no_pin_trace: bool,
        /// Fail on a non-physical estimate instead of projecting it.
        #[arg(long)]
        no_project: bool,
        #[arg(long)]
        out: PathBuf,
        /// Also write the coefficient table as JSON.
        #[arg(long)]
        coeffs_out: Option<PathBuf>,
        /// Also write the coefficient table as CSV.
        #[arg(long)]
        csv_out: Option<PathBuf>,
    },
    /// Reconstruct a state from a coefficient table.
    Reconstruct {
        #[arg(long)]
        coeffs: PathBuf,
        /// Known state to score the reconstruction against.
        #[arg(long)]
        truth: Option<String>,
        #[arg(long)]
        no_project: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compile Z^l X^m into optical elements.
    Compile {
        #[arg(long)]
        d: usize,
        #[arg(long)]
        l: usize,
        #[arg(long)]
        m: usize,
        #[arg(long, default_value_t = Layout::Parallel)]
        layout: Layout,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check compiled optics against the abstract gates.
    VerifyOptics {
        #[arg(long)]
        d: usize,
        #[arg(long, conflicts_with_all = ["l", "m"])]
        all: bool,
        #[command(flatten)]
        setting: OptionalSetting,
        #[arg(long, default_value_t = Layout::Parallel)]
        layout: Layout,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run the config embedded in a report and confirm identical output.
    Replay {
        #[arg(long)]
        report: PathBuf,
        /// Where to write the regenerated report.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args, Debug)]
struct OptionalSetting {
    #[arg(long, requires = "m")]
    l: Option<usize>,
    #[arg(long, requires = "l")]
    m: Option<usize>,
}

impl OptionalSetting {
    fn pair(&self) -> Option<[usize; 2]> {
        Some([self.l?, self.m?])
    }
}

fn load_state(source: &str, d: Option<usize>) -> Outcome<StateFile> {
    if let Some(name) = source.strip_prefix("preset:") {
        let d = d.ok_or_else(|| Failure::Validation("a preset state needs --d".into()))?;
        return Ok(StateFile::preset(d, name));
    }
    let file: StateFile = from_json(&read_text(Path::new(source))?)
        .map_err(|e| Failure::Validation(format!("{source}: {e}")))?;
    if let Some(d) = d {
        if d != file.d {
            return Err(Failure::Validation(format!(
                "--d {d} but {source} declares d = {}",
                file.d
            )));
        }
    }
    Ok(file)
}

fn configure_threads() -> Outcome<()> {
    let Ok(raw) = std::env::var("HW_TOMO_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Failure::Validation(format!("HW_TOMO_THREADS={raw:?} is not a positive integer"))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Internal(e.to_string()))
}

fn run(cli: Cli) -> Outcome<()> {
    configure_threads()?;
    let (config, out, coeffs_out, csv_out) = match cli.command {
        Command::Observables { d, setting, out } => (
            RunConfig::Observables {
                d,
                setting: setting.pair(),
            },
            out,
            None,
            None,
        ),
        Command::Simulate {
            state,
            d,
            shots,
            seed,
            no_pin_trace,
            no_project,
            out,
            coeffs_out,
            csv_out,
        } => {
            let state = load_state(&state, d)?;
            let seed = match (shots, seed) {
                (0, _) => None,
                (_, Some(s)) => Some(s),
                (_, None) => {
                    let s = rand::random::<u64>();
                    warn!("no --seed given; using generated seed {s}");
                    Some(s)
                }
            };
            let config = RunConfig::Simulate {
                state,
                shots,
                seed,
                pin_trace: !no_pin_trace,
                project: !no_project,
            };
            (config, out, coeffs_out, csv_out)
        }
        Command::Reconstruct {
            coeffs,
            truth,
            no_project,
            out,
        } => {
            let text = read_text(&coeffs)?;
            let coefficients: CoefficientFile = from_json(&text)
                .map_err(|e| Failure::Validation(format!("{}: {e}", coeffs.display())))?;
            let truth = truth
                .map(|t| load_state(&t, Some(coefficients.d)))
                .transpose()?;
            let config = RunConfig::Reconstruct {
                coefficients,
                truth,
                project: !no_project,
            };
            (config, out, None, None)
        }
        Command::Compile {
            d,
            l,
            m,
            layout,
            out,
        } => (RunConfig::Compile { d, l, m, layout }, out, None, None),
        Command::VerifyOptics {
            d,
            all,
            setting,
            layout,
            out,
        } => {
            let setting = setting.pair();
            if !all && setting.is_none() {
                return Err(Failure::Validation(
                    "verify-optics needs --all or --l and --m".into(),
                ));
            }
            (
                RunConfig::VerifyOptics { d, setting, layout },
                out,
                None,
                None,
            )
        }
        Command::Replay { report, out } => {
            let output = replay(&read_text(&report)?)?;
            info!("{} replayed byte-identically", report.display());
            if let Some(out) = out {
                write_atomic(&out, &output.report)?;
            }
            return Ok(());
        }
    };

    let output = execute(&config)?;
    write_atomic(&out, &output.report)?;
    info!("wrote {}", out.display());
    if let Some((json, csv)) = &output.coefficients {
        if let Some(path) = &coeffs_out {
            write_atomic(path, json)?;
        }
        if let Some(path) = &csv_out {
            write_atomic(path, csv)?;
        }
    }
    if !output.passed {
        return Err(Failure::Validation(format!(
            "optical verification failed; see {}",
            out.display()
        )));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            error!("{failure}");
            ExitCode::from(failure.exit_code() as u8)
        }
    }
}
