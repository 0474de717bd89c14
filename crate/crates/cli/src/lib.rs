//! Library side of the `hw-tomo` binary: resolved run configurations and the
//! code that turns one into report files.
//!
//! A [`RunConfig`] holds everything that determines a run's numbers (state,
//! shots, seed, flags) and nothing about where files go, so the copy
//! embedded in a report can be executed again to reproduce it.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use hw_tomo::hw_basis::{hw_observable, observables};
use hw_tomo::optics::{compile_zlxm_with_layout, verify_gate_equivalence, Layout, GATE_TOL};
use hw_tomo::qmath::{ComplexMatrix, DensityMatrix, Metrics};
use hw_tomo::tomography::{
    build_plan, estimate_coefficients, reconstruct_report, EstimationMode, EstimationOptions,
    ReconstructionReport,
};
use hw_tomo::wire::{
    from_json, to_json, CoefficientFile, ObservablesFile, PlanFile, StateFile, VerdictFile,
    FORMAT_VERSION,
};

/// A failed run, split by exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum Failure {
    /// Bad input or a failed check: exit code 1.
    Validation(String),
    /// A broken internal invariant: exit code 2.
    Internal(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Internal(_) => 2,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Validation(msg) => write!(f, "validation failed: {msg}"),
            Failure::Internal(msg) => write!(f, "internal error: {msg}"),
        }
    }
}

impl std::error::Error for Failure {}

impl From<hw_tomo::Error> for Failure {
    fn from(e: hw_tomo::Error) -> Self {
        if e.is_internal() {
            Failure::Internal(e.to_string())
        } else {
            Failure::Validation(e.to_string())
        }
    }
}

pub type Outcome<T> = std::result::Result<T, Failure>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum RunConfig {
    Observables {
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        setting: Option<[usize; 2]>,
    },
    Simulate {
        state: StateFile,
        shots: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
        pin_trace: bool,
        project: bool,
    },
    Reconstruct {
        coefficients: CoefficientFile,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        truth: Option<StateFile>,
        project: bool,
    },
    Compile {
        d: usize,
        l: usize,
        m: usize,
        layout: Layout,
    },
    VerifyOptics {
        d: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        setting: Option<[usize; 2]>,
        layout: Layout,
    },
}

/// Every file a run produces.
#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    /// The main document, with the config embedded.
    pub report: String,
    /// Coefficient table JSON and CSV, for `simulate`.
    pub coefficients: Option<(String, String)>,
    /// False when a verification found a failing setting.
    pub passed: bool,
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    #[serde(flatten)]
    body: T,
    config: &'a RunConfig,
}

fn render<T: Serialize>(body: T, config: &RunConfig) -> Outcome<String> {
    Ok(to_json(&Envelope { body, config })?)
}

#[derive(Serialize)]
struct TomographyReport<'a> {
    version: u32,
    d: usize,
    rho_raw: &'a ComplexMatrix,
    rho_physical: &'a DensityMatrix,
    #[serde(skip_serializing_if = "Option::is_none")]
    metrics: Option<Metrics>,
    shots_per_setting: u64,
    total_shots: u64,
    coefficients: &'a CoefficientFile,
}

fn tomography_report(
    report: &ReconstructionReport,
    config: &RunConfig,
) -> Outcome<(String, CoefficientFile)> {
    let coefficients = CoefficientFile::from_table(&report.coefficients);
    let text = render(
        TomographyReport {
            version: FORMAT_VERSION,
            d: report.coefficients.d(),
            rho_raw: &report.rho_raw,
            rho_physical: &report.rho_physical,
            metrics: report.metrics,
            shots_per_setting: report.shots_per_setting,
            total_shots: report.total_shots,
            coefficients: &coefficients,
        },
        config,
    )?;
    Ok((text, coefficients))
}

/// Executes a fully resolved config. Pure: the same config gives the same
/// bytes.
pub fn execute(config: &RunConfig) -> Outcome<RunOutput> {
    match config {
        RunConfig::Observables { d, setting } => {
            let table = observables(*d)?;
            let selected = match setting {
                Some([l, m]) => {
                    hw_observable(*d, *l, *m)?;
                    vec![&table[l * d + m]]
                }
                None => table.iter().collect(),
            };
            let report = render(
                ObservablesFile {
                    version: FORMAT_VERSION,
                    d: *d,
                    observables: selected,
                },
                config,
            )?;
            Ok(RunOutput {
                report,
                coefficients: None,
                passed: true,
            })
        }
        RunConfig::Simulate {
            state,
            shots,
            seed,
            pin_trace,
            project,
        } => {
            let rho = state.to_density()?;
            let mode = match (shots, seed) {
                (0, _) => EstimationMode::Exact,
                (_, Some(s)) => EstimationMode::from_shots(*shots, *s),
                (_, None) => return Err(Failure::Validation("sampled run without a seed".into())),
            };
            let plan = build_plan(rho.dim())?;
            let options = EstimationOptions {
                pin_trace: *pin_trace,
            };
            let table = estimate_coefficients(&rho, &plan, mode, options)?;
            let report = reconstruct_report(table, Some(&rho), *project)?;
            let (text, coefficients) = tomography_report(&report, config)?;
            Ok(RunOutput {
                report: text,
                coefficients: Some((to_json(&coefficients)?, coefficients.to_csv()?)),
                passed: true,
            })
        }
        RunConfig::Reconstruct {
            coefficients,
            truth,
            project,
        } => {
            let table = coefficients.to_table()?;
            let truth = truth.as_ref().map(StateFile::to_density).transpose()?;
            if let Some(t) = &truth {
                if t.dim() != table.d() {
                    return Err(Failure::Validation(format!(
                        "truth state has dimension {}, coefficients {}",
                        t.dim(),
                        table.d()
                    )));
                }
            }
            let report = reconstruct_report(table, truth.as_ref(), *project)?;
            let (text, _) = tomography_report(&report, config)?;
            Ok(RunOutput {
                report: text,
                coefficients: None,
                passed: true,
            })
        }
        RunConfig::Compile { d, l, m, layout } => {
            let plan = compile_zlxm_with_layout(*d, *l, *m, *layout)?;
            Ok(RunOutput {
                report: render(PlanFile::from_plan(&plan), config)?,
                coefficients: None,
                passed: true,
            })
        }
        RunConfig::VerifyOptics { d, setting, layout } => {
            let settings: Vec<(usize, usize)> = match setting {
                Some([l, m]) => vec![(*l, *m)],
                None => (0..*d).flat_map(|l| (0..*d).map(move |m| (l, m))).collect(),
            };
            let verdicts = settings
                .into_iter()
                .map(|(l, m)| verify_gate_equivalence(*d, l, m, *layout))
                .collect::<hw_tomo::Result<Vec<_>>>()?;
            let all_pass = verdicts.iter().all(|v| v.pass);
            let report = render(
                VerdictFile {
                    version: FORMAT_VERSION,
                    d: *d,
                    layout: *layout,
                    tolerance: GATE_TOL,
                    all_pass,
                    verdicts,
                },
                config,
            )?;
            Ok(RunOutput {
                report,
                coefficients: None,
                passed: all_pass,
            })
        }
    }
}

/// Pulls the embedded config out of any report this crate wrote.
pub fn config_from_report(text: &str) -> Outcome<RunConfig> {
    #[derive(Deserialize)]
    struct Embedded {
        config: RunConfig,
    }
    let embedded: Embedded = from_json(text)?;
    Ok(embedded.config)
}

/// Re-executes a report's config and checks the result is byte-identical.
pub fn replay(text: &str) -> Outcome<RunOutput> {
    let config = config_from_report(text)?;
    let output = execute(&config)?;
    if output.report != text {
        return Err(Failure::Internal(
            "replayed report differs from the original".into(),
        ));
    }
    Ok(output)
}

pub fn read_text(path: &Path) -> Outcome<String> {
    fs::read_to_string(path)
        .map_err(|e| Failure::Validation(format!("cannot read {}: {e}", path.display())))
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, contents: &str) -> Outcome<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let fail =
        |e: &dyn fmt::Display| Failure::Validation(format!("cannot write {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| fail(&e))?;
    tmp.write_all(contents.as_bytes()).map_err(|e| fail(&e))?;
    tmp.as_file().sync_all().map_err(|e| fail(&e))?;
    tmp.persist(path).map_err(|e| fail(&e.error))?;
    Ok(())
}
