//! JSON and CSV file formats.
//!
//! Every emitted document carries `"version"`. Floats are written with 17
//! significant digits so that a value read back is bit-identical.

use std::f64::consts::PI;
use std::io;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::hw_basis::{check_dim, HwObservable};
use crate::optics::{GateVerdict, Layout, OpticalElement, OpticalPlan, ResourceTally};
use crate::qmath::{ComplexMatrix, DensityMatrix, PureState, C64};
use crate::tomography::{CoefficientTable, EstimationMode, MeasurementRecord};

pub const FORMAT_VERSION: u32 = 1;

fn current_version() -> u32 {
    FORMAT_VERSION
}

fn check_version(version: u32) -> Result<()> {
    if version != FORMAT_VERSION {
        return Err(Error::Malformed(format!(
            "unsupported format version {version}, expected {FORMAT_VERSION}"
        )));
    }
    Ok(())
}

/// Pretty JSON whose floats use `{:.16e}`.
struct ExactFloats<'a>(PrettyFormatter<'a>);

impl Formatter for ExactFloats<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(
        &mut self,
        w: &mut W,
        first: bool,
    ) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes with exact floats and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut buf, ExactFloats(PrettyFormatter::new()));
    value
        .serialize(&mut ser)
        .map_err(|e| Error::Internal(format!("serialization failed: {e}")))?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(|e| Error::Internal(e.to_string()))
}

/// Parses JSON, reporting the field path and line/column of the first
/// problem.
pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Malformed(format!("at `{path}`: {}", e.into_inner()))
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StateKind {
    Pure,
    Mixed,
    Preset,
}

/// A qudit state given as amplitudes, a density matrix, or a named preset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateFile {
    #[serde(default = "current_version")]
    pub version: u32,
    pub d: usize,
    pub kind: StateKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitudes: Option<Vec<C64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<ComplexMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
}

impl StateFile {
    pub fn preset(d: usize, name: &str) -> Self {
        Self {
            version: FORMAT_VERSION,
            d,
            kind: StateKind::Preset,
            amplitudes: None,
            matrix: None,
            preset: Some(name.to_owned()),
        }
    }

    pub fn mixed(rho: &DensityMatrix) -> Self {
        Self {
            version: FORMAT_VERSION,
            d: rho.dim(),
            kind: StateKind::Mixed,
            amplitudes: None,
            matrix: Some(rho.matrix().clone()),
            preset: None,
        }
    }

    pub fn pure(state: &PureState) -> Self {
        Self {
            version: FORMAT_VERSION,
            d: state.dim(),
            kind: StateKind::Pure,
            amplitudes: Some(state.amplitudes().to_vec()),
            matrix: None,
            preset: None,
        }
    }

    /// Validates the file and returns the density matrix it describes.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        check_version(self.version)?;
        check_dim(self.d)?;
        let rho = match self.kind {
            StateKind::Pure => {
                let amps = self
                    .amplitudes
                    .clone()
                    .ok_or_else(|| Error::Malformed("pure state needs `amplitudes`".into()))?;
                PureState::new(amps)?.to_density()
            }
            StateKind::Mixed => {
                let m = self
                    .matrix
                    .clone()
                    .ok_or_else(|| Error::Malformed("mixed state needs `matrix`".into()))?;
                DensityMatrix::new(m)?
            }
            StateKind::Preset => {
                let name = self
                    .preset
                    .as_deref()
                    .ok_or_else(|| Error::Malformed("preset state needs `preset`".into()))?;
                preset_state(self.d, name)?
            }
        };
        if rho.dim() != self.d {
            return Err(Error::DimensionMismatch(format!(
                "declared d = {} but the state has dimension {}",
                self.d,
                rho.dim()
            )));
        }
        Ok(rho)
    }
}

fn preset_index(d: usize, name: &str, arg: &str) -> Result<usize> {
    let j: usize = arg.parse().map_err(|_| {
        Error::InvalidArgument(format!("preset {name}: index {arg:?} is not an integer"))
    })?;
    if j >= d {
        return Err(Error::InvalidArgument(format!(
            "preset {name}:{j} needs j < d = {d}"
        )));
    }
    Ok(j)
}

/// `maximally_mixed`, `basis:<j>` or `fourier:<j>` (column `j` of the
/// discrete Fourier matrix).
pub fn preset_state(d: usize, name: &str) -> Result<DensityMatrix> {
    check_dim(d)?;
    match name.split_once(':') {
        None if name == "maximally_mixed" => Ok(DensityMatrix::maximally_mixed(d)),
        Some(("basis", arg)) => DensityMatrix::basis(d, preset_index(d, "basis", arg)?),
        Some(("fourier", arg)) => {
            let j = preset_index(d, "fourier", arg)?;
            let norm = 1.0 / (d as f64).sqrt();
            let amps = (0..d)
                .map(|k| C64::from_polar(norm, 2.0 * PI * ((j * k) % d) as f64 / d as f64))
                .collect();
            Ok(PureState::new(amps)?.to_density())
        }
        _ => Err(Error::InvalidArgument(format!("unknown preset {name:?}"))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeName {
    Exact,
    Sampled,
}

/// Coefficient table on disk. `records` carries per-setting `⟨Z⟩` and, for
/// sampled runs, the raw ancilla counts; readers only need `values`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientFile {
    #[serde(default = "current_version")]
    pub version: u32,
    pub d: usize,
    pub mode: ModeName,
    #[serde(default)]
    pub shots: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace_pinned: Option<bool>,
    pub values: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub records: Vec<MeasurementRecord>,
}

impl CoefficientFile {
    pub fn from_table(table: &CoefficientTable) -> Self {
        let (mode, shots, seed) = match table.mode() {
            EstimationMode::Exact => (ModeName::Exact, 0, None),
            EstimationMode::Sampled { shots, master_seed } => {
                (ModeName::Sampled, shots, Some(master_seed))
            }
        };
        Self {
            version: FORMAT_VERSION,
            d: table.d(),
            mode,
            shots,
            seed,
            trace_pinned: Some(table.trace_pinned()),
            values: table.values(),
            records: table.records().to_vec(),
        }
    }

    pub fn to_table(&self) -> Result<CoefficientTable> {
        check_version(self.version)?;
        let mode = match (self.mode, self.shots, self.seed) {
            (ModeName::Exact, 0, _) => EstimationMode::Exact,
            (ModeName::Exact, n, _) => {
                return Err(Error::Malformed(format!("exact mode with shots = {n}")));
            }
            (ModeName::Sampled, 0, _) => {
                return Err(Error::Malformed("sampled mode needs shots > 0".into()));
            }
            (ModeName::Sampled, shots, Some(master_seed)) => {
                EstimationMode::Sampled { shots, master_seed }
            }
            (ModeName::Sampled, _, None) => {
                return Err(Error::Malformed("sampled mode needs `seed`".into()));
            }
        };
        CoefficientTable::from_values(self.d, &self.values, mode)
    }

    /// Mirror with columns `l, m, phi_lm, z_mean, q_lm`.
    pub fn to_csv(&self) -> Result<String> {
        let table = self.to_table()?;
        let mut out = String::from("l,m,phi_lm,z_mean,q_lm\n");
        let records = if self.records.is_empty() {
            table.records()
        } else {
            &self.records
        };
        for r in records {
            out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e}\n",
                r.l, r.m, r.phi_lm, r.z_mean, r.q_lm
            ));
        }
        Ok(out)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanFile {
    pub version: u32,
    pub d: usize,
    pub target: [usize; 2],
    pub layout: Layout,
    pub elements: Vec<OpticalElement>,
    pub resources: ResourceTally,
}

impl PlanFile {
    pub fn from_plan(plan: &OpticalPlan) -> Self {
        let (l, m) = plan.target();
        Self {
            version: FORMAT_VERSION,
            d: plan.d(),
            target: [l, m],
            layout: plan.layout(),
            elements: plan.elements().to_vec(),
            resources: plan.resource_tally(),
        }
    }

    /// Rebuilds the plan and checks the stored tally against the elements.
    pub fn to_plan(&self) -> Result<OpticalPlan> {
        check_version(self.version)?;
        let plan = OpticalPlan::from_elements(
            self.d,
            (self.target[0], self.target[1]),
            self.layout,
            self.elements.clone(),
        )?;
        if plan.resource_tally() != self.resources {
            return Err(Error::Malformed(
                "resource tally does not match the element list".into(),
            ));
        }
        Ok(plan)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerdictFile {
    pub version: u32,
    pub d: usize,
    pub layout: Layout,
    pub tolerance: f64,
    pub all_pass: bool,
    pub verdicts: Vec<GateVerdict>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ObservablesFile<'a> {
    pub version: u32,
    pub d: usize,
    pub observables: Vec<&'a HwObservable>,
}
