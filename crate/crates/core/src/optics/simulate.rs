use serde::{Deserialize, Serialize};

use super::compile::{compile_zlxm_with_layout, Layout, OpticalPlan};
use super::elements::{ElementKind, OpticalElement, OpticalSpace};
use crate::error::{Error, Result};
use crate::hw_basis::weyl_unitary;
use crate::qmath::{partial_trace, ComplexMatrix, DensityMatrix, C64, ONE, ZERO};

/// Gate-equivalence and leakage threshold.
pub const GATE_TOL: f64 = 1e-10;

const NORM_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Vector(Vec<C64>),
    Density(ComplexMatrix),
}

/// A photon state over an OAM window and a set of spatial modes.
#[derive(Clone, Debug, PartialEq)]
pub struct OamModeState {
    space: OpticalSpace,
    repr: Repr,
}

impl OamModeState {
    pub fn from_vector(space: OpticalSpace, amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.len() != space.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a space of dimension {}",
                amplitudes.len(),
                space.dim()
            )));
        }
        let norm: f64 = amplitudes.iter().map(C64::norm_sqr).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self {
            space,
            repr: Repr::Vector(amplitudes),
        })
    }

    pub fn basis(space: OpticalSpace, oam: usize, mode: usize) -> Result<Self> {
        if oam >= space.window || mode >= space.n_modes {
            return Err(Error::InvalidArgument(format!(
                "basis state |{oam}, {mode}⟩ outside the space"
            )));
        }
        let mut v = vec![ZERO; space.dim()];
        v[space.index(oam, mode)] = ONE;
        Self::from_vector(space, v)
    }

    /// Embeds a qudit state at OAM values `[0, d)` on spatial mode 0.
    pub fn from_qudit(space: OpticalSpace, rho: &DensityMatrix) -> Result<Self> {
        if rho.dim() != space.d {
            return Err(Error::DimensionMismatch(format!(
                "qudit of dimension {} in a space for d = {}",
                rho.dim(),
                space.d
            )));
        }
        let mut m = ComplexMatrix::zeros(space.dim(), space.dim());
        for i in 0..space.d {
            for j in 0..space.d {
                m[(space.index(i, 0), space.index(j, 0))] = rho.matrix()[(i, j)];
            }
        }
        Ok(Self {
            space,
            repr: Repr::Density(m),
        })
    }

    pub fn space(&self) -> OpticalSpace {
        self.space
    }

    pub fn amplitudes(&self) -> Option<&[C64]> {
        match &self.repr {
            Repr::Vector(v) => Some(v),
            Repr::Density(_) => None,
        }
    }

    pub fn density(&self) -> ComplexMatrix {
        match &self.repr {
            Repr::Vector(v) => ComplexMatrix::outer(v),
            Repr::Density(m) => m.clone(),
        }
    }

    pub fn population(&self, oam: usize, mode: usize) -> f64 {
        let idx = self.space.index(oam, mode);
        match &self.repr {
            Repr::Vector(v) => v[idx].norm_sqr(),
            Repr::Density(m) => m[(idx, idx)].re,
        }
    }

    pub fn norm(&self) -> f64 {
        match &self.repr {
            Repr::Vector(v) => v.iter().map(C64::norm_sqr).sum(),
            Repr::Density(m) => m.trace().re,
        }
    }

    /// Reduced state of the spatial modes.
    pub fn reduced_modes(&self) -> Result<ComplexMatrix> {
        partial_trace(&self.density(), &[self.space.window, self.space.n_modes], 1)
    }

    /// Reduced state of the OAM register.
    pub fn reduced_oam(&self) -> Result<ComplexMatrix> {
        partial_trace(&self.density(), &[self.space.window, self.space.n_modes], 0)
    }

    fn is_populated(&self, oam: usize, mode: usize) -> bool {
        let idx = self.space.index(oam, mode);
        match &self.repr {
            Repr::Vector(v) => v[idx] != ZERO,
            Repr::Density(m) => m[(idx, idx)] != ZERO,
        }
    }

    /// Applies one element, failing if a populated OAM value would be shifted
    /// off the window.
    pub fn apply_element(&self, element: &OpticalElement) -> Result<Self> {
        if let Some(&(oam, _)) = element
            .lost_inputs(&self.space)
            .iter()
            .find(|&&(j, p)| self.is_populated(j, p))
        {
            let shift = match element.kind {
                ElementKind::Spp { k } => k,
                _ => 0,
            };
            return Err(Error::OutOfWindow {
                value: oam as i64,
                shift,
                window: self.space.window,
            });
        }
        let op = element.operator(&self.space)?;
        let repr = match &self.repr {
            Repr::Vector(v) => Repr::Vector(op.apply(v)),
            Repr::Density(m) => Repr::Density(op.conjugate(m)),
        };
        Ok(Self {
            space: self.space,
            repr,
        })
    }
}

/// Runs `input` through every element of `plan` in order.
///
/// The input must live on OAM values `[0, d)` of spatial mode 0.
pub fn simulate_plan(plan: &OpticalPlan, input: &OamModeState) -> Result<OamModeState> {
    let space = plan.space();
    if input.space != space {
        return Err(Error::DimensionMismatch(format!(
            "state space {:?} does not match plan space {space:?}",
            input.space
        )));
    }
    for j in 0..space.window {
        for p in 0..space.n_modes {
            if (j >= space.d || p != 0) && input.is_populated(j, p) {
                return Err(Error::InvalidArgument(format!(
                    "input populates |{j}⟩_OAM |{p}⟩_mode outside the qudit subspace"
                )));
            }
        }
    }
    plan.elements()
        .iter()
        .try_fold(input.clone(), |state, e| state.apply_element(e))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateVerdict {
    pub d: usize,
    pub l: usize,
    pub m: usize,
    pub layout: Layout,
    /// `max |R - Z^l X^m|` over the restricted block `R`.
    pub distance: f64,
    /// Largest probability leaving OAM `[0, d)` ⊗ mode 0 for a basis input.
    pub leakage: f64,
    /// `max |R^dag R - I|`.
    pub isometry_defect: f64,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Compares a plan against its target `Z^l X^m` on OAM `[0, d)` ⊗ mode 0.
pub fn verify_plan(plan: &OpticalPlan) -> Result<GateVerdict> {
    let d = plan.d();
    let (l, m) = plan.target();
    let target = weyl_unitary(d, l, m)?;
    let space = plan.space();
    let mut restricted = ComplexMatrix::zeros(d, d);
    let mut leakage = 0.0_f64;
    let mut failure = None;
    for i in 0..d {
        let input = OamModeState::basis(space, i, 0)?;
        match simulate_plan(plan, &input) {
            Ok(out) => {
                let v = out.amplitudes().expect("vector input stays a vector");
                let mut kept = 0.0;
                for j in 0..d {
                    let amp = v[space.index(j, 0)];
                    restricted[(j, i)] = amp;
                    kept += amp.norm_sqr();
                }
                leakage = leakage.max((out.norm() - kept).max(0.0));
            }
            Err(e @ Error::OutOfWindow { .. }) => {
                failure = Some(e.to_string());
                leakage = 1.0;
            }
            Err(e) => return Err(e),
        }
    }
    let distance = restricted.max_abs_diff(&target);
    let isometry_defect = restricted
        .adjoint()
        .mul(&restricted)
        .max_abs_diff(&ComplexMatrix::identity(d));
    if failure.is_none() && leakage > GATE_TOL {
        failure = Some(format!("leakage {leakage:e} out of the qudit subspace"));
    }
    let pass = failure.is_none() && distance <= GATE_TOL && isometry_defect <= GATE_TOL;
    Ok(GateVerdict {
        d,
        l,
        m,
        layout: plan.layout(),
        distance,
        leakage,
        isometry_defect,
        pass,
        failure,
    })
}

pub fn verify_gate_equivalence(
    d: usize,
    l: usize,
    m: usize,
    layout: Layout,
) -> Result<GateVerdict> {
    verify_plan(&compile_zlxm_with_layout(d, l, m, layout)?)
}
