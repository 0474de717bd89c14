use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::elements::{ElementKind, OpticalElement, OpticalSpace};
use crate::error::{Error, Result};
use crate::hw_basis::{check_dim, check_setting};
use crate::qmath::ComplexMatrix;

/// How `X_d^m` is built: `m` single shifts in a row, or one shift by `m`
/// with the wrap-around fixed on `m` sorter outputs at once.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Serial,
    #[default]
    Parallel,
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::Serial => "serial",
            Layout::Parallel => "parallel",
        })
    }
}

impl FromStr for Layout {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "serial" => Ok(Layout::Serial),
            "parallel" => Ok(Layout::Parallel),
            other => Err(Error::InvalidArgument(format!("unknown layout {other:?}"))),
        }
    }
}

/// Element counts in the categories of the serial/parallel resource table.
/// Each plate on each mode counts once.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceTally {
    pub spp1: usize,
    pub sppm: usize,
    pub sppminusd: usize,
    pub sorters: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OpticalPlan {
    d: usize,
    target: (usize, usize),
    layout: Layout,
    elements: Vec<OpticalElement>,
}

impl OpticalPlan {
    /// Assembles a plan from explicit elements, validating each against the
    /// `[0, 2d) ⊗ d` space.
    pub fn from_elements(
        d: usize,
        target: (usize, usize),
        layout: Layout,
        elements: Vec<OpticalElement>,
    ) -> Result<Self> {
        check_setting(d, target.0, target.1)?;
        let space = OpticalSpace::for_dimension(d);
        for e in &elements {
            e.validate(&space)?;
        }
        Ok(Self {
            d,
            target,
            layout,
            elements,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn target(&self) -> (usize, usize) {
        self.target
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn elements(&self) -> &[OpticalElement] {
        &self.elements
    }

    pub fn space(&self) -> OpticalSpace {
        OpticalSpace::for_dimension(self.d)
    }

    /// Counts taken from the element list. Positive shifts are `SPP(1)` in
    /// the serial layout and `SPP(m)` in the parallel one.
    pub fn resource_tally(&self) -> ResourceTally {
        let mut tally = ResourceTally::default();
        for e in &self.elements {
            match e.kind {
                ElementKind::Spp { k } if k > 0 => match self.layout {
                    Layout::Serial => tally.spp1 += e.modes.len(),
                    Layout::Parallel => tally.sppm += e.modes.len(),
                },
                ElementKind::Spp { k } if k == -(self.d as i64) => tally.sppminusd += e.modes.len(),
                ElementKind::Sorter | ElementKind::SorterInverse => tally.sorters += 1,
                _ => {}
            }
        }
        tally
    }

    /// Product of all element operators on the OAM ⊗ mode space, in
    /// application order.
    pub fn operator(&self) -> Result<ComplexMatrix> {
        let space = self.space();
        let mut total = ComplexMatrix::identity(space.dim());
        for e in &self.elements {
            total = e.operator(&space)?.mul(&total);
        }
        Ok(total)
    }
}

fn single_shift(d: usize) -> [OpticalElement; 4] {
    [
        OpticalElement::spp(1, vec![0]),
        OpticalElement::sorter(d),
        OpticalElement::spp(-(d as i64), vec![0]),
        OpticalElement::sorter_inverse(d),
    ]
}

fn xm_elements(d: usize, m: usize, layout: Layout) -> Vec<OpticalElement> {
    match layout {
        Layout::Parallel => vec![
            OpticalElement::spp(m as i64, vec![0]),
            OpticalElement::sorter(d),
            OpticalElement::spp(-(d as i64), (0..m).collect()),
            OpticalElement::sorter_inverse(d),
        ],
        Layout::Serial => (0..m).flat_map(|_| single_shift(d)).collect(),
    }
}

/// `X_d^m` as SPPs and sorters.
pub fn compile_xm(d: usize, m: usize, layout: Layout) -> Result<OpticalPlan> {
    check_dim(d)?;
    if m == 0 || m >= d {
        return Err(Error::InvalidArgument(format!(
            "shift {m} outside [1, {d})"
        )));
    }
    OpticalPlan::from_elements(d, (0, m), layout, xm_elements(d, m, layout))
}

/// `Z_d^l X_d^m` with the parallel `X` layout: the `X^m` block first, then
/// a Dove pair for `Z^l`.
pub fn compile_zlxm(d: usize, l: usize, m: usize) -> Result<OpticalPlan> {
    compile_zlxm_with_layout(d, l, m, Layout::Parallel)
}

pub fn compile_zlxm_with_layout(
    d: usize,
    l: usize,
    m: usize,
    layout: Layout,
) -> Result<OpticalPlan> {
    check_setting(d, l, m)?;
    let mut elements = Vec::new();
    if m > 0 {
        elements.extend(xm_elements(d, m, layout));
    }
    if l > 0 {
        elements.push(OpticalElement::dove_pair(l, vec![0]));
    }
    OpticalPlan::from_elements(d, (l, m), layout, elements)
}
