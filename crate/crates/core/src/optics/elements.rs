use std::f64::consts::{FRAC_1_SQRT_2, PI};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{ComplexMatrix, C64, I, ONE};

/// OAM window `[0, window)` combined with `n_modes` spatial modes.
///
/// Basis states `|j⟩_OAM |p⟩_mode` are indexed OAM-first: `j * n_modes + p`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OpticalSpace {
    pub d: usize,
    pub window: usize,
    pub n_modes: usize,
}

impl OpticalSpace {
    /// Window `[0, 2d)` and `d` sorter output modes.
    pub fn for_dimension(d: usize) -> Self {
        Self {
            d,
            window: 2 * d,
            n_modes: d,
        }
    }

    pub fn dim(&self) -> usize {
        self.window * self.n_modes
    }

    pub fn index(&self, oam: usize, mode: usize) -> usize {
        oam * self.n_modes + mode
    }

    pub fn split(&self, idx: usize) -> (usize, usize) {
        (idx / self.n_modes, idx % self.n_modes)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ElementKind {
    /// Spiral phase plate: `|j⟩ ↦ |j + k⟩`.
    #[serde(rename = "SPP")]
    Spp {
        k: i64,
    },
    /// Two Dove prisms at relative angle `π l / d`: `|k⟩ ↦ ω^{lk} |k⟩`.
    DovePair {
        l: usize,
    },
    /// `|j⟩|p⟩ ↦ |j⟩|(j + p) mod d⟩`.
    Sorter,
    SorterInverse,
    Beamsplitter,
    PhaseShift {
        phi: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OpticalElement {
    #[serde(flatten)]
    pub kind: ElementKind,
    /// Spatial modes the element sits on.
    pub modes: Vec<usize>,
}

impl OpticalElement {
    pub fn spp(k: i64, modes: Vec<usize>) -> Self {
        Self {
            kind: ElementKind::Spp { k },
            modes,
        }
    }

    pub fn dove_pair(l: usize, modes: Vec<usize>) -> Self {
        Self {
            kind: ElementKind::DovePair { l },
            modes,
        }
    }

    pub fn sorter(n_modes: usize) -> Self {
        Self {
            kind: ElementKind::Sorter,
            modes: (0..n_modes).collect(),
        }
    }

    pub fn sorter_inverse(n_modes: usize) -> Self {
        Self {
            kind: ElementKind::SorterInverse,
            modes: (0..n_modes).collect(),
        }
    }

    /// Checks the element's parameters and placement against `space`.
    pub fn validate(&self, space: &OpticalSpace) -> Result<()> {
        if self.modes.is_empty() {
            return Err(Error::InvalidArgument("element placed on no modes".into()));
        }
        if let Some(&p) = self.modes.iter().find(|&&p| p >= space.n_modes) {
            return Err(Error::InvalidArgument(format!(
                "mode {p} outside the {} available",
                space.n_modes
            )));
        }
        let mut sorted = self.modes.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.modes.len() {
            return Err(Error::InvalidArgument("duplicate mode in placement".into()));
        }
        match self.kind {
            ElementKind::Spp { k: 0 } => {
                Err(Error::InvalidArgument("SPP order must be nonzero".into()))
            }
            ElementKind::DovePair { l } if l == 0 || l >= space.d => Err(Error::InvalidArgument(
                format!("Dove pair index {l} outside [1, {})", space.d),
            )),
            ElementKind::Sorter | ElementKind::SorterInverse
                if self.modes.len() != space.n_modes || space.n_modes != space.d =>
            {
                Err(Error::InvalidArgument(
                    "sorter must span all d modes".into(),
                ))
            }
            ElementKind::Beamsplitter if self.modes.len() != 2 => Err(Error::InvalidArgument(
                "beamsplitter acts on exactly two modes".into(),
            )),
            ElementKind::PhaseShift { phi } if !phi.is_finite() => {
                Err(Error::InvalidArgument("phase must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    fn on_mode(&self, p: usize) -> bool {
        self.modes.contains(&p)
    }

    /// Populated basis states `(oam, mode)` this element would push out of
    /// the OAM window.
    pub fn lost_inputs(&self, space: &OpticalSpace) -> Vec<(usize, usize)> {
        let ElementKind::Spp { k } = self.kind else {
            return Vec::new();
        };
        let mut lost = Vec::new();
        for j in 0..space.window {
            let target = j as i64 + k;
            if target < 0 || target >= space.window as i64 {
                lost.extend(self.modes.iter().map(|&p| (j, p)));
            }
        }
        lost
    }

    /// Operator on the full OAM ⊗ mode space. SPPs give a sub-permutation:
    /// columns in [`Self::lost_inputs`] are zero.
    pub fn operator(&self, space: &OpticalSpace) -> Result<ComplexMatrix> {
        self.validate(space)?;
        let n = space.dim();
        let mut op = ComplexMatrix::zeros(n, n);
        for j in 0..space.window {
            for p in 0..space.n_modes {
                let col = space.index(j, p);
                match self.kind {
                    _ if !self.on_mode(p) => op[(col, col)] = ONE,
                    ElementKind::Spp { k } => {
                        let target = j as i64 + k;
                        if (0..space.window as i64).contains(&target) {
                            op[(space.index(target as usize, p), col)] = ONE;
                        }
                    }
                    ElementKind::DovePair { l } => {
                        op[(col, col)] = dove_phase(space.d, l, j);
                    }
                    ElementKind::Sorter => {
                        op[(space.index(j, (j + p) % space.d), col)] = ONE;
                    }
                    ElementKind::SorterInverse => {
                        op[(space.index(j, (p + space.d - j % space.d) % space.d), col)] = ONE;
                    }
                    ElementKind::Beamsplitter => {
                        let (a, b) = (self.modes[0], self.modes[1]);
                        let h = C64::new(FRAC_1_SQRT_2, 0.0);
                        let sign = if p == a { h } else { -h };
                        op[(space.index(j, a), col)] = h;
                        op[(space.index(j, b), col)] = sign;
                    }
                    ElementKind::PhaseShift { phi } => {
                        op[(col, col)] = C64::from_polar(1.0, phi);
                    }
                }
            }
        }
        Ok(op)
    }
}

fn dove_phase(d: usize, l: usize, k: usize) -> C64 {
    // 2αk = 2π·lk/d for α = πl/d; whole turns removed before the exponential.
    C64::from_polar(1.0, 2.0 * PI * ((l * k) % d) as f64 / d as f64)
}

/// `SPP(k)` on the bare OAM window: a sub-permutation, unitary on the
/// values `j` with `j` and `j + k` both inside `[0, window)`.
pub fn spp_unitary(k: i64, window: usize) -> ComplexMatrix {
    let mut op = ComplexMatrix::zeros(window, window);
    for j in 0..window {
        let target = j as i64 + k;
        if (0..window as i64).contains(&target) {
            op[(target as usize, j)] = ONE;
        }
    }
    op
}

/// Applies `SPP(k)` to an OAM-window state vector, refusing to drop any
/// populated value off the window edge.
pub fn apply_spp(k: i64, state: &[C64]) -> Result<Vec<C64>> {
    let window = state.len();
    for (j, amp) in state.iter().enumerate() {
        let target = j as i64 + k;
        if *amp != C64::new(0.0, 0.0) && !(0..window as i64).contains(&target) {
            return Err(Error::OutOfWindow {
                value: j as i64,
                shift: k,
                window,
            });
        }
    }
    Ok(spp_unitary(k, window).apply(state))
}

/// Dove-prism pair phases `e^{2iαk}`, `α = πl/d`, on every OAM value in the
/// window.
pub fn dove_pair_unitary(d: usize, l: usize, window: usize) -> Result<ComplexMatrix> {
    if l == 0 || l >= d {
        return Err(Error::InvalidArgument(format!(
            "Dove pair index {l} outside [1, {d})"
        )));
    }
    let diag: Vec<C64> = (0..window).map(|k| dove_phase(d, l, k)).collect();
    Ok(ComplexMatrix::from_diagonal(&diag))
}

/// OAM sorter on `window ⊗ d` modes.
pub fn sorter_unitary(d: usize, window: usize) -> Result<ComplexMatrix> {
    let space = OpticalSpace {
        d,
        window,
        n_modes: d,
    };
    OpticalElement::sorter(d).operator(&space)
}

pub fn sorter_inverse_unitary(d: usize, window: usize) -> Result<ComplexMatrix> {
    Ok(sorter_unitary(d, window)?.adjoint())
}

/// 2×2 beamsplitter transfer matrices.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeamsplitterConvention {
    /// `(1/√2)[[1, 1], [1, -1]]`, identical to the Hadamard gate.
    #[default]
    Hadamard,
    /// `(1/√2)[[1, i], [i, 1]]`, the lossless symmetric splitter.
    Symmetric,
}

impl BeamsplitterConvention {
    pub fn matrix(self) -> ComplexMatrix {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        let rows = match self {
            BeamsplitterConvention::Hadamard => vec![vec![h, h], vec![h, -h]],
            BeamsplitterConvention::Symmetric => vec![vec![h, I * h], vec![I * h, h]],
        };
        ComplexMatrix::from_rows(rows).expect("2x2")
    }
}
