//! Mach-Zehnder readout: the photon's path is the ancilla qubit, and the
//! gate `Z^l X^m` sits on path 1 only.
//!
//! The joint path ⊗ register state is carried as four register blocks
//! `B[a][b] = ⟨a|ρ|b⟩_path`. Beamsplitters mix blocks, the phase shifter and
//! the gate touch only blocks with a path-1 index, and the path `Z` readout
//! is `tr B[0][0] − tr B[1][1]`.

use super::compile::{compile_zlxm_with_layout, Layout};
use super::elements::BeamsplitterConvention;
use super::simulate::{simulate_plan, OamModeState};
use crate::error::{Error, Result};
use crate::hw_basis::{check_setting, weyl_unitary};
use crate::qmath::{ComplexMatrix, DensityMatrix, C64};

type Blocks = [[ComplexMatrix; 2]; 2];

fn beamsplitter(blocks: &Blocks, bs: &ComplexMatrix) -> Blocks {
    let n = blocks[0][0].rows();
    let mut out: Blocks =
        std::array::from_fn(|_| std::array::from_fn(|_| ComplexMatrix::zeros(n, n)));
    for a in 0..2 {
        for b in 0..2 {
            for c in 0..2 {
                for e in 0..2 {
                    let w = bs[(a, c)] * bs[(b, e)].conj();
                    if w != C64::new(0.0, 0.0) {
                        out[a][b] = out[a][b].add(&blocks[c][e].scale(w));
                    }
                }
            }
        }
    }
    out
}

fn arm_one(blocks: Blocks, phase: f64, gate: &ComplexMatrix) -> Blocks {
    let p = C64::from_polar(1.0, phase);
    let [[b00, b01], [b10, b11]] = blocks;
    [
        [b00, b01.mul(&gate.adjoint()).scale(p.conj())],
        [gate.mul(&b10).scale(p), gate.conjugate(&b11)],
    ]
}

fn interfere(rho: &ComplexMatrix, phase: f64, gate: &ComplexMatrix, bs: &ComplexMatrix) -> f64 {
    let n = rho.rows();
    let input: Blocks = [
        [rho.clone(), ComplexMatrix::zeros(n, n)],
        [ComplexMatrix::zeros(n, n), ComplexMatrix::zeros(n, n)],
    ];
    let out = beamsplitter(&arm_one(beamsplitter(&input, bs), phase, gate), bs);
    (out[0][0].trace() - out[1][1].trace()).re
}

/// Path-qubit `⟨Z⟩` with the abstract `Z^l X^m` on path 1 and Hadamard
/// beamsplitters.
pub fn simulate_mzi(rho: &DensityMatrix, l: usize, m: usize, phase: f64) -> Result<f64> {
    simulate_mzi_with(rho, l, m, phase, BeamsplitterConvention::Hadamard)
}

/// As [`simulate_mzi`] with a chosen beamsplitter. The symmetric
/// `(1/√2)[[1, i], [i, 1]]` splitter swaps the output ports, so its readout
/// is the negative of the Hadamard one.
pub fn simulate_mzi_with(
    rho: &DensityMatrix,
    l: usize,
    m: usize,
    phase: f64,
    convention: BeamsplitterConvention,
) -> Result<f64> {
    let gate = weyl_unitary(rho.dim(), l, m)?;
    Ok(interfere(rho.matrix(), phase, &gate, &convention.matrix()))
}

/// Path-qubit `⟨Z⟩` with the compiled optical plan, rather than the abstract
/// gate, on path 1. The qudit is embedded on OAM `[0, d)` of spatial mode 0.
pub fn simulate_mzi_compiled(
    rho: &DensityMatrix,
    l: usize,
    m: usize,
    phase: f64,
    layout: Layout,
) -> Result<f64> {
    let d = rho.dim();
    check_setting(d, l, m)?;
    let plan = compile_zlxm_with_layout(d, l, m, layout)?;
    let embedded = OamModeState::from_qudit(plan.space(), rho)?;
    // Rejects any plan that would push population off the OAM window.
    simulate_plan(&plan, &embedded)?;
    let op = plan.operator()?;
    if op.rows() != embedded.space().dim() {
        return Err(Error::Internal("plan operator has the wrong size".into()));
    }
    Ok(interfere(
        &embedded.density(),
        phase,
        &op,
        &BeamsplitterConvention::Hadamard.matrix(),
    ))
}
