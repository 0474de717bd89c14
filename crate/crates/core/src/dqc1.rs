//! One-clean-qubit trace estimation circuit.
//!
//! The ancilla starts in `|0⟩`, the qudit in `ρ`. The ancilla sees `H`, then
//! `P_φ = diag(1, e^{iφ})`, then controls `U` on the qudit (applied when the
//! ancilla is `|1⟩`), then `H` again and a Z measurement. Only the ancilla is
//! ever read; the qudit is traced out.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmath::{
    partial_trace, tensor_product, trace_of_product, ComplexMatrix, DensityMatrix, C64, ONE,
};
use crate::rng::rng_from_seed;

const UNITARY_TOL: f64 = 1e-10;
const PROBABILITY_SLACK: f64 = 1e-10;

/// The controlled unitary and the ancilla phase for one run of the circuit.
#[derive(Clone, Debug)]
pub struct Dqc1Setting {
    unitary: ComplexMatrix,
    phase: f64,
}

impl Dqc1Setting {
    pub fn new(unitary: ComplexMatrix, phase: f64) -> Result<Self> {
        if !unitary.is_square() {
            return Err(Error::DimensionMismatch(
                "controlled operator must be square".into(),
            ));
        }
        let defect = unitary.unitarity_defect();
        if defect > UNITARY_TOL {
            return Err(Error::NotUnitary(defect));
        }
        if !phase.is_finite() {
            return Err(Error::InvalidArgument("phase must be finite".into()));
        }
        Ok(Self { unitary, phase })
    }

    pub fn d(&self) -> usize {
        self.unitary.rows()
    }

    pub fn unitary(&self) -> &ComplexMatrix {
        &self.unitary
    }

    pub fn phase(&self) -> f64 {
        self.phase
    }

    fn check(&self, rho: &DensityMatrix) -> Result<()> {
        if rho.dim() != self.d() {
            return Err(Error::DimensionMismatch(format!(
                "state has dimension {}, controlled operator {}",
                rho.dim(),
                self.d()
            )));
        }
        Ok(())
    }
}

/// Ancilla outcome counts for a finite number of shots.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotResult {
    pub n_zero: u64,
    pub n_one: u64,
    pub n_total: u64,
}

impl ShotResult {
    pub fn z_estimate(&self) -> f64 {
        (self.n_zero as f64 - self.n_one as f64) / self.n_total as f64
    }
}

pub fn hadamard() -> ComplexMatrix {
    let h = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    ComplexMatrix::from_rows(vec![vec![h, h], vec![h, -h]]).expect("2x2")
}

pub fn phase_gate(phase: f64) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&[ONE, C64::from_polar(1.0, phase)])
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ U`.
pub fn controlled(unitary: &ComplexMatrix) -> ComplexMatrix {
    let d = unitary.rows();
    tensor_product(&ComplexMatrix::projector(2, 0), &ComplexMatrix::identity(d))
        .add(&tensor_product(&ComplexMatrix::projector(2, 1), unitary))
}

/// Full circuit unitary `(H⊗I) C(U) (P_φ⊗I) (H⊗I)` on ancilla ⊗ qudit.
pub fn circuit_unitary(setting: &Dqc1Setting) -> ComplexMatrix {
    let id = ComplexMatrix::identity(setting.d());
    let h = tensor_product(&hadamard(), &id);
    let p = tensor_product(&phase_gate(setting.phase), &id);
    h.mul(&controlled(&setting.unitary)).mul(&p).mul(&h)
}

/// Output state on ancilla ⊗ qudit (`2d × 2d`).
pub fn evolve_exact(rho: &DensityMatrix, setting: &Dqc1Setting) -> Result<ComplexMatrix> {
    setting.check(rho)?;
    let rho_in = tensor_product(&ComplexMatrix::projector(2, 0), rho.matrix());
    Ok(circuit_unitary(setting).conjugate(&rho_in))
}

/// Ancilla state after tracing out the qudit, from the closed form
///
/// ```text
/// ρ₂ = ¼ [ (2 + t)|0⟩⟨0| + (2 - t)|1⟩⟨1|
///        + tr(-e^{iφ}Uρ + e^{-iφ}ρU†)|1⟩⟨0| + tr(e^{iφ}Uρ - e^{-iφ}ρU†)|0⟩⟨1| ]
/// ```
///
/// with `t = tr(e^{iφ}Uρ + e^{-iφ}ρU†)`.
pub fn reduced_ancilla(rho: &DensityMatrix, setting: &Dqc1Setting) -> Result<ComplexMatrix> {
    setting.check(rho)?;
    let phase = C64::from_polar(1.0, setting.phase);
    let forward = phase * trace_of_product(&setting.unitary, rho.matrix());
    let backward = phase.conj() * trace_of_product(rho.matrix(), &setting.unitary.adjoint());
    let two = C64::new(2.0, 0.0);
    let t = forward + backward;
    let mut out = ComplexMatrix::zeros(2, 2);
    out[(0, 0)] = (two + t) / 4.0;
    out[(1, 1)] = (two - t) / 4.0;
    out[(1, 0)] = (backward - forward) / 4.0;
    out[(0, 1)] = (forward - backward) / 4.0;
    Ok(out)
}

/// `⟨Z⟩ = ½ tr(ρ(e^{iφ}U + e^{-iφ}U†)) = Re(e^{iφ} tr(Uρ))`.
pub fn expectation_z(rho: &DensityMatrix, setting: &Dqc1Setting) -> Result<f64> {
    setting.check(rho)?;
    let tr = trace_of_product(&setting.unitary, rho.matrix());
    Ok((C64::from_polar(1.0, setting.phase) * tr).re)
}

/// `⟨Z⟩` read off the full output state: `tr((Z ⊗ I) ρ_out)`.
pub fn expectation_z_from_evolution(rho: &DensityMatrix, setting: &Dqc1Setting) -> Result<f64> {
    let out = evolve_exact(rho, setting)?;
    let d = setting.d();
    let z = tensor_product(
        &ComplexMatrix::from_diagonal(&[ONE, -ONE]),
        &ComplexMatrix::identity(d),
    );
    Ok(trace_of_product(&z, &out).re)
}

/// Reduced qudit state of the output (the register that is never measured).
pub fn reduced_qudit(rho: &DensityMatrix, setting: &Dqc1Setting) -> Result<ComplexMatrix> {
    let out = evolve_exact(rho, setting)?;
    partial_trace(&out, &[2, setting.d()], 1)
}

/// Draws `shots` Bernoulli outcomes with `P(0) = (1 + ⟨Z⟩)/2`.
pub fn sample_shots(
    rho: &DensityMatrix,
    setting: &Dqc1Setting,
    shots: u64,
    seed: u64,
) -> Result<ShotResult> {
    if shots == 0 {
        return Err(Error::InvalidArgument("shots must be positive".into()));
    }
    let z = expectation_z(rho, setting)?;
    sample_with_probability((1.0 + z) / 2.0, shots, seed)
}

pub(crate) fn sample_with_probability(p_zero: f64, shots: u64, seed: u64) -> Result<ShotResult> {
    if !(-PROBABILITY_SLACK..=1.0 + PROBABILITY_SLACK).contains(&p_zero) {
        return Err(Error::Internal(format!(
            "ancilla outcome probability {p_zero} outside [0, 1]"
        )));
    }
    let p_zero = p_zero.clamp(0.0, 1.0);
    let mut rng = rng_from_seed(seed);
    let mut n_zero = 0u64;
    for _ in 0..shots {
        if rng.random::<f64>() < p_zero {
            n_zero += 1;
        }
    }
    Ok(ShotResult {
        n_zero,
        n_one: shots - n_zero,
        n_total: shots,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hw_basis::{pauli_z, weyl_unitary};
    use crate::qmath::random_density_matrix;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI};

    fn identity_setting(d: usize, phase: f64) -> Dqc1Setting {
        Dqc1Setting::new(ComplexMatrix::identity(d), phase).unwrap()
    }

    #[test]
    fn rejects_non_unitary_and_mismatch() {
        let bad = ComplexMatrix::identity(3).scale_real(1.1);
        assert!(matches!(
            Dqc1Setting::new(bad, 0.0),
            Err(Error::NotUnitary(_))
        ));
        let rho = DensityMatrix::maximally_mixed(2);
        let setting = identity_setting(3, 0.0);
        assert!(evolve_exact(&rho, &setting).is_err());
        assert!(expectation_z(&rho, &setting).is_err());
        assert!(reduced_ancilla(&rho, &setting).is_err());
    }

    #[test]
    fn identity_at_zero_phase_returns_ancilla_to_zero() {
        let rho = random_density_matrix(3, 3, 1).unwrap();
        let out = evolve_exact(&rho, &identity_setting(3, 0.0)).unwrap();
        let anc = partial_trace(&out, &[2, 3], 0).unwrap();
        assert!(anc.max_abs_diff(&ComplexMatrix::projector(2, 0)) < 1e-14);
    }

    #[test]
    fn identity_gives_cosine_of_phase() {
        let rho = random_density_matrix(4, 2, 5).unwrap();
        for k in 0..16 {
            let phase = k as f64 * PI / 8.0 - 1.0;
            let setting = identity_setting(4, phase);
            assert_abs_diff_eq!(
                expectation_z(&rho, &setting).unwrap(),
                phase.cos(),
                epsilon = 1e-14
            );
            assert_abs_diff_eq!(
                expectation_z_from_evolution(&rho, &setting).unwrap(),
                phase.cos(),
                epsilon = 1e-13
            );
        }
    }

    #[test]
    fn quarter_turn_phase_balances_ancilla_populations() {
        // H P_{π/2} H |0⟩ = ((1+i)/2, (1-i)/2): populations ½, coherence i/2.
        let rho = random_density_matrix(3, 1, 2).unwrap();
        let anc = reduced_ancilla(&rho, &identity_setting(3, FRAC_PI_2)).unwrap();
        let ket = [C64::new(0.5, 0.5), C64::new(0.5, -0.5)];
        assert!(anc.max_abs_diff(&ComplexMatrix::outer(&ket)) < 1e-15);
        assert_abs_diff_eq!(anc[(0, 0)].re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(anc[(1, 1)].re, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn qutrit_basis_state_with_z() {
        // tr(Z₃ |1⟩⟨1|) = ω, so P(0) = (1 + cos(φ + 2π/3))/2.
        let rho = DensityMatrix::basis(3, 1).unwrap();
        for phase in [0.0, 0.3, -1.2, 2.5] {
            let setting = Dqc1Setting::new(pauli_z(3).unwrap(), phase).unwrap();
            let anc = reduced_ancilla(&rho, &setting).unwrap();
            let c = (phase + 2.0 * PI / 3.0).cos();
            assert_abs_diff_eq!(anc[(0, 0)].re, (1.0 + c) / 2.0, epsilon = 1e-15);
            assert_abs_diff_eq!(anc[(1, 1)].re, (1.0 - c) / 2.0, epsilon = 1e-15);
            assert_abs_diff_eq!(anc[(0, 0)].im, 0.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn off_diagonals_vanish_for_real_trace() {
        // tr(Z₃|1⟩⟨1|) e^{iφ} = e^{i(φ + 2π/3)} is real for φ = -2π/3.
        let rho = DensityMatrix::basis(3, 1).unwrap();
        let setting = Dqc1Setting::new(pauli_z(3).unwrap(), -2.0 * PI / 3.0).unwrap();
        let anc = reduced_ancilla(&rho, &setting).unwrap();
        assert!(anc[(0, 1)].norm() < 1e-15);
        assert!(anc[(1, 0)].norm() < 1e-15);
    }

    #[test]
    fn traceless_weyl_on_maximally_mixed_gives_zero() {
        for d in 2..=6 {
            let rho = DensityMatrix::maximally_mixed(d);
            for l in 0..d {
                for m in 0..d {
                    if (l, m) == (0, 0) {
                        continue;
                    }
                    let setting = Dqc1Setting::new(weyl_unitary(d, l, m).unwrap(), 0.7).unwrap();
                    assert!(expectation_z(&rho, &setting).unwrap().abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn basis_zero_with_z4() {
        let rho = DensityMatrix::basis(4, 0).unwrap();
        let setting = Dqc1Setting::new(pauli_z(4).unwrap(), 0.0).unwrap();
        assert_abs_diff_eq!(expectation_z(&rho, &setting).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn evolution_preserves_trace_and_hermiticity() {
        for seed in 0..20u64 {
            let d = 2 + (seed % 6) as usize;
            let rho = random_density_matrix(d, d, seed).unwrap();
            let setting = Dqc1Setting::new(
                weyl_unitary(d, seed as usize % d, 1).unwrap(),
                seed as f64 * 0.37,
            )
            .unwrap();
            let out = evolve_exact(&rho, &setting).unwrap();
            assert!((out.trace() - ONE).norm() <= 1e-12);
            assert!(out.hermiticity_defect() <= 1e-12);
            let qudit = reduced_qudit(&rho, &setting).unwrap();
            assert!((qudit.trace() - ONE).norm() <= 1e-12);
        }
    }

    #[test]
    fn reduced_ancilla_matches_partial_trace() {
        for seed in 0..20u64 {
            let d = 2 + (seed % 5) as usize;
            let rho = random_density_matrix(d, 1 + seed as usize % d, seed + 100).unwrap();
            let setting = Dqc1Setting::new(
                weyl_unitary(d, (seed as usize * 3) % d, (seed as usize * 5) % d).unwrap(),
                seed as f64 - 7.5,
            )
            .unwrap();
            let closed = reduced_ancilla(&rho, &setting).unwrap();
            let traced = partial_trace(&evolve_exact(&rho, &setting).unwrap(), &[2, d], 0).unwrap();
            assert!(closed.max_abs_diff(&traced) <= 1e-12);
            for i in 0..2 {
                assert!(closed[(i, i)].im.abs() <= 1e-15);
                assert!((-1e-12..=1.0 + 1e-12).contains(&closed[(i, i)].re));
            }
        }
    }

    #[test]
    fn certain_outcome_has_no_ones() {
        let rho = DensityMatrix::basis(3, 0).unwrap();
        let setting = identity_setting(3, 0.0);
        for seed in 0..5 {
            let r = sample_shots(&rho, &setting, 1000, seed).unwrap();
            assert_eq!(r.n_one, 0);
            assert_eq!(r.n_zero, 1000);
            assert_eq!(r.z_estimate(), 1.0);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let rho = random_density_matrix(3, 3, 4).unwrap();
        let setting = Dqc1Setting::new(weyl_unitary(3, 1, 2).unwrap(), 0.4).unwrap();
        let a = sample_shots(&rho, &setting, 5000, 17).unwrap();
        let b = sample_shots(&rho, &setting, 5000, 17).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_zero + a.n_one, a.n_total);
        assert!((-1.0..=1.0).contains(&a.z_estimate()));
    }

    #[test]
    fn sampling_rejects_zero_shots_and_bad_probability() {
        let rho = DensityMatrix::basis(2, 0).unwrap();
        assert!(sample_shots(&rho, &identity_setting(2, 0.0), 0, 1).is_err());
        assert!(sample_with_probability(1.0 + 1e-6, 10, 1)
            .unwrap_err()
            .is_internal());
        assert!(sample_with_probability(-1e-6, 10, 1)
            .unwrap_err()
            .is_internal());
        assert_eq!(
            sample_with_probability(1.0 + 1e-12, 10, 1).unwrap().n_zero,
            10
        );
    }

    #[test]
    fn million_shots_converge() {
        // cos(π/3) = 0.5; binomial standard error ≈ 8.7e-4 at 10⁶ shots.
        let rho = DensityMatrix::maximally_mixed(2);
        let setting = identity_setting(2, FRAC_PI_3);
        for seed in 0..100 {
            let r = sample_shots(&rho, &setting, 1_000_000, seed).unwrap();
            assert!(
                (r.z_estimate() - 0.5).abs() <= 5e-3,
                "seed {seed}: {}",
                r.z_estimate()
            );
        }
    }
}
