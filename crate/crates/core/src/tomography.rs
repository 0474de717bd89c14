//! Measurement plan, coefficient estimation and linear-inversion
//! reconstruction.
//!
//! Each setting `(l, m)` runs the one-clean-qubit circuit with
//! `U = Z^l X^m` and `φ = φ_lm`; then `⟨Q_lm⟩ = √2 ⟨Z⟩` and
//! `ρ = (1/d) Σ ⟨Q_lm⟩ Q_lm`.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dqc1::{expectation_z, sample_shots, Dqc1Setting, ShotResult};
use crate::error::{Error, Result};
use crate::hw_basis::{check_dim, observables, phase_angle, weyl_unitary};
use crate::qmath::{hermitian_eigen, metrics, ComplexMatrix, DensityMatrix, Metrics};
use crate::rng::setting_seed;

/// Hermiticity tolerance accepted by [`project_physical`].
pub const PROJECTION_HERMITIAN_TOL: f64 = 1e-8;

const COEFFICIENT_SLACK: f64 = 1e-9;

#[derive(Clone, Debug)]
pub struct MeasurementSetting {
    pub l: usize,
    pub m: usize,
    pub phase: f64,
    pub unitary: ComplexMatrix,
}

impl MeasurementSetting {
    pub fn dqc1(&self) -> Result<Dqc1Setting> {
        Dqc1Setting::new(self.unitary.clone(), self.phase)
    }
}

/// The `d²` settings in row-major `(l, m)` order.
#[derive(Clone, Debug)]
pub struct MeasurementPlan {
    d: usize,
    settings: Vec<MeasurementSetting>,
}

impl MeasurementPlan {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn settings(&self) -> &[MeasurementSetting] {
        &self.settings
    }
}

pub fn build_plan(d: usize) -> Result<MeasurementPlan> {
    check_dim(d)?;
    let mut settings = Vec::with_capacity(d * d);
    for l in 0..d {
        for m in 0..d {
            settings.push(MeasurementSetting {
                l,
                m,
                phase: phase_angle(d, l, m)?,
                unitary: weyl_unitary(d, l, m)?,
            });
        }
    }
    Ok(MeasurementPlan { d, settings })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum EstimationMode {
    Exact,
    Sampled { shots: u64, master_seed: u64 },
}

impl EstimationMode {
    /// `shots == 0` selects exact mode.
    pub fn from_shots(shots: u64, master_seed: u64) -> Self {
        if shots == 0 {
            EstimationMode::Exact
        } else {
            EstimationMode::Sampled { shots, master_seed }
        }
    }

    pub fn shots(&self) -> u64 {
        match self {
            EstimationMode::Exact => 0,
            EstimationMode::Sampled { shots, .. } => *shots,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EstimationOptions {
    /// Fix `⟨Q_00⟩ = 1` instead of measuring it.
    pub pin_trace: bool,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        Self { pin_trace: true }
    }
}

/// Per-setting outcome: ancilla `⟨Z⟩` (exact or estimated) and `⟨Q_lm⟩`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub l: usize,
    pub m: usize,
    pub phi_lm: f64,
    pub z_mean: f64,
    pub q_lm: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counts: Option<ShotResult>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientTable {
    d: usize,
    mode: EstimationMode,
    trace_pinned: bool,
    records: Vec<MeasurementRecord>,
}

impl CoefficientTable {
    /// Builds a table from externally supplied `⟨Q_lm⟩` values (`values[l][m]`).
    pub fn from_values(d: usize, values: &[Vec<f64>], mode: EstimationMode) -> Result<Self> {
        check_dim(d)?;
        if values.len() != d || values.iter().any(|row| row.len() != d) {
            return Err(Error::DimensionMismatch(format!(
                "coefficient table must be {d}x{d}"
            )));
        }
        let mut records = Vec::with_capacity(d * d);
        for (l, row) in values.iter().enumerate() {
            for (m, &q) in row.iter().enumerate() {
                check_coefficient(l, m, q)?;
                records.push(MeasurementRecord {
                    l,
                    m,
                    phi_lm: phase_angle(d, l, m)?,
                    z_mean: q / SQRT_2,
                    q_lm: q,
                    counts: None,
                });
            }
        }
        let trace_pinned = values[0][0] == 1.0;
        Ok(Self {
            d,
            mode,
            trace_pinned,
            records,
        })
    }

    /// Builds a table from ancilla counts alone, one [`ShotResult`] per
    /// setting in row-major order. `None` marks a pinned `(0, 0)` entry.
    pub fn from_shot_results(
        d: usize,
        counts: &[Option<ShotResult>],
        master_seed: u64,
    ) -> Result<Self> {
        check_dim(d)?;
        if counts.len() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "{} shot results for {} settings",
                counts.len(),
                d * d
            )));
        }
        let mut shots = 0;
        let mut records = Vec::with_capacity(d * d);
        let mut trace_pinned = false;
        for (idx, c) in counts.iter().enumerate() {
            let (l, m) = (idx / d, idx % d);
            let record = match c {
                Some(r) => {
                    if r.n_total == 0 || r.n_zero + r.n_one != r.n_total {
                        return Err(Error::Malformed(format!(
                            "inconsistent counts at ({l}, {m})"
                        )));
                    }
                    shots = r.n_total;
                    MeasurementRecord {
                        l,
                        m,
                        phi_lm: phase_angle(d, l, m)?,
                        z_mean: r.z_estimate(),
                        q_lm: SQRT_2 * r.z_estimate(),
                        counts: Some(*r),
                    }
                }
                None if idx == 0 => {
                    trace_pinned = true;
                    pinned_record()
                }
                None => {
                    return Err(Error::Malformed(format!("missing counts at ({l}, {m})")));
                }
            };
            records.push(record);
        }
        Ok(Self {
            d,
            mode: EstimationMode::Sampled { shots, master_seed },
            trace_pinned,
            records,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn mode(&self) -> EstimationMode {
        self.mode
    }

    pub fn trace_pinned(&self) -> bool {
        self.trace_pinned
    }

    pub fn records(&self) -> &[MeasurementRecord] {
        &self.records
    }

    pub fn value(&self, l: usize, m: usize) -> f64 {
        self.records[l * self.d + m].q_lm
    }

    /// `values[l][m]`.
    pub fn values(&self) -> Vec<Vec<f64>> {
        self.records
            .chunks(self.d)
            .map(|row| row.iter().map(|r| r.q_lm).collect())
            .collect()
    }

    pub fn total_shots(&self) -> u64 {
        self.records
            .iter()
            .filter_map(|r| r.counts.map(|c| c.n_total))
            .sum()
    }
}

fn check_coefficient(l: usize, m: usize, q: f64) -> Result<()> {
    if !q.is_finite() || q.abs() > SQRT_2 + COEFFICIENT_SLACK {
        return Err(Error::Malformed(format!(
            "coefficient ({l}, {m}) = {q} exceeds sqrt(2) in magnitude"
        )));
    }
    Ok(())
}

fn pinned_record() -> MeasurementRecord {
    MeasurementRecord {
        l: 0,
        m: 0,
        phi_lm: std::f64::consts::FRAC_PI_4,
        z_mean: FRAC_1_SQRT_2,
        q_lm: 1.0,
        counts: None,
    }
}

/// Estimates every `⟨Q_lm⟩` from the ancilla alone.
///
/// Settings are evaluated in parallel; each sampled setting draws from its
/// own stream seeded by [`setting_seed`], and results are written by index,
/// so the table does not depend on scheduling.
pub fn estimate_coefficients(
    rho: &DensityMatrix,
    plan: &MeasurementPlan,
    mode: EstimationMode,
    options: EstimationOptions,
) -> Result<CoefficientTable> {
    if rho.dim() != plan.d {
        return Err(Error::DimensionMismatch(format!(
            "state has dimension {}, plan {}",
            rho.dim(),
            plan.d
        )));
    }
    let records = plan
        .settings
        .par_iter()
        .map(|s| {
            if options.pin_trace && (s.l, s.m) == (0, 0) {
                return Ok(pinned_record());
            }
            let setting = s.dqc1()?;
            let (z_mean, counts) = match mode {
                EstimationMode::Exact => (expectation_z(rho, &setting)?, None),
                EstimationMode::Sampled { shots, master_seed } => {
                    let r =
                        sample_shots(rho, &setting, shots, setting_seed(master_seed, s.l, s.m))?;
                    (r.z_estimate(), Some(r))
                }
            };
            Ok(MeasurementRecord {
                l: s.l,
                m: s.m,
                phi_lm: s.phase,
                z_mean,
                q_lm: SQRT_2 * z_mean,
                counts,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    for r in &records {
        if r.q_lm.abs() > SQRT_2 + COEFFICIENT_SLACK {
            return Err(Error::Internal(format!(
                "coefficient ({}, {}) = {} out of range",
                r.l, r.m, r.q_lm
            )));
        }
    }
    Ok(CoefficientTable {
        d: plan.d,
        mode,
        trace_pinned: options.pin_trace,
        records,
    })
}

/// Linear inversion `(1/d) Σ ⟨Q_lm⟩ Q_lm`.
pub fn reconstruct(coeffs: &CoefficientTable) -> Result<ComplexMatrix> {
    let d = coeffs.d;
    let table = observables(d)?;
    let mut rho = ComplexMatrix::zeros(d, d);
    for (record, q) in coeffs.records.iter().zip(table.iter()) {
        debug_assert_eq!((record.l, record.m), (q.l, q.m));
        rho = rho.add(&q.matrix.scale_real(record.q_lm));
    }
    Ok(rho.scale_real(1.0 / d as f64))
}

/// Euclidean projection of `values` onto `{x ≥ 0, Σx = 1}`.
pub fn simplex_projection(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            threshold = candidate;
        }
    }
    values.iter().map(|&v| (v - threshold).max(0.0)).collect()
}

/// Closest unit-trace positive semidefinite matrix in Frobenius norm.
pub fn project_physical(rho_raw: &ComplexMatrix) -> Result<DensityMatrix> {
    if !rho_raw.is_square() {
        return Err(Error::DimensionMismatch(
            "projection needs a square matrix".into(),
        ));
    }
    let defect = rho_raw.hermiticity_defect();
    if defect > PROJECTION_HERMITIAN_TOL {
        return Err(Error::NotHermitian(defect));
    }
    let eig = hermitian_eigen(rho_raw);
    let projected = simplex_projection(&eig.values);
    DensityMatrix::new(eig.reassemble(&projected))
}

#[derive(Clone, Debug)]
pub struct ReconstructionReport {
    pub rho_raw: ComplexMatrix,
    pub rho_physical: DensityMatrix,
    pub coefficients: CoefficientTable,
    pub metrics: Option<Metrics>,
    pub shots_per_setting: u64,
    pub total_shots: u64,
}

/// Reconstruction from a coefficient table, with metrics when the true
/// state is known. With `project == false` the raw estimate must already be
/// physical.
pub fn reconstruct_report(
    coefficients: CoefficientTable,
    truth: Option<&DensityMatrix>,
    project: bool,
) -> Result<ReconstructionReport> {
    let rho_raw = reconstruct(&coefficients)?;
    let rho_physical = if project {
        project_physical(&rho_raw)?
    } else {
        DensityMatrix::new(rho_raw.clone())?
    };
    let metrics = truth.map(|t| metrics(&rho_physical, t)).transpose()?;
    Ok(ReconstructionReport {
        rho_raw,
        rho_physical,
        shots_per_setting: coefficients.mode.shots(),
        total_shots: coefficients.total_shots(),
        coefficients,
        metrics,
    })
}

/// Plan, estimate, invert, project, score.
pub fn run_tomography(
    rho_true: &DensityMatrix,
    mode: EstimationMode,
    options: EstimationOptions,
) -> Result<ReconstructionReport> {
    let plan = build_plan(rho_true.dim())?;
    let coefficients = estimate_coefficients(rho_true, &plan, mode, options)?;
    reconstruct_report(coefficients, Some(rho_true), true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hw_basis::{hw_observable, pauli_x, pauli_z};
    use crate::qmath::{random_density_matrix, trace_of_product, C64, I, ONE, ZERO};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn plan_rejects_qubit_free_dimension() {
        assert_eq!(build_plan(1).unwrap_err(), Error::InvalidDimension(1));
    }

    #[test]
    fn qubit_plan() {
        let plan = build_plan(2).unwrap();
        let s = plan.settings();
        assert_eq!(s.len(), 4);
        let x = pauli_x(2).unwrap();
        let z = pauli_z(2).unwrap();
        let expected = [
            (0, 0, ComplexMatrix::identity(2), FRAC_PI_4),
            (0, 1, x.clone(), FRAC_PI_4),
            (1, 0, z.clone(), FRAC_PI_4),
            (1, 1, z.mul(&x), -FRAC_PI_4),
        ];
        for (setting, (l, m, u, phi)) in s.iter().zip(expected) {
            assert_eq!((setting.l, setting.m), (l, m));
            assert!(setting.unitary.max_abs_diff(&u) < 1e-15);
            assert_abs_diff_eq!(setting.phase, phi, epsilon = 1e-15);
        }
    }

    #[test]
    fn plan_enumerates_distinct_settings() {
        let plan = build_plan(5).unwrap();
        let pairs: std::collections::HashSet<_> =
            plan.settings().iter().map(|s| (s.l, s.m)).collect();
        assert_eq!(pairs.len(), 25);
        assert!(
            plan.settings()[0]
                .unitary
                .max_abs_diff(&ComplexMatrix::identity(5))
                == 0.0
        );
    }

    #[test]
    fn maximally_mixed_coefficients() {
        for d in 2..=6 {
            let plan = build_plan(d).unwrap();
            let table = estimate_coefficients(
                &DensityMatrix::maximally_mixed(d),
                &plan,
                EstimationMode::Exact,
                EstimationOptions::default(),
            )
            .unwrap();
            assert_eq!(table.value(0, 0), 1.0);
            for r in &table.records()[1..] {
                assert!(r.q_lm.abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn qubit_ground_state_coefficients() {
        let plan = build_plan(2).unwrap();
        let table = estimate_coefficients(
            &DensityMatrix::basis(2, 0).unwrap(),
            &plan,
            EstimationMode::Exact,
            EstimationOptions::default(),
        )
        .unwrap();
        assert_abs_diff_eq!(table.value(1, 0), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(table.value(0, 1), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(table.value(1, 1), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn unpinned_identity_setting_still_gives_one() {
        let rho = random_density_matrix(3, 2, 8).unwrap();
        let table = estimate_coefficients(
            &rho,
            &build_plan(3).unwrap(),
            EstimationMode::Exact,
            EstimationOptions { pin_trace: false },
        )
        .unwrap();
        assert!(!table.trace_pinned());
        assert_abs_diff_eq!(table.value(0, 0), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn exact_coefficients_equal_direct_traces() {
        for d in 2..=8 {
            let rho = random_density_matrix(d, d, d as u64 * 13).unwrap();
            let table = estimate_coefficients(
                &rho,
                &build_plan(d).unwrap(),
                EstimationMode::Exact,
                EstimationOptions { pin_trace: false },
            )
            .unwrap();
            for r in table.records() {
                let q = hw_observable(d, r.l, r.m).unwrap();
                let direct = trace_of_product(rho.matrix(), &q.matrix);
                assert!(direct.im.abs() < 1e-12);
                assert!((r.q_lm - direct.re).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn sampled_coefficients_close_to_exact() {
        let plan = build_plan(3).unwrap();
        let rho = random_density_matrix(3, 3, 77).unwrap();
        let exact = estimate_coefficients(
            &rho,
            &plan,
            EstimationMode::Exact,
            EstimationOptions::default(),
        )
        .unwrap();
        for seed in 0..50 {
            let sampled = estimate_coefficients(
                &rho,
                &plan,
                EstimationMode::Sampled {
                    shots: 100_000,
                    master_seed: seed,
                },
                EstimationOptions::default(),
            )
            .unwrap();
            for (a, b) in sampled.records().iter().zip(exact.records()) {
                assert!(
                    (a.q_lm - b.q_lm).abs() <= 0.02,
                    "seed {seed} ({}, {})",
                    a.l,
                    a.m
                );
            }
        }
    }

    #[test]
    fn sampled_estimates_are_unbiased() {
        let plan = build_plan(3).unwrap();
        let rho = random_density_matrix(3, 2, 5).unwrap();
        let exact = estimate_coefficients(
            &rho,
            &plan,
            EstimationMode::Exact,
            EstimationOptions::default(),
        )
        .unwrap();
        let runs: Vec<CoefficientTable> = (0..200)
            .map(|seed| {
                estimate_coefficients(
                    &rho,
                    &plan,
                    EstimationMode::Sampled {
                        shots: 2000,
                        master_seed: seed,
                    },
                    EstimationOptions::default(),
                )
                .unwrap()
            })
            .collect();
        for idx in 1..9 {
            let errs: Vec<f64> = runs
                .iter()
                .map(|t| t.records()[idx].q_lm - exact.records()[idx].q_lm)
                .collect();
            let n = errs.len() as f64;
            let mean = errs.iter().sum::<f64>() / n;
            let var = errs.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
            let se = (var / n).sqrt();
            assert!(
                mean.abs() <= 3.0 * se,
                "setting {idx}: mean {mean}, se {se}"
            );
        }
    }

    #[test]
    fn reconstruct_maximally_mixed_table() {
        let mut values = vec![vec![0.0; 4]; 4];
        values[0][0] = 1.0;
        let table = CoefficientTable::from_values(4, &values, EstimationMode::Exact).unwrap();
        let rho = reconstruct(&table).unwrap();
        assert!(rho.max_abs_diff(&ComplexMatrix::identity(4).scale_real(0.25)) < 1e-15);
    }

    #[test]
    fn qubit_table_matches_stokes_layout() {
        let (x, y, z) = (0.3, -0.2, 0.5);
        // values[l][m]: Q_01 = X, Q_10 = Z, Q_11 = Y.
        let table =
            CoefficientTable::from_values(2, &[vec![1.0, x], vec![z, y]], EstimationMode::Exact)
                .unwrap();
        let rho = reconstruct(&table).unwrap();
        let half = 0.5;
        let stokes = ComplexMatrix::from_rows(vec![
            vec![
                C64::new(half * (1.0 + z), 0.0),
                C64::new(half * x, -half * y),
            ],
            vec![
                C64::new(half * x, half * y),
                C64::new(half * (1.0 - z), 0.0),
            ],
        ])
        .unwrap();
        assert!(rho.max_abs_diff(&stokes) < 1e-15);
    }

    #[test]
    fn from_values_validates() {
        assert!(
            CoefficientTable::from_values(2, &[vec![1.0, 0.0]], EstimationMode::Exact).is_err()
        );
        assert!(CoefficientTable::from_values(
            2,
            &[vec![1.0, 1.5], vec![0.0, 0.0]],
            EstimationMode::Exact
        )
        .is_err());
        assert!(CoefficientTable::from_values(
            2,
            &[vec![1.0, f64::NAN], vec![0.0, 0.0]],
            EstimationMode::Exact
        )
        .is_err());
    }

    #[test]
    fn raw_trace_equals_q00() {
        let table = CoefficientTable::from_values(
            3,
            &[
                vec![0.9, 0.1, -0.3],
                vec![0.4, 0.2, 0.0],
                vec![-0.1, 0.05, 0.3],
            ],
            EstimationMode::Exact,
        )
        .unwrap();
        let rho = reconstruct(&table).unwrap();
        assert!((rho.trace() - C64::new(0.9, 0.0)).norm() <= 1e-15);
        assert_eq!(rho.hermiticity_defect(), 0.0);
    }

    #[test]
    fn roundtrip_all_dimensions() {
        for d in 2..=8 {
            for seed in 0..10 {
                let rho = random_density_matrix(d, 1 + seed as usize % d, seed).unwrap();
                let report =
                    run_tomography(&rho, EstimationMode::Exact, EstimationOptions::default())
                        .unwrap();
                assert!(report.rho_raw.sub(rho.matrix()).frobenius_norm() <= 1e-10);
                let m = report.metrics.unwrap();
                assert!(m.frobenius_distance <= 1e-9);
                assert!(
                    m.fidelity >= 1.0 - 1e-9,
                    "d={d} seed={seed} F={}",
                    m.fidelity
                );
            }
        }
    }

    #[test]
    fn projection_fixed_point_and_example() {
        let mixed = ComplexMatrix::identity(3).scale_real(1.0 / 3.0);
        assert!(
            project_physical(&mixed)
                .unwrap()
                .matrix()
                .max_abs_diff(&mixed)
                <= 1e-15
        );

        let raw = ComplexMatrix::from_diagonal(&[C64::new(1.2, 0.0), C64::new(-0.2, 0.0)]);
        let p = project_physical(&raw).unwrap();
        assert!(p.matrix().max_abs_diff(&ComplexMatrix::projector(2, 0)) <= 1e-15);
    }

    #[test]
    fn projection_rejects_non_hermitian() {
        let raw = ComplexMatrix::from_rows(vec![vec![ONE, I], vec![ZERO, ZERO]]).unwrap();
        assert!(matches!(
            project_physical(&raw),
            Err(Error::NotHermitian(_))
        ));
    }

    #[test]
    fn simplex_projection_by_hand() {
        assert_eq!(simplex_projection(&[1.2, -0.2]), vec![1.0, 0.0]);
        assert_eq!(simplex_projection(&[0.5, 0.5]), vec![0.5, 0.5]);
        let p = simplex_projection(&[0.6, 0.6, -0.4]);
        assert_abs_diff_eq!(p[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p[1], 0.5, epsilon = 1e-15);
        assert_eq!(p[2], 0.0);
    }

    #[test]
    fn reconstruction_from_ancilla_counts_only() {
        let rho = random_density_matrix(3, 3, 21).unwrap();
        let plan = build_plan(3).unwrap();
        let counts: Vec<Option<ShotResult>> = plan
            .settings()
            .iter()
            .map(|s| {
                if (s.l, s.m) == (0, 0) {
                    None
                } else {
                    Some(
                        sample_shots(&rho, &s.dqc1().unwrap(), 50_000, (s.l * 3 + s.m) as u64)
                            .unwrap(),
                    )
                }
            })
            .collect();
        let table = CoefficientTable::from_shot_results(3, &counts, 0).unwrap();
        assert!(table.trace_pinned());
        assert_eq!(table.total_shots(), 8 * 50_000);
        let report = reconstruct_report(table, Some(&rho), true).unwrap();
        assert!(report.metrics.unwrap().fidelity > 0.99);
    }

    #[test]
    fn unprojected_report_requires_physical_estimate() {
        let table = CoefficientTable::from_values(
            2,
            &[vec![1.0, 1.2], vec![1.2, 0.0]],
            EstimationMode::Exact,
        )
        .unwrap();
        assert!(reconstruct_report(table.clone(), None, false).is_err());
        assert!(reconstruct_report(table, None, true).is_ok());
    }

    fn random_hermitian(d: usize, seed: u64, scale: f64) -> ComplexMatrix {
        let a = random_density_matrix(d, d, seed).unwrap();
        let b = random_density_matrix(d, d, seed ^ 0xABCD).unwrap();
        a.matrix()
            .sub(b.matrix())
            .scale_real(scale)
            .add(&ComplexMatrix::identity(d).scale_real(1.0 / d as f64))
    }

    proptest! {
        #[test]
        fn projection_is_idempotent_and_contractive(seed in any::<u64>(), d in 2usize..7) {
            let raw = random_hermitian(d, seed, 3.0);
            let p = project_physical(&raw).unwrap();
            let pp = project_physical(p.matrix()).unwrap();
            prop_assert!(pp.matrix().max_abs_diff(p.matrix()) <= 1e-12);
            for k in 0..5u64 {
                let sigma = random_density_matrix(d, 1 + (k as usize) % d, seed.wrapping_add(k)).unwrap();
                let before = raw.sub(sigma.matrix()).frobenius_norm();
                let after = p.matrix().sub(sigma.matrix()).frobenius_norm();
                prop_assert!(after <= before + 1e-9);
            }
        }

        #[test]
        fn projection_leaves_physical_states(seed in any::<u64>(), d in 2usize..7) {
            let rho = random_density_matrix(d, d, seed).unwrap();
            let p = project_physical(rho.matrix()).unwrap();
            prop_assert!(p.matrix().max_abs_diff(rho.matrix()) <= 1e-10);
        }

        #[test]
        fn estimation_is_affine(seed in any::<u64>(), w in 0.0f64..1.0) {
            let d = 4;
            let a = random_density_matrix(d, d, seed).unwrap();
            let b = random_density_matrix(d, 1, seed ^ 1).unwrap();
            let mix = DensityMatrix::mixture(&[(w, &a), (1.0 - w, &b)]).unwrap();
            let plan = build_plan(d).unwrap();
            let est = |rho: &DensityMatrix| {
                estimate_coefficients(rho, &plan, EstimationMode::Exact, EstimationOptions::default()).unwrap()
            };
            let (ta, tb, tm) = (est(&a), est(&b), est(&mix));
            for i in 0..d * d {
                let combined = w * ta.records()[i].z_mean + (1.0 - w) * tb.records()[i].z_mean;
                prop_assert!((tm.records()[i].z_mean - combined).abs() <= 1e-12);
            }
        }
    }
}
