//! Generalized Pauli operators and the Heisenberg-Weyl observables.
//!
//! `Q_lm = (1+i)/2 · ω^{-lm/2} · Z^l X^m + h.c.`, with the half power taken
//! as `e^{-iπ lm/d}`. Equivalently `Q_lm = (e^{iφ_lm} Z^l X^m + h.c.)/√2`
//! where `φ_lm = π/4 - π lm/d`.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_4, PI};
use std::sync::{Arc, OnceLock, RwLock};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::qmath::{trace_of_product, ComplexMatrix, C64};

pub(crate) fn check_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidDimension(d));
    }
    Ok(())
}

pub(crate) fn check_setting(d: usize, l: usize, m: usize) -> Result<()> {
    check_dim(d)?;
    if l >= d || m >= d {
        return Err(Error::SettingOutOfRange { d, l, m });
    }
    Ok(())
}

/// `X_d : |j⟩ ↦ |j ⊕ 1⟩`.
pub fn pauli_x(d: usize) -> Result<ComplexMatrix> {
    check_dim(d)?;
    let mut x = ComplexMatrix::zeros(d, d);
    for j in 0..d {
        x[((j + 1) % d, j)] = C64::new(1.0, 0.0);
    }
    Ok(x)
}

/// `e^{2πi k/d}` with `k` reduced mod `d` first.
pub(crate) fn root_of_unity(d: usize, k: usize) -> C64 {
    C64::from_polar(1.0, 2.0 * PI * (k % d) as f64 / d as f64)
}

/// `Z_d = diag(1, ω, …, ω^{d-1})`, `ω = e^{2πi/d}`.
pub fn pauli_z(d: usize) -> Result<ComplexMatrix> {
    check_dim(d)?;
    let diag: Vec<C64> = (0..d).map(|j| root_of_unity(d, j)).collect();
    Ok(ComplexMatrix::from_diagonal(&diag))
}

/// `φ_lm = π/4 - π·l·m/d`, not reduced mod 2π.
pub fn phase_angle(d: usize, l: usize, m: usize) -> Result<f64> {
    check_setting(d, l, m)?;
    Ok(FRAC_PI_4 - PI * (l * m) as f64 / d as f64)
}

/// `Z_d^l X_d^m`, the unitary controlled on the ancilla for setting `(l, m)`.
pub fn weyl_unitary(d: usize, l: usize, m: usize) -> Result<ComplexMatrix> {
    check_setting(d, l, m)?;
    Ok(pauli_z(d)?.pow(l).mul(&pauli_x(d)?.pow(m)))
}

#[derive(Clone, Debug, Serialize)]
pub struct HwObservable {
    pub d: usize,
    pub l: usize,
    pub m: usize,
    pub phase_lm: f64,
    pub matrix: ComplexMatrix,
}

fn build_observable(d: usize, l: usize, m: usize, unitary: &ComplexMatrix) -> HwObservable {
    let half = C64::new(0.5, 0.5);
    let coeff = half * C64::from_polar(1.0, -PI * (l * m) as f64 / d as f64);
    let a = unitary.scale(coeff);
    HwObservable {
        d,
        l,
        m,
        phase_lm: FRAC_PI_4 - PI * (l * m) as f64 / d as f64,
        matrix: a.add(&a.adjoint()),
    }
}

type ObservableTable = Arc<Vec<HwObservable>>;

fn cache() -> &'static RwLock<HashMap<usize, ObservableTable>> {
    static CACHE: OnceLock<RwLock<HashMap<usize, ObservableTable>>> = OnceLock::new();
    CACHE.get_or_init(|| RwLock::new(HashMap::new()))
}

/// All `d²` observables in row-major `(l, m)` order, built once per `d`.
pub fn observables(d: usize) -> Result<ObservableTable> {
    check_dim(d)?;
    if let Some(table) = cache().read().expect("observable cache poisoned").get(&d) {
        return Ok(Arc::clone(table));
    }
    // Built outside the lock; a concurrent builder produces the same table and
    // whichever lands first is kept.
    let z = pauli_z(d)?;
    let x = pauli_x(d)?;
    let z_powers: Vec<ComplexMatrix> = (0..d).map(|l| z.pow(l)).collect();
    let x_powers: Vec<ComplexMatrix> = (0..d).map(|m| x.pow(m)).collect();
    let mut table = Vec::with_capacity(d * d);
    for (l, zl) in z_powers.iter().enumerate() {
        for (m, xm) in x_powers.iter().enumerate() {
            table.push(build_observable(d, l, m, &zl.mul(xm)));
        }
    }
    let table = Arc::new(table);
    let mut guard = cache().write().expect("observable cache poisoned");
    Ok(Arc::clone(guard.entry(d).or_insert(table)))
}

pub fn hw_observable(d: usize, l: usize, m: usize) -> Result<HwObservable> {
    check_setting(d, l, m)?;
    Ok(observables(d)?[l * d + m].clone())
}

/// `max |tr(Q_lm Q_l'm') - d δ_ll' δ_mm'|` over all pairs.
pub fn verify_orthogonality(d: usize) -> Result<f64> {
    let table = observables(d)?;
    let mut worst = 0.0_f64;
    for (a, qa) in table.iter().enumerate() {
        for (b, qb) in table.iter().enumerate() {
            let expected = if a == b { d as f64 } else { 0.0 };
            let dev = (trace_of_product(&qa.matrix, &qb.matrix) - C64::new(expected, 0.0)).norm();
            worst = worst.max(dev);
        }
    }
    Ok(worst)
}

/// The d² × d² Gram matrix `tr(Q_a Q_b)` in row-major setting order.
pub fn gram_matrix(d: usize) -> Result<ComplexMatrix> {
    let table = observables(d)?;
    let n = table.len();
    let mut g = ComplexMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            g[(a, b)] = trace_of_product(&table[a].matrix, &table[b].matrix);
        }
    }
    Ok(g)
}
