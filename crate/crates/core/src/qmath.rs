//! Dense complex linear algebra used by every other module.
//!
//! Matrices are stored row-major. Composite spaces use the first tensor
//! factor as the slow index, so `|a⟩ ⊗ |b⟩` lives at `a * dim_b + b`; the
//! ancilla is always the first factor.

use std::fmt;
use std::ops::{Index, IndexMut};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Validation tolerance for Hermiticity, unit trace and positivity.
pub const PHYSICAL_TOL: f64 = 1e-10;

/// Normalization tolerance for pure-state amplitudes.
pub const NORM_TOL: f64 = 1e-12;

/// Eigenvalues below this are treated as zero inside matrix square roots.
const SQRT_FLOOR: f64 = 1e-12;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    /// Builds a matrix from row-major entries, checking shape and finiteness.
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "matrix shape {rows}x{cols} must be positive"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if let Some(pos) = data
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: Vec<Vec<C64>>) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != n_cols) {
            return Err(Error::DimensionMismatch(format!(
                "row {bad} has {} entries, expected {n_cols}",
                rows[bad].len()
            )));
        }
        Self::new(n_rows, n_cols, rows.into_iter().flatten().collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix shape must be positive");
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &z) in diag.iter().enumerate() {
            m[(i, i)] = z;
        }
        m
    }

    /// `|ψ⟩⟨ψ|` for an arbitrary (not necessarily normalized) ket.
    pub fn outer(ket: &[C64]) -> Self {
        let n = ket.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = ket[i] * ket[j].conj();
            }
        }
        m
    }

    /// `|j⟩⟨j|` in dimension `n`.
    pub fn projector(n: usize, j: usize) -> Self {
        let mut m = Self::zeros(n, n);
        m[(j, j)] = ONE;
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<C64>> {
        self.data.chunks(self.cols).map(<[C64]>::to_vec).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    /// Matrix product `self · rhs`.
    ///
    /// Panics if the inner dimensions disagree.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "inner dimensions must agree");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                let row = &rhs.data[k * rhs.cols..(k + 1) * rhs.cols];
                let dst = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in dst.iter_mut().zip(row) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// `self · rho · self^dag`.
    pub fn conjugate(&self, rho: &Self) -> Self {
        self.mul(rho).mul(&self.adjoint())
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a - b)
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(C64, C64) -> C64) -> Self {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shapes must agree"
        );
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    /// Integer power by repeated multiplication; `pow(0)` is the identity.
    pub fn pow(&self, n: usize) -> Self {
        assert!(self.is_square(), "power of a non-square matrix");
        (0..n).fold(Self::identity(self.rows), |acc, _| acc.mul(self))
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(self.cols, v.len(), "vector length must match columns");
        self.data
            .chunks(self.cols)
            .map(|row| row.iter().zip(v).map(|(&a, &b)| a * b).sum())
            .collect()
    }

    pub fn max_abs_diff(&self, rhs: &Self) -> f64 {
        assert_eq!(
            (self.rows, self.cols),
            (rhs.rows, rhs.cols),
            "shapes must agree"
        );
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(C64::norm_sqr).sum::<f64>().sqrt()
    }

    /// `max |A - A^dag|`; infinite for non-square input.
    pub fn hermiticity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `max |U^dag U - I|`; infinite for non-square input.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        self.adjoint()
            .mul(self)
            .max_abs_diff(&Self::identity(self.rows))
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    fn from_nalgebra(m: &DMatrix<C64>) -> Self {
        let mut out = Self::zeros(m.nrows(), m.ncols());
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                out[(i, j)] = m[(i, j)];
            }
        }
        out
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for row in self.data.chunks(self.cols) {
            write!(f, "  ")?;
            for z in row {
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl Serialize for ComplexMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<C64>>::deserialize(deserializer)?;
        ComplexMatrix::from_rows(rows).map_err(D::Error::custom)
    }
}

/// Kronecker product `a ⊗ b`, first factor as the slow index.
pub fn tensor_product(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ai in 0..a.rows {
        for aj in 0..a.cols {
            let x = a[(ai, aj)];
            if x == ZERO {
                continue;
            }
            for bi in 0..b.rows {
                for bj in 0..b.cols {
                    out[(ai * b.rows + bi, aj * b.cols + bj)] = x * b[(bi, bj)];
                }
            }
        }
    }
    out
}

/// Traces out every subsystem except `keep`.
pub fn partial_trace(m: &ComplexMatrix, dims: &[usize], keep: usize) -> Result<ComplexMatrix> {
    if keep >= dims.len() {
        return Err(Error::DimensionMismatch(format!(
            "cannot keep subsystem {keep} of {}",
            dims.len()
        )));
    }
    if dims.contains(&0) {
        return Err(Error::DimensionMismatch(
            "zero-dimensional subsystem".into(),
        ));
    }
    let total: usize = dims.iter().product();
    if !m.is_square() || m.rows != total {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix does not match subsystem dims {dims:?}",
            m.rows, m.cols
        )));
    }
    let kept = dims[keep];
    let left: usize = dims[..keep].iter().product();
    let right: usize = dims[keep + 1..].iter().product();
    let mut out = ComplexMatrix::zeros(kept, kept);
    for i in 0..kept {
        for j in 0..kept {
            let mut acc = ZERO;
            for a in 0..left {
                for b in 0..right {
                    acc += m[((a * kept + i) * right + b, (a * kept + j) * right + b)];
                }
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// `tr(a · b)` without forming the product.
pub fn trace_of_product(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    assert!(
        a.cols == b.rows && a.rows == b.cols,
        "shapes must be compatible"
    );
    let mut acc = ZERO;
    for i in 0..a.rows {
        for k in 0..a.cols {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    /// Eigenvectors as columns, in the order of `values`.
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V · diag(values) · V^dag` for replacement eigenvalues.
    pub fn reassemble(&self, values: &[f64]) -> ComplexMatrix {
        let n = self.vectors.rows;
        assert_eq!(values.len(), n);
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lambda) in values.iter().enumerate() {
            if lambda == 0.0 {
                continue;
            }
            for i in 0..n {
                let vi = self.vectors[(i, k)] * lambda;
                for j in 0..n {
                    out[(i, j)] += vi * self.vectors[(j, k)].conj();
                }
            }
        }
        out
    }
}

/// Eigendecomposition of the Hermitian part of `m`.
pub fn hermitian_eigen(m: &ComplexMatrix) -> HermitianEigen {
    assert!(m.is_square(), "eigendecomposition needs a square matrix");
    let sym = m.add(&m.adjoint()).scale_real(0.5);
    let eig = sym.to_nalgebra().symmetric_eigen();
    let mut order: Vec<usize> = (0..m.rows).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = ComplexMatrix::from_nalgebra(&eig.eigenvectors.select_columns(&order));
    HermitianEigen { values, vectors }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityMatrix {
    mat: ComplexMatrix,
}

impl DensityMatrix {
    pub fn new(mat: ComplexMatrix) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "density matrix must be square, got {}x{}",
                mat.rows, mat.cols
            )));
        }
        let herm = mat.hermiticity_defect();
        if herm > PHYSICAL_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = mat.trace();
        if (tr - ONE).norm() > PHYSICAL_TOL {
            return Err(Error::TraceNotOne(tr.re));
        }
        let lowest = hermitian_eigen(&mat).values[0];
        if lowest < -PHYSICAL_TOL {
            return Err(Error::NotPositive(lowest));
        }
        Ok(Self { mat })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            mat: ComplexMatrix::identity(d).scale_real(1.0 / d as f64),
        }
    }

    /// Computational basis state `|j⟩⟨j|`.
    pub fn basis(d: usize, j: usize) -> Result<Self> {
        if j >= d {
            return Err(Error::InvalidArgument(format!(
                "basis index {j} >= d = {d}"
            )));
        }
        Ok(Self {
            mat: ComplexMatrix::projector(d, j),
        })
    }

    /// Convex combination `Σ w_k ρ_k`; weights must be non-negative and sum to 1.
    pub fn mixture(parts: &[(f64, &DensityMatrix)]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty mixture".into()))?;
        let mut acc = ComplexMatrix::zeros(first.1.dim(), first.1.dim());
        for &(w, rho) in parts {
            if w < 0.0 {
                return Err(Error::InvalidArgument(format!("negative weight {w}")));
            }
            if rho.dim() != first.1.dim() {
                return Err(Error::DimensionMismatch("mixture of different dims".into()));
            }
            acc = acc.add(&rho.mat.scale_real(w));
        }
        Self::new(acc)
    }

    pub fn dim(&self) -> usize {
        self.mat.rows
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.mat
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let mat = ComplexMatrix::deserialize(deserializer)?;
        DensityMatrix::new(mat).map_err(D::Error::custom)
    }
}

/// Normalized state vector.
#[derive(Clone, Debug, PartialEq)]
pub struct PureState {
    amplitudes: Vec<C64>,
}

impl PureState {
    pub fn new(amplitudes: Vec<C64>) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::DimensionMismatch("empty state vector".into()));
        }
        if let Some(pos) = amplitudes
            .iter()
            .position(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(Error::NonFinite { row: pos, col: 0 });
        }
        let norm: f64 = amplitudes.iter().map(C64::norm_sqr).sum();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amplitudes })
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            mat: ComplexMatrix::outer(&self.amplitudes),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub fidelity: f64,
    pub trace_distance: f64,
    pub frobenius_distance: f64,
}

fn psd_sqrt(m: &ComplexMatrix) -> ComplexMatrix {
    let eig = hermitian_eigen(m);
    let roots: Vec<f64> = eig
        .values
        .iter()
        .map(|&v| if v > SQRT_FLOOR { v.sqrt() } else { 0.0 })
        .collect();
    eig.reassemble(&roots)
}

/// Uhlmann fidelity `(tr √(√a b √a))²`.
pub fn fidelity(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_same_dim(a, b)?;
    let root_a = psd_sqrt(&a.mat);
    let inner = root_a.mul(&b.mat).mul(&root_a);
    let root_trace: f64 = hermitian_eigen(&inner)
        .values
        .iter()
        .filter(|&&v| v > SQRT_FLOOR)
        .map(|v| v.sqrt())
        .sum();
    Ok(root_trace * root_trace)
}

/// `½ tr|a - b|`.
pub fn trace_distance(a: &DensityMatrix, b: &DensityMatrix) -> Result<f64> {
    check_same_dim(a, b)?;
    let diff = a.mat.sub(&b.mat);
    Ok(0.5
        * hermitian_eigen(&diff)
            .values
            .iter()
            .map(|v| v.abs())
            .sum::<f64>())
}

pub fn metrics(a: &DensityMatrix, b: &DensityMatrix) -> Result<Metrics> {
    Ok(Metrics {
        fidelity: fidelity(a, b)?,
        trace_distance: trace_distance(a, b)?,
        frobenius_distance: a.mat.sub(&b.mat).frobenius_norm(),
    })
}

fn check_same_dim(a: &DensityMatrix, b: &DensityMatrix) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch(format!(
            "states of dimension {} and {}",
            a.dim(),
            b.dim()
        )));
    }
    Ok(())
}

/// `G G^dag / tr(G G^dag)` for a `d × rank` matrix `G` of standard complex
/// Gaussians drawn from ChaCha20 seeded with `seed`.
pub fn random_density_matrix(d: usize, rank: usize, seed: u64) -> Result<DensityMatrix> {
    if d == 0 || rank == 0 || rank > d {
        return Err(Error::InvalidArgument(format!(
            "rank {rank} must lie in [1, {d}]"
        )));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    let g: Vec<C64> = (0..d * rank)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            C64::new(re * scale, im * scale)
        })
        .collect();
    let g = ComplexMatrix::new(d, rank, g)?;
    let gg = g.mul(&g.adjoint());
    let tr = gg.trace().re;
    DensityMatrix::new(gg.scale_real(1.0 / tr))
}

/// Haar-ish random pure state (normalized complex Gaussian vector).
pub fn random_pure_state(d: usize, seed: u64) -> Result<PureState> {
    if d == 0 {
        return Err(Error::InvalidDimension(d));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let raw: Vec<C64> = (0..d)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    let norm = raw.iter().map(C64::norm_sqr).sum::<f64>().sqrt();
    PureState::new(raw.into_iter().map(|z| z / norm).collect())
}
