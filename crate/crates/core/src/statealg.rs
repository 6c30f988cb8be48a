//! Dense complex-matrix and density-operator algebra.
//!
//! Basis conventions are global: `|0> = |H>` is the ground state, `|1> = |V>`
//! the excited state, and composite indices are little-endian in the layout
//! order, so slot 0 is the most significant digit. For two qubits the basis
//! order is `{00, 01, 10, 11}`.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Maximum asymmetry that constructors silently symmetrize away.
pub const HERMITIAN_TOL: f64 = 1e-10;
/// Allowed deviation of the trace from one.
pub const TRACE_TOL: f64 = 1e-10;
/// Eigenvalues in `[-PSD_TOL, 0)` are clipped; anything lower is rejected.
pub const PSD_TOL: f64 = 1e-9;
/// Allowed deviation of a state vector's norm from one.
pub const NORM_TOL: f64 = 1e-10;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// A dense complex matrix.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows(), self.cols())?;
        for i in 0..self.rows() {
            write!(f, "  ")?;
            for j in 0..self.cols() {
                let z = self.get(i, j);
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self(DMatrix::zeros(rows, cols))
    }

    pub fn identity(n: usize) -> Self {
        Self(DMatrix::identity(n, n))
    }

    /// Builds a matrix from entries given in row-major order.
    pub fn from_row_slice(rows: usize, cols: usize, entries: &[C64]) -> Result<Self> {
        if entries.len() != rows * cols || rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self(DMatrix::from_row_slice(rows, cols, entries)))
    }

    /// Square matrix from real row-major entries. Panics on a length that is not a square.
    pub fn from_real(rows: &[&[f64]]) -> Self {
        let n = rows.len();
        let mut m = DMatrix::zeros(n, rows[0].len());
        for (i, row) in rows.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                m[(i, j)] = re(x);
            }
        }
        Self(m)
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    /// Outer product `|a><b|`.
    pub fn outer(a: &DVector<C64>, b: &DVector<C64>) -> Self {
        Self(a * b.adjoint())
    }

    pub fn from_inner(m: DMatrix<C64>) -> Self {
        Self(m)
    }

    pub fn inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn is_square(&self) -> bool {
        self.rows() == self.cols()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.0[(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, z: C64) {
        self.0[(i, j)] = z;
    }

    /// Entries in row-major order.
    pub fn entries(&self) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.0[(i, j)]);
            }
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn apply(&self, v: &DVector<C64>) -> DVector<C64> {
        &self.0 * v
    }

    pub fn column(&self, j: usize) -> DVector<C64> {
        self.0.column(j).into_owned()
    }

    /// `max |m_ij - conj(m_ji)|`.
    pub fn hermitian_asymmetry(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(m + m^dagger) / 2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * re(0.5))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn frobenius_distance(&self, other: &Self) -> f64 {
        (self - other).frobenius_norm()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self - other).0.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

/// Pauli operators and the raising operator `sigma^+ = |1><0|`.
pub mod pauli {
    use super::{c, re, ComplexMatrix};

    pub fn identity() -> ComplexMatrix {
        ComplexMatrix::identity(2)
    }

    pub fn x() -> ComplexMatrix {
        ComplexMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    pub fn y() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[re(0.0), c(0.0, -1.0), c(0.0, 1.0), re(0.0)])
            .expect("2x2")
    }

    pub fn z() -> ComplexMatrix {
        ComplexMatrix::from_real(&[&[1.0, 0.0], &[0.0, -1.0]])
    }

    pub fn raising() -> ComplexMatrix {
        ComplexMatrix::from_real(&[&[0.0, 0.0], &[1.0, 0.0]])
    }
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix(a.0.kronecker(&b.0))
}

/// Mixed-radix digits of a composite basis index, slot 0 most significant.
fn digits(mut index: usize, layout: &[usize]) -> Vec<usize> {
    let mut out = vec![0; layout.len()];
    for (k, &d) in layout.iter().enumerate().rev() {
        out[k] = index % d;
        index /= d;
    }
    out
}

fn compose(digits: &[usize], layout: &[usize]) -> usize {
    digits
        .iter()
        .zip(layout)
        .fold(0, |acc, (&digit, &d)| acc * d + digit)
}

fn check_layout(layout: &[usize], dim: usize) -> Result<()> {
    if layout.is_empty() || layout.contains(&0) {
        return Err(Error::DimensionMismatch("empty layout or zero-dimensional slot".into()));
    }
    let product: usize = layout.iter().product();
    if product != dim {
        return Err(Error::DimensionMismatch(format!(
            "layout {layout:?} has product {product}, matrix dimension is {dim}"
        )));
    }
    Ok(())
}

/// A normalized pure state with a subsystem layout.
#[derive(Clone, Debug, PartialEq)]
pub struct PureStateVector {
    amplitudes: DVector<C64>,
    layout: Vec<usize>,
}

impl PureStateVector {
    pub fn new(amplitudes: Vec<C64>, layout: Vec<usize>) -> Result<Self> {
        check_layout(&layout, amplitudes.len())?;
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amplitudes: v, layout })
    }

    /// Rescales the amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<C64>, layout: Vec<usize>) -> Result<Self> {
        check_layout(&layout, amplitudes.len())?;
        let v = DVector::from_vec(amplitudes);
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Ok(Self { amplitudes: v / re(norm), layout })
    }

    pub fn qubit(alpha: C64, beta: C64) -> Result<Self> {
        Self::new(vec![alpha, beta], vec![2])
    }

    /// `alpha |00> + beta |11>`.
    pub fn two_qubit_correlated(alpha: C64, beta: C64) -> Result<Self> {
        Self::new(vec![alpha, re(0.0), re(0.0), beta], vec![2, 2])
    }

    pub fn basis(layout: Vec<usize>, index: usize) -> Result<Self> {
        let dim: usize = layout.iter().product();
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, len: dim });
        }
        let mut amps = vec![re(0.0); dim];
        amps[index] = re(1.0);
        Self::new(amps, layout)
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.amplitudes
    }

    pub fn amplitude(&self, i: usize) -> C64 {
        self.amplitudes[i]
    }

    pub fn layout(&self) -> &[usize] {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let amplitudes = self.amplitudes.kronecker(&other.amplitudes);
        let mut layout = self.layout.clone();
        layout.extend_from_slice(&other.layout);
        Self { amplitudes, layout }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(format!(
                "vectors of length {} and {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(self.amplitudes.dotc(&other.amplitudes))
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix {
            matrix: ComplexMatrix::outer(&self.amplitudes, &self.amplitudes),
            layout: self.layout.clone(),
        }
    }

    /// Applies a unitary (or isometry onto the same space) and renormalizes rounding drift.
    pub fn evolve(&self, unitary: &ComplexMatrix) -> Result<Self> {
        if unitary.cols() != self.dim() || unitary.rows() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} operator on a vector of length {}",
                unitary.rows(),
                unitary.cols(),
                self.dim()
            )));
        }
        Self::normalized(unitary.apply(&self.amplitudes).iter().copied().collect(), self.layout.clone())
    }
}

/// A Hermitian, unit-trace, positive-semidefinite operator with a subsystem layout.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    matrix: ComplexMatrix,
    layout: Vec<usize>,
}

impl DensityMatrix {
    /// Validates and, where within tolerance, repairs a candidate density matrix.
    pub fn new(matrix: ComplexMatrix, layout: Vec<usize>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} density matrix",
                matrix.rows(),
                matrix.cols()
            )));
        }
        check_layout(&layout, matrix.rows())?;
        let asym = matrix.hermitian_asymmetry();
        if !(asym <= HERMITIAN_TOL) {
            return Err(Error::NotHermitian(asym));
        }
        let matrix = matrix.hermitian_part();
        let tr = matrix.trace().re;
        if !((tr - 1.0).abs() <= TRACE_TOL) {
            return Err(Error::BadTrace(tr));
        }
        let (values, vectors) = herm_eigen(&matrix)?;
        let smallest = values.last().copied().unwrap_or(0.0);
        if smallest < -PSD_TOL {
            return Err(Error::NotPositive(smallest));
        }
        if smallest < 0.0 {
            let clipped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
            let total: f64 = clipped.iter().sum();
            let diag = DMatrix::from_diagonal(&DVector::from_iterator(
                clipped.len(),
                clipped.iter().map(|&v| re(v / total)),
            ));
            let rebuilt = ComplexMatrix(&vectors.0 * diag * vectors.0.adjoint()).hermitian_part();
            return Ok(Self { matrix: rebuilt, layout });
        }
        Ok(Self { matrix, layout })
    }

    /// Divides by the trace before validating.
    pub fn from_unnormalized(matrix: ComplexMatrix, layout: Vec<usize>) -> Result<Self> {
        let tr = matrix.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::BadTrace(tr));
        }
        Self::new(matrix.scale(re(1.0 / tr)), layout)
    }

    pub fn from_pure(psi: &PureStateVector) -> Self {
        psi.density()
    }

    pub fn maximally_mixed(layout: Vec<usize>) -> Self {
        let dim: usize = layout.iter().product();
        Self {
            matrix: ComplexMatrix::identity(dim).scale(re(1.0 / dim as f64)),
            layout,
        }
    }

    /// `v |psi><psi| + (1 - v) I / d`.
    pub fn white_noise_mixture(psi: &PureStateVector, v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::InvalidProbability(v));
        }
        let pure = psi.density();
        let mixed = Self::maximally_mixed(psi.layout().to_vec());
        Self::new(
            &pure.matrix.scale(re(v)) + &mixed.matrix.scale(re(1.0 - v)),
            psi.layout().to_vec(),
        )
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn layout(&self) -> &[usize] {
        &self.layout
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.matrix.get(i, j)
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut layout = self.layout.clone();
        layout.extend_from_slice(&other.layout);
        Self { matrix: tensor(&self.matrix, &other.matrix), layout }
    }

    /// Expectation value `Tr(rho A)`.
    pub fn expectation(&self, op: &ComplexMatrix) -> Result<C64> {
        if op.rows() != self.dim() || op.cols() != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} observable on a {}-dimensional state",
                op.rows(),
                op.cols(),
                self.dim()
            )));
        }
        Ok((&self.matrix * op).trace())
    }
}

/// Reduced state on the `keep` subsystems, in layout order.
pub fn partial_trace(rho: &DensityMatrix, keep: &[usize]) -> Result<DensityMatrix> {
    let layout = rho.layout();
    if keep.is_empty() {
        return Err(Error::DimensionMismatch("keep set is empty".into()));
    }
    let mut kept: Vec<usize> = keep.to_vec();
    kept.sort_unstable();
    kept.dedup();
    if let Some(&bad) = kept.iter().find(|&&k| k >= layout.len()) {
        return Err(Error::IndexOutOfRange { index: bad, len: layout.len() });
    }
    let traced: Vec<usize> = (0..layout.len()).filter(|k| !kept.contains(k)).collect();
    let kept_layout: Vec<usize> = kept.iter().map(|&k| layout[k]).collect();
    let out_dim: usize = kept_layout.iter().product();
    let dim = rho.dim();
    let all_digits: Vec<Vec<usize>> = (0..dim).map(|i| digits(i, layout)).collect();
    let kept_index: Vec<usize> = all_digits
        .iter()
        .map(|d| {
            let sub: Vec<usize> = kept.iter().map(|&k| d[k]).collect();
            compose(&sub, &kept_layout)
        })
        .collect();
    let mut out = ComplexMatrix::zeros(out_dim, out_dim);
    for a in 0..dim {
        for b in 0..dim {
            if traced.iter().all(|&t| all_digits[a][t] == all_digits[b][t]) {
                let (i, j) = (kept_index[a], kept_index[b]);
                let z = out.get(i, j) + rho.get(a, b);
                out.set(i, j, z);
            }
        }
    }
    // The reduction of a valid state is valid; skip the eigen-check but keep Hermiticity exact.
    Ok(DensityMatrix { matrix: out.hermitian_part(), layout: kept_layout })
}

/// Transposes the `subsystem` factor of `rho`.
pub fn partial_transpose(rho: &DensityMatrix, subsystem: usize) -> Result<ComplexMatrix> {
    let layout = rho.layout();
    if subsystem >= layout.len() {
        return Err(Error::IndexOutOfRange { index: subsystem, len: layout.len() });
    }
    let dim = rho.dim();
    let mut out = ComplexMatrix::zeros(dim, dim);
    for a in 0..dim {
        let da = digits(a, layout);
        for b in 0..dim {
            let db = digits(b, layout);
            let mut na = da.clone();
            let mut nb = db.clone();
            na[subsystem] = db[subsystem];
            nb[subsystem] = da[subsystem];
            out.set(compose(&na, layout), compose(&nb, layout), rho.get(a, b));
        }
    }
    Ok(out)
}

/// Eigenvalues (descending) and matching eigenvectors as columns.
pub fn herm_eigen(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    let asym = m.hermitian_asymmetry();
    if !(asym <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian(asym));
    }
    let eig = m.hermitian_part().0.symmetric_eigen();
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (col, &i) in order.iter().enumerate() {
        vectors.set_column(col, &eig.eigenvectors.column(i));
    }
    Ok((values, ComplexMatrix(vectors)))
}

/// Real eigenvalues of a Hermitian matrix, sorted descending.
pub fn herm_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    herm_eigen(m).map(|(values, _)| values)
}

/// Singular values of the amplitudes reshaped as (`partition` slots) x (the rest), descending.
pub fn schmidt_coefficients(psi: &PureStateVector, partition: &[usize]) -> Result<Vec<f64>> {
    let layout = psi.layout();
    let mut sorted = partition.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() || sorted.len() != partition.len() {
        return Err(Error::DimensionMismatch(format!("invalid partition {partition:?}")));
    }
    if let Some(&bad) = sorted.iter().find(|&&k| k >= layout.len()) {
        return Err(Error::IndexOutOfRange { index: bad, len: layout.len() });
    }
    let rest: Vec<usize> = (0..layout.len()).filter(|k| !sorted.contains(k)).collect();
    let row_layout: Vec<usize> = sorted.iter().map(|&k| layout[k]).collect();
    let col_layout: Vec<usize> = rest.iter().map(|&k| layout[k]).collect();
    let rows: usize = row_layout.iter().product();
    let cols: usize = col_layout.iter().product();
    let mut m = DMatrix::zeros(rows, cols);
    for index in 0..psi.dim() {
        let d = digits(index, layout);
        let r: Vec<usize> = sorted.iter().map(|&k| d[k]).collect();
        let c: Vec<usize> = rest.iter().map(|&k| d[k]).collect();
        m[(compose(&r, &row_layout), compose(&c, &col_layout))] = psi.amplitude(index);
    }
    let mut sv: Vec<f64> = m.svd(false, false).singular_values.iter().copied().collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

/// Principal square root of a positive-semidefinite Hermitian matrix.
pub fn psd_sqrt(m: &ComplexMatrix) -> Result<ComplexMatrix> {
    let (values, vectors) = herm_eigen(m)?;
    // Eigenvalues below the numerical rank threshold are rounding noise; their
    // square roots would otherwise be of order 1e-8.
    let cutoff = values.len() as f64 * f64::EPSILON * values.first().copied().unwrap_or(0.0).abs();
    let diag = DMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| re(if v > cutoff { v.sqrt() } else { 0.0 })),
    ));
    Ok(ComplexMatrix(&vectors.0 * diag * vectors.0.adjoint()).hermitian_part())
}

/// `Tr(rho^2)`.
pub fn purity(rho: &DensityMatrix) -> f64 {
    // Tr(rho^2) = sum |rho_ij|^2 for Hermitian rho.
    rho.matrix().inner().iter().map(|z| z.norm_sqr()).sum()
}

/// `<phi| rho |phi>`.
pub fn projection_probability(rho: &DensityMatrix, phi: &PureStateVector) -> Result<f64> {
    if phi.dim() != rho.dim() {
        return Err(Error::DimensionMismatch(format!(
            "projector of length {} on a {}-dimensional state",
            phi.dim(),
            rho.dim()
        )));
    }
    let v = phi.amplitudes();
    Ok(v.dotc(&rho.matrix().apply(v)).re)
}

/// Uhlmann fidelity `(Tr |sqrt(rho) sqrt(sigma)|)^2`, via singular values so that
/// rank-deficient states do not lose half their digits.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch("fidelity between states of different dimension".into()));
    }
    let product = &psd_sqrt(rho.matrix())? * &psd_sqrt(sigma.matrix())?;
    let root: f64 = product.0.svd(false, false).singular_values.iter().sum();
    Ok((root * root).min(1.0))
}

/// Lifts `op`, acting on `slots` (in the given order), to the full space of `layout`.
pub fn embed_operator(op: &ComplexMatrix, slots: &[usize], layout: &[usize]) -> Result<ComplexMatrix> {
    if let Some(&bad) = slots.iter().find(|&&s| s >= layout.len()) {
        return Err(Error::IndexOutOfRange { index: bad, len: layout.len() });
    }
    let sub_layout: Vec<usize> = slots.iter().map(|&s| layout[s]).collect();
    let sub_dim: usize = sub_layout.iter().product();
    if op.rows() != sub_dim || op.cols() != sub_dim {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on slots of total dimension {sub_dim}",
            op.rows(),
            op.cols()
        )));
    }
    let dim: usize = layout.iter().product();
    let rest: Vec<usize> = (0..layout.len()).filter(|k| !slots.contains(k)).collect();
    let all: Vec<Vec<usize>> = (0..dim).map(|i| digits(i, layout)).collect();
    let sub_index = |d: &[usize]| {
        let sub: Vec<usize> = slots.iter().map(|&s| d[s]).collect();
        compose(&sub, &sub_layout)
    };
    let mut out = ComplexMatrix::zeros(dim, dim);
    for a in 0..dim {
        for b in 0..dim {
            if rest.iter().all(|&r| all[a][r] == all[b][r]) {
                let z = op.get(sub_index(&all[a]), sub_index(&all[b]));
                if z != re(0.0) {
                    out.set(a, b, z);
                }
            }
        }
    }
    Ok(out)
}

/// Extends prescribed orthonormal columns to a full unitary by Gram-Schmidt over the
/// standard basis. `fixed` lists `(column index, column vector)` pairs.
pub fn complete_unitary(dim: usize, fixed: &[(usize, DVector<C64>)]) -> Result<ComplexMatrix> {
    let mut basis: Vec<DVector<C64>> = Vec::with_capacity(dim);
    for (_, v) in fixed {
        if v.len() != dim {
            return Err(Error::DimensionMismatch("column length differs from dimension".into()));
        }
        basis.push(v.clone());
    }
    for k in 0..dim {
        if basis.len() == dim {
            break;
        }
        let mut candidate = DVector::from_element(dim, re(0.0));
        candidate[k] = re(1.0);
        for _ in 0..2 {
            for b in &basis {
                let overlap = b.dotc(&candidate);
                candidate -= b * overlap;
            }
        }
        let norm = candidate.norm();
        if norm > 1e-8 {
            basis.push(candidate / re(norm));
        }
    }
    if basis.len() != dim {
        return Err(Error::Numerical("could not complete the unitary".into()));
    }
    let mut out = DMatrix::zeros(dim, dim);
    let mut used = vec![false; dim];
    for (col, v) in fixed {
        if *col >= dim || used[*col] {
            return Err(Error::DimensionMismatch(format!("bad or repeated column index {col}")));
        }
        used[*col] = true;
        out.set_column(*col, v);
    }
    let mut extra = basis.into_iter().skip(fixed.len());
    for (col, taken) in used.iter().enumerate() {
        if !taken {
            out.set_column(col, &extra.next().expect("basis has dim vectors"));
        }
    }
    Ok(ComplexMatrix(out))
}
