//! Dense complex matrices and the validated operator types built on them.
//!
//! Everything downstream works with three wrappers around a square complex
//! matrix: [`Operator`] (any finite matrix), [`Projection`] (Hermitian
//! idempotent) and [`State`] (density matrix). Hermitian spectral
//! decompositions come back sorted ascending with phase-normalised
//! eigenvectors so that results are reproducible bit for bit.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Numerical tolerances shared by the whole crate.
pub mod tol {
    /// Hermiticity residual `‖m − m†‖`.
    pub const HERM: f64 = 1e-10;
    /// Idempotence residual `‖p² − p‖`.
    pub const IDEM: f64 = 1e-10;
    /// Spectral reconstruction residual.
    pub const RECON: f64 = 1e-10;
    /// Unitarity residual of eigenvector matrices.
    pub const UNIT: f64 = 1e-10;
    /// Smallest admissible eigenvalue of a density matrix.
    pub const PSD: f64 = 1e-10;
    /// Trace deviation of a density matrix.
    pub const TRACE: f64 = 1e-12;
    /// Eigenvalue snapping window around 0 and 1.
    pub const SPEC: f64 = 1e-8;
    /// Relative rank cutoff (fraction of the largest singular value).
    pub const RANK: f64 = 1e-8;
    /// Eigenvalues closer than this belong to one cluster.
    pub const CLUSTER: f64 = 1e-9;
    /// Commutator residual below which two operators commute.
    pub const COMM: f64 = 1e-9;
    /// Residual of a Hilbert–Schmidt projection onto an algebra span.
    pub const SPAN: f64 = 1e-9;
}

pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

/// A square complex matrix with finite entries.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator(CMatrix);

impl Operator {
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        if m.nrows() == 0 {
            return Err(Error::Empty);
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(m))
    }

    /// Builds an operator from row-major complex rows.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let n = rows.len();
        for r in rows {
            if r.len() != n {
                return Err(Error::NotSquare { rows: n, cols: r.len() });
            }
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    /// Builds an operator from a row-major slice of real entries.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::InvalidParameter(format!(
                "expected {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Self::new(CMatrix::from_fn(dim, dim, |i, j| c64(entries[i * dim + j], 0.0)))
    }

    pub(crate) fn from_matrix_unchecked(m: CMatrix) -> Self {
        debug_assert_eq!(m.nrows(), m.ncols());
        Self(m)
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(CMatrix::zeros(dim, dim))
    }

    pub fn diagonal(entries: &[f64]) -> Self {
        let d = DVector::from_iterator(entries.len(), entries.iter().map(|&x| c64(x, 0.0)));
        Self(CMatrix::from_diagonal(&d))
    }

    /// Rank-one operator `|ψ⟩⟨ψ|` (not normalised).
    pub fn outer(psi: &CVector) -> Self {
        Self(psi * psi.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn scale(&self, s: C64) -> Self {
        Self(&self.0 * s)
    }

    pub fn scale_real(&self, s: f64) -> Self {
        Self(&self.0 * c64(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn kron(&self, other: &Operator) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn commutator(&self, other: &Operator) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }

    /// Hilbert–Schmidt (Frobenius) norm.
    pub fn fro_norm(&self) -> f64 {
        self.0.norm()
    }

    /// Operator (spectral) norm: the largest singular value.
    pub fn norm(&self) -> f64 {
        op_norm(&self.0)
    }

    /// `‖m − m†‖`.
    pub fn hermiticity_residual(&self) -> f64 {
        op_norm(&(&self.0 - self.0.adjoint()))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    /// `(m + m†)/2`.
    pub fn hermitian_part(&self) -> Self {
        Self((&self.0 + self.0.adjoint()) * c64(0.5, 0.0))
    }

    /// `(m − m†)/(2i)`, Hermitian whenever defined.
    pub fn antihermitian_part(&self) -> Self {
        Self((&self.0 - self.0.adjoint()) * c64(0.0, -0.5))
    }

    pub fn check_same_dim(&self, other: &Operator) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(())
    }
}

pub(crate) fn op_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone()
        .svd(false, false)
        .singular_values
        .iter()
        .fold(0.0_f64, |acc, &s| acc.max(s))
}

impl<'a> Add<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn add(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn sub(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 - &rhs.0)
    }
}

impl<'a> Mul<&'a Operator> for &'a Operator {
    type Output = Operator;
    fn mul(self, rhs: &'a Operator) -> Operator {
        Operator(&self.0 * &rhs.0)
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        Operator(-&self.0)
    }
}

/// Hilbert–Schmidt inner product `Tr(a† b)`.
pub fn hs_inner(a: &Operator, b: &Operator) -> Result<C64> {
    a.check_same_dim(b)?;
    Ok(a.0.dotc(&b.0))
}

/// Eigen-decomposition of a Hermitian operator, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<f64>,
    /// Columns are orthonormal eigenvectors, in eigenvalue order.
    pub eigenvectors: CMatrix,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// `U Λ U†`.
    pub fn reconstruct(&self) -> Operator {
        let lambda = DVector::from_iterator(self.dim(), self.eigenvalues.iter().map(|&x| c64(x, 0.0)));
        Operator(&self.eigenvectors * CMatrix::from_diagonal(&lambda) * self.eigenvectors.adjoint())
    }

    /// Groups consecutive eigenvalues whose gap is at most `gap` into
    /// clusters; returns index ranges into `eigenvalues`.
    pub fn clusters(&self, gap: f64) -> Vec<std::ops::Range<usize>> {
        let mut out = Vec::new();
        let mut start = 0;
        for i in 1..=self.dim() {
            if i == self.dim() || self.eigenvalues[i] - self.eigenvalues[i - 1] > gap {
                out.push(start..i);
                start = i;
            }
        }
        out
    }

    /// The eigenvectors with the given indices, as columns of an isometry.
    pub fn isometry<I: IntoIterator<Item = usize>>(&self, indices: I) -> CMatrix {
        let cols: Vec<CVector> = indices
            .into_iter()
            .map(|i| self.eigenvectors.column(i).into_owned())
            .collect();
        if cols.is_empty() {
            return CMatrix::zeros(self.dim(), 0);
        }
        CMatrix::from_columns(&cols)
    }

    /// Orthogonal projection onto the span of the given eigenvectors.
    pub fn projection<I: IntoIterator<Item = usize>>(&self, indices: I) -> Projection {
        Projection::from_isometry(&self.isometry(indices))
    }
}

/// Hermitian spectral decomposition.
pub fn spectral(h: &Operator) -> Result<SpectralDecomposition> {
    let r = h.hermiticity_residual();
    if r > tol::HERM {
        return Err(Error::NotHermitian(r));
    }
    Ok(spectral_unchecked(&h.0))
}

/// Spectral decomposition of the Hermitian part of `m`, no validation.
pub(crate) fn spectral_unchecked(m: &CMatrix) -> SpectralDecomposition {
    let d = m.nrows();
    let herm = (m + m.adjoint()) * c64(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]).then(i.cmp(&j)));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = CMatrix::zeros(d, d);
    for (k, &i) in order.iter().enumerate() {
        let mut v = eig.eigenvectors.column(i).into_owned();
        normalize_phase(&mut v);
        eigenvectors.set_column(k, &v);
    }
    SpectralDecomposition { eigenvalues, eigenvectors }
}

/// Rotates the global phase so that the first entry of (near) maximal
/// modulus is real and positive.
pub fn normalize_phase(v: &mut CVector) {
    let max = v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if max == 0.0 {
        return;
    }
    if let Some(z) = v.iter().find(|z| z.norm() >= max * (1.0 - 1e-9)).copied() {
        let phase = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= phase);
    }
}

/// A validated orthogonal projection.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection(Operator);

impl Projection {
    pub fn zero(dim: usize) -> Self {
        Self(Operator::zeros(dim))
    }

    pub fn identity(dim: usize) -> Self {
        Self(Operator::identity(dim))
    }

    /// `V V†` for a matrix `V` with orthonormal columns.
    pub fn from_isometry(v: &CMatrix) -> Self {
        Self(Operator(v * v.adjoint()))
    }

    /// Projection onto the line spanned by `psi` (normalised internally).
    pub fn onto_vector(psi: &CVector) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidParameter("zero vector".into()));
        }
        let u = psi / c64(n, 0.0);
        Ok(Self::from_isometry(&CMatrix::from_columns(&[u])))
    }

    pub(crate) fn from_operator_unchecked(op: Operator) -> Self {
        Self(op)
    }

    pub fn op(&self) -> &Operator {
        &self.0
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0 .0
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn rank(&self) -> usize {
        self.0.trace().re.round().max(0.0) as usize
    }

    pub fn is_zero(&self) -> bool {
        self.0.fro_norm() <= tol::SPEC
    }

    pub fn is_identity(&self) -> bool {
        (&self.0 - &Operator::identity(self.dim())).fro_norm() <= tol::SPEC
    }

    /// Orthonormal basis of the range, as columns.
    pub fn range_basis(&self) -> CMatrix {
        let sd = spectral_unchecked(self.matrix());
        let idx: Vec<usize> = (0..sd.dim()).filter(|&i| sd.eigenvalues[i] > 0.5).collect();
        sd.isometry(idx)
    }

    /// `‖self·g − g‖`, zero exactly when `g ≤ self`.
    pub fn dominance_residual(&self, g: &Projection) -> f64 {
        (&(&self.0 * &g.0) - &g.0).norm()
    }

    pub fn into_operator(self) -> Operator {
        self.0
    }
}

/// Validates `m` as a projection and snaps its spectrum onto {0, 1}.
pub fn make_projection(m: &Operator) -> Result<Projection> {
    snap_projection(m, tol::HERM, tol::SPEC)
}

pub(crate) fn snap_projection(m: &Operator, herm_tol: f64, spec_tol: f64) -> Result<Projection> {
    let r = m.hermiticity_residual();
    if r > herm_tol {
        return Err(Error::NotHermitian(r));
    }
    let sd = spectral_unchecked(&m.0);
    let mut keep = Vec::new();
    for (i, &lambda) in sd.eigenvalues.iter().enumerate() {
        if (lambda - 1.0).abs() <= spec_tol {
            keep.push(i);
        } else if lambda.abs() > spec_tol {
            return Err(Error::NotProjection(lambda));
        }
    }
    Ok(sd.projection(keep))
}

/// `1 − e`.
pub fn complement(e: &Projection) -> Projection {
    Projection(&Operator::identity(e.dim()) - &e.0)
}

/// A density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    rho: Operator,
}

impl State {
    pub fn new(rho: Operator) -> Result<Self> {
        let r = rho.hermiticity_residual();
        if r > tol::HERM {
            return Err(Error::InvalidState(format!("not Hermitian (residual {r:e})")));
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > tol::TRACE || tr.im.abs() > tol::TRACE {
            return Err(Error::InvalidState(format!("trace {} ≠ 1", tr.re)));
        }
        let min = spectral_unchecked(&rho.0).eigenvalues[0];
        if min < -tol::PSD {
            return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
        }
        Ok(Self { rho })
    }

    /// `MM†/Tr(MM†)`; fails only for the zero matrix.
    pub fn from_factor(m: &CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
        }
        let mm = m * m.adjoint();
        let tr = mm.trace().re;
        if !(tr > 0.0) || !tr.is_finite() {
            return Err(Error::InvalidState("zero factor".into()));
        }
        let mut rho = mm / c64(tr, 0.0);
        rho = (&rho + rho.adjoint()) * c64(0.5, 0.0);
        Ok(Self { rho: Operator(rho) })
    }

    pub fn pure(psi: &CVector) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::InvalidState("zero vector".into()));
        }
        let u = psi / c64(n, 0.0);
        Ok(Self { rho: Operator(&u * u.adjoint()) })
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self { rho: Operator::identity(dim).scale_real(1.0 / dim as f64) }
    }

    pub(crate) fn from_operator_unchecked(rho: Operator) -> Self {
        Self { rho }
    }

    pub fn rho(&self) -> &Operator {
        &self.rho
    }

    pub fn dim(&self) -> usize {
        self.rho.dim()
    }

    /// `Tr(ρ c)`.
    pub fn expect(&self, c: &Operator) -> Result<C64> {
        expectation(self, c)
    }

    /// `ω(E)`, the real part of `Tr(ρE)`.
    pub fn prob(&self, e: &Projection) -> f64 {
        trace_product(self.rho.matrix(), e.matrix()).re
    }

    /// Von Neumann entropy in nats.
    pub fn entropy(&self) -> f64 {
        spectral_unchecked(self.rho.matrix())
            .eigenvalues
            .iter()
            .filter(|&&p| p > 1e-15)
            .map(|&p| -p * p.ln())
            .sum()
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &State) -> Result<f64> {
        self.rho.check_same_dim(&other.rho)?;
        let diff = &self.rho.0 - &other.rho.0;
        Ok(0.5 * spectral_unchecked(&diff).eigenvalues.iter().map(|x| x.abs()).sum::<f64>())
    }
}

/// `Tr(a b)` without forming the product.
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let d = a.nrows();
    let mut acc = c64(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

/// `ω(C) = Tr(ρC)`.
pub fn expectation(omega: &State, c: &Operator) -> Result<C64> {
    omega.rho.check_same_dim(c)?;
    Ok(trace_product(omega.rho.matrix(), c.matrix()))
}

/// Pauli matrices and a few standard vectors, handy for presets and tests.
pub mod pauli {
    use super::{c64, CVector, Operator};

    pub fn x() -> Operator {
        Operator::from_real(2, &[0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    pub fn y() -> Operator {
        Operator::from_rows(&[vec![c64(0.0, 0.0), c64(0.0, -1.0)], vec![c64(0.0, 1.0), c64(0.0, 0.0)]])
            .unwrap()
    }

    pub fn z() -> Operator {
        Operator::diagonal(&[1.0, -1.0])
    }

    pub fn ket(entries: &[f64]) -> CVector {
        CVector::from_iterator(entries.len(), entries.iter().map(|&x| c64(x, 0.0)))
    }

    /// `|+⟩ = (|0⟩ + |1⟩)/√2`.
    pub fn plus() -> CVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ket(&[s, s])
    }

    /// `|−⟩ = (|0⟩ − |1⟩)/√2`.
    pub fn minus() -> CVector {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        ket(&[s, -s])
    }
}
