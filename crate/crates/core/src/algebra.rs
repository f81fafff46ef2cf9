//! Finite-dimensional von Neumann algebras.
//!
//! An [`OperatorAlgebra`] is stored as a Hilbert–Schmidt orthonormal basis of
//! *Hermitian* matrices spanning it. Because every algebra here is closed
//! under adjoints, such a basis always exists, and real Gaussian
//! combinations of it give random self-adjoint elements directly.

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{c64, op_norm, spectral_unchecked, tol, CMatrix, Operator, Projection, SpectralDecomposition};
use crate::random::{self, SeededRng};

/// Safety cap on closure rounds in [`generate`].
pub const MAX_ROUNDS: usize = 50;
/// Attempts allowed to find a probe element with well separated clusters.
pub const CENTRAL_RETRIES: usize = 10;
/// Probe clusters must be separated by more than this.
pub const CLUSTER_SEPARATION: f64 = 1e-6;
/// Largest number of minimal projections [`enumerate_projections`] accepts.
pub const MAX_MINIMAL_PROJECTIONS: usize = 20;

/// Candidates with a norm below this are treated as zero.
const CANDIDATE_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct OperatorAlgebra {
    dim: usize,
    basis: Vec<CMatrix>,
    /// Hermitian elements generating the algebra as a unital *-algebra.
    generators: Vec<CMatrix>,
}

/// Incremental Hermitian Gram–Schmidt with re-orthogonalisation.
struct HermitianSpan {
    dim: usize,
    basis: Vec<CMatrix>,
}

impl HermitianSpan {
    fn new(dim: usize) -> Self {
        Self { dim, basis: Vec::new() }
    }

    fn full(&self) -> bool {
        self.basis.len() >= self.dim * self.dim
    }

    /// Adds the component of a Hermitian candidate orthogonal to the
    /// current span; returns whether the span grew.
    fn try_add(&mut self, cand: &CMatrix) -> bool {
        if self.full() {
            return false;
        }
        let n0 = cand.norm();
        if !(n0 > CANDIDATE_FLOOR) {
            return false;
        }
        let mut v = cand / c64(n0, 0.0);
        for _ in 0..2 {
            for b in &self.basis {
                let c = b.dotc(&v).re;
                v -= b * c64(c, 0.0);
            }
        }
        let r = v.norm();
        if r <= tol::RANK {
            return false;
        }
        v = (&v + v.adjoint()) * c64(0.5 / r, 0.0);
        let r = v.norm();
        self.basis.push(v / c64(r, 0.0));
        true
    }

    /// Offers both Hermitian components of an arbitrary matrix.
    fn try_add_parts(&mut self, m: &CMatrix) -> usize {
        let herm = (m + m.adjoint()) * c64(0.5, 0.0);
        let anti = (m - m.adjoint()) * c64(0.0, -0.5);
        self.try_add(&herm) as usize + self.try_add(&anti) as usize
    }
}

fn normalized(m: &CMatrix) -> Option<CMatrix> {
    let n = m.norm();
    (n > CANDIDATE_FLOOR).then(|| m / c64(n, 0.0))
}

impl OperatorAlgebra {
    /// The trivial algebra `C·1`.
    pub fn trivial(dim: usize) -> Self {
        let one = CMatrix::identity(dim, dim) / c64((dim as f64).sqrt(), 0.0);
        Self { dim, basis: vec![one], generators: Vec::new() }
    }

    /// All `dim × dim` matrices.
    pub fn full(dim: usize) -> Self {
        let mut basis = Vec::with_capacity(dim * dim);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        for i in 0..dim {
            let mut m = CMatrix::zeros(dim, dim);
            m[(i, i)] = c64(1.0, 0.0);
            basis.push(m);
            for j in i + 1..dim {
                let mut re = CMatrix::zeros(dim, dim);
                re[(i, j)] = c64(s, 0.0);
                re[(j, i)] = c64(s, 0.0);
                basis.push(re);
                let mut im = CMatrix::zeros(dim, dim);
                im[(i, j)] = c64(0.0, -s);
                im[(j, i)] = c64(0.0, s);
                basis.push(im);
            }
        }
        let ramp = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |i, _| c64(i as f64, 0.0)));
        let shift = CMatrix::from_fn(dim, dim, |i, j| {
            if (j + 1) % dim == i {
                c64(1.0, 0.0)
            } else {
                c64(0.0, 0.0)
            }
        });
        let generators = [
            ramp,
            (&shift + shift.adjoint()) * c64(0.5, 0.0),
            (&shift - shift.adjoint()) * c64(0.0, -0.5),
        ]
        .iter()
        .filter_map(normalized)
        .collect();
        Self { dim, basis, generators }
    }

    /// Diagonal matrices in the standard basis.
    pub fn diagonal(dim: usize) -> Self {
        let basis = (0..dim)
            .map(|i| {
                let mut m = CMatrix::zeros(dim, dim);
                m[(i, i)] = c64(1.0, 0.0);
                m
            })
            .collect();
        let ramp = CMatrix::from_diagonal(&nalgebra::DVector::from_fn(dim, |i, _| c64(i as f64, 0.0)));
        Self { dim, basis, generators: normalized(&ramp).into_iter().collect() }
    }

    /// Algebra spanned by an already *-closed, product-closed set; the set
    /// is re-orthonormalised but not closed further.
    fn from_spanning_set(dim: usize, elements: &[CMatrix]) -> Self {
        let mut span = HermitianSpan::new(dim);
        for e in elements {
            span.try_add_parts(e);
        }
        let generators = span.basis.clone();
        Self { dim, basis: span.basis, generators }
    }

    pub fn hilbert_dim(&self) -> usize {
        self.dim
    }

    /// Linear dimension of the algebra.
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> Vec<Operator> {
        self.basis.iter().cloned().map(Operator::from_matrix_unchecked).collect()
    }

    pub(crate) fn basis_matrices(&self) -> &[CMatrix] {
        &self.basis
    }

    pub fn generators(&self) -> Vec<Operator> {
        self.generators.iter().cloned().map(Operator::from_matrix_unchecked).collect()
    }

    /// Hilbert–Schmidt orthogonal projection onto the span.
    pub fn project(&self, x: &Operator) -> Result<Operator> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, x.dim()));
        }
        Ok(Operator::from_matrix_unchecked(self.project_matrix(x.matrix())))
    }

    fn project_matrix(&self, x: &CMatrix) -> CMatrix {
        self.basis
            .iter()
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, b| acc + b * b.dotc(x))
    }

    /// `‖x − Π(x)‖₂` (Hilbert–Schmidt norm).
    pub fn membership_residual(&self, x: &Operator) -> Result<f64> {
        Ok((x - &self.project(x)?).fro_norm())
    }

    pub fn contains(&self, x: &Operator) -> Result<bool> {
        Ok(self.membership_residual(x)? <= tol::SPAN)
    }

    pub fn contains_identity(&self) -> bool {
        let one = CMatrix::identity(self.dim, self.dim);
        (&one - self.project_matrix(&one)).norm() <= tol::SPAN
    }

    /// Largest membership residual of adjoints and pairwise products of
    /// basis elements. Zero (up to rounding) for a genuine algebra.
    pub fn closure_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in self.basis.iter().enumerate() {
            let adj = a.adjoint();
            worst = worst.max((&adj - self.project_matrix(&adj)).norm());
            for b in &self.basis[i..] {
                for p in [a * b, b * a] {
                    worst = worst.max((&p - self.project_matrix(&p)).norm());
                }
            }
        }
        worst
    }

    /// Self-adjoint element `Σ cᵢ bᵢ` for real coefficients.
    pub fn element(&self, coefficients: &[f64]) -> Operator {
        let m = self
            .basis
            .iter()
            .zip(coefficients)
            .fold(CMatrix::zeros(self.dim, self.dim), |acc, (b, &c)| acc + b * c64(c, 0.0));
        Operator::from_matrix_unchecked(m)
    }

    pub fn random_coefficients(&self, rng: &mut SeededRng) -> Vec<f64> {
        (0..self.dim()).map(|_| random::normal(rng)).collect()
    }

    /// Random self-adjoint element with Gaussian coefficients.
    pub fn random_element(&self, rng: &mut SeededRng) -> Operator {
        let c = self.random_coefficients(rng);
        self.element(&c)
    }

    pub fn is_abelian(&self) -> bool {
        self.basis.iter().enumerate().all(|(i, a)| {
            self.basis[i + 1..].iter().all(|b| {
                let c = a * b - b * a;
                c.norm() <= tol::COMM || op_norm(&c) <= tol::COMM
            })
        })
    }

    /// Largest commutator norm over pairs of basis elements.
    pub fn abelian_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in self.basis.iter().enumerate() {
            for b in &self.basis[i + 1..] {
                let c = a * b - b * a;
                if c.norm() > tol::COMM {
                    worst = worst.max(op_norm(&c));
                }
            }
        }
        worst
    }

    /// Compression `V† A V` onto the range of an isometry `V`.
    pub fn compress(&self, isometry: &CMatrix) -> Result<OperatorAlgebra> {
        if isometry.nrows() != self.dim {
            return Err(Error::DimensionMismatch(self.dim, isometry.nrows()));
        }
        let r = isometry.ncols();
        let vt = isometry.adjoint();
        let mut span = HermitianSpan::new(r);
        span.try_add(&CMatrix::identity(r, r));
        for b in &self.basis {
            span.try_add_parts(&(&vt * b * isometry));
        }
        let generators = self
            .generators
            .iter()
            .filter_map(|g| normalized(&(&vt * g * isometry)))
            .collect();
        Ok(Self { dim: r, basis: span.basis, generators })
    }
}

/// Smallest unital *-algebra containing the generators.
///
/// Seeds the span with `1` and the Hermitian and anti-Hermitian parts of
/// each generator, then repeatedly offers `h·b` (split into Hermitian
/// parts) for every seed `h` and every newly added basis element `b` until
/// the span stops growing. Left and right products by the seeds suffice:
/// the fixed point contains every word in the generators.
pub fn generate(dim: usize, generators: &[Operator]) -> Result<OperatorAlgebra> {
    if dim == 0 {
        return Err(Error::Empty);
    }
    for g in generators {
        if g.dim() != dim {
            return Err(Error::DimensionMismatch(dim, g.dim()));
        }
    }
    let mut span = HermitianSpan::new(dim);
    span.try_add(&CMatrix::identity(dim, dim));
    let mut seeds = Vec::new();
    for g in generators {
        let m = g.matrix();
        let parts = [
            (m + m.adjoint()) * c64(0.5, 0.0),
            (m - m.adjoint()) * c64(0.0, -0.5),
        ];
        for p in parts {
            if span.try_add(&p) {
                seeds.push(span.basis.last().unwrap().clone());
            }
        }
    }
    let mut frontier: Range<usize> = 0..span.basis.len();
    for _ in 0..MAX_ROUNDS {
        if frontier.is_empty() || span.full() {
            break;
        }
        let before = span.basis.len();
        for h in &seeds {
            for k in frontier.clone() {
                let prod = h * &span.basis[k];
                span.try_add_parts(&prod);
                if span.full() {
                    break;
                }
            }
        }
        frontier = before..span.basis.len();
    }
    Ok(OperatorAlgebra { dim, basis: span.basis, generators: seeds })
}

/// `A ∨ B`, the algebra generated by both.
pub fn join_algebras(a: &OperatorAlgebra, b: &OperatorAlgebra) -> Result<OperatorAlgebra> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(a.dim, b.dim));
    }
    let gens: Vec<Operator> = a.generators().into_iter().chain(b.generators()).collect();
    generate(a.dim, &gens)
}

/// Largest commutator norm `‖XY − YX‖` over basis elements `X ∈ A`, `Y ∈ B`.
pub fn commutator_residual(a: &OperatorAlgebra, b: &OperatorAlgebra) -> Result<f64> {
    if a.dim != b.dim {
        return Err(Error::DimensionMismatch(a.dim, b.dim));
    }
    let mut worst = 0.0_f64;
    for x in &a.basis {
        for y in &b.basis {
            let c = x * y - y * x;
            if c.norm() > 1e-15 {
                worst = worst.max(op_norm(&c));
            }
        }
    }
    Ok(worst)
}

/// Column-major vectorisation of the commutator map `X ↦ XG − GX`.
fn commutator_superoperator(g: &CMatrix) -> CMatrix {
    let d = g.nrows();
    let id = CMatrix::identity(d, d);
    g.transpose().kronecker(&id) - id.kronecker(g)
}

/// All operators commuting with every element of `a`.
pub fn commutant(a: &OperatorAlgebra) -> OperatorAlgebra {
    let d = a.dim;
    let n = d * d;
    if a.generators.is_empty() {
        return OperatorAlgebra::full(d);
    }
    let rows = a.generators.len() * n;
    let mut stacked = CMatrix::zeros(rows.max(n), n);
    for (k, g) in a.generators.iter().enumerate() {
        stacked.view_mut((k * n, 0), (n, n)).copy_from(&commutator_superoperator(g));
    }
    let svd = stacked.svd(false, true);
    let v_t = svd.v_t.expect("requested");
    let smax = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    let cutoff = tol::RANK * smax;
    let null: Vec<CMatrix> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= cutoff)
        .map(|(i, _)| {
            let v = v_t.row(i).adjoint();
            CMatrix::from_column_slice(d, d, v.as_slice())
        })
        .collect();
    let mut span = HermitianSpan::new(d);
    span.try_add(&CMatrix::identity(d, d));
    for x in &null {
        span.try_add_parts(x);
    }
    let generators = span.basis.clone();
    OperatorAlgebra { dim: d, basis: span.basis, generators }
}

fn vectorized(basis: &[CMatrix], d: usize) -> CMatrix {
    let cols: Vec<nalgebra::DVector<_>> = basis
        .iter()
        .map(|b| nalgebra::DVector::from_column_slice(b.as_slice()))
        .collect();
    if cols.is_empty() {
        return CMatrix::zeros(d * d, 0);
    }
    CMatrix::from_columns(&cols)
}

/// Intersection of two spans given by orthonormal Hermitian bases, from
/// the principal vectors with cosine 1.
fn span_intersection(d: usize, x: &[CMatrix], y: &[CMatrix]) -> Vec<CMatrix> {
    let qx = vectorized(x, d);
    let qy = vectorized(y, d);
    let overlap = qx.adjoint() * &qy;
    let svd = overlap.svd(true, false);
    let u = svd.u.expect("requested");
    svd.singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s >= 1.0 - tol::RANK)
        .map(|(i, _)| {
            let v = &qx * u.column(i);
            CMatrix::from_column_slice(d, d, v.as_slice())
        })
        .collect()
}

/// `A ∩ A′`.
pub fn center(a: &OperatorAlgebra) -> OperatorAlgebra {
    let c = commutant(a);
    let common = span_intersection(a.dim, &a.basis, &c.basis);
    let mut elements = vec![CMatrix::identity(a.dim, a.dim)];
    elements.extend(common);
    OperatorAlgebra::from_spanning_set(a.dim, &elements)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BicommutantReport {
    pub holds: bool,
    pub algebra_dim: usize,
    pub commutant_dim: usize,
    pub bicommutant_dim: usize,
}

/// Checks `dim A″ = dim A`.
pub fn bicommutant_check(a: &OperatorAlgebra) -> BicommutantReport {
    let c = commutant(a);
    let cc = commutant(&c);
    BicommutantReport {
        holds: cc.dim() == a.dim(),
        algebra_dim: a.dim(),
        commutant_dim: c.dim(),
        bicommutant_dim: cc.dim(),
    }
}

/// Minimal central projections and the corresponding blocks.
#[derive(Clone, Debug)]
pub struct CentralDecomposition {
    pub minimal_central_projections: Vec<Projection>,
    /// Compression of the algebra to each sector, on `Ran P`.
    pub blocks: Vec<OperatorAlgebra>,
    /// Isometries `V` with `V V† = P`, one per sector.
    pub isometries: Vec<CMatrix>,
    /// Number of probe elements tried.
    pub attempts: usize,
}

impl CentralDecomposition {
    pub fn len(&self) -> usize {
        self.minimal_central_projections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.minimal_central_projections.is_empty()
    }
}

pub fn central_decomposition(a: &OperatorAlgebra) -> Result<CentralDecomposition> {
    central_decomposition_seeded(a, 0)
}

/// Sort key placing sectors in order of their first occupied basis index.
fn sector_key(v: &CMatrix) -> (usize, Vec<f64>) {
    let d = v.nrows();
    let diag: Vec<f64> = (0..d).map(|i| v.row(i).norm_squared()).collect();
    let first = diag.iter().position(|&x| x > 1e-6).unwrap_or(d);
    (first, diag.iter().map(|x| -x).collect())
}

pub fn central_decomposition_seeded(a: &OperatorAlgebra, seed: u64) -> Result<CentralDecomposition> {
    let d = a.dim;
    let z = if a.is_abelian() { a.clone() } else { center(a) };
    if z.dim() <= 1 {
        let id = CMatrix::identity(d, d);
        return Ok(CentralDecomposition {
            minimal_central_projections: vec![Projection::identity(d)],
            blocks: vec![a.clone()],
            isometries: vec![id],
            attempts: 1,
        });
    }
    for attempt in 0..CENTRAL_RETRIES {
        let mut rng = random::rng(random::derive_seed(seed, attempt as u64));
        let probe = z.random_element(&mut rng);
        let sd = spectral_unchecked(probe.matrix());
        let scale = sd.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        if scale == 0.0 {
            continue;
        }
        let ev: Vec<f64> = sd.eigenvalues.iter().map(|x| x / scale).collect();
        if ev.windows(2).any(|w| {
            let gap = w[1] - w[0];
            gap > tol::CLUSTER && gap <= CLUSTER_SEPARATION
        }) {
            continue;
        }
        let scaled = SpectralDecomposition { eigenvalues: ev, eigenvectors: sd.eigenvectors.clone() };
        let clusters = scaled.clusters(tol::CLUSTER);
        if clusters.len() != z.dim() {
            continue;
        }
        let mut isometries: Vec<CMatrix> = clusters.into_iter().map(|r| scaled.isometry(r)).collect();
        isometries.sort_by(|x, y| {
            let (kx, dx) = sector_key(x);
            let (ky, dy) = sector_key(y);
            kx.cmp(&ky).then_with(|| {
                dx.iter()
                    .zip(&dy)
                    .map(|(p, q)| p.total_cmp(q))
                    .find(|o| o.is_ne())
                    .unwrap_or(std::cmp::Ordering::Equal)
            })
        });
        let blocks: Vec<OperatorAlgebra> = isometries.iter().map(|v| a.compress(v)).collect::<Result<_>>()?;
        let minimal = blocks.iter().all(|b| b.is_abelian() && b.dim() == 1 || center(b).dim() == 1);
        if !minimal {
            continue;
        }
        return Ok(CentralDecomposition {
            minimal_central_projections: isometries.iter().map(Projection::from_isometry).collect(),
            blocks,
            isometries,
            attempts: attempt + 1,
        });
    }
    Err(Error::ClusterAmbiguity(CENTRAL_RETRIES))
}

/// A projection described by a self-adjoint probe element and a choice of
/// its eigenvalue clusters. Both parts can be perturbed independently,
/// which is what local searches over projections of an algebra use.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralChoice {
    pub coefficients: Vec<f64>,
    pub mask: Vec<bool>,
}

fn probe_clusters(a: &OperatorAlgebra, coefficients: &[f64]) -> (SpectralDecomposition, Vec<Range<usize>>) {
    let h = a.element(coefficients);
    let sd = spectral_unchecked(h.matrix());
    let scale = sd.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(f64::MIN_POSITIVE);
    let scaled = SpectralDecomposition {
        eigenvalues: sd.eigenvalues.iter().map(|x| x / scale).collect(),
        eigenvectors: sd.eigenvectors,
    };
    let clusters = scaled.clusters(tol::CLUSTER);
    (scaled, clusters)
}

/// Draws a probe and a uniformly random nonempty proper subset of its
/// eigenvalue clusters. With a single cluster (the trivial algebra) the
/// mask selects it, giving the identity.
pub fn sample_choice(a: &OperatorAlgebra, rng: &mut SeededRng) -> SpectralChoice {
    use rand::Rng;
    let coefficients = a.random_coefficients(rng);
    let (_, clusters) = probe_clusters(a, &coefficients);
    let k = clusters.len();
    if k == 1 {
        return SpectralChoice { coefficients, mask: vec![true] };
    }
    loop {
        let mask: Vec<bool> = (0..k).map(|_| rng.random::<bool>()).collect();
        let on = mask.iter().filter(|&&m| m).count();
        if on > 0 && on < k {
            return SpectralChoice { coefficients, mask };
        }
    }
}

/// The projection a choice describes, or `None` when the probe's cluster
/// count no longer matches the mask.
pub fn realize_choice(a: &OperatorAlgebra, choice: &SpectralChoice) -> Option<Projection> {
    let (sd, clusters) = probe_clusters(a, &choice.coefficients);
    if clusters.len() != choice.mask.len() {
        return None;
    }
    let idx: Vec<usize> = clusters
        .into_iter()
        .zip(&choice.mask)
        .filter(|(_, &m)| m)
        .flat_map(|(r, _)| r)
        .collect();
    Some(sd.projection(idx))
}

/// Random projection of `a`: a spectral projection of a random self-adjoint
/// element for a random nonempty proper subset of its eigenvalues.
pub fn sample_projection(a: &OperatorAlgebra, rng_seed: u64) -> Projection {
    let mut rng = random::rng(rng_seed);
    let choice = sample_choice(a, &mut rng);
    realize_choice(a, &choice).expect("cluster count is stable for a fixed probe")
}

/// The Boolean lattice of projections of an abelian algebra.
#[derive(Clone, Debug)]
pub struct ProjectionLattice {
    pub minimal: Vec<Projection>,
}

impl ProjectionLattice {
    pub fn len(&self) -> usize {
        1 << self.minimal.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Sum of the minimal projections whose bits are set in `mask`.
    pub fn element(&self, mask: usize) -> Projection {
        let d = self.minimal[0].dim();
        let m = self
            .minimal
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .fold(CMatrix::zeros(d, d), |acc, (_, p)| acc + p.matrix());
        Projection::from_operator_unchecked(Operator::from_matrix_unchecked(m))
    }

    pub fn iter(&self) -> impl Iterator<Item = Projection> + '_ {
        (0..self.len()).map(|m| self.element(m))
    }
}

pub fn projection_lattice(a: &OperatorAlgebra) -> Result<ProjectionLattice> {
    let r = a.abelian_residual();
    if r > tol::COMM {
        return Err(Error::NotAbelian(r));
    }
    let dec = central_decomposition(a)?;
    let k = dec.len();
    if k > MAX_MINIMAL_PROJECTIONS {
        return Err(Error::LatticeTooLarge(k, MAX_MINIMAL_PROJECTIONS));
    }
    Ok(ProjectionLattice { minimal: dec.minimal_central_projections })
}

/// All `2ᵏ` projections of an abelian algebra, indexed by bitmask over its
/// minimal projections.
pub fn enumerate_projections(a: &OperatorAlgebra) -> Result<Vec<Projection>> {
    Ok(projection_lattice(a)?.iter().collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{make_projection, pauli};

    fn span_distance(x: &OperatorAlgebra, y: &OperatorAlgebra) -> f64 {
        let mut worst = 0.0_f64;
        for b in x.basis() {
            worst = worst.max(y.membership_residual(&b).unwrap());
        }
        for b in y.basis() {
            worst = worst.max(x.membership_residual(&b).unwrap());
        }
        worst
    }

    fn id2() -> Operator {
        Operator::identity(2)
    }

    #[test]
    fn generate_examples() {
        let a = generate(2, &[pauli::z()]).unwrap();
        assert_eq!(a.dim(), 2);
        assert!(span_distance(&a, &OperatorAlgebra::diagonal(2)) < 1e-12);
        assert_eq!(generate(2, &[pauli::z(), pauli::x()]).unwrap().dim(), 4);
        let b = generate(4, &[pauli::z().kron(&id2())]).unwrap();
        assert_eq!(b.dim(), 2);
        assert!(b.contains(&pauli::z().kron(&id2())).unwrap());
        for alg in [&a, &b] {
            assert!(alg.contains_identity());
            assert!(alg.closure_residual() < 1e-12);
        }
    }

    #[test]
    fn generate_handles_non_hermitian_generators() {
        let raise = Operator::from_real(2, &[0.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(generate(2, &[raise]).unwrap().dim(), 4);
        assert!(matches!(generate(2, &[Operator::identity(3)]), Err(Error::DimensionMismatch(2, 3))));
    }

    #[test]
    fn commutant_examples() {
        assert_eq!(commutant(&OperatorAlgebra::full(2)).dim(), 1);
        let c = commutant(&OperatorAlgebra::diagonal(2));
        assert!(span_distance(&c, &OperatorAlgebra::diagonal(2)) < 1e-12);
        // oracle: X commutes with σ_z⊗1 iff X is block diagonal over its two
        // rank-2 eigenspaces, 2·(2·2) = 8 free entries
        let a = generate(4, &[pauli::z().kron(&id2())]).unwrap();
        let c = commutant(&a);
        assert_eq!(c.dim(), 8);
        for x in c.basis() {
            let m = x.matrix();
            for i in 0..2 {
                for j in 2..4 {
                    assert!(m[(i, j)].norm() < 1e-12 && m[(j, i)].norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn center_examples() {
        assert_eq!(center(&OperatorAlgebra::full(3)).dim(), 1);
        let d = OperatorAlgebra::diagonal(3);
        assert!(span_distance(&center(&d), &d) < 1e-12);
        let a = generate(4, &[pauli::z().kron(&id2()), id2().kron(&pauli::x())]).unwrap();
        assert_eq!(a.dim(), 4);
        assert_eq!(center(&a).dim(), 4);
        let m = generate(4, &[pauli::z().kron(&id2()), pauli::x().kron(&id2()), id2().kron(&pauli::x())])
            .unwrap();
        assert_eq!(center(&m).dim(), 2);
    }

    #[test]
    fn bicommutant_examples() {
        assert!(bicommutant_check(&OperatorAlgebra::full(3)).holds);
        assert!(bicommutant_check(&OperatorAlgebra::diagonal(3)).holds);
        let a = generate(4, &[pauli::z().kron(&id2())]).unwrap();
        let r = bicommutant_check(&a);
        assert!(r.holds);
        assert_eq!((r.algebra_dim, r.commutant_dim, r.bicommutant_dim), (2, 8, 2));
    }

    #[test]
    fn join_examples() {
        let d = OperatorAlgebra::diagonal(2);
        assert!(span_distance(&join_algebras(&d, &d).unwrap(), &d) < 1e-12);
        let z = generate(2, &[pauli::z()]).unwrap();
        let x = generate(2, &[pauli::x()]).unwrap();
        assert_eq!(join_algebras(&z, &x).unwrap().dim(), 4);
        let a = generate(4, &[pauli::z().kron(&id2()), pauli::x().kron(&id2())]).unwrap();
        let b = generate(4, &[id2().kron(&pauli::z()), id2().kron(&pauli::x())]).unwrap();
        assert_eq!(join_algebras(&a, &b).unwrap().dim(), a.dim() * b.dim());
    }

    #[test]
    fn central_decomposition_examples() {
        let full = central_decomposition(&OperatorAlgebra::full(3)).unwrap();
        assert_eq!(full.len(), 1);
        assert!(full.minimal_central_projections[0].is_identity());

        let diag = central_decomposition(&OperatorAlgebra::diagonal(2)).unwrap();
        assert_eq!(diag.len(), 2);
        let want = [Operator::diagonal(&[1.0, 0.0]), Operator::diagonal(&[0.0, 1.0])];
        for (p, w) in diag.minimal_central_projections.iter().zip(&want) {
            assert!((p.matrix() - w.matrix()).norm() < 1e-12);
        }

        // oracle: spectral projections of σ_z⊗1 itself
        let a = generate(4, &[pauli::z().kron(&id2())]).unwrap();
        let dec = central_decomposition(&a).unwrap();
        let up = Operator::diagonal(&[1.0, 1.0, 0.0, 0.0]);
        let down = Operator::diagonal(&[0.0, 0.0, 1.0, 1.0]);
        assert_eq!(dec.len(), 2);
        assert!((dec.minimal_central_projections[0].matrix() - up.matrix()).norm() < 1e-12);
        assert!((dec.minimal_central_projections[1].matrix() - down.matrix()).norm() < 1e-12);
        for b in &dec.blocks {
            assert_eq!(b.hilbert_dim(), 2);
            assert_eq!(b.dim(), 1);
        }
    }

    #[test]
    fn sample_projection_examples() {
        let d = OperatorAlgebra::diagonal(2);
        for seed in 0..10 {
            let p = sample_projection(&d, seed);
            let ok = [Operator::diagonal(&[1.0, 0.0]), Operator::diagonal(&[0.0, 1.0])]
                .iter()
                .any(|w| (p.matrix() - w.matrix()).norm() < 1e-12);
            assert!(ok);
        }
        let full = OperatorAlgebra::full(2);
        for seed in 0..10 {
            let p = sample_projection(&full, seed);
            assert_eq!(p.rank(), 1);
            assert!(full.membership_residual(p.op()).unwrap() < 1e-9);
        }
        let a = generate(6, &[pauli::z().kron(&Operator::identity(3)), pauli::x().kron(&Operator::identity(3))])
            .unwrap();
        for seed in 0..20 {
            let p = sample_projection(&a, seed);
            make_projection(p.op()).unwrap();
            assert!(a.membership_residual(p.op()).unwrap() < 1e-9);
            assert_eq!(p.rank(), 3);
        }
        assert!(sample_projection(&OperatorAlgebra::trivial(3), 0).is_identity());
    }

    #[test]
    fn enumerate_projection_examples() {
        assert_eq!(enumerate_projections(&OperatorAlgebra::diagonal(2)).unwrap().len(), 4);
        assert_eq!(enumerate_projections(&OperatorAlgebra::diagonal(3)).unwrap().len(), 8);
        let x = generate(2, &[pauli::x()]).unwrap();
        let all = enumerate_projections(&x).unwrap();
        assert_eq!(all.len(), 4);
        let plus = Projection::onto_vector(&pauli::plus()).unwrap();
        let minus = Projection::onto_vector(&pauli::minus()).unwrap();
        for want in [Projection::zero(2), plus, minus, Projection::identity(2)] {
            assert!(all.iter().any(|p| (p.matrix() - want.matrix()).norm() < 1e-12));
        }
        assert!(matches!(enumerate_projections(&OperatorAlgebra::full(2)), Err(Error::NotAbelian(_))));
        assert!(matches!(
            enumerate_projections(&OperatorAlgebra::diagonal(21)),
            Err(Error::LatticeTooLarge(21, 20))
        ));
    }
}
