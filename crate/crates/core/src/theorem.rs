//! Numerical retracing of the locality argument.
//!
//! An uncorrelated state forces `ω(T(E,F)) = 1` for every pair, so some
//! eigenvector `Φ` of its density matrix is fixed by every total
//! coincidence. On such vectors `EF` and `FE` both act as `E∧F`, hence
//! elements of the two algebras commute there. The largest projection `P`
//! under all `T(E,F)` is central in `A ∨ B`; finding uncorrelated states in
//! every sector makes `P = 1` and the algebras commute.

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{self, central_decomposition_seeded, join_algebras, OperatorAlgebra};
use crate::correlation::{c_measure, projection_pairs, MeasureBudget, PairSet, PairSource};
use crate::error::{Error, Result};
use crate::lattice::{meet, total_coincidence};
use crate::matrix::{c64, op_norm, spectral_unchecked, tol, CMatrix, CVector, Operator, Projection, State};
use crate::random;

/// Random words `X₁Y₁⋯XₙYₙ` applied to `Φ` in [`verify_phi_commutation`].
pub const PHI_WORDS: usize = 100;
pub const MAX_WORD_LEN: usize = 3;

pub fn total_coincidences(pairs: &PairSet) -> Result<Vec<Projection>> {
    pairs.pairs.par_iter().map(|p| total_coincidence(&p.e, &p.f)).collect()
}

fn fixed_residual(t: &Projection, v: &CVector) -> f64 {
    (t.matrix() * v - v).norm()
}

/// An eigenvector `Φ` of `ρ` (eigenvalue above `τ_rank·λ_max`) that every
/// total coincidence of the pairs fixes up to `√(4·tol)`.
///
/// Among qualifying eigenvectors the one with the smallest worst residual
/// wins, ties going to the larger eigenvalue.
pub fn extract_phi(omega: &State, pairs: &PairSet, tol: f64) -> Result<CVector> {
    if let Some(p) = pairs.pairs.first() {
        if p.e.dim() != omega.dim() {
            return Err(Error::DimensionMismatch(omega.dim(), p.e.dim()));
        }
    }
    let ts = total_coincidences(pairs)?;
    let sd = spectral_unchecked(omega.rho().matrix());
    let lmax = sd.eigenvalues.last().copied().unwrap_or(0.0);
    let mut best: Option<(f64, CVector)> = None;
    for i in (0..sd.dim()).rev() {
        if sd.eigenvalues[i] <= tol::RANK * lmax {
            break;
        }
        let v: CVector = sd.eigenvectors.column(i).into_owned();
        let worst = ts.iter().map(|t| fixed_residual(t, &v)).fold(0.0, f64::max);
        if best.as_ref().is_none_or(|b| worst < b.0) {
            best = Some((worst, v));
        }
    }
    let (worst, v) = best.ok_or(Error::NoInvariantVector(f64::INFINITY))?;
    if worst > (4.0 * tol).sqrt() {
        return Err(Error::NoInvariantVector(worst));
    }
    Ok(v)
}

fn unit_contraction(m: CMatrix) -> CMatrix {
    let n = op_norm(&m);
    if n > 0.0 {
        m / c64(n, 0.0)
    } else {
        m
    }
}

/// Largest `‖(XY − YX)Ψ‖` over basis pairs `X ∈ A`, `Y ∈ B`, with `Ψ`
/// ranging over `Φ` and normalised images `X₁Y₁⋯XₙYₙΦ` of seeded random
/// words of length at most three.
pub fn verify_phi_commutation(phi: &CVector, a: &OperatorAlgebra, b: &OperatorAlgebra, seed: u64) -> Result<f64> {
    let d = a.hilbert_dim();
    if b.hilbert_dim() != d {
        return Err(Error::DimensionMismatch(d, b.hilbert_dim()));
    }
    if phi.len() != d {
        return Err(Error::DimensionMismatch(d, phi.len()));
    }
    let n = phi.norm();
    if !(n > 0.0) {
        return Err(Error::InvalidParameter("zero vector".into()));
    }
    let mut vectors = vec![phi / c64(n, 0.0)];
    let mut rng = random::rng(seed);
    for w in 0..PHI_WORDS {
        let len = 1 + w % MAX_WORD_LEN;
        let mut psi = vectors[0].clone();
        // rightmost factor acts first
        for _ in 0..len {
            let y = unit_contraction(b.random_element(&mut rng).into_matrix());
            let x = unit_contraction(a.random_element(&mut rng).into_matrix());
            psi = &x * (&y * psi);
        }
        let norm = psi.norm();
        if norm > 1e-12 {
            vectors.push(psi / c64(norm, 0.0));
        }
    }
    let commutators: Vec<CMatrix> = a
        .basis_matrices()
        .iter()
        .flat_map(|x| b.basis_matrices().iter().map(move |y| x * y - y * x))
        .filter(|c| c.norm() > 1e-15)
        .collect();
    Ok(commutators
        .par_iter()
        .map(|c| vectors.iter().map(|v| (c * v).norm()).fold(0.0, f64::max))
        .reduce(|| 0.0, f64::max))
}

#[derive(Clone, Debug)]
pub struct PResult {
    pub projection: Projection,
    pub pairs_used: usize,
    /// True when the pairs exhaust both projection lattices.
    pub certified: bool,
}

/// Meet of all total coincidences `T(E,F)` over the pairs.
pub fn compute_p(dim: usize, pairs: &PairSet) -> Result<PResult> {
    let ts = total_coincidences(pairs)?;
    let projection = ts.iter().try_fold(Projection::identity(dim), |acc, t| meet(&acc, t))?;
    Ok(PResult { projection, pairs_used: pairs.pairs.len(), certified: pairs.certified })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CentralityCheck {
    pub central: bool,
    /// Max over the basis of `joint` of `‖PX − XP‖`.
    pub commutator_residual: f64,
    /// Hilbert–Schmidt distance from `P` to `joint`.
    pub membership_residual: f64,
}

pub fn check_p_central(p: &Projection, joint: &OperatorAlgebra) -> Result<CentralityCheck> {
    if p.dim() != joint.hilbert_dim() {
        return Err(Error::DimensionMismatch(joint.hilbert_dim(), p.dim()));
    }
    let commutator_residual = joint
        .basis_matrices()
        .iter()
        .map(|x| op_norm(&(p.matrix() * x - x * p.matrix())))
        .fold(0.0, f64::max);
    let membership_residual = joint.membership_residual(p.op())?;
    Ok(CentralityCheck {
        central: commutator_residual <= tol::COMM && membership_residual <= tol::SPAN,
        commutator_residual,
        membership_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TheoremBudget {
    /// Uncorrelatedness tolerance; sectors above `10·tol` are obstructed.
    pub tol: f64,
    /// Sampled projection pairs when the lattices are not enumerated.
    pub pairs: usize,
    pub seed: u64,
    pub measure: MeasureBudget,
    /// Only examine this central sector.
    pub sector: Option<usize>,
}

impl Default for TheoremBudget {
    fn default() -> Self {
        Self { tol: 1e-9, pairs: 64, seed: 0, measure: MeasureBudget::default(), sector: None }
    }
}

/// Sectors are obstructed when their best residual exceeds this multiple
/// of the tolerance.
pub const OBSTRUCTION_FACTOR: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Conclusion {
    LocalityVerified,
    ObstructionFound,
    Inconclusive,
}

#[derive(Clone, Debug)]
pub struct SectorTrace {
    pub index: usize,
    pub rank: usize,
    pub dim_a: usize,
    pub dim_b: usize,
    /// Best uncorrelatedness residual found: the refined correlation
    /// supremum at the optimizing state.
    pub residual: f64,
    /// Value of the outer minimisation on its fixed pair pool.
    pub search_value: f64,
    pub search_converged: bool,
    /// The inner supremum was exhaustive.
    pub certified: bool,
    pub uncorrelated: bool,
    pub obstructed: bool,
    /// Optimizing state, on the full space.
    pub state: State,
    /// Invariant vector of the state, on the full space.
    pub phi: Option<CVector>,
    pub phi_commutation_residual: Option<f64>,
    /// Why no invariant vector was extracted, when it was not.
    pub phi_error: Option<String>,
    /// Commutator residual of the compressed algebras.
    pub commutator_residual: f64,
}

#[derive(Clone, Debug)]
pub struct ProofTrace {
    /// `Φ` from the first sector that produced one.
    pub phi: Option<CVector>,
    pub p_projection: Projection,
    pub p_centrality: CentralityCheck,
    /// Max over basis pairs of `‖(XY − YX)P‖`.
    pub commutation_residual_on_range: f64,
    pub pairs_used: usize,
    pub pairs_certified: bool,
    /// `‖XY − YX‖` over basis pairs (of the examined sector, if restricted).
    pub commutator_residual: f64,
    pub joint_dim: usize,
    pub center_dim: usize,
    pub decomposition_attempts: usize,
    pub sectors: Vec<SectorTrace>,
    pub obstructed_sector: Option<usize>,
    /// Working bound `10·√(4·tol)` for the `Φ` commutation residuals.
    pub phi_bound: f64,
    pub conclusion: Conclusion,
}

fn examine_sector(
    index: usize,
    v: &CMatrix,
    a: &OperatorAlgebra,
    b: &OperatorAlgebra,
    budget: &TheoremBudget,
) -> Result<SectorTrace> {
    let ac = a.compress(v)?;
    let bc = b.compress(v)?;
    let sector_seed = random::derive_seed(budget.seed, 1000 + index as u64);
    let mut mb = budget.measure.clone();
    mb.target = Some(mb.target.map_or(budget.tol, |t| t.min(budget.tol)));
    mb.inner.seed = sector_seed;
    let report = c_measure(&ac, &bc, None, &mb)?;
    let residual = report.inner_at_optimum.c_omega;
    let uncorrelated = residual <= budget.tol;
    let lift = |x: &CVector| v * x;
    let (mut phi, mut phi_commutation_residual, mut phi_error) = (None, None, None);
    if uncorrelated {
        let pairs = projection_pairs(&ac, &bc, &PairSource::Auto { count: budget.pairs, seed: sector_seed })?;
        match extract_phi(&report.sector_state, &pairs, budget.tol) {
            Ok(p) => {
                phi_commutation_residual = Some(verify_phi_commutation(&p, &ac, &bc, sector_seed)?);
                phi = Some(lift(&p));
            }
            Err(e) => phi_error = Some(e.to_string()),
        }
    }
    Ok(SectorTrace {
        index,
        rank: v.ncols(),
        dim_a: ac.dim(),
        dim_b: bc.dim(),
        residual,
        search_value: report.c_value,
        search_converged: report.converged,
        certified: report.certified,
        uncorrelated,
        obstructed: residual > OBSTRUCTION_FACTOR * budget.tol,
        state: State::from_operator_unchecked(Operator::from_matrix_unchecked(
            v * report.sector_state.rho().matrix() * v.adjoint(),
        )),
        phi,
        phi_commutation_residual,
        phi_error,
        commutator_residual: algebra::commutator_residual(&ac, &bc)?,
    })
}

/// Runs the whole argument on `(A, B)`: decompose `A ∨ B` into sectors,
/// look for an uncorrelated state in each, and either confirm that the
/// algebras commute or report the sector where no such state exists.
pub fn verify_theorem(a: &OperatorAlgebra, b: &OperatorAlgebra, budget: &TheoremBudget) -> Result<ProofTrace> {
    let d = a.hilbert_dim();
    if b.hilbert_dim() != d {
        return Err(Error::DimensionMismatch(d, b.hilbert_dim()));
    }
    if !(budget.tol > 0.0) {
        return Err(Error::InvalidParameter("tol must be positive".into()));
    }
    let joint = join_algebras(a, b)?;
    let dec = central_decomposition_seeded(&joint, budget.seed)?;
    let selected: Vec<usize> = match budget.sector {
        Some(k) if k >= dec.len() => {
            return Err(Error::InvalidParameter(format!("sector {k} out of range (have {})", dec.len())))
        }
        Some(k) => vec![k],
        None => (0..dec.len()).collect(),
    };
    let sectors: Vec<SectorTrace> = selected
        .par_iter()
        .map(|&k| examine_sector(k, &dec.isometries[k], a, b, budget))
        .collect::<Result<_>>()?;

    let pairs = projection_pairs(a, b, &PairSource::Auto { count: budget.pairs, seed: budget.seed })?;
    let p = compute_p(d, &pairs)?;
    let p_centrality = check_p_central(&p.projection, &joint)?;
    let pm = p.projection.matrix();
    let commutation_residual_on_range = a
        .basis_matrices()
        .par_iter()
        .map(|x| {
            b.basis_matrices()
                .iter()
                .map(|y| op_norm(&((x * y - y * x) * pm)))
                .fold(0.0, f64::max)
        })
        .reduce(|| 0.0, f64::max);

    let commutator_residual = match budget.sector {
        Some(_) => sectors[0].commutator_residual,
        None => algebra::commutator_residual(a, b)?,
    };
    let obstructed_sector = sectors.iter().find(|s| s.obstructed).map(|s| s.index);
    let conclusion = if obstructed_sector.is_some() {
        Conclusion::ObstructionFound
    } else if sectors.iter().all(|s| s.uncorrelated) && commutator_residual <= tol::COMM {
        Conclusion::LocalityVerified
    } else {
        Conclusion::Inconclusive
    };
    Ok(ProofTrace {
        phi: sectors.iter().find_map(|s| s.phi.clone()),
        p_projection: p.projection,
        p_centrality,
        commutation_residual_on_range,
        pairs_used: p.pairs_used,
        pairs_certified: p.certified,
        commutator_residual,
        joint_dim: joint.dim(),
        center_dim: dec.len(),
        decomposition_attempts: dec.attempts,
        sectors,
        obstructed_sector,
        phi_bound: OBSTRUCTION_FACTOR * (4.0 * budget.tol).sqrt(),
        conclusion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::generate;
    use crate::correlation::product_state;
    use crate::matrix::{make_projection, pauli};

    fn tensor_qubits() -> (OperatorAlgebra, OperatorAlgebra) {
        let i2 = Operator::identity(2);
        (
            generate(4, &[pauli::z().kron(&i2), pauli::x().kron(&i2)]).unwrap(),
            generate(4, &[i2.kron(&pauli::z()), i2.kron(&pauli::x())]).unwrap(),
        )
    }

    fn qubit_clash() -> (OperatorAlgebra, OperatorAlgebra) {
        (generate(2, &[pauli::z()]).unwrap(), generate(2, &[pauli::x()]).unwrap())
    }

    /// C⁴ ⊕ C²: tensor factors on the first block, the clash on the second.
    fn block_mixed() -> (OperatorAlgebra, OperatorAlgebra) {
        let i2 = Operator::identity(2);
        let embed = |big: Option<Operator>, small: Option<Operator>| {
            let mut m = CMatrix::zeros(6, 6);
            if let Some(b) = big {
                m.view_mut((0, 0), (4, 4)).copy_from(b.matrix());
            }
            if let Some(s) = small {
                m.view_mut((4, 4), (2, 2)).copy_from(s.matrix());
            }
            Operator::new(m).unwrap()
        };
        let a = generate(6, &[
            embed(Some(pauli::z().kron(&i2)), None),
            embed(Some(pauli::x().kron(&i2)), None),
            embed(None, Some(pauli::z())),
        ])
        .unwrap();
        let b = generate(6, &[
            embed(Some(i2.kron(&pauli::z())), None),
            embed(Some(i2.kron(&pauli::x())), None),
            embed(None, Some(pauli::x())),
        ])
        .unwrap();
        (a, b)
    }

    fn quick() -> TheoremBudget {
        TheoremBudget { measure: MeasureBudget { starts: 4, max_iter: 300, ..Default::default() }, ..Default::default() }
    }

    #[test]
    fn extract_phi_examples() {
        let (a, b) = tensor_qubits();
        let pairs = projection_pairs(&a, &b, &PairSource::Sampled { count: 32, seed: 1 }).unwrap();
        let w = State::pure(&pauli::ket(&[1.0, 0.0, 0.0, 0.0])).unwrap();
        let phi = extract_phi(&w, &pairs, 1e-9).unwrap();
        assert!((phi[0].norm() - 1.0).abs() < 1e-12);

        let mut rng = random::rng(2);
        let w = product_state(&random::state(2, &mut rng), &random::state(2, &mut rng));
        let phi = extract_phi(&w, &pairs, 1e-9).unwrap();
        assert!((phi.norm() - 1.0).abs() < 1e-12);

        let (a, b) = qubit_clash();
        let pairs = projection_pairs(&a, &b, &PairSource::Exhaustive).unwrap();
        let r = extract_phi(&State::maximally_mixed(2), &pairs, 1e-9);
        assert!(matches!(r, Err(Error::NoInvariantVector(_))));
    }

    #[test]
    fn phi_commutation_examples() {
        let (a, b) = tensor_qubits();
        assert!(verify_phi_commutation(&pauli::ket(&[1.0, 0.0, 0.0, 0.0]), &a, &b, 0).unwrap() < 1e-12);
        let mut rng = random::rng(5);
        let v = random::gaussian_vector(4, &mut rng);
        assert!(verify_phi_commutation(&v, &a, &b, 1).unwrap() < 1e-10);

        // oracle: the normalised basis commutator [σ_z/√2, σ_x/√2] = iσ_y is
        // unitary, so every unit vector has residual exactly 1
        let (a, b) = qubit_clash();
        let v = random::gaussian_vector(2, &mut rng);
        let r = verify_phi_commutation(&v, &a, &b, 2).unwrap();
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn compute_p_examples() {
        let (a, b) = tensor_qubits();
        let pairs = projection_pairs(&a, &b, &PairSource::Sampled { count: 16, seed: 0 }).unwrap();
        assert!(compute_p(4, &pairs).unwrap().projection.is_identity());

        let (a, b) = qubit_clash();
        let pairs = projection_pairs(&a, &b, &PairSource::Exhaustive).unwrap();
        let p = compute_p(2, &pairs).unwrap();
        assert!(p.projection.is_zero() && p.certified && p.pairs_used == 16);

        let (a, b) = block_mixed();
        let pairs = projection_pairs(&a, &b, &PairSource::Sampled { count: 64, seed: 0 }).unwrap();
        let p = compute_p(6, &pairs).unwrap();
        let block = make_projection(&Operator::diagonal(&[1.0, 1.0, 1.0, 1.0, 0.0, 0.0])).unwrap();
        assert!((p.projection.matrix() - block.matrix()).norm() < 1e-9);
        let joint = join_algebras(&a, &b).unwrap();
        assert!(check_p_central(&p.projection, &joint).unwrap().commutator_residual <= 1e-9);
    }

    #[test]
    fn trivial_projections_are_central() {
        let (a, b) = block_mixed();
        let joint = join_algebras(&a, &b).unwrap();
        for p in [Projection::identity(6), Projection::zero(6)] {
            let c = check_p_central(&p, &joint).unwrap();
            assert!(c.central && c.commutator_residual < 1e-12);
        }
    }

    #[test]
    fn theorem_on_tensor_factors() {
        let (a, b) = tensor_qubits();
        let t = verify_theorem(&a, &b, &quick()).unwrap();
        assert_eq!(t.conclusion, Conclusion::LocalityVerified);
        assert!(t.commutator_residual <= 1e-10);
        assert!(t.p_projection.is_identity());
        let phi = t.phi.unwrap();
        assert!((phi.norm() - 1.0).abs() < 1e-12);
        assert!(t.sectors[0].phi_commutation_residual.unwrap() <= t.phi_bound);
    }

    #[test]
    fn theorem_on_qubit_clash() {
        let (a, b) = qubit_clash();
        let t = verify_theorem(&a, &b, &quick()).unwrap();
        assert_eq!(t.conclusion, Conclusion::ObstructionFound);
        assert_eq!(t.obstructed_sector, Some(0));
        assert!(t.sectors[0].residual >= 0.25 - 1e-9);
        assert!(t.p_projection.is_zero());
    }

    #[test]
    fn theorem_localises_obstruction() {
        let (a, b) = block_mixed();
        let t = verify_theorem(&a, &b, &quick()).unwrap();
        assert_eq!(t.conclusion, Conclusion::ObstructionFound);
        assert_eq!(t.center_dim, 2);
        assert_eq!(t.obstructed_sector, Some(1));
        assert!(t.sectors[0].uncorrelated && !t.sectors[0].obstructed);
        assert_eq!(t.sectors[1].rank, 2);

        let only = TheoremBudget { sector: Some(0), ..quick() };
        let t = verify_theorem(&a, &b, &only).unwrap();
        assert_eq!(t.conclusion, Conclusion::LocalityVerified);
        let bad = TheoremBudget { sector: Some(2), ..quick() };
        assert!(verify_theorem(&a, &b, &bad).is_err());
    }
}
