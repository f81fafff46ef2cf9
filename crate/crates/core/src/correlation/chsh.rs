//! The CHSH correlation `½·ω(A₁(B₁+B₂) + A₂(B₁−B₂))`.
//!
//! Classical (product) states stay at or below 1; quantum states reach
//! at most √2.

use crate::algebra::{commutator_residual, OperatorAlgebra};
use crate::error::{Error, Result};
use crate::matrix::{c64, spectral_unchecked, tol, CMatrix, Operator, State};
use crate::random;

/// Two observables per side, each a Hermitian contraction.
#[derive(Clone, Debug, PartialEq)]
pub struct ChshSettings {
    pub a1: Operator,
    pub a2: Operator,
    pub b1: Operator,
    pub b2: Operator,
}

#[derive(Clone, Debug)]
pub struct ChshOptimum {
    pub value: f64,
    pub settings: ChshSettings,
    pub iterations: usize,
}

/// Operator norms may exceed 1 by this much and still count as contractions.
const CONTRACTION_SLACK: f64 = 1e-10;

fn check_observable(alg: &OperatorAlgebra, x: &Operator) -> Result<()> {
    if x.dim() != alg.hilbert_dim() {
        return Err(Error::DimensionMismatch(alg.hilbert_dim(), x.dim()));
    }
    let h = x.hermiticity_residual();
    if h > tol::HERM {
        return Err(Error::NotHermitian(h));
    }
    let n = x.norm();
    if n > 1.0 + CONTRACTION_SLACK {
        return Err(Error::NotContraction(n));
    }
    let m = alg.membership_residual(x)?;
    if m > tol::SPAN {
        return Err(Error::NotInAlgebra(m));
    }
    Ok(())
}

fn check_commuting(a: &OperatorAlgebra, b: &OperatorAlgebra) -> Result<()> {
    let r = commutator_residual(a, b)?;
    if r > tol::COMM {
        return Err(Error::NonCommuting(r));
    }
    Ok(())
}

fn functional(omega: &State, s: &ChshSettings) -> f64 {
    let sum = &s.b1 + &s.b2;
    let diff = &s.b1 - &s.b2;
    let t = &(&s.a1 * &sum) + &(&s.a2 * &diff);
    0.5 * omega.expect(&t).expect("dimensions checked").re
}

/// CHSH value of `omega` for the given settings. Refuses non-commuting
/// algebra pairs and observables that are not Hermitian contractions of
/// the right algebra.
pub fn chsh_value(a: &OperatorAlgebra, b: &OperatorAlgebra, omega: &State, settings: &ChshSettings) -> Result<f64> {
    check_commuting(a, b)?;
    if omega.dim() != a.hilbert_dim() {
        return Err(Error::DimensionMismatch(a.hilbert_dim(), omega.dim()));
    }
    check_observable(a, &settings.a1)?;
    check_observable(a, &settings.a2)?;
    check_observable(b, &settings.b1)?;
    check_observable(b, &settings.b2)?;
    Ok(functional(omega, settings))
}

/// `sign(h)` with `sign(0) = 0`; stays inside any algebra containing `h`.
fn sign(h: &CMatrix) -> Operator {
    let sd = spectral_unchecked(h);
    let scale = sd.eigenvalues.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let d = sd.dim();
    let mut out = CMatrix::zeros(d, d);
    for (i, &l) in sd.eigenvalues.iter().enumerate() {
        if l.abs() <= 1e-12 * scale.max(1.0) {
            continue;
        }
        let v = sd.eigenvectors.column(i);
        out += (v * v.adjoint()) * c64(l.signum(), 0.0);
    }
    Operator::from_matrix_unchecked((&out + out.adjoint()) * c64(0.5, 0.0))
}

/// Best response on one side: the maximiser of `Re Tr(y X)` over
/// Hermitian contractions `X` of `alg` is the sign of the projection of
/// `Herm(y)` onto `alg`.
fn best_response(alg: &OperatorAlgebra, y: &CMatrix) -> Operator {
    let herm = Operator::from_matrix_unchecked((y + y.adjoint()) * c64(0.5, 0.0));
    let p = alg.project(&herm).expect("dimensions checked");
    sign(p.matrix())
}

/// Maximises the CHSH value by alternating best responses from `starts`
/// seeded random settings.
pub fn optimize_chsh(
    a: &OperatorAlgebra,
    b: &OperatorAlgebra,
    omega: &State,
    seed: u64,
    starts: usize,
    max_iter: usize,
) -> Result<ChshOptimum> {
    check_commuting(a, b)?;
    if omega.dim() != a.hilbert_dim() {
        return Err(Error::DimensionMismatch(a.hilbert_dim(), omega.dim()));
    }
    let rho = omega.rho().matrix();
    let mut best: Option<ChshOptimum> = None;
    for s in 0..starts.max(1) {
        let mut rng = random::rng(random::derive_seed(seed, s as u64));
        let mut set = ChshSettings {
            a1: sign(a.random_element(&mut rng).matrix()),
            a2: sign(a.random_element(&mut rng).matrix()),
            b1: Operator::identity(a.hilbert_dim()),
            b2: Operator::identity(a.hilbert_dim()),
        };
        let mut value = f64::NEG_INFINITY;
        let mut iterations = 0;
        for _ in 0..max_iter.max(1) {
            iterations += 1;
            // Tr(ρ A B) = Tr((ρA) B) for the B side, Tr((Bρ) A) for the A side
            let sum_a = set.a1.matrix() + set.a2.matrix();
            let diff_a = set.a1.matrix() - set.a2.matrix();
            set.b1 = best_response(b, &(rho * sum_a));
            set.b2 = best_response(b, &(rho * diff_a));
            let sum_b = set.b1.matrix() + set.b2.matrix();
            let diff_b = set.b1.matrix() - set.b2.matrix();
            set.a1 = best_response(a, &(sum_b * rho));
            set.a2 = best_response(a, &(diff_b * rho));
            let next = functional(omega, &set);
            let done = next - value <= 1e-14;
            value = value.max(next);
            if done {
                break;
            }
        }
        let value = functional(omega, &set);
        if best.as_ref().is_none_or(|b| value > b.value + 1e-15) {
            best = Some(ChshOptimum { value, settings: set, iterations });
        }
    }
    Ok(best.expect("at least one start"))
}
