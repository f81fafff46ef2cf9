//! Product states on an explicit tensor factorisation `C^d1 ⊗ C^d2`.

use crate::error::{Error, Result};
use crate::matrix::{c64, CMatrix, Operator, State};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Factor {
    First,
    Second,
}

/// `ρ_a ⊗ ρ_b`.
pub fn product_state(omega_a: &State, omega_b: &State) -> State {
    State::from_operator_unchecked(omega_a.rho().kron(omega_b.rho()))
}

/// Reduced state on one factor of `C^d1 ⊗ C^d2`.
pub fn partial_trace(omega: &State, d1: usize, d2: usize, keep: Factor) -> Result<State> {
    if d1 == 0 || d2 == 0 {
        return Err(Error::Empty);
    }
    if d1 * d2 != omega.dim() {
        return Err(Error::DimensionMismatch(d1 * d2, omega.dim()));
    }
    let rho = omega.rho().matrix();
    let out = match keep {
        Factor::First => CMatrix::from_fn(d1, d1, |i, j| {
            (0..d2).fold(c64(0.0, 0.0), |acc, k| acc + rho[(i * d2 + k, j * d2 + k)])
        }),
        Factor::Second => CMatrix::from_fn(d2, d2, |i, j| {
            (0..d1).fold(c64(0.0, 0.0), |acc, k| acc + rho[(k * d2 + i, k * d2 + j)])
        }),
    };
    Ok(State::from_operator_unchecked(Operator::from_matrix_unchecked(out)))
}
