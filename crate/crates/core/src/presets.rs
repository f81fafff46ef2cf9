//! Named algebra pairs.
//!
//! | name | dim | A | B |
//! |------|-----|---|---|
//! | `tensor-qubits` | 4 | `M₂ ⊗ 1` | `1 ⊗ M₂` |
//! | `qubit-clash` | 2 | diagonal | `{1, σ_x}` |
//! | `pauli-chsh` | 4 | as `tensor-qubits`, with the singlet and optimal CHSH settings |
//! | `clock-shift-d` | d | diagonal (clock) | circulant (shift), `2 ≤ d ≤ 12` |
//! | `block-mixed` | 6 | `(M₂⊗1) ⊕ diag` | `(1⊗M₂) ⊕ {1, σ_x}` |

use std::f64::consts::{FRAC_1_SQRT_2, TAU};

use crate::algebra::{generate, OperatorAlgebra};
use crate::correlation::ChshSettings;
use crate::error::{Error, Result};
use crate::matrix::{c64, pauli, CMatrix, CVector, Operator, State};

pub const CLOCK_SHIFT_MIN: usize = 2;
pub const CLOCK_SHIFT_MAX: usize = 12;

#[derive(Clone, Debug)]
pub struct Preset {
    pub name: String,
    pub dim: usize,
    pub generators_a: Vec<Operator>,
    pub generators_b: Vec<Operator>,
    /// A distinguished state, where the preset has one.
    pub state: Option<State>,
    pub chsh: Option<ChshSettings>,
}

impl Preset {
    pub fn algebras(&self) -> Result<(OperatorAlgebra, OperatorAlgebra)> {
        Ok((generate(self.dim, &self.generators_a)?, generate(self.dim, &self.generators_b)?))
    }
}

pub fn names() -> Vec<String> {
    let mut v: Vec<String> = ["tensor-qubits", "qubit-clash", "pauli-chsh", "block-mixed"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    v.extend((CLOCK_SHIFT_MIN..=CLOCK_SHIFT_MAX).map(|d| format!("clock-shift-{d}")));
    v
}

fn tensor_generators() -> (Vec<Operator>, Vec<Operator>) {
    let i2 = Operator::identity(2);
    (
        vec![pauli::z().kron(&i2), pauli::x().kron(&i2)],
        vec![i2.kron(&pauli::z()), i2.kron(&pauli::x())],
    )
}

/// `(|01⟩ − |10⟩)/√2`.
pub fn singlet() -> State {
    let s = FRAC_1_SQRT_2;
    let v = CVector::from_vec(vec![c64(0.0, 0.0), c64(s, 0.0), c64(-s, 0.0), c64(0.0, 0.0)]);
    State::pure(&v).expect("unit vector")
}

/// Settings reaching `√2` on the singlet.
pub fn optimal_chsh_settings() -> ChshSettings {
    let i2 = Operator::identity(2);
    let plus = (&pauli::z() + &pauli::x()).scale_real(-FRAC_1_SQRT_2);
    let minus = (&pauli::z() - &pauli::x()).scale_real(-FRAC_1_SQRT_2);
    ChshSettings {
        a1: pauli::z().kron(&i2),
        a2: pauli::x().kron(&i2),
        b1: i2.kron(&plus),
        b2: i2.kron(&minus),
    }
}

/// Clock `diag(ωᵏ)` and cyclic shift `|k⟩ ↦ |k+1⟩` in dimension `d`.
pub fn clock_and_shift(d: usize) -> (Operator, Operator) {
    let clock = CMatrix::from_fn(d, d, |i, j| {
        if i == j {
            let t = TAU * i as f64 / d as f64;
            c64(t.cos(), t.sin())
        } else {
            c64(0.0, 0.0)
        }
    });
    let shift = CMatrix::from_fn(d, d, |i, j| if i == (j + 1) % d { c64(1.0, 0.0) } else { c64(0.0, 0.0) });
    (Operator::new(clock).expect("finite"), Operator::new(shift).expect("finite"))
}

fn direct_sum(big: Option<&Operator>, small: Option<&Operator>) -> Operator {
    let mut m = CMatrix::zeros(6, 6);
    if let Some(b) = big {
        m.view_mut((0, 0), (4, 4)).copy_from(b.matrix());
    }
    if let Some(s) = small {
        m.view_mut((4, 4), (2, 2)).copy_from(s.matrix());
    }
    Operator::new(m).expect("finite")
}

pub fn preset(name: &str) -> Result<Preset> {
    let make = |dim, generators_a, generators_b| Preset {
        name: name.to_string(),
        dim,
        generators_a,
        generators_b,
        state: None,
        chsh: None,
    };
    match name {
        "tensor-qubits" => {
            let (a, b) = tensor_generators();
            Ok(make(4, a, b))
        }
        "qubit-clash" => Ok(make(2, vec![pauli::z()], vec![pauli::x()])),
        "pauli-chsh" => {
            let (a, b) = tensor_generators();
            Ok(Preset { state: Some(singlet()), chsh: Some(optimal_chsh_settings()), ..make(4, a, b) })
        }
        "block-mixed" => {
            let i2 = Operator::identity(2);
            let a = vec![
                direct_sum(Some(&pauli::z().kron(&i2)), None),
                direct_sum(Some(&pauli::x().kron(&i2)), None),
                direct_sum(None, Some(&pauli::z())),
            ];
            let b = vec![
                direct_sum(Some(&i2.kron(&pauli::z())), None),
                direct_sum(Some(&i2.kron(&pauli::x())), None),
                direct_sum(None, Some(&pauli::x())),
            ];
            Ok(make(6, a, b))
        }
        _ => {
            let d = name
                .strip_prefix("clock-shift-")
                .and_then(|s| s.parse::<usize>().ok())
                .filter(|d| (CLOCK_SHIFT_MIN..=CLOCK_SHIFT_MAX).contains(d))
                .ok_or_else(|| Error::InvalidParameter(format!("unknown preset '{name}'")))?;
            let (clock, shift) = clock_and_shift(d);
            Ok(make(d, vec![clock], vec![shift]))
        }
    }
}
