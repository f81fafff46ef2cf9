//! Seeded random matrices, projections and states.
//!
//! All randomness in the crate flows through [`rng`] so that every
//! randomized routine is reproducible from an explicit seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::matrix::{c64, CMatrix, CVector, Operator, Projection, State};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Derives an independent child seed from `(seed, stream)`.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    // splitmix64 over a mixed key
    let mut z = seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(stream.wrapping_mul(0xD1B5_4A32_D192_ED03))
        .wrapping_add(0x2545_F491_4F6C_DD1D);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// Matrix with i.i.d. standard complex Gaussian entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| c64(normal(rng), normal(rng)) * std::f64::consts::FRAC_1_SQRT_2)
}

pub fn gaussian_vector<R: Rng + ?Sized>(len: usize, rng: &mut R) -> CVector {
    CVector::from_fn(len, |_, _| c64(normal(rng), normal(rng)))
}

/// GUE-like random Hermitian operator.
pub fn hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Operator {
    let g = gaussian_matrix(dim, dim, rng);
    Operator::new((&g + g.adjoint()) * c64(0.5, 0.0)).expect("finite")
}

/// Haar-random unitary via QR with phase correction.
pub fn unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let qr = gaussian_matrix(dim, dim, rng).qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let n = d.norm();
        if n > 0.0 {
            let phase = d / n;
            for i in 0..dim {
                q[(i, j)] *= phase;
            }
        }
    }
    q
}

/// Uniformly random rank-`rank` projection.
pub fn projection<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> Projection {
    let u = unitary(dim, rng);
    Projection::from_isometry(&u.columns(0, rank).into_owned())
}

/// Random full-rank mixed state.
pub fn state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> State {
    State::from_factor(&gaussian_matrix(dim, dim, rng)).expect("nonzero")
}

pub fn pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> State {
    State::pure(&gaussian_vector(dim, rng)).expect("nonzero")
}

fn conjugate(u: &CMatrix, x: &Operator) -> Operator {
    Operator::new(u * x.matrix() * u.adjoint()).expect("finite")
}

/// Generators of `U(M_{d1} ⊗ 1)U†` and `U(1 ⊗ M_{d2})U†` for a random
/// unitary `U`: two commuting factors whose join is the full algebra.
pub fn tensor_factor_generators<R: Rng + ?Sized>(d1: usize, d2: usize, rng: &mut R) -> (Vec<Operator>, Vec<Operator>) {
    let u = unitary(d1 * d2, rng);
    let i1 = Operator::identity(d1);
    let i2 = Operator::identity(d2);
    let a = (0..2).map(|_| conjugate(&u, &hermitian(d1, rng).kron(&i2))).collect();
    let b = (0..2).map(|_| conjugate(&u, &i1.kron(&hermitian(d2, rng)))).collect();
    (a, b)
}

/// Generators of two abelian algebras diagonal in a common random basis,
/// each with at most `levels` distinct eigenvalues.
pub fn common_refinement_generators<R: Rng + ?Sized>(dim: usize, levels: usize, rng: &mut R) -> (Vec<Operator>, Vec<Operator>) {
    let u = unitary(dim, rng);
    let diag = |rng: &mut R| {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(0..levels.max(1)) as f64).collect();
        conjugate(&u, &Operator::diagonal(&v))
    };
    let a = diag(rng);
    let b = diag(rng);
    (vec![a], vec![b])
}
