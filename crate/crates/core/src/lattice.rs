//! Lattice operations on projections: meet, join, total coincidence.
//!
//! The meet `E ∧ F` is the projection onto `Ran E ∩ Ran F`. It is computed
//! exactly as the eigenvalue-2 spectral projection of `E + F`, and
//! alternatively as the limit of the powers `(EF)ⁿ`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::{complement, snap_projection, spectral_unchecked, tol, Operator, Projection};

/// Eigenvalues of `E + F` above `2 − MEET_THRESHOLD` count as intersection.
pub const MEET_THRESHOLD: f64 = 1e-8;
/// Step size below which the power iteration is considered stalled.
pub const MEET_STALL: f64 = 1e-12;
pub const DEFAULT_MAX_ITER: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MeetMethod {
    Iterative,
    Spectral,
}

#[derive(Clone, Debug)]
pub struct MeetResult {
    pub meet: Projection,
    pub method: MeetMethod,
    /// Number of multiplications by `EF`; zero for the spectral method.
    pub iterations: usize,
    /// `‖(EF)ⁿ − meet‖` at termination; zero for the spectral method.
    pub residual: f64,
    /// Set when `E + F` has an eigenvalue within two decades of the
    /// intersection cutoff, i.e. a principal angle that is small but not
    /// clearly zero. Such meets are fragile.
    pub near_degenerate: bool,
}

fn check_dims(e: &Projection, f: &Projection) -> Result<()> {
    e.op().check_same_dim(f.op())
}

/// Exact meet via the eigenvalue-2 eigenspace of `E + F`.
pub fn meet_spectral(e: &Projection, f: &Projection) -> Result<MeetResult> {
    check_dims(e, f)?;
    let sum = e.matrix() + f.matrix();
    let sd = spectral_unchecked(&sum);
    let mut keep = Vec::new();
    let mut near_degenerate = false;
    for (i, &lambda) in sd.eigenvalues.iter().enumerate() {
        let gap = 2.0 - lambda;
        if gap < MEET_THRESHOLD {
            keep.push(i);
        }
        if gap > MEET_THRESHOLD / 100.0 && gap < MEET_THRESHOLD * 100.0 {
            near_degenerate = true;
        }
    }
    Ok(MeetResult {
        meet: sd.projection(keep),
        method: MeetMethod::Spectral,
        iterations: 0,
        residual: 0.0,
        near_degenerate,
    })
}

/// `E ∧ F` by the default (spectral) method.
pub fn meet(e: &Projection, f: &Projection) -> Result<Projection> {
    Ok(meet_spectral(e, f)?.meet)
}

/// Meet as the limit of `(EF)ⁿ`, iterating `M ← EF·M` until the step
/// `‖M_{n+1} − M_n‖` drops below [`MEET_STALL`].
pub fn meet_iterative(e: &Projection, f: &Projection, max_iter: usize) -> Result<MeetResult> {
    check_dims(e, f)?;
    if max_iter == 0 {
        return Err(Error::InvalidParameter("max_iter must be at least 1".into()));
    }
    let ef = e.matrix() * f.matrix();
    let mut m = ef.clone();
    let mut step = f64::INFINITY;
    let mut iterations = 0;
    while iterations < max_iter {
        let next = &ef * &m;
        step = (&next - &m).norm();
        m = next;
        iterations += 1;
        if step <= MEET_STALL {
            break;
        }
    }
    if step > MEET_STALL {
        return Err(Error::MeetNotConverged { iterations, step });
    }
    let limit = Operator::from_matrix_unchecked(m);
    // the limit is only approximately Hermitian; the snap window is wide
    // enough for the slowest converging inputs that still pass the stall test
    let meet = snap_projection(&limit, 1e-6, 1e-6)
        .map_err(|_| Error::MeetNotConverged { iterations, step })?;
    let residual = (&limit - meet.op()).norm();
    Ok(MeetResult {
        meet,
        method: MeetMethod::Iterative,
        iterations,
        residual,
        near_degenerate: false,
    })
}

/// Projection onto `Ran E + Ran F`, as `(E⊥ ∧ F⊥)⊥`.
pub fn join(e: &Projection, f: &Projection) -> Result<Projection> {
    Ok(complement(&meet(&complement(e), &complement(f))?))
}

/// `T(E,F) = E∧F + E∧F⊥ + E⊥∧F + E⊥∧F⊥`.
pub fn total_coincidence(e: &Projection, f: &Projection) -> Result<Projection> {
    check_dims(e, f)?;
    let ec = complement(e);
    let fc = complement(f);
    let terms = [meet(e, f)?, meet(e, &fc)?, meet(&ec, f)?, meet(&ec, &fc)?];
    let sum = terms
        .iter()
        .skip(1)
        .fold(terms[0].op().clone(), |acc, t| &acc + t.op());
    snap_projection(&sum, tol::HERM, tol::SPEC)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Commutation {
    pub commutes: bool,
    /// `‖EF − FE‖` in operator norm.
    pub residual: f64,
}

pub fn commutes(e: &Projection, f: &Projection) -> Result<Commutation> {
    check_dims(e, f)?;
    let residual = e.op().commutator(f.op()).norm();
    Ok(Commutation { commutes: residual <= tol::COMM, residual })
}

/// Meet of a whole family, folded left to right.
pub fn meet_all<'a, I>(dim: usize, family: I) -> Result<Projection>
where
    I: IntoIterator<Item = &'a Projection>,
{
    family
        .into_iter()
        .try_fold(Projection::identity(dim), |acc, p| meet(&acc, p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{make_projection, pauli, Operator};
    use crate::random;

    fn diag(entries: &[f64]) -> Projection {
        make_projection(&Operator::diagonal(entries)).unwrap()
    }

    fn plus() -> Projection {
        Projection::onto_vector(&pauli::plus()).unwrap()
    }

    fn dist(a: &Projection, b: &Projection) -> f64 {
        (a.matrix() - b.matrix()).norm()
    }

    #[test]
    fn meet_spectral_examples() {
        let m = meet_spectral(&diag(&[1.0, 1.0, 0.0, 0.0]), &diag(&[1.0, 0.0, 1.0, 0.0])).unwrap();
        assert!(dist(&m.meet, &diag(&[1.0, 0.0, 0.0, 0.0])) < 1e-14);
        assert_eq!(m.method, MeetMethod::Spectral);

        let m = meet_spectral(&diag(&[1.0, 0.0]), &plus()).unwrap();
        assert!(m.meet.is_zero());

        let mut rng = random::rng(1);
        let e = random::projection(5, 2, &mut rng);
        assert!(dist(&meet_spectral(&e, &e).unwrap().meet, &e) < 1e-12);
    }

    #[test]
    fn meet_iterative_examples() {
        // oracle: ‖(EF)ⁿ‖ = (1/√2)^(2n-1) for these two lines
        let e = diag(&[1.0, 0.0]);
        let m = meet_iterative(&e, &plus(), 200).unwrap();
        assert!(m.meet.is_zero());
        let predicted = 0.5_f64.sqrt().powi(2 * (m.iterations as i32 + 1) - 1);
        assert!(m.residual <= 1e-11 && (m.residual - predicted).abs() < 1e-15);

        let c = meet_iterative(&diag(&[1.0, 1.0, 0.0]), &diag(&[0.0, 1.0, 1.0]), 10).unwrap();
        assert_eq!(c.iterations, 1);
        assert!(dist(&c.meet, &diag(&[0.0, 1.0, 0.0])) < 1e-14);

        let mut rng = random::rng(2);
        let e = random::projection(6, 3, &mut rng);
        let m = meet_iterative(&e, &Projection::identity(6), 10).unwrap();
        assert!(dist(&m.meet, &e) < 1e-12);
    }

    #[test]
    fn meet_iterative_reports_non_convergence() {
        let theta: f64 = 1e-3;
        let v = pauli::ket(&[theta.cos(), theta.sin()]);
        let f = Projection::onto_vector(&v).unwrap();
        let r = meet_iterative(&diag(&[1.0, 0.0]), &f, 100);
        assert!(matches!(r, Err(Error::MeetNotConverged { iterations: 100, .. })));
        assert!(meet_iterative(&f, &f, 0).is_err());
    }

    #[test]
    fn near_degenerate_flag() {
        let theta: f64 = 1e-4;
        let v = pauli::ket(&[theta.cos(), theta.sin()]);
        let f = Projection::onto_vector(&v).unwrap();
        assert!(meet_spectral(&diag(&[1.0, 0.0]), &f).unwrap().near_degenerate);
        assert!(!meet_spectral(&diag(&[1.0, 0.0]), &plus()).unwrap().near_degenerate);
    }

    #[test]
    fn join_examples() {
        assert!(join(&diag(&[1.0, 0.0]), &diag(&[0.0, 1.0])).unwrap().is_identity());
        let mut rng = random::rng(4);
        let e = random::projection(4, 2, &mut rng);
        assert!(dist(&join(&e, &Projection::zero(4)).unwrap(), &e) < 1e-12);
        assert!(join(&diag(&[1.0, 0.0]), &plus()).unwrap().is_identity());
    }

    #[test]
    fn total_coincidence_examples() {
        let e = diag(&[1.0, 0.0]);
        assert!(total_coincidence(&e, &e).unwrap().is_identity());
        // oracle: each of the four meets of two distinct lines in C² vanishes
        let ec = complement(&e);
        let fc = complement(&plus());
        for (x, y) in [(&e, &plus()), (&e, &fc), (&ec, &plus()), (&ec, &fc)] {
            assert!(meet_spectral(x, y).unwrap().meet.is_zero());
        }
        assert!(total_coincidence(&e, &plus()).unwrap().is_zero());
        let mut rng = random::rng(7);
        let g = random::projection(5, 2, &mut rng);
        assert!(total_coincidence(&g, &Projection::identity(5)).unwrap().is_identity());
    }

    #[test]
    fn commutes_examples() {
        let e = diag(&[1.0, 0.0]);
        assert!(commutes(&e, &diag(&[1.0, 1.0])).unwrap().commutes);
        let c = commutes(&e, &plus()).unwrap();
        assert!(!c.commutes);
        assert!((c.residual - 0.5).abs() < 1e-14);
        let mut rng = random::rng(8);
        let g = random::projection(6, 4, &mut rng);
        assert!(commutes(&g, &complement(&g)).unwrap().commutes);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = Projection::identity(2);
        let b = Projection::identity(3);
        assert!(matches!(meet_spectral(&a, &b), Err(Error::DimensionMismatch(2, 3))));
        assert!(meet_iterative(&a, &b, 5).is_err());
        assert!(total_coincidence(&a, &b).is_err());
        assert!(join(&a, &b).is_err());
    }

    #[test]
    fn meet_all_is_order_independent() {
        let mut rng = random::rng(9);
        let fam: Vec<Projection> = (0..4).map(|_| random::projection(6, 5, &mut rng)).collect();
        let fwd = meet_all(6, fam.iter()).unwrap();
        let rev = meet_all(6, fam.iter().rev()).unwrap();
        assert_eq!(fwd.rank(), 2);
        assert!(dist(&fwd, &rev) < 1e-9);
    }
}
