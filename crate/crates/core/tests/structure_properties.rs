//! Property tests for matrices, the projection lattice and generated algebras.

use proptest::prelude::*;
use qcausal_core::algebra::{
    bicommutant_check, center, central_decomposition, commutant, generate, join_algebras, sample_projection,
    OperatorAlgebra,
};
use qcausal_core::lattice::{commutes, meet, meet_iterative, meet_spectral, total_coincidence};
use qcausal_core::matrix::{complement, expectation, spectral, tol, CMatrix, Operator, Projection};
use qcausal_core::random;

fn dist(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).norm()
}

/// Two projections sharing a `common`-dimensional subspace, plus a random
/// projection inside that subspace.
fn overlapping(d: usize, common: usize, seed: u64) -> (Projection, Projection, Projection) {
    let mut rng = random::rng(seed);
    let u = random::unitary(d, &mut rng);
    let rest = d - common;
    let ea = rest / 2;
    let shared = u.columns(0, common).into_owned();
    let mut e_cols = shared.clone().resize_horizontally(common + ea, Default::default());
    e_cols.view_mut((0, common), (d, ea)).copy_from(&u.columns(common, ea));
    // F: shared block plus random directions in the complement of the shared block
    let w = random::unitary(rest, &mut rng);
    let fb = rest - ea;
    let tail = u.columns(common, rest) * w.columns(0, fb);
    let mut f_cols = shared.clone().resize_horizontally(common + fb, Default::default());
    f_cols.view_mut((0, common), (d, fb)).copy_from(&tail);
    let g_rank = if common == 0 { 0 } else { 1 + (seed as usize) % common };
    let v = random::unitary(common.max(1), &mut rng);
    let g_cols = if common == 0 { CMatrix::zeros(d, 0) } else { &shared * v.columns(0, g_rank) };
    (Projection::from_isometry(&e_cols), Projection::from_isometry(&f_cols), Projection::from_isometry(&g_cols))
}

fn random_generators(d: usize, count: usize, seed: u64) -> Vec<Operator> {
    let mut rng = random::rng(seed);
    (0..count)
        .map(|i| {
            if i % 2 == 0 {
                random::hermitian(d, &mut rng)
            } else {
                // low-rank or block-structured elements give proper subalgebras
                let k = 1 + (seed as usize + i) % d;
                let v: Vec<f64> = (0..d).map(|j| if j < k { 1.0 } else { 0.0 }).collect();
                Operator::diagonal(&v)
            }
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn spectral_reconstructs(d in 1usize..=16, seed in any::<u64>()) {
        let h = random::hermitian(d, &mut random::rng(seed));
        let sd = spectral(&h).unwrap();
        prop_assert!(dist(sd.reconstruct().matrix(), h.matrix()) <= 1e-10);
        prop_assert!(sd.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn expectation_is_linear(d in 1usize..=8, seed in any::<u64>(), s in -3.0f64..3.0) {
        let mut rng = random::rng(seed);
        let w = random::state(d, &mut rng);
        let x = random::hermitian(d, &mut rng);
        let y = random::hermitian(d, &mut rng);
        let lhs = expectation(&w, &(&x + &y.scale_real(s))).unwrap();
        let rhs = expectation(&w, &x).unwrap() + expectation(&w, &y).unwrap() * s;
        prop_assert!((lhs - rhs).norm() <= 1e-12);
    }

    #[test]
    fn states_are_normalized(d in 1usize..=8, rank in 0usize..=8, seed in any::<u64>()) {
        let rank = rank.min(d);
        let mut rng = random::rng(seed);
        let w = random::state(d, &mut rng);
        let e = random::projection(d, rank, &mut rng);
        let p = w.prob(&e);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p));
        prop_assert!((p + w.prob(&complement(&e)) - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn meet_is_the_largest_common_subprojection(d in 2usize..=10, common in 0usize..=3, seed in any::<u64>()) {
        let common = common.min(d - 1);
        let (e, f, g) = overlapping(d, common, seed);
        let m = meet(&e, &f).unwrap();
        prop_assert_eq!(m.rank(), common);
        prop_assert!(m.dominance_residual(&g) <= 1e-8);
        prop_assert!(e.dominance_residual(&m) <= 1e-8 && f.dominance_residual(&m) <= 1e-8);
    }

    #[test]
    fn meet_methods_agree(d in 2usize..=16, common in 0usize..=3, seed in any::<u64>()) {
        let common = common.min(d - 1);
        let (e, f, _) = overlapping(d, common, seed);
        let s = meet_spectral(&e, &f).unwrap();
        if let Ok(it) = meet_iterative(&e, &f, 10_000) {
            prop_assert!(dist(it.meet.matrix(), s.meet.matrix()) <= 1e-8);
        }
    }

    #[test]
    fn coincidence_absorbs_products(d in 2usize..=8, re in 1usize..=7, rf in 1usize..=7, seed in any::<u64>()) {
        let mut rng = random::rng(seed);
        let e = random::projection(d, re.min(d), &mut rng);
        let f = random::projection(d, rf.min(d), &mut rng);
        let t = total_coincidence(&e, &f).unwrap();
        let m = meet(&e, &f).unwrap();
        let eft = e.matrix() * f.matrix() * t.matrix();
        let fet = f.matrix() * e.matrix() * t.matrix();
        prop_assert!(dist(&eft, m.matrix()) <= 1e-9);
        prop_assert!(dist(&fet, m.matrix()) <= 1e-9);
    }

    #[test]
    fn coincidence_is_complement_invariant(d in 2usize..=8, seed in any::<u64>()) {
        let (e, f, _) = overlapping(d, (seed % 2) as usize, seed);
        let t = total_coincidence(&e, &f).unwrap();
        let (ec, fc) = (complement(&e), complement(&f));
        for (x, y) in [(&ec, &fc), (&ec, &f), (&e, &fc)] {
            prop_assert!(dist(total_coincidence(x, y).unwrap().matrix(), t.matrix()) <= 1e-10);
        }
    }

    #[test]
    fn coincidence_detects_commutation(d in 2usize..=8, seed in any::<u64>(), commuting in any::<bool>()) {
        let mut rng = random::rng(seed);
        let (e, f) = if commuting {
            // diagonal in a shared random basis
            let u = random::unitary(d, &mut rng);
            let pick = |mask: u64| {
                let cols: Vec<usize> = (0..d).filter(|i| mask >> i & 1 == 1).collect();
                let v = CMatrix::from_fn(d, cols.len(), |r, c| u[(r, cols[c])]);
                Projection::from_isometry(&v)
            };
            (pick(seed), pick(seed.rotate_left(17)))
        } else {
            let r1 = 1 + (seed as usize) % (d - 1);
            (random::projection(d, r1, &mut rng), random::projection(d, 1 + (seed as usize >> 8) % (d - 1), &mut rng))
        };
        let c = commutes(&e, &f).unwrap();
        let t = total_coincidence(&e, &f).unwrap();
        let t_is_one = dist(t.matrix(), &CMatrix::identity(d, d)) <= tol::COMM;
        prop_assert_eq!(c.commutes, t_is_one);
        prop_assert_eq!(c.commutes, commuting);
    }

    #[test]
    fn generate_is_idempotent(d in 2usize..=6, count in 1usize..=3, seed in any::<u64>()) {
        let a = generate(d, &random_generators(d, count, seed)).unwrap();
        let again = generate(d, &a.basis()).unwrap();
        prop_assert_eq!(again.dim(), a.dim());
        for b in again.basis() {
            prop_assert!(a.membership_residual(&b).unwrap() <= 1e-9);
        }
        prop_assert!(a.closure_residual() <= 1e-9);
    }

    #[test]
    fn bicommutant_recovers_algebra(d in 2usize..=6, count in 1usize..=3, seed in any::<u64>()) {
        let a = generate(d, &random_generators(d, count, seed)).unwrap();
        let r = bicommutant_check(&a);
        prop_assert!(r.holds);
        prop_assert_eq!(r.bicommutant_dim, a.dim());
        let aa = commutant(&commutant(&a));
        for x in a.basis() {
            prop_assert!(aa.membership_residual(&x).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn commutant_reverses_inclusion(d in 2usize..=5, seed in any::<u64>()) {
        let gens = random_generators(d, 3, seed);
        let small = generate(d, &gens[1..2]).unwrap();
        let big = generate(d, &gens).unwrap();
        let (cs, cb) = (commutant(&small), commutant(&big));
        for x in cb.basis() {
            prop_assert!(cs.membership_residual(&x).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn central_blocks_partition_unity(d in 2usize..=6, count in 1usize..=3, seed in any::<u64>()) {
        let a = generate(d, &random_generators(d, count, seed)).unwrap();
        let dec = central_decomposition(&a).unwrap();
        let sum = dec
            .minimal_central_projections
            .iter()
            .fold(CMatrix::zeros(d, d), |acc, p| acc + p.matrix());
        prop_assert!(dist(&sum, &CMatrix::identity(d, d)) <= 1e-10);
        prop_assert_eq!(center(&a).dim(), dec.len());
        for block in &dec.blocks {
            prop_assert_eq!(center(block).dim(), 1);
        }
    }

    #[test]
    fn commuting_factors_multiply_dimensions(d1 in 1usize..=3, d2 in 1usize..=3, seed in any::<u64>()) {
        let (ga, gb) = random::tensor_factor_generators(d1, d2, &mut random::rng(seed));
        let a = generate(d1 * d2, &ga).unwrap();
        let b = generate(d1 * d2, &gb).unwrap();
        let joint = join_algebras(&a, &b).unwrap();
        prop_assert_eq!(center(&joint).dim(), 1);
        prop_assert_eq!(joint.dim(), a.dim() * b.dim());
    }

    #[test]
    fn sampled_projections_belong(d in 2usize..=6, count in 1usize..=3, seed in any::<u64>()) {
        let a = generate(d, &random_generators(d, count, seed)).unwrap();
        for s in 0..8 {
            let e = sample_projection(&a, seed.wrapping_add(s));
            let m = e.matrix();
            prop_assert!(dist(&(m * m), m) <= 1e-10);
            prop_assert!(dist(&m.adjoint(), m) <= 1e-10);
            prop_assert!(a.membership_residual(e.op()).unwrap() <= 1e-9);
        }
    }
}

#[test]
fn trivial_algebra_has_full_commutant() {
    let t = OperatorAlgebra::trivial(3);
    assert_eq!(commutant(&t).dim(), 9);
}
