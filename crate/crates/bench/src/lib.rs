//! Shared inputs for the benchmarks.

use qcausal_core::matrix::{CMatrix, Projection};
use qcausal_core::presets::preset;
use qcausal_core::{random, OperatorAlgebra};

/// Two projections in dimension `d` whose ranges share a `common`-dimensional
/// block and are otherwise in general position.
pub fn overlapping_pair(d: usize, common: usize, seed: u64) -> (Projection, Projection) {
    let mut rng = random::rng(seed);
    let u = random::unitary(d, &mut rng);
    let rest = d - common;
    let half = rest / 2;
    let w = random::unitary(rest, &mut rng);
    let tail = u.columns(common, rest) * w.columns(0, half);
    let stack = |extra: CMatrix| {
        let mut m = CMatrix::zeros(d, common + extra.ncols());
        m.view_mut((0, 0), (d, common)).copy_from(&u.columns(0, common));
        m.view_mut((0, common), (d, extra.ncols())).copy_from(&extra);
        Projection::from_isometry(&m)
    };
    (stack(u.columns(common, half).into_owned()), stack(tail))
}

pub fn preset_algebras(name: &str) -> (OperatorAlgebra, OperatorAlgebra) {
    preset(name).and_then(|p| p.algebras()).expect("known preset")
}
