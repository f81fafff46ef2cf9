//! Correlations between two algebras in a state.
//!
//! For projections `E ∈ A`, `F ∈ B` the correlation residual of a state `ω`
//! is `|ω(E∧F) − ω(E)ω(F)|`. A state is uncorrelated when every pair has
//! residual zero; [`c_omega`] takes the supremum over pairs and
//! [`measure::c_measure`] minimises that supremum over states.

pub mod chsh;
pub mod measure;
pub mod product;

use std::cmp::Ordering;

use rayon::prelude::*;
use serde::Serialize;

use crate::algebra::{self, realize_choice, sample_choice, OperatorAlgebra, ProjectionLattice, SpectralChoice};
use crate::error::{Error, Result};
use crate::lattice::meet;
use crate::matrix::{Projection, State};
use crate::random;

pub use chsh::{chsh_value, optimize_chsh, ChshSettings};
pub use measure::{c_measure, CausalityMeasureReport, MeasureBudget, StartTrace};
pub use product::{partial_trace, product_state, Factor};

/// Lattices with at most this many minimal projections are searched
/// exhaustively by [`c_omega`].
pub const EXHAUSTIVE_BITS: usize = 10;
/// Materialised pair sets (with stored meets) are exhaustive only when the
/// two lattices together have at most this many minimal projections.
pub const STORED_PAIR_BITS: usize = 14;
/// Values closer than this are ties, broken by comparing witnesses.
pub const TIE_TOL: f64 = 1e-12;

/// A projection pair together with its meet.
#[derive(Clone, Debug)]
pub struct PairEntry {
    pub e: Projection,
    pub f: Projection,
    pub meet: Projection,
}

impl PairEntry {
    pub fn new(e: Projection, f: Projection) -> Result<Self> {
        let meet = meet(&e, &f)?;
        Ok(Self { e, f, meet })
    }

    /// `|ω(E∧F) − ω(E)ω(F)|`.
    pub fn residual(&self, omega: &State) -> f64 {
        (omega.prob(&self.meet) - omega.prob(&self.e) * omega.prob(&self.f)).abs()
    }
}

/// Where the projection pairs quantified over come from.
#[derive(Clone, Debug)]
pub enum PairSource {
    /// Every pair from the two projection lattices; both algebras must be
    /// abelian. Certifying.
    Exhaustive,
    /// `count` pairs drawn with [`algebra::sample_projection`].
    Sampled { count: usize, seed: u64 },
    /// Exhaustive when both lattices are small enough, sampled otherwise.
    Auto { count: usize, seed: u64 },
    Explicit(Vec<(Projection, Projection)>),
}

#[derive(Clone, Debug)]
pub struct PairSet {
    pub pairs: Vec<PairEntry>,
    /// True when the pairs exhaust both projection lattices.
    pub certified: bool,
}

fn check_dims(omega: Option<&State>, a: &OperatorAlgebra, b: &OperatorAlgebra) -> Result<()> {
    if a.hilbert_dim() != b.hilbert_dim() {
        return Err(Error::DimensionMismatch(a.hilbert_dim(), b.hilbert_dim()));
    }
    if let Some(w) = omega {
        if w.dim() != a.hilbert_dim() {
            return Err(Error::DimensionMismatch(w.dim(), a.hilbert_dim()));
        }
    }
    Ok(())
}

/// Both projection lattices, when both algebras are abelian and the
/// lattices together have at most `max_bits` minimal projections.
pub(crate) fn small_lattices(
    a: &OperatorAlgebra,
    b: &OperatorAlgebra,
    max_bits_each: usize,
    max_bits_total: usize,
) -> Option<(ProjectionLattice, ProjectionLattice)> {
    if !(a.is_abelian() && b.is_abelian()) {
        return None;
    }
    let la = algebra::projection_lattice(a).ok()?;
    let lb = algebra::projection_lattice(b).ok()?;
    let (ka, kb) = (la.minimal.len(), lb.minimal.len());
    (ka <= max_bits_each && kb <= max_bits_each && ka + kb <= max_bits_total).then_some((la, lb))
}

fn exhaustive_pairs(la: &ProjectionLattice, lb: &ProjectionLattice) -> Result<Vec<PairEntry>> {
    let es: Vec<Projection> = la.iter().collect();
    let fs: Vec<Projection> = lb.iter().collect();
    es.par_iter()
        .flat_map_iter(|e| fs.iter().map(move |f| PairEntry::new(e.clone(), f.clone())))
        .collect()
}

fn sampled_pairs(a: &OperatorAlgebra, b: &OperatorAlgebra, count: usize, seed: u64) -> Result<Vec<PairEntry>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let e = algebra::sample_projection(a, random::derive_seed(seed, 2 * i as u64));
            let f = algebra::sample_projection(b, random::derive_seed(seed, 2 * i as u64 + 1));
            PairEntry::new(e, f)
        })
        .collect()
}

/// Materialises the pairs described by `source`.
pub fn projection_pairs(a: &OperatorAlgebra, b: &OperatorAlgebra, source: &PairSource) -> Result<PairSet> {
    check_dims(None, a, b)?;
    match source {
        PairSource::Exhaustive => {
            let la = algebra::projection_lattice(a)?;
            let lb = algebra::projection_lattice(b)?;
            let bits = la.minimal.len() + lb.minimal.len();
            if bits > STORED_PAIR_BITS {
                return Err(Error::LatticeTooLarge(bits, STORED_PAIR_BITS));
            }
            Ok(PairSet { pairs: exhaustive_pairs(&la, &lb)?, certified: true })
        }
        PairSource::Sampled { count, seed } => {
            Ok(PairSet { pairs: sampled_pairs(a, b, *count, *seed)?, certified: false })
        }
        PairSource::Auto { count, seed } => match small_lattices(a, b, EXHAUSTIVE_BITS, STORED_PAIR_BITS) {
            Some((la, lb)) => Ok(PairSet { pairs: exhaustive_pairs(&la, &lb)?, certified: true }),
            None => Ok(PairSet { pairs: sampled_pairs(a, b, *count, *seed)?, certified: false }),
        },
        PairSource::Explicit(list) => {
            for (e, f) in list {
                e.op().check_same_dim(f.op())?;
                if e.dim() != a.hilbert_dim() {
                    return Err(Error::DimensionMismatch(a.hilbert_dim(), e.dim()));
                }
            }
            let pairs = list
                .iter()
                .map(|(e, f)| PairEntry::new(e.clone(), f.clone()))
                .collect::<Result<_>>()?;
            Ok(PairSet { pairs, certified: false })
        }
    }
}

#[derive(Clone, Debug)]
pub struct UncorrelatedCheck {
    pub uncorrelated: bool,
    pub max_residual: f64,
    pub worst_pair: Option<(Projection, Projection)>,
    pub pairs_checked: usize,
    pub certified: bool,
}

/// Checks `ω(E∧F) = ω(E)ω(F)` within `tol` over the pairs in `pairs`.
pub fn check_uncorrelated(omega: &State, pairs: &PairSet, tol: f64) -> UncorrelatedCheck {
    let mut best: Option<Candidate> = None;
    for p in &pairs.pairs {
        let c = Candidate { value: p.residual(omega), e: p.e.clone(), f: p.f.clone() };
        best = Some(match best {
            Some(b) if !c.beats(&b) => b,
            _ => c,
        });
    }
    let max_residual = best.as_ref().map_or(0.0, |c| c.value);
    UncorrelatedCheck {
        uncorrelated: max_residual <= tol,
        max_residual,
        worst_pair: best.map(|c| (c.e, c.f)),
        pairs_checked: pairs.pairs.len(),
        certified: pairs.certified,
    }
}

pub fn is_uncorrelated(
    omega: &State,
    a: &OperatorAlgebra,
    b: &OperatorAlgebra,
    source: &PairSource,
    tol: f64,
) -> Result<UncorrelatedCheck> {
    check_dims(Some(omega), a, b)?;
    let pairs = projection_pairs(a, b, source)?;
    Ok(check_uncorrelated(omega, &pairs, tol))
}

/// Budget for the supremum over projection pairs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SupBudget {
    /// Random pairs drawn when the lattices are not searched exhaustively.
    pub pairs: usize,
    /// Hill-climbing steps per refined candidate.
    pub refine_steps: usize,
    /// Number of best sampled pairs that are refined.
    pub refine_starts: usize,
    pub seed: u64,
}

impl Default for SupBudget {
    fn default() -> Self {
        Self { pairs: 256, refine_steps: 64, refine_starts: 4, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SupMethod {
    Exhaustive,
    SampledRefined,
}

#[derive(Clone, Debug)]
pub struct CorrelationReport {
    pub c_omega: f64,
    pub witness_pair: (Projection, Projection),
    pub method: SupMethod,
    pub samples_used: usize,
    /// Only exhaustive searches certify the supremum.
    pub certified: bool,
}

/// A scored projection pair.
#[derive(Clone, Debug)]
struct Candidate {
    value: f64,
    e: Projection,
    f: Projection,
}

/// Row-major comparison of the entries of two witness pairs.
fn compare_witness(a: (&Projection, &Projection), b: (&Projection, &Projection)) -> Ordering {
    let flat = |p: &Projection| -> Vec<f64> {
        let m = p.matrix();
        let d = m.nrows();
        (0..d * d).flat_map(|k| [m[(k / d, k % d)].re, m[(k / d, k % d)].im]).collect()
    };
    let xa = flat(a.0).into_iter().chain(flat(a.1));
    let xb = flat(b.0).into_iter().chain(flat(b.1));
    xa.zip(xb)
        .map(|(p, q)| p.total_cmp(&q))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

impl Candidate {
    /// Larger value wins; near-ties go to the lexicographically larger
    /// witness so the choice never depends on evaluation order.
    fn beats(&self, other: &Candidate) -> bool {
        if self.value > other.value + TIE_TOL {
            return true;
        }
        if other.value > self.value + TIE_TOL {
            return false;
        }
        compare_witness((&self.e, &self.f), (&other.e, &other.f)) == Ordering::Greater
    }
}

fn select(cands: impl IntoIterator<Item = Candidate>) -> Option<Candidate> {
    cands.into_iter().fold(None, |best, c| match best {
        Some(b) if !c.beats(&b) => Some(b),
        _ => Some(c),
    })
}

/// `C_ω(A,B) = sup |ω(E∧F) − ω(E)ω(F)|` over projection pairs.
///
/// Abelian pairs with small lattices are searched exhaustively. Otherwise
/// `budget.pairs` random pairs are scored and the best few are refined by
/// hill climbing over their [`SpectralChoice`] descriptions.
pub fn c_omega(omega: &State, a: &OperatorAlgebra, b: &OperatorAlgebra, budget: &SupBudget) -> Result<CorrelationReport> {
    check_dims(Some(omega), a, b)?;
    if let Some((la, lb)) = small_lattices(a, b, EXHAUSTIVE_BITS, 2 * EXHAUSTIVE_BITS) {
        return exhaustive_sup(omega, &la, &lb);
    }
    sampled_sup(omega, a, b, budget)
}

fn exhaustive_sup(omega: &State, la: &ProjectionLattice, lb: &ProjectionLattice) -> Result<CorrelationReport> {
    let fs: Vec<Projection> = lb.iter().collect();
    let pf: Vec<f64> = fs.iter().map(|f| omega.prob(f)).collect();
    let full_a = la.len() - 1;
    let full_b = lb.len() - 1;
    let per_e: Vec<Candidate> = (0..la.len())
        .into_par_iter()
        .map(|ma| -> Result<Candidate> {
            let e = la.element(ma);
            let pe = omega.prob(&e);
            let cands = fs.iter().enumerate().map(|(mb, f)| -> Result<Candidate> {
                let trivial = ma == 0 || mb == 0 || ma == full_a || mb == full_b;
                let value = if trivial {
                    0.0
                } else {
                    (omega.prob(&meet(&e, f)?) - pe * pf[mb]).abs()
                };
                Ok(Candidate { value, e: e.clone(), f: f.clone() })
            });
            let cands: Vec<Candidate> = cands.collect::<Result<_>>()?;
            Ok(select(cands).expect("nonempty lattice"))
        })
        .collect::<Result<_>>()?;
    let best = select(per_e).expect("nonempty lattice");
    Ok(CorrelationReport {
        c_omega: best.value,
        witness_pair: (best.e, best.f),
        method: SupMethod::Exhaustive,
        samples_used: la.len() * lb.len(),
        certified: true,
    })
}

struct Climber {
    ca: SpectralChoice,
    cb: SpectralChoice,
    best: Candidate,
}

fn score(omega: &State, e: Projection, f: Projection) -> Result<Candidate> {
    let value = (omega.prob(&meet(&e, &f)?) - omega.prob(&e) * omega.prob(&f)).abs();
    Ok(Candidate { value, e, f })
}

fn perturb(choice: &SpectralChoice, sigma: f64, rng: &mut random::SeededRng) -> SpectralChoice {
    use rand::Rng;
    let mut next = choice.clone();
    let k = next.mask.len();
    if k >= 3 && rng.random::<bool>() {
        let i = rng.random_range(0..k);
        next.mask[i] = !next.mask[i];
        let on = next.mask.iter().filter(|&&m| m).count();
        if on > 0 && on < k {
            return next;
        }
        next.mask[i] = !next.mask[i];
    }
    let scale = (next.coefficients.iter().map(|c| c * c).sum::<f64>() / next.coefficients.len().max(1) as f64).sqrt();
    for c in &mut next.coefficients {
        *c += sigma * scale * random::normal(rng);
    }
    next
}

fn sampled_sup(omega: &State, a: &OperatorAlgebra, b: &OperatorAlgebra, budget: &SupBudget) -> Result<CorrelationReport> {
    let n = budget.pairs.max(1);
    let scored: Vec<(SpectralChoice, SpectralChoice, Candidate)> = (0..n)
        .into_par_iter()
        .map(|i| -> Result<_> {
            let mut ra = random::rng(random::derive_seed(budget.seed, 2 * i as u64));
            let mut rb = random::rng(random::derive_seed(budget.seed, 2 * i as u64 + 1));
            let ca = sample_choice(a, &mut ra);
            let cb = sample_choice(b, &mut rb);
            let e = realize_choice(a, &ca).expect("fresh choice");
            let f = realize_choice(b, &cb).expect("fresh choice");
            Ok((ca, cb, score(omega, e, f)?))
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<usize> = (0..scored.len()).collect();
    order.sort_by(|&i, &j| {
        if scored[i].2.beats(&scored[j].2) {
            Ordering::Less
        } else if scored[j].2.beats(&scored[i].2) {
            Ordering::Greater
        } else {
            i.cmp(&j)
        }
    });
    let starts: Vec<Climber> = order
        .iter()
        .take(budget.refine_starts)
        .map(|&i| Climber { ca: scored[i].0.clone(), cb: scored[i].1.clone(), best: scored[i].2.clone() })
        .collect();

    let refined: Vec<(Candidate, usize)> = starts
        .into_par_iter()
        .enumerate()
        .map(|(s, mut c)| -> Result<_> {
            use rand::Rng;
            let mut rng = random::rng(random::derive_seed(budget.seed ^ 0x5E_ED0F_C11B, s as u64));
            let mut sigma = 0.3;
            let mut evals = 0;
            for _ in 0..budget.refine_steps {
                let side_a = rng.random::<bool>();
                let (na, nb) = if side_a {
                    (perturb(&c.ca, sigma, &mut rng), c.cb.clone())
                } else {
                    (c.ca.clone(), perturb(&c.cb, sigma, &mut rng))
                };
                let (Some(e), Some(f)) = (realize_choice(a, &na), realize_choice(b, &nb)) else {
                    sigma = (sigma * 0.7).max(1e-4);
                    continue;
                };
                evals += 1;
                let cand = score(omega, e, f)?;
                if cand.value > c.best.value {
                    c = Climber { ca: na, cb: nb, best: cand };
                    sigma = (sigma * 1.5).min(1.0);
                } else {
                    sigma = (sigma * 0.7).max(1e-4);
                }
            }
            Ok((c.best, evals))
        })
        .collect::<Result<_>>()?;

    let extra: usize = refined.iter().map(|(_, k)| k).sum();
    let best = select(
        scored
            .into_iter()
            .map(|(_, _, c)| c)
            .chain(refined.into_iter().map(|(c, _)| c)),
    )
    .expect("at least one sample");
    Ok(CorrelationReport {
        c_omega: best.value,
        witness_pair: (best.e, best.f),
        method: SupMethod::SampledRefined,
        samples_used: n + extra,
        certified: false,
    })
}
