//! `C(A,B) = inf_ω C_ω(A,B)` by multi-start direct search.
//!
//! States are parameterised as `ρ = MM†/Tr(MM†)` with `M` a full complex
//! matrix. The inner supremum runs over a fixed pool of projection pairs
//! (every pair when both lattices are small, a seeded sample otherwise)
//! whose meets are computed once, so each objective evaluation is a few
//! dot products.

use rayon::prelude::*;
use serde::Serialize;

use super::{c_omega, small_lattices, CorrelationReport, SupBudget, EXHAUSTIVE_BITS, STORED_PAIR_BITS};
use crate::algebra::{self, join_algebras, OperatorAlgebra};
use crate::error::{Error, Result};
use crate::lattice::meet;
use crate::matrix::{c64, op_norm, CMatrix, Operator, Projection, State};
use crate::random;

/// Starts run in fixed-size batches; the early exit is checked between
/// batches so the result never depends on the thread count.
const START_BATCH: usize = 4;
/// Objective values at or below this are zero for stopping purposes.
const ZERO_FLOOR: f64 = 1e-15;
/// Starts whose values are this close to the best compete on entropy.
const STATE_TIE: f64 = 1e-9;
/// Grid points per axis for the Bloch-ball lower bound.
const BLOCH_GRID: usize = 201;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MeasureBudget {
    pub inner: SupBudget,
    pub starts: usize,
    pub max_iter: usize,
    /// A start stops once its value improved by less than `stall_tol`
    /// over the last `stall_window` iterations.
    pub stall_tol: f64,
    pub stall_window: usize,
    pub initial_step: f64,
    pub min_step: f64,
    /// Stop as soon as a state with objective at or below this is found.
    pub target: Option<f64>,
}

impl Default for MeasureBudget {
    fn default() -> Self {
        Self {
            inner: SupBudget::default(),
            starts: 16,
            max_iter: 1000,
            stall_tol: 1e-6,
            stall_window: 50,
            initial_step: 0.25,
            min_step: 1e-9,
            target: None,
        }
    }
}

/// Convergence record of one start of the outer search.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StartTrace {
    pub start: usize,
    pub initial_value: f64,
    pub final_value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub final_step: f64,
    pub converged: bool,
}

#[derive(Clone, Debug)]
pub struct CausalityMeasureReport {
    /// Smallest pool objective found over all starts.
    pub c_value: f64,
    /// Highest-entropy state among the starts within `1e-9` of `c_value`,
    /// on the full space.
    pub optimizing_state: State,
    /// The same state on the range of the restriction.
    pub sector_state: State,
    pub starts: Vec<StartTrace>,
    pub pool_pairs: usize,
    /// True when the pool is every pair of the two lattices, so `c_value`
    /// is `C_ω` of an actual state and hence an upper bound on `C`.
    pub certified: bool,
    /// Grid-and-Lipschitz lower bound on `C`; qubit sectors with a
    /// certified pool only.
    pub certified_lower_bound: Option<f64>,
    pub converged: bool,
    /// Full (refined) supremum at the optimizing state.
    pub inner_at_optimum: CorrelationReport,
}

/// Real linear form `ρ ↦ Re Tr(ρX)` on the packed entries of `ρ`.
fn form(x: &CMatrix) -> Vec<f64> {
    let d = x.nrows();
    let mut w = Vec::with_capacity(2 * d * d);
    for i in 0..d {
        for j in 0..d {
            w.push(x[(j, i)].re);
            w.push(-x[(j, i)].im);
        }
    }
    w
}

fn pack(rho: &CMatrix) -> Vec<f64> {
    let d = rho.nrows();
    let mut r = Vec::with_capacity(2 * d * d);
    for i in 0..d {
        for j in 0..d {
            r.push(rho[(i, j)].re);
            r.push(rho[(i, j)].im);
        }
    }
    r
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Projection pairs with precomputed meets, stored as linear forms.
struct Pool {
    e: Vec<Vec<f64>>,
    f: Vec<Vec<f64>>,
    meets: Vec<Vec<f64>>,
    /// `(e index, f index, meet index)`; `None` for a zero meet.
    pairs: Vec<(usize, usize, Option<usize>)>,
    /// The matrices behind the forms, kept for the Bloch bound.
    e_ops: Vec<CMatrix>,
    f_ops: Vec<CMatrix>,
    meet_ops: Vec<CMatrix>,
    certified: bool,
}

impl Pool {
    fn build(a: &OperatorAlgebra, b: &OperatorAlgebra, budget: &SupBudget) -> Result<Self> {
        let (es, fs, certified, grid) = match small_lattices(a, b, EXHAUSTIVE_BITS, STORED_PAIR_BITS) {
            Some((la, lb)) => {
                // the trivial projections 0 and 1 contribute nothing
                let es: Vec<Projection> = (1..la.len() - 1).map(|m| la.element(m)).collect();
                let fs: Vec<Projection> = (1..lb.len() - 1).map(|m| lb.element(m)).collect();
                (es, fs, true, true)
            }
            None => {
                let n = budget.pairs;
                let es = (0..n)
                    .map(|i| algebra::sample_projection(a, random::derive_seed(budget.seed, 2 * i as u64)))
                    .collect();
                let fs = (0..n)
                    .map(|i| algebra::sample_projection(b, random::derive_seed(budget.seed, 2 * i as u64 + 1)))
                    .collect();
                (es, fs, false, false)
            }
        };
        let index: Vec<(usize, usize)> = if grid {
            (0..es.len()).flat_map(|i| (0..fs.len()).map(move |j| (i, j))).collect()
        } else {
            (0..es.len()).map(|i| (i, i)).collect()
        };
        let meets: Vec<Projection> = index
            .par_iter()
            .map(|&(i, j)| meet(&es[i], &fs[j]))
            .collect::<Result<_>>()?;
        let mut pool = Pool {
            e: es.iter().map(|p| form(p.matrix())).collect(),
            f: fs.iter().map(|p| form(p.matrix())).collect(),
            meets: Vec::new(),
            pairs: Vec::with_capacity(index.len()),
            e_ops: es.iter().map(|p| p.matrix().clone()).collect(),
            f_ops: fs.iter().map(|p| p.matrix().clone()).collect(),
            meet_ops: Vec::new(),
            certified,
        };
        for (&(i, j), m) in index.iter().zip(meets) {
            let k = if m.is_zero() {
                None
            } else {
                pool.meets.push(form(m.matrix()));
                pool.meet_ops.push(m.matrix().clone());
                Some(pool.meets.len() - 1)
            };
            pool.pairs.push((i, j, k));
        }
        Ok(pool)
    }

    fn eval_packed(&self, r: &[f64]) -> f64 {
        let pe: Vec<f64> = self.e.iter().map(|w| dot(w, r)).collect();
        let pf: Vec<f64> = self.f.iter().map(|w| dot(w, r)).collect();
        let pm: Vec<f64> = self.meets.iter().map(|w| dot(w, r)).collect();
        self.pairs
            .iter()
            .map(|&(i, j, k)| (k.map_or(0.0, |k| pm[k]) - pe[i] * pf[j]).abs())
            .fold(0.0, f64::max)
    }
}

fn factor(x: &[f64], r: usize) -> CMatrix {
    CMatrix::from_fn(r, r, |i, j| {
        let k = 2 * (i * r + j);
        c64(x[k], x[k + 1])
    })
}

fn density(x: &[f64], r: usize) -> Option<CMatrix> {
    let m = factor(x, r);
    let mm = &m * m.adjoint();
    let tr = mm.trace().re;
    (tr > 1e-300 && tr.is_finite()).then(|| mm / c64(tr, 0.0))
}

fn objective(pool: &Pool, x: &[f64], r: usize) -> f64 {
    density(x, r).map_or(f64::INFINITY, |rho| pool.eval_packed(&pack(&rho)))
}

fn normalize(x: &mut [f64]) {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > 0.0 {
        x.iter_mut().for_each(|v| *v /= n);
    }
}

/// Compass search: poll `±step` along every coordinate, move to the best
/// improving point, halve the step when nothing improves.
fn direct_search(pool: &Pool, r: usize, start: usize, mut x: Vec<f64>, budget: &MeasureBudget, stop_at: f64) -> (Vec<f64>, StartTrace) {
    normalize(&mut x);
    let mut fx = objective(pool, &x, r);
    let initial_value = fx;
    let mut step = budget.initial_step;
    let mut history = vec![fx];
    let mut evaluations = 1;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < budget.max_iter {
        if fx <= stop_at || step < budget.min_step {
            converged = true;
            break;
        }
        let w = budget.stall_window;
        if w > 0 && history.len() > w && history[history.len() - 1 - w] - fx < budget.stall_tol {
            converged = true;
            break;
        }
        iterations += 1;
        let mut best: Option<(f64, Vec<f64>)> = None;
        for i in 0..x.len() {
            for sgn in [1.0, -1.0] {
                let mut y = x.clone();
                y[i] += sgn * step;
                let fy = objective(pool, &y, r);
                evaluations += 1;
                if fy < best.as_ref().map_or(fx, |b| b.0) {
                    best = Some((fy, y));
                }
            }
        }
        match best {
            Some((fy, mut y)) => {
                normalize(&mut y);
                x = y;
                fx = fy;
            }
            None => step *= 0.5,
        }
        history.push(fx);
    }
    if !converged && (fx <= stop_at || step < budget.min_step) {
        converged = true;
    }
    let trace = StartTrace {
        start,
        initial_value,
        final_value: fx,
        iterations,
        evaluations,
        final_step: step,
        converged,
    };
    (x, trace)
}

fn start_point(r: usize, start: usize, seed: u64) -> Vec<f64> {
    if start == 0 {
        // the maximally mixed state
        let id = CMatrix::identity(r, r);
        return pack(&id);
    }
    let mut rng = random::rng(random::derive_seed(seed ^ 0xC0FF_EE00, start as u64));
    pack(&random::gaussian_matrix(r, r, &mut rng))
}

/// Max over the joint algebra basis of `‖PX − XP‖`, plus membership of `P`.
fn central_residual(p: &Projection, joint: &OperatorAlgebra) -> Result<f64> {
    let comm = joint
        .basis_matrices()
        .iter()
        .map(|x| op_norm(&(p.matrix() * x - x * p.matrix())))
        .fold(0.0, f64::max);
    Ok(comm.max(joint.membership_residual(p.op())?))
}

/// Minimises `C_ω(A,B)` over states, optionally inside the sector cut out
/// by a central projection of `A ∨ B`.
pub fn c_measure(
    a: &OperatorAlgebra,
    b: &OperatorAlgebra,
    restriction: Option<&Projection>,
    budget: &MeasureBudget,
) -> Result<CausalityMeasureReport> {
    if a.hilbert_dim() != b.hilbert_dim() {
        return Err(Error::DimensionMismatch(a.hilbert_dim(), b.hilbert_dim()));
    }
    if budget.starts == 0 || budget.max_iter == 0 {
        return Err(Error::InvalidParameter("starts and max_iter must be positive".into()));
    }
    let (ac, bc, iso) = match restriction {
        None => (a.clone(), b.clone(), None),
        Some(p) => {
            if p.dim() != a.hilbert_dim() {
                return Err(Error::DimensionMismatch(a.hilbert_dim(), p.dim()));
            }
            if p.is_zero() {
                return Err(Error::InvalidParameter("restriction is the zero projection".into()));
            }
            let res = central_residual(p, &join_algebras(a, b)?)?;
            if res > 1e-8 {
                return Err(Error::NotCentral(res));
            }
            let v = p.range_basis();
            (a.compress(&v)?, b.compress(&v)?, Some(v))
        }
    };
    let r = ac.hilbert_dim();
    let pool = Pool::build(&ac, &bc, &budget.inner)?;
    let stop_at = budget.target.unwrap_or(ZERO_FLOOR).max(ZERO_FLOOR);

    let mut runs: Vec<(Vec<f64>, StartTrace)> = Vec::new();
    let mut begin = 0;
    while begin < budget.starts {
        let end = (begin + START_BATCH).min(budget.starts);
        let batch: Vec<(Vec<f64>, StartTrace)> = (begin..end)
            .into_par_iter()
            .map(|s| direct_search(&pool, r, s, start_point(r, s, budget.inner.seed), budget, stop_at))
            .collect();
        runs.extend(batch);
        begin = end;
        if runs.iter().any(|(_, t)| t.final_value <= stop_at) {
            break;
        }
    }

    let c_value = runs.iter().map(|(_, t)| t.final_value).fold(f64::INFINITY, f64::min);
    let mut chosen: Option<(usize, f64)> = None;
    for (idx, (x, t)) in runs.iter().enumerate() {
        if t.final_value > c_value + STATE_TIE {
            continue;
        }
        let s = State::from_factor(&factor(x, r))?.entropy();
        if chosen.is_none_or(|(_, best)| s > best + 1e-12) {
            chosen = Some((idx, s));
        }
    }
    let (idx, _) = chosen.expect("at least one finite start");
    let sector_state = State::from_factor(&factor(&runs[idx].0, r))?;
    let optimizing_state = match &iso {
        None => sector_state.clone(),
        Some(v) => {
            let lifted = v * sector_state.rho().matrix() * v.adjoint();
            State::from_operator_unchecked(Operator::from_matrix_unchecked(lifted))
        }
    };
    let converged = runs[idx].1.converged;
    let inner_at_optimum = c_omega(&sector_state, &ac, &bc, &budget.inner)?;
    let certified_lower_bound = (pool.certified && r == 2).then(|| bloch_lower_bound(&pool));
    Ok(CausalityMeasureReport {
        c_value,
        optimizing_state,
        sector_state,
        starts: runs.into_iter().map(|(_, t)| t).collect(),
        pool_pairs: pool.pairs.len(),
        certified: pool.certified,
        certified_lower_bound,
        converged,
        inner_at_optimum,
    })
}

/// `ω(X) = α + β·r` for the qubit state with Bloch vector `r`.
fn bloch_affine(x: &CMatrix) -> (f64, [f64; 3]) {
    let alpha = 0.5 * (x[(0, 0)].re + x[(1, 1)].re);
    let bx = x[(0, 1)].re;
    let by = -x[(0, 1)].im;
    let bz = 0.5 * (x[(0, 0)].re - x[(1, 1)].re);
    (alpha, [bx, by, bz])
}

fn affine_at(c: &(f64, [f64; 3]), p: &[f64; 3]) -> f64 {
    c.0 + c.1[0] * p[0] + c.1[1] * p[1] + c.1[2] * p[2]
}

fn length(v: &[f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Lower bound on `min_ρ max_pairs |ω(M) − ω(E)ω(F)|` over the Bloch ball.
///
/// Every point of the unit ball lies within `δ = h√3/2` of a grid point of
/// norm at most `R = 1 + δ`. On the radius-`R` ball the objective is
/// Lipschitz with constant `L = max |β_M| + |β_E|·sup|ω_F| + |β_F|·sup|ω_E|`,
/// so the grid minimum minus `Lδ` bounds the true minimum from below.
fn bloch_lower_bound(pool: &Pool) -> f64 {
    if pool.pairs.is_empty() {
        return 0.0;
    }
    let e: Vec<_> = pool.e_ops.iter().map(bloch_affine).collect();
    let f: Vec<_> = pool.f_ops.iter().map(bloch_affine).collect();
    let m: Vec<_> = pool.meet_ops.iter().map(bloch_affine).collect();
    let h = 2.0 / (BLOCH_GRID - 1) as f64;
    let delta = h * 3f64.sqrt() / 2.0;
    let radius = 1.0 + delta;
    let sup = |c: &(f64, [f64; 3])| c.0.abs() + length(&c.1) * radius;
    let lipschitz = pool
        .pairs
        .iter()
        .map(|&(i, j, k)| {
            k.map_or(0.0, |k| length(&m[k].1)) + length(&e[i].1) * sup(&f[j]) + length(&f[j].1) * sup(&e[i])
        })
        .fold(0.0, f64::max);
    let coord = |n: usize| -1.0 + h * n as f64;
    let grid_min = (0..BLOCH_GRID)
        .into_par_iter()
        .map(|ix| {
            let mut best = f64::INFINITY;
            for iy in 0..BLOCH_GRID {
                for iz in 0..BLOCH_GRID {
                    let p = [coord(ix), coord(iy), coord(iz)];
                    if length(&p) > radius {
                        continue;
                    }
                    let v = pool
                        .pairs
                        .iter()
                        .map(|&(i, j, k)| {
                            let pm = k.map_or(0.0, |k| affine_at(&m[k], &p));
                            (pm - affine_at(&e[i], &p) * affine_at(&f[j], &p)).abs()
                        })
                        .fold(0.0, f64::max);
                    best = best.min(v);
                }
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min);
    (grid_min - lipschitz * delta).max(0.0)
}
