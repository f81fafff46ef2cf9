//! The nine commands and the report each one builds.

use std::time::Instant;

use clap::ValueEnum;
use qcausal_core::algebra::{
    bicommutant_check, center, central_decomposition_seeded, commutant, commutator_residual, generate, join_algebras,
    sample_projection, BicommutantReport,
};
use qcausal_core::correlation::{
    c_measure, c_omega, chsh_value, optimize_chsh, ChshSettings, CorrelationReport, MeasureBudget, SupBudget,
};
use qcausal_core::lattice::{commutes, meet_iterative, meet_spectral, total_coincidence, DEFAULT_MAX_ITER};
use qcausal_core::matrix::{make_projection, CMatrix, CVector, Projection, State};
use qcausal_core::theorem::{verify_theorem, Conclusion, TheoremBudget};
use qcausal_core::{presets, random, Error, OperatorAlgebra};
use serde_json::{json, Map, Value};

use crate::error::CliError;
use crate::report::RunReport;
use crate::spec::{spec_value, AlgebraPairSpec, Matrix, FORMAT_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OBSTRUCTION: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_CHSH_STARTS: usize = 8;
pub const DEFAULT_CHSH_ITER: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Generate,
    Commutant,
    Center,
    Meet,
    TotalCoincidence,
    Correlation,
    CausalityMeasure,
    VerifyTheorem,
    Chsh,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Generate => "generate",
            Command::Commutant => "commutant",
            Command::Center => "center",
            Command::Meet => "meet",
            Command::TotalCoincidence => "total-coincidence",
            Command::Correlation => "correlation",
            Command::CausalityMeasure => "causality-measure",
            Command::VerifyTheorem => "verify-theorem",
            Command::Chsh => "chsh",
        }
    }

    pub fn all() -> [Command; 9] {
        [
            Command::Generate,
            Command::Commutant,
            Command::Center,
            Command::Meet,
            Command::TotalCoincidence,
            Command::Correlation,
            Command::CausalityMeasure,
            Command::VerifyTheorem,
            Command::Chsh,
        ]
    }
}

/// Command-line overrides; each one beats the spec file's `budget` entry.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub pairs: Option<usize>,
    pub starts: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub sector: Option<usize>,
}

/// Spec budget merged with the flags.
#[derive(Clone, Debug, PartialEq)]
struct Effective {
    seed: u64,
    pairs: Option<usize>,
    starts: Option<usize>,
    tol: f64,
    max_iter: Option<usize>,
    refine_steps: Option<usize>,
    sector: Option<usize>,
}

impl Effective {
    fn new(spec: &AlgebraPairSpec, o: &RunOptions) -> Self {
        let b = &spec.budget;
        Self {
            seed: o.seed.unwrap_or(spec.seed),
            pairs: o.pairs.or(b.pairs),
            starts: o.starts.or(b.starts),
            tol: o.tol.or(b.tol).unwrap_or(DEFAULT_TOL),
            max_iter: o.max_iter.or(b.max_iter),
            refine_steps: b.refine_steps,
            sector: o.sector.or(b.sector),
        }
    }

    fn sup(&self) -> SupBudget {
        let d = SupBudget::default();
        SupBudget {
            pairs: self.pairs.unwrap_or(d.pairs),
            refine_steps: self.refine_steps.unwrap_or(d.refine_steps),
            seed: self.seed,
            ..d
        }
    }

    fn measure(&self) -> MeasureBudget {
        let d = MeasureBudget::default();
        MeasureBudget {
            inner: self.sup(),
            starts: self.starts.unwrap_or(d.starts),
            max_iter: self.max_iter.unwrap_or(d.max_iter),
            ..d
        }
    }

    fn theorem(&self) -> TheoremBudget {
        let d = TheoremBudget::default();
        TheoremBudget {
            tol: self.tol,
            pairs: self.pairs.unwrap_or(d.pairs),
            seed: self.seed,
            measure: self.measure(),
            sector: self.sector,
        }
    }

    fn to_value(&self) -> Value {
        json!({
            "pairs": self.pairs,
            "starts": self.starts,
            "tol": self.tol,
            "max_iter": self.max_iter,
            "refine_steps": self.refine_steps,
            "sector": self.sector,
        })
    }
}

pub(crate) fn matrix_value(m: &CMatrix) -> Value {
    Matrix::from_matrix(m).to_value()
}

fn vector_value(v: &CVector) -> Value {
    Value::Array(v.iter().map(|z| json!([z.re, z.im])).collect())
}

fn projection_value(p: &Projection) -> Value {
    json!({ "rank": p.rank(), "matrix": matrix_value(p.matrix()) })
}

fn state_value(s: &State) -> Value {
    json!({
        "entropy": s.entropy(),
        "trace_distance_to_maximally_mixed": s.trace_distance(&State::maximally_mixed(s.dim())).unwrap_or(f64::NAN),
        "matrix": matrix_value(s.rho().matrix()),
    })
}

fn bicommutant_value(r: &BicommutantReport) -> Value {
    json!({
        "holds": r.holds,
        "algebra_dim": r.algebra_dim,
        "commutant_dim": r.commutant_dim,
        "bicommutant_dim": r.bicommutant_dim,
    })
}

fn correlation_value(r: &CorrelationReport) -> Value {
    json!({
        "c_omega": r.c_omega,
        "method": r.method,
        "samples_used": r.samples_used,
        "certified": r.certified,
        "witness_e": projection_value(&r.witness_pair.0),
        "witness_f": projection_value(&r.witness_pair.1),
    })
}

fn settings_value(s: &ChshSettings) -> Value {
    json!({
        "a1": matrix_value(s.a1.matrix()),
        "a2": matrix_value(s.a2.matrix()),
        "b1": matrix_value(s.b1.matrix()),
        "b2": matrix_value(s.b2.matrix()),
    })
}

/// Both algebras, built once per run.
struct Context {
    a: OperatorAlgebra,
    b: OperatorAlgebra,
    joint: OperatorAlgebra,
    commutator_residual: f64,
}

impl Context {
    fn new(spec: &AlgebraPairSpec) -> Result<Self, CliError> {
        let (ga, gb) = spec.generators();
        let a = generate(spec.dim, &ga)?;
        let b = generate(spec.dim, &gb)?;
        let joint = join_algebras(&a, &b)?;
        let commutator_residual = commutator_residual(&a, &b)?;
        Ok(Self { a, b, joint, commutator_residual })
    }
}

/// The state a run acts on: the spec file's, else the preset's, else maximally mixed.
fn resolve_state(spec: &AlgebraPairSpec) -> Result<(State, &'static str), CliError> {
    if let Some(m) = &spec.state {
        let s = State::new(m.to_operator()).map_err(|e| CliError::Field { path: "state".into(), message: e.to_string() })?;
        return Ok((s, "spec"));
    }
    if let Some(name) = spec.common_preset() {
        if let Some(s) = presets::preset(name)?.state {
            return Ok((s, "preset"));
        }
    }
    Ok((State::maximally_mixed(spec.dim), "maximally_mixed"))
}

/// The pair a lattice command acts on: the spec file's, else one sampled from each algebra.
fn resolve_pair(spec: &AlgebraPairSpec, ctx: &Context, seed: u64) -> Result<(Projection, Projection, &'static str), CliError> {
    match &spec.pair {
        Some(p) => {
            let proj = |m: &Matrix, path: &str| {
                make_projection(&m.to_operator()).map_err(|e| CliError::Field { path: path.into(), message: e.to_string() })
            };
            Ok((proj(&p.e, "pair.e")?, proj(&p.f, "pair.f")?, "spec"))
        }
        None => Ok((
            sample_projection(&ctx.a, random::derive_seed(seed, 0)),
            sample_projection(&ctx.b, random::derive_seed(seed, 1)),
            "sampled",
        )),
    }
}

fn pair_header(e: &Projection, f: &Projection, source: &str) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("pair_source".into(), json!(source));
    m.insert("e".into(), projection_value(e));
    m.insert("f".into(), projection_value(f));
    m
}

fn run_generate(ctx: &Context) -> (Value, i32) {
    let side = |x: &OperatorAlgebra| {
        json!({
            "dim": x.dim(),
            "closure_residual": x.closure_residual(),
            "abelian": x.is_abelian(),
            "contains_identity": x.contains_identity(),
        })
    };
    // the joint algebra is closed by construction and its closure check is the slowest part here
    let joint = json!({
        "dim": ctx.joint.dim(),
        "abelian": ctx.joint.is_abelian(),
        "contains_identity": ctx.joint.contains_identity(),
    });
    let v = json!({ "a": side(&ctx.a), "b": side(&ctx.b), "joint": joint });
    (v, EXIT_OK)
}

fn run_commutant(ctx: &Context) -> Result<(Value, i32), CliError> {
    let ca = commutant(&ctx.a);
    let cb = commutant(&ctx.b);
    let mut b_in = 0.0f64;
    for y in ctx.b.basis() {
        b_in = b_in.max(ca.membership_residual(&y)?);
    }
    let v = json!({
        "a_commutant_dim": ca.dim(),
        "b_commutant_dim": cb.dim(),
        "b_in_a_commutant_residual": b_in,
        "bicommutant_a": bicommutant_value(&bicommutant_check(&ctx.a)),
        "bicommutant_b": bicommutant_value(&bicommutant_check(&ctx.b)),
    });
    Ok((v, EXIT_OK))
}

fn run_center(ctx: &Context, eff: &Effective) -> Result<(Value, i32), CliError> {
    let dec = central_decomposition_seeded(&ctx.joint, eff.seed)?;
    let mut sectors = Vec::with_capacity(dec.len());
    for (k, (p, v)) in dec.minimal_central_projections.iter().zip(&dec.isometries).enumerate() {
        let ac = ctx.a.compress(v)?;
        let bc = ctx.b.compress(v)?;
        sectors.push(json!({
            "index": k,
            "rank": p.rank(),
            "joint_block_dim": dec.blocks[k].dim(),
            "dim_a": ac.dim(),
            "dim_b": bc.dim(),
            "commutator_residual": commutator_residual(&ac, &bc)?,
            "projection": matrix_value(p.matrix()),
        }));
    }
    let v = json!({
        "center_a_dim": center(&ctx.a).dim(),
        "center_b_dim": center(&ctx.b).dim(),
        "center_joint_dim": dec.len(),
        "decomposition_attempts": dec.attempts,
        "sectors": sectors,
    });
    Ok((v, EXIT_OK))
}

fn run_meet(spec: &AlgebraPairSpec, ctx: &Context, eff: &Effective) -> Result<(Value, i32), CliError> {
    let (e, f, source) = resolve_pair(spec, ctx, eff.seed)?;
    let mut m = pair_header(&e, &f, source);
    let s = meet_spectral(&e, &f)?;
    m.insert(
        "spectral".into(),
        json!({ "meet": projection_value(&s.meet), "near_degenerate": s.near_degenerate }),
    );
    let cap = eff.max_iter.unwrap_or(DEFAULT_MAX_ITER);
    let code = match meet_iterative(&e, &f, cap) {
        Ok(it) => {
            m.insert(
                "iterative".into(),
                json!({
                    "converged": true,
                    "iterations": it.iterations,
                    "residual": it.residual,
                    "meet": projection_value(&it.meet),
                }),
            );
            m.insert("method_disagreement".into(), json!((it.meet.matrix() - s.meet.matrix()).norm()));
            EXIT_OK
        }
        Err(Error::MeetNotConverged { iterations, step }) => {
            m.insert(
                "iterative".into(),
                json!({ "converged": false, "iterations": iterations, "last_step": step }),
            );
            EXIT_INCONCLUSIVE
        }
        Err(e) => return Err(e.into()),
    };
    let c = commutes(&e, &f)?;
    m.insert("commutes".into(), json!(c.commutes));
    m.insert("commutation_residual".into(), json!(c.residual));
    Ok((Value::Object(m), code))
}

fn run_total_coincidence(spec: &AlgebraPairSpec, ctx: &Context, eff: &Effective) -> Result<(Value, i32), CliError> {
    let (e, f, source) = resolve_pair(spec, ctx, eff.seed)?;
    let mut m = pair_header(&e, &f, source);
    let t = total_coincidence(&e, &f)?;
    let mt = meet_spectral(&e, &f)?.meet;
    let eft = e.matrix() * f.matrix() * t.matrix();
    let fet = f.matrix() * e.matrix() * t.matrix();
    let c = commutes(&e, &f)?;
    m.insert("total_coincidence".into(), projection_value(&t));
    m.insert("is_identity".into(), json!(t.is_identity()));
    m.insert("commutes".into(), json!(c.commutes));
    m.insert("commutation_residual".into(), json!(c.residual));
    m.insert("ef_t_meet_residual".into(), json!((eft - mt.matrix()).norm()));
    m.insert("fe_t_meet_residual".into(), json!((fet - mt.matrix()).norm()));
    Ok((Value::Object(m), EXIT_OK))
}

fn run_correlation(spec: &AlgebraPairSpec, ctx: &Context, eff: &Effective) -> Result<(Value, i32), CliError> {
    let (state, source) = resolve_state(spec)?;
    let r = c_omega(&state, &ctx.a, &ctx.b, &eff.sup())?;
    let v = json!({
        "state_source": source,
        "state": state_value(&state),
        "correlation": correlation_value(&r),
        "tol": eff.tol,
        "uncorrelated": r.c_omega <= eff.tol,
    });
    Ok((v, EXIT_OK))
}

fn run_causality_measure(ctx: &Context, eff: &Effective) -> Result<(Value, i32), CliError> {
    let restriction = match eff.sector {
        None => None,
        Some(k) => {
            let dec = central_decomposition_seeded(&ctx.joint, eff.seed)?;
            let p = dec.minimal_central_projections.get(k).cloned().ok_or_else(|| {
                CliError::Usage(format!("sector {k} out of range (the joint algebra has {} sectors)", dec.len()))
            })?;
            Some(p)
        }
    };
    let budget = eff.measure();
    let r = c_measure(&ctx.a, &ctx.b, restriction.as_ref(), &budget)?;
    let starts: Vec<Value> = r
        .starts
        .iter()
        .map(|s| serde_json::to_value(s).expect("serialisable"))
        .collect();
    let v = json!({
        "sector": eff.sector,
        "c_value": r.c_value,
        "converged": r.converged,
        "certified": r.certified,
        "certified_lower_bound": r.certified_lower_bound,
        "pool_pairs": r.pool_pairs,
        "optimizing_state": state_value(&r.optimizing_state),
        "sector_state": state_value(&r.sector_state),
        "inner_at_optimum": correlation_value(&r.inner_at_optimum),
        "starts": starts,
    });
    let code = if r.converged { EXIT_OK } else { EXIT_INCONCLUSIVE };
    Ok((v, code))
}

fn run_verify_theorem(ctx: &Context, eff: &Effective) -> Result<(Value, i32), CliError> {
    let t = verify_theorem(&ctx.a, &ctx.b, &eff.theorem())?;
    let sectors: Vec<Value> = t
        .sectors
        .iter()
        .map(|s| {
            json!({
                "index": s.index,
                "rank": s.rank,
                "dim_a": s.dim_a,
                "dim_b": s.dim_b,
                "residual": s.residual,
                "search_value": s.search_value,
                "search_converged": s.search_converged,
                "certified": s.certified,
                "uncorrelated": s.uncorrelated,
                "obstructed": s.obstructed,
                "commutator_residual": s.commutator_residual,
                "phi_commutation_residual": s.phi_commutation_residual,
                "phi_error": s.phi_error,
                "phi": s.phi.as_ref().map(vector_value),
                "state": state_value(&s.state),
            })
        })
        .collect();
    let best_residual = t.sectors.iter().map(|s| s.residual).fold(0.0, f64::max);
    let v = json!({
        "conclusion": t.conclusion,
        "obstructed_sector": t.obstructed_sector,
        "max_sector_residual": best_residual,
        "tol": eff.tol,
        "commutator_residual": t.commutator_residual,
        "joint_dim": t.joint_dim,
        "center_dim": t.center_dim,
        "decomposition_attempts": t.decomposition_attempts,
        "pairs_used": t.pairs_used,
        "pairs_certified": t.pairs_certified,
        "p_projection": projection_value(&t.p_projection),
        "p_central": t.p_centrality.central,
        "p_commutator_residual": t.p_centrality.commutator_residual,
        "p_membership_residual": t.p_centrality.membership_residual,
        "commutation_residual_on_p_range": t.commutation_residual_on_range,
        "phi_bound": t.phi_bound,
        "phi": t.phi.as_ref().map(vector_value),
        "sectors": sectors,
    });
    let code = match t.conclusion {
        Conclusion::LocalityVerified => EXIT_OK,
        Conclusion::ObstructionFound => EXIT_OBSTRUCTION,
        Conclusion::Inconclusive => EXIT_INCONCLUSIVE,
    };
    Ok((v, code))
}

fn spec_settings(spec: &AlgebraPairSpec) -> Result<Option<ChshSettings>, CliError> {
    if let Some(c) = &spec.chsh {
        return Ok(Some(ChshSettings {
            a1: c.a1.to_operator(),
            a2: c.a2.to_operator(),
            b1: c.b1.to_operator(),
            b2: c.b2.to_operator(),
        }));
    }
    match spec.common_preset() {
        Some(name) => Ok(presets::preset(name)?.chsh),
        None => Ok(None),
    }
}

fn run_chsh(spec: &AlgebraPairSpec, ctx: &Context, eff: &Effective) -> Result<(Value, i32), CliError> {
    let (state, source) = resolve_state(spec)?;
    let mut m = Map::new();
    m.insert("state_source".into(), json!(source));
    m.insert("state".into(), state_value(&state));
    m.insert("classical_bound".into(), json!(1.0));
    m.insert("quantum_bound".into(), json!(std::f64::consts::SQRT_2));
    let mut best = f64::NEG_INFINITY;
    if let Some(s) = spec_settings(spec)? {
        let value = chsh_value(&ctx.a, &ctx.b, &state, &s)?;
        best = value;
        m.insert("given".into(), json!({ "value": value, "settings": settings_value(&s) }));
    }
    let opt = optimize_chsh(
        &ctx.a,
        &ctx.b,
        &state,
        eff.seed,
        eff.starts.unwrap_or(DEFAULT_CHSH_STARTS),
        eff.max_iter.unwrap_or(DEFAULT_CHSH_ITER),
    )?;
    best = best.max(opt.value);
    m.insert(
        "optimized".into(),
        json!({ "value": opt.value, "iterations": opt.iterations, "settings": settings_value(&opt.settings) }),
    );
    m.insert("best_value".into(), json!(best));
    m.insert("exceeds_classical_bound".into(), json!(best > 1.0 + eff.tol));
    Ok((Value::Object(m), EXIT_OK))
}

/// Runs `command` on `spec` and assembles the report.
pub fn run_command(command: Command, spec: &AlgebraPairSpec, options: &RunOptions) -> Result<RunReport, CliError> {
    let started = Instant::now();
    let eff = Effective::new(spec, options);
    let ctx = Context::new(spec)?;
    let center_dim = center(&ctx.joint).dim();
    let (result, exit_code) = match command {
        Command::Generate => run_generate(&ctx),
        Command::Commutant => run_commutant(&ctx)?,
        Command::Center => run_center(&ctx, &eff)?,
        Command::Meet => run_meet(spec, &ctx, &eff)?,
        Command::TotalCoincidence => run_total_coincidence(spec, &ctx, &eff)?,
        Command::Correlation => run_correlation(spec, &ctx, &eff)?,
        Command::CausalityMeasure => run_causality_measure(&ctx, &eff)?,
        Command::VerifyTheorem => run_verify_theorem(&ctx, &eff)?,
        Command::Chsh => run_chsh(spec, &ctx, &eff)?,
    };
    let mut v = Map::new();
    v.insert("format_version".into(), json!(FORMAT_VERSION));
    v.insert("tool".into(), json!("qcausal"));
    v.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    v.insert("command".into(), json!(command.name()));
    v.insert("seed".into(), json!(eff.seed));
    v.insert("spec".into(), spec_value(spec));
    v.insert("budget".into(), eff.to_value());
    v.insert(
        "dimensions".into(),
        json!({
            "hilbert": spec.dim,
            "a": ctx.a.dim(),
            "b": ctx.b.dim(),
            "joint": ctx.joint.dim(),
            "center": center_dim,
        }),
    );
    v.insert("commutator_residual".into(), json!(ctx.commutator_residual));
    v.insert("result".into(), result);
    v.insert("exit_code".into(), json!(exit_code));
    Ok(RunReport::new(v, exit_code, started.elapsed()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(name: &str, c: Command) -> RunReport {
        run_command(c, &AlgebraPairSpec::from_preset(name).unwrap(), &RunOptions::default()).unwrap()
    }

    #[test]
    fn theorem_exit_codes() {
        assert_eq!(run("tensor-qubits", Command::VerifyTheorem).exit_code, EXIT_OK);
        let r = run("qubit-clash", Command::VerifyTheorem);
        assert_eq!(r.exit_code, EXIT_OBSTRUCTION);
        assert!(r.value["result"]["max_sector_residual"].as_f64().unwrap() >= 0.24);
    }

    #[test]
    fn clash_measure_is_a_quarter() {
        let r = run("qubit-clash", Command::CausalityMeasure);
        let c = r.value["result"]["c_value"].as_f64().unwrap();
        assert!((c - 0.25).abs() <= 0.01, "{c}");
    }

    #[test]
    fn chsh_needs_commuting_algebras() {
        let e = run_command(Command::Chsh, &AlgebraPairSpec::from_preset("qubit-clash").unwrap(), &RunOptions::default());
        assert!(matches!(e, Err(CliError::Core(Error::NonCommuting(_)))));
        let r = run("pauli-chsh", Command::Chsh);
        let v = r.value["result"]["given"]["value"].as_f64().unwrap();
        assert!((v - std::f64::consts::SQRT_2).abs() <= 1e-9);
    }

    #[test]
    fn sector_flag_is_checked() {
        let spec = AlgebraPairSpec::from_preset("block-mixed").unwrap();
        let o = RunOptions { sector: Some(5), ..Default::default() };
        assert!(run_command(Command::CausalityMeasure, &spec, &o).is_err());
        let o = RunOptions { sector: Some(0), ..Default::default() };
        let r = run_command(Command::VerifyTheorem, &spec, &o).unwrap();
        assert_eq!(r.exit_code, EXIT_OK);
    }

    #[test]
    fn flags_beat_the_spec() {
        let mut spec = AlgebraPairSpec::from_preset("qubit-clash").unwrap();
        spec.seed = 3;
        spec.budget.tol = Some(1e-3);
        let e = Effective::new(&spec, &RunOptions { tol: Some(1e-6), ..Default::default() });
        assert_eq!((e.seed, e.tol), (3, 1e-6));
        let e = Effective::new(&spec, &RunOptions { seed: Some(9), ..Default::default() });
        assert_eq!((e.seed, e.tol), (9, 1e-3));
    }
}
