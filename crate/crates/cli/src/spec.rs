//! The algebra-pair spec file.
//!
//! One JSON object:
//!
//! ```json
//! {
//!   "format_version": 1,
//!   "dim": 2,
//!   "a": { "generators": [ [[[1,0],[0,0]], [[0,0],[-1,0]]] ] },
//!   "b": { "preset": "qubit-clash" },
//!   "state": [[[0.5,0],[0,0]], [[0,0],[0.5,0]]],
//!   "pair": { "e": ..., "f": ... },
//!   "chsh": { "a1": ..., "a2": ..., "b1": ..., "b2": ... },
//!   "seed": 0,
//!   "budget": { "pairs": 64, "starts": 16, "tol": 1e-9, "max_iter": 1000, "refine_steps": 64, "sector": 0 }
//! }
//! ```
//!
//! Complex entries are `[re, im]`, matrices are row-major lists of rows.
//! `"preset": name` at the top level is shorthand for taking both algebras
//! from that preset. Each algebra gives exactly one of `preset` and
//! `generators`.

use qcausal_core::matrix::{c64, CMatrix, Operator};
use qcausal_core::presets;
use serde_json::{json, Map, Value};

use crate::error::CliError;

pub const FORMAT_VERSION: u64 = 1;

/// A square complex matrix as written in a spec.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix(pub Vec<Vec<[f64; 2]>>);

impl Matrix {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn to_operator(&self) -> Operator {
        let d = self.dim();
        let m = CMatrix::from_fn(d, d, |i, j| c64(self.0[i][j][0], self.0[i][j][1]));
        Operator::new(m).expect("validated when parsed")
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        Self(
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
                .collect(),
        )
    }

    pub fn to_value(&self) -> Value {
        Value::Array(
            self.0
                .iter()
                .map(|row| Value::Array(row.iter().map(|z| json!([z[0], z[1]])).collect()))
                .collect(),
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AlgebraSource {
    /// One side of a named preset.
    Preset(String),
    Generators(Vec<Matrix>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairSpec {
    pub e: Matrix,
    pub f: Matrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChshSpec {
    pub a1: Matrix,
    pub a2: Matrix,
    pub b1: Matrix,
    pub b2: Matrix,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct BudgetOverrides {
    pub pairs: Option<usize>,
    pub starts: Option<usize>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub refine_steps: Option<usize>,
    pub sector: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraPairSpec {
    pub dim: usize,
    pub a: AlgebraSource,
    pub b: AlgebraSource,
    pub state: Option<Matrix>,
    pub pair: Option<PairSpec>,
    pub chsh: Option<ChshSpec>,
    pub seed: u64,
    pub budget: BudgetOverrides,
}

impl AlgebraPairSpec {
    /// Spec for a named preset with default settings.
    pub fn from_preset(name: &str) -> Result<Self, CliError> {
        let p = presets::preset(name).map_err(|_| field("preset", format!("unknown preset '{name}'")))?;
        Ok(Self {
            dim: p.dim,
            a: AlgebraSource::Preset(name.to_string()),
            b: AlgebraSource::Preset(name.to_string()),
            state: None,
            pair: None,
            chsh: None,
            seed: 0,
            budget: BudgetOverrides::default(),
        })
    }

    /// Generators of both algebras.
    pub fn generators(&self) -> (Vec<Operator>, Vec<Operator>) {
        let side = |src: &AlgebraSource, first: bool| match src {
            AlgebraSource::Generators(g) => g.iter().map(Matrix::to_operator).collect(),
            AlgebraSource::Preset(name) => {
                let p = presets::preset(name).expect("validated when parsed");
                if first {
                    p.generators_a
                } else {
                    p.generators_b
                }
            }
        };
        (side(&self.a, true), side(&self.b, false))
    }

    /// The preset shared by both sides, if any.
    pub fn common_preset(&self) -> Option<&str> {
        match (&self.a, &self.b) {
            (AlgebraSource::Preset(x), AlgebraSource::Preset(y)) if x == y => Some(x),
            _ => None,
        }
    }
}

fn field(path: &str, message: impl Into<String>) -> CliError {
    CliError::Field { path: path.to_string(), message: message.into() }
}

fn as_object<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>, CliError> {
    v.as_object().ok_or_else(|| field(path, "expected an object"))
}

fn check_keys(obj: &Map<String, Value>, path: &str, allowed: &[&str]) -> Result<(), CliError> {
    for k in obj.keys() {
        if !allowed.contains(&k.as_str()) {
            let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
            return Err(field(&p, "unknown field"));
        }
    }
    Ok(())
}

fn as_uint(v: &Value, path: &str) -> Result<u64, CliError> {
    v.as_u64().ok_or_else(|| field(path, "expected a non-negative integer"))
}

fn as_usize(v: &Value, path: &str) -> Result<usize, CliError> {
    let n = as_uint(v, path)?;
    usize::try_from(n).map_err(|_| field(path, "integer too large"))
}

fn parse_matrix(v: &Value, path: &str, dim: Option<usize>) -> Result<Matrix, CliError> {
    let rows = v.as_array().ok_or_else(|| field(path, "expected a list of rows"))?;
    if rows.is_empty() {
        return Err(field(path, "empty matrix"));
    }
    let mut out = Vec::with_capacity(rows.len());
    for (i, row) in rows.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let entries = row.as_array().ok_or_else(|| field(&rp, "expected a row (list of [re, im] entries)"))?;
        let mut r = Vec::with_capacity(entries.len());
        for (j, z) in entries.iter().enumerate() {
            let zp = format!("{rp}[{j}]");
            let pair = z.as_array().filter(|p| p.len() == 2).ok_or_else(|| field(&zp, "expected [re, im]"))?;
            let re = pair[0].as_f64().ok_or_else(|| field(&zp, "real part is not a number"))?;
            let im = pair[1].as_f64().ok_or_else(|| field(&zp, "imaginary part is not a number"))?;
            if !re.is_finite() || !im.is_finite() {
                return Err(field(&zp, "entry is not finite"));
            }
            r.push([re, im]);
        }
        out.push(r);
    }
    let cols = out[0].len();
    if out.iter().any(|r| r.len() != cols) {
        return Err(field(path, "ragged rows"));
    }
    if cols != out.len() {
        return Err(field(path, format!("matrix not square ({}×{})", out.len(), cols)));
    }
    if let Some(d) = dim {
        if d != cols {
            return Err(field(path, format!("matrix is {cols}×{cols}, expected {d}×{d}")));
        }
    }
    Ok(Matrix(out))
}

fn parse_preset_name(v: &Value, path: &str) -> Result<(String, usize), CliError> {
    let name = v.as_str().ok_or_else(|| field(path, "expected a preset name"))?;
    let p = presets::preset(name).map_err(|_| {
        field(path, format!("unknown preset '{name}' (known: {})", presets::names().join(", ")))
    })?;
    Ok((name.to_string(), p.dim))
}

/// Parses one algebra entry; returns its source and the dimension it fixes.
fn parse_algebra(v: &Value, path: &str, dim: Option<usize>) -> Result<(AlgebraSource, Option<usize>), CliError> {
    let obj = as_object(v, path)?;
    check_keys(obj, path, &["preset", "generators"])?;
    match (obj.get("preset"), obj.get("generators")) {
        (Some(_), Some(_)) => Err(field(path, "give exactly one of 'preset' and 'generators'")),
        (None, None) => Err(field(path, "missing 'preset' or 'generators'")),
        (Some(p), None) => {
            let (name, d) = parse_preset_name(p, &format!("{path}.preset"))?;
            Ok((AlgebraSource::Preset(name), Some(d)))
        }
        (None, Some(g)) => {
            let gp = format!("{path}.generators");
            let list = g.as_array().ok_or_else(|| field(&gp, "expected a list of matrices"))?;
            let mut d = dim;
            let mut mats = Vec::with_capacity(list.len());
            for (i, m) in list.iter().enumerate() {
                let mat = parse_matrix(m, &format!("{gp}[{i}]"), d)?;
                d = Some(mat.dim());
                mats.push(mat);
            }
            Ok((AlgebraSource::Generators(mats), d))
        }
    }
}

fn parse_budget(v: &Value) -> Result<BudgetOverrides, CliError> {
    let obj = as_object(v, "budget")?;
    check_keys(obj, "budget", &["pairs", "starts", "tol", "max_iter", "refine_steps", "sector"])?;
    let get = |k: &str| -> Result<Option<usize>, CliError> {
        obj.get(k).map(|x| as_usize(x, &format!("budget.{k}"))).transpose()
    };
    let tol = match obj.get("tol") {
        None => None,
        Some(t) => {
            let x = t.as_f64().ok_or_else(|| field("budget.tol", "expected a number"))?;
            if !(x > 0.0 && x.is_finite()) {
                return Err(field("budget.tol", "must be positive"));
            }
            Some(x)
        }
    };
    Ok(BudgetOverrides {
        pairs: get("pairs")?,
        starts: get("starts")?,
        tol,
        max_iter: get("max_iter")?,
        refine_steps: get("refine_steps")?,
        sector: get("sector")?,
    })
}

fn reconcile(dim: &mut Option<usize>, found: Option<usize>, path: &str) -> Result<(), CliError> {
    match (*dim, found) {
        (Some(d), Some(f)) if d != f => Err(field(path, format!("dimension {f} does not match dim {d}"))),
        (None, f) => {
            *dim = f;
            Ok(())
        }
        _ => Ok(()),
    }
}

/// Parses and validates a spec.
pub fn parse_spec(text: &str) -> Result<AlgebraPairSpec, CliError> {
    let root: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Syntax { line: e.line(), column: e.column(), message: e.to_string() })?;
    let obj = as_object(&root, "<root>")?;
    check_keys(obj, "", &["format_version", "preset", "dim", "a", "b", "state", "pair", "chsh", "seed", "budget"])?;
    let version = as_uint(obj.get("format_version").ok_or_else(|| field("format_version", "missing"))?, "format_version")?;
    if version != FORMAT_VERSION {
        return Err(field("format_version", format!("unsupported version {version} (expected {FORMAT_VERSION})")));
    }
    let mut dim = obj.get("dim").map(|d| as_usize(d, "dim")).transpose()?;
    if dim == Some(0) {
        return Err(field("dim", "must be positive"));
    }
    let (a, b) = match obj.get("preset") {
        Some(p) => {
            if obj.contains_key("a") || obj.contains_key("b") {
                return Err(field("preset", "a top-level preset excludes 'a' and 'b'"));
            }
            let (name, d) = parse_preset_name(p, "preset")?;
            reconcile(&mut dim, Some(d), "preset")?;
            (AlgebraSource::Preset(name.clone()), AlgebraSource::Preset(name))
        }
        None => {
            let av = obj.get("a").ok_or_else(|| field("a", "missing (or give a top-level 'preset')"))?;
            let (a, da) = parse_algebra(av, "a", dim)?;
            reconcile(&mut dim, da, "a")?;
            let bv = obj.get("b").ok_or_else(|| field("b", "missing"))?;
            let (b, db) = parse_algebra(bv, "b", dim)?;
            reconcile(&mut dim, db, "b")?;
            (a, b)
        }
    };
    let dim = dim.ok_or_else(|| field("dim", "missing and not implied by any generator or preset"))?;
    let state = obj.get("state").map(|s| parse_matrix(s, "state", Some(dim))).transpose()?;
    let pair = match obj.get("pair") {
        None => None,
        Some(p) => {
            let po = as_object(p, "pair")?;
            check_keys(po, "pair", &["e", "f"])?;
            let e = parse_matrix(po.get("e").ok_or_else(|| field("pair.e", "missing"))?, "pair.e", Some(dim))?;
            let f = parse_matrix(po.get("f").ok_or_else(|| field("pair.f", "missing"))?, "pair.f", Some(dim))?;
            Some(PairSpec { e, f })
        }
    };
    let chsh = match obj.get("chsh") {
        None => None,
        Some(c) => {
            let co = as_object(c, "chsh")?;
            check_keys(co, "chsh", &["a1", "a2", "b1", "b2"])?;
            let m = |k: &str| {
                let p = format!("chsh.{k}");
                parse_matrix(co.get(k).ok_or_else(|| field(&p, "missing"))?, &p, Some(dim))
            };
            Some(ChshSpec { a1: m("a1")?, a2: m("a2")?, b1: m("b1")?, b2: m("b2")? })
        }
    };
    let seed = obj.get("seed").map(|s| as_uint(s, "seed")).transpose()?.unwrap_or(0);
    let budget = obj.get("budget").map(parse_budget).transpose()?.unwrap_or_default();
    Ok(AlgebraPairSpec { dim, a, b, state, pair, chsh, seed, budget })
}

fn algebra_value(src: &AlgebraSource) -> Value {
    match src {
        AlgebraSource::Preset(name) => json!({ "preset": name }),
        AlgebraSource::Generators(g) => json!({ "generators": g.iter().map(Matrix::to_value).collect::<Vec<_>>() }),
    }
}

/// The spec as a JSON value, in the canonical field order.
pub fn spec_value(spec: &AlgebraPairSpec) -> Value {
    let mut m = Map::new();
    m.insert("format_version".into(), json!(FORMAT_VERSION));
    m.insert("dim".into(), json!(spec.dim));
    m.insert("a".into(), algebra_value(&spec.a));
    m.insert("b".into(), algebra_value(&spec.b));
    if let Some(s) = &spec.state {
        m.insert("state".into(), s.to_value());
    }
    if let Some(p) = &spec.pair {
        m.insert("pair".into(), json!({ "e": p.e.to_value(), "f": p.f.to_value() }));
    }
    if let Some(c) = &spec.chsh {
        m.insert(
            "chsh".into(),
            json!({ "a1": c.a1.to_value(), "a2": c.a2.to_value(), "b1": c.b1.to_value(), "b2": c.b2.to_value() }),
        );
    }
    m.insert("seed".into(), json!(spec.seed));
    let b = &spec.budget;
    let mut bm = Map::new();
    for (k, v) in [
        ("pairs", b.pairs),
        ("starts", b.starts),
        ("max_iter", b.max_iter),
        ("refine_steps", b.refine_steps),
        ("sector", b.sector),
    ] {
        if let Some(v) = v {
            bm.insert(k.into(), json!(v));
        }
    }
    if let Some(t) = b.tol {
        bm.insert("tol".into(), json!(t));
    }
    if !bm.is_empty() {
        m.insert("budget".into(), Value::Object(bm));
    }
    Value::Object(m)
}

/// Canonical text of a spec; `parse_spec(&print_spec(s)) == s`.
pub fn print_spec(spec: &AlgebraPairSpec) -> String {
    serde_json::to_string_pretty(&spec_value(spec)).expect("serialisable")
}
