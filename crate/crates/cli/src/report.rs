//! Run reports and their two renderings.
//!
//! The machine form is JSON. The text form walks the same value, one
//! `key: value` line per leaf, so the two always carry the same fields and
//! the same numbers.

use std::fmt::Write;
use std::time::Duration;

use serde_json::{Map, Value};

#[derive(Clone, Debug, PartialEq)]
pub struct RunReport {
    /// Every field except the timing.
    pub value: Value,
    pub exit_code: i32,
    pub timing_ms: f64,
}

impl RunReport {
    pub fn new(value: Map<String, Value>, exit_code: i32, elapsed: Duration) -> Self {
        Self { value: Value::Object(value), exit_code, timing_ms: elapsed.as_secs_f64() * 1e3 }
    }

    /// The full report, timing last.
    pub fn full_value(&self) -> Value {
        let mut v = self.value.clone();
        if let Value::Object(m) = &mut v {
            m.insert("timing_ms".into(), Value::from(self.timing_ms));
        }
        v
    }

    pub fn machine(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.full_value()).expect("serialisable");
        s.push('\n');
        s
    }

    /// Machine form without the timing field; byte-identical across reruns.
    pub fn machine_without_timing(&self) -> String {
        serde_json::to_string_pretty(&self.value).expect("serialisable")
    }

    pub fn text(&self) -> String {
        let mut out = String::new();
        render(&self.full_value(), 0, &mut out);
        out
    }
}

fn is_leaf_array(items: &[Value]) -> bool {
    items.iter().all(|x| !x.is_object())
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => "-".into(),
        Value::String(s) => s.clone(),
        other => serde_json::to_string(other).expect("serialisable"),
    }
}

fn render(v: &Value, depth: usize, out: &mut String) {
    let pad = "  ".repeat(depth);
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                match x {
                    Value::Object(inner) if !inner.is_empty() => {
                        let _ = writeln!(out, "{pad}{k}:");
                        render(x, depth + 1, out);
                    }
                    Value::Array(items) if !items.is_empty() && !is_leaf_array(items) => {
                        let _ = writeln!(out, "{pad}{k}:");
                        for (i, item) in items.iter().enumerate() {
                            let _ = writeln!(out, "{pad}  [{i}]");
                            render(item, depth + 2, out);
                        }
                    }
                    _ => {
                        let _ = writeln!(out, "{pad}{k}: {}", scalar(x));
                    }
                }
            }
        }
        other => {
            let _ = writeln!(out, "{pad}{}", scalar(other));
        }
    }
}
