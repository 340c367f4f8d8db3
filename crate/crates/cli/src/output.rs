//! Deterministic JSON and CSV output.
//!
//! Floats are written with 17 significant digits (`{:.16e}`) and non-finite
//! values become `null` in JSON, so identical runs give identical bytes.
//! Object keys come out sorted.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn is_scalar(v: &Value) -> bool {
    !matches!(v, Value::Array(_) | Value::Object(_))
}

fn write_value(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent + 1);
    match v {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(out, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(out, "{u}");
            } else {
                out.push_str(&fmt_f64(n.as_f64().unwrap_or(f64::NAN)));
            }
        }
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("strings serialize")),
        Value::Array(items) if items.is_empty() => out.push_str("[]"),
        Value::Array(items) if items.iter().all(is_scalar) => {
            out.push('[');
            for (k, item) in items.iter().enumerate() {
                if k > 0 {
                    out.push_str(", ");
                }
                write_value(item, indent, out);
            }
            out.push(']');
        }
        Value::Array(items) => {
            out.push_str("[\n");
            for (k, item) in items.iter().enumerate() {
                out.push_str(&pad);
                write_value(item, indent + 1, out);
                out.push_str(if k + 1 < items.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push(']');
        }
        Value::Object(map) if map.is_empty() => out.push_str("{}"),
        Value::Object(map) => {
            out.push_str("{\n");
            for (k, (key, item)) in map.iter().enumerate() {
                out.push_str(&pad);
                out.push_str(&serde_json::to_string(key).expect("strings serialize"));
                out.push_str(": ");
                write_value(item, indent + 1, out);
                out.push_str(if k + 1 < map.len() { ",\n" } else { "\n" });
            }
            out.push_str(&"  ".repeat(indent));
            out.push('}');
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let v = serde_json::to_value(value)?;
    let mut out = String::new();
    write_value(&v, 0, &mut out);
    out.push('\n');
    Ok(out)
}

/// Collects artifacts and writes them under `--out`, or the JSON report to
/// stdout when no directory is given.
pub struct Sink {
    dir: Option<PathBuf>,
}

impl Sink {
    pub fn new(dir: Option<PathBuf>) -> std::io::Result<Self> {
        if let Some(d) = &dir {
            fs::create_dir_all(d)?;
        }
        Ok(Sink { dir })
    }

    pub fn json(&self, name: &str, text: &str) -> std::io::Result<()> {
        match &self.dir {
            Some(d) => self.write(d, &format!("{name}.json"), text),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }

    /// CSV artifacts are only written with an output directory.
    pub fn csv(&self, name: &str, header: &[String], rows: &[Vec<String>]) -> Result<(), Box<dyn std::error::Error>> {
        let Some(d) = &self.dir else {
            log::debug!("no --out directory, skipping {name}.csv");
            return Ok(());
        };
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        self.write(d, &format!("{name}.csv"), std::str::from_utf8(&bytes)?)?;
        Ok(())
    }

    fn write(&self, dir: &Path, file: &str, text: &str) -> std::io::Result<()> {
        let path = dir.join(file);
        fs::write(&path, text)?;
        log::info!("wrote {}", path.display());
        println!("{}", path.display());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn fixed_float_format() {
        let s = to_json(&json!({"b": 0.1, "a": [1, 2.5, null], "c": f64::NAN})).unwrap();
        assert_eq!(
            s,
            "{\n  \"a\": [1, 2.5000000000000000e0, null],\n  \"b\": 1.0000000000000001e-1,\n  \"c\": null\n}\n"
        );
    }

    #[test]
    fn nested_arrays() {
        let s = to_json(&json!([[1.0], []])).unwrap();
        assert_eq!(s, "[\n  [1.0000000000000000e0],\n  []\n]\n");
    }
}
