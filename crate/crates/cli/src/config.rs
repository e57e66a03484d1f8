//! JSON config files, merged under the command line.
//!
//! A config is a JSON object. Scalar and array entries apply to whichever
//! subcommand runs; an object entry named after a subcommand applies only to
//! that subcommand. Keys are flag names (`grid-size` or `grid_size`). The
//! entries become flags inserted right after the subcommand name, and since
//! every subcommand lets a repeated flag override the earlier one, flags given
//! on the command line win.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

pub const SUBCOMMANDS: [&str; 6] = ["simulate", "quantile", "depth", "ddplot", "efficiency", "converge"];

pub fn load(path: &Path) -> Result<Map<String, Value>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    match serde_json::from_str(&text) {
        Ok(Value::Object(map)) => Ok(map),
        Ok(_) => Err(format!("config {} must be a JSON object", path.display())),
        Err(e) => Err(format!("config {}: {e}", path.display())),
    }
}

/// Value of `--config`, looked up without a full parse.
pub fn path_arg(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--" {
            break;
        }
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(v));
        }
    }
    None
}

/// Position of the subcommand name in `argv`, skipping values of global flags.
fn subcommand_index(argv: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy();
        if a == "--" {
            return None;
        }
        if a == "--config" || a == "--threads" {
            i += 2;
            continue;
        }
        if SUBCOMMANDS.contains(&a.as_ref()) {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn flag_tokens(key: &str, value: &Value, out: &mut Vec<OsString>) -> Result<(), String> {
    let flag = format!("--{}", key.replace('_', "-"));
    let scalar = |v: &Value| -> Result<String, String> {
        match v {
            Value::String(s) => Ok(s.clone()),
            Value::Number(n) => Ok(n.to_string()),
            _ => Err(format!("config key {key:?}: unsupported value {v}")),
        }
    };
    match value {
        Value::Bool(true) => out.push(flag.into()),
        Value::Bool(false) | Value::Null => {}
        Value::Array(items) => {
            let joined: Result<Vec<String>, String> = items.iter().map(scalar).collect();
            out.push(format!("{flag}={}", joined?.join(",")).into());
        }
        v => out.push(format!("{flag}={}", scalar(v)?).into()),
    }
    Ok(())
}

/// `argv` with the config entries for the invoked subcommand spliced in.
pub fn merge(argv: Vec<OsString>, config: &Map<String, Value>) -> Result<Vec<OsString>, String> {
    let Some(at) = subcommand_index(&argv) else {
        return Ok(argv);
    };
    let sub = argv[at].to_string_lossy().into_owned();
    // Top-level entries first so that the subcommand section overrides them.
    let mut tokens = Vec::new();
    for (key, value) in config {
        match value {
            Value::Object(_) if SUBCOMMANDS.contains(&key.as_str()) => {}
            Value::Object(_) => return Err(format!("config key {key:?} is not a subcommand section")),
            v => flag_tokens(key, v, &mut tokens)?,
        }
    }
    if let Some(Value::Object(section)) = config.get(&sub) {
        for (k, v) in section {
            flag_tokens(k, v, &mut tokens)?;
        }
    }
    let mut merged = argv[..=at].to_vec();
    merged.extend(tokens);
    merged.extend_from_slice(&argv[at + 1..]);
    Ok(merged)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn entries_go_before_command_line_flags() {
        let cfg: Map<String, Value> = serde_json::from_str(
            r#"{"seed": 3, "grid_size": 50, "table": true, "efficiency": {"mc": 1000, "seed": 5}, "simulate": {"n": 9}}"#,
        )
        .unwrap();
        let merged = merge(os(&["fdspatial", "--threads", "2", "efficiency", "--seed", "7"]), &cfg).unwrap();
        assert_eq!(
            merged,
            os(&["fdspatial", "--threads", "2", "efficiency", "--grid-size=50", "--seed=3", "--table", "--mc=1000", "--seed=5", "--seed", "7"])
        );
    }

    #[test]
    fn lists_are_comma_joined() {
        let cfg: Map<String, Value> = serde_json::from_str(r#"{"n-list": [100, 200]}"#).unwrap();
        let merged = merge(os(&["x", "converge"]), &cfg).unwrap();
        assert_eq!(merged, os(&["x", "converge", "--n-list=100,200"]));
    }
}
