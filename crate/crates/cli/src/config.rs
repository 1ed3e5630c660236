//! JSON config files: each key names a flag (`snake_case` or `kebab-case`),
//! and is turned into command-line tokens appended after the explicit ones
//! unless that flag, or one it conflicts with, was given explicitly.

use serde_json::Value;

const SHORT: [(&str, &str); 2] = [("-o", "output"), ("-i", "input")];

/// Flags that exclude each other; an explicit one suppresses the config's.
const EXCLUSIVE: [(&str, &str); 2] = [("sigma", "nsr"), ("steps", "periods")];

fn config_path(argv: &[String]) -> Option<Result<String, String>> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            return Some(it.next().cloned().ok_or_else(|| "--config needs a file".to_string()));
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(Ok(v.to_string()));
        }
    }
    None
}

fn given(argv: &[String], flag: &str) -> bool {
    let long = format!("--{flag}");
    let long_eq = format!("{long}=");
    argv.iter().skip(1).any(|a| {
        a == &long
            || a.starts_with(&long_eq)
            || SHORT.iter().any(|(s, l)| *l == flag && (a == s || a.starts_with(s)))
    })
}

fn scalar(key: &str, v: &Value) -> Result<Option<String>, String> {
    match v {
        Value::Number(n) => Ok(Some(n.to_string())),
        Value::String(s) => Ok(Some(s.clone())),
        Value::Null => Ok(None),
        _ => Err(format!("config key '{key}' must be a number, string, boolean or array")),
    }
}

/// Returns `argv` extended by the config file named with `--config`, if any.
pub fn overlay(argv: Vec<String>) -> Result<Vec<String>, String> {
    let path = match config_path(&argv) {
        None => return Ok(argv),
        Some(p) => p?,
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("{path}: {e}"))?;
    let json: Value = serde_json::from_str(&text).map_err(|e| format!("{path}: {e}"))?;
    let Value::Object(map) = json else {
        return Err(format!("{path}: expected a JSON object"));
    };
    let mut extra = Vec::new();
    for (key, value) in map {
        let flag = key.replace('_', "-");
        if flag == "config" {
            return Err(format!("{path}: config files cannot name another config"));
        }
        let blocked = given(&argv, &flag)
            || EXCLUSIVE.iter().any(|&(a, b)| {
                (flag == a && given(&argv, b)) || (flag == b && given(&argv, a))
            });
        if blocked {
            continue;
        }
        match &value {
            Value::Bool(true) => extra.push(format!("--{flag}")),
            Value::Bool(false) => {}
            Value::Array(items) => {
                for item in items {
                    if let Some(s) = scalar(&key, item)? {
                        extra.push(format!("--{flag}={s}"));
                    }
                }
            }
            v => {
                if let Some(s) = scalar(&key, v)? {
                    extra.push(format!("--{flag}={s}"));
                }
            }
        }
    }
    let mut out = argv;
    out.extend(extra);
    Ok(out)
}
