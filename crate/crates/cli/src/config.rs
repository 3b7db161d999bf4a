//! JSON config files merged under command-line flags.
//!
//! Top-level keys apply to whichever subcommand has a flag of that name;
//! an object under a subcommand's name applies to that subcommand only and
//! wins over the top level. Keys may be camelCase or kebab-case. A value is
//! only used when the flag is absent from the command line.

use std::ffi::OsString;

use clap::{ArgAction, Command};
use serde_json::{Map, Value};

pub fn kebab(key: &str) -> String {
    let mut out = String::with_capacity(key.len() + 4);
    for c in key.chars() {
        if c.is_ascii_uppercase() {
            out.push('-');
            out.push(c.to_ascii_lowercase());
        } else if c == '_' {
            out.push('-');
        } else {
            out.push(c);
        }
    }
    out
}

/// Removes `--config FILE` from `argv` and returns the file, if present.
fn take_config(argv: &mut Vec<OsString>) -> Result<Option<String>, String> {
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].to_string_lossy().into_owned();
        if a == "--" {
            break;
        }
        if a == "--config" {
            if i + 1 >= argv.len() {
                return Err("--config needs a file".into());
            }
            let v = argv.remove(i + 1).to_string_lossy().into_owned();
            argv.remove(i);
            return Ok(Some(v));
        }
        if let Some(v) = a.strip_prefix("--config=") {
            argv.remove(i);
            return Ok(Some(v.to_string()));
        }
        i += 1;
    }
    Ok(None)
}

fn value_text(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        Value::Array(items) => items.iter().map(value_text).collect::<Option<Vec<_>>>().map(|v| v.join(",")),
        _ => None,
    }
}

fn present(argv: &[OsString], long: &str, short: Option<char>) -> bool {
    let eq = format!("--{long}=");
    let dash = format!("--{long}");
    argv.iter().skip(1).any(|a| {
        let a = a.to_string_lossy();
        a == dash || a.starts_with(&eq) || short.is_some_and(|s| a.strip_prefix('-').is_some_and(|r| r.starts_with(s) && !r.starts_with('-')))
    })
}

/// Expands `--config FILE` into explicit flags placed after the given ones.
pub fn merge_config(mut argv: Vec<OsString>, cmd: &Command) -> Result<Vec<OsString>, String> {
    let Some(path) = take_config(&mut argv)? else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| format!("cannot read config {path}: {e}"))?;
    let root: Map<String, Value> = match serde_json::from_str(&text) {
        Ok(Value::Object(m)) => m,
        Ok(_) => return Err(format!("config {path} must be a JSON object")),
        Err(e) => return Err(format!("config {path}: {e}")),
    };
    let sub = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .find_map(|a| cmd.find_subcommand(&a).map(|s| s.get_name().to_string()));

    let mut layers: Vec<(&Map<String, Value>, bool)> = Vec::new();
    if let Some(name) = &sub {
        if let Some((_, Value::Object(m))) = root.iter().find(|(k, _)| kebab(k) == *name) {
            layers.push((m, true));
        }
    }
    layers.push((&root, false));

    let sub_cmd = sub.as_deref().and_then(|n| cmd.find_subcommand(n));
    let mut extra = Vec::new();
    let mut added = std::collections::HashSet::new();
    for (layer, nested) in layers {
        for (key, value) in layer {
            if value.is_object() {
                continue;
            }
            let long = kebab(key);
            let arg = sub_cmd
                .and_then(|c| c.get_arguments().find(|a| a.get_long() == Some(long.as_str())))
                .or_else(|| cmd.get_arguments().find(|a| a.is_global_set() && a.get_long() == Some(long.as_str())));
            let Some(arg) = arg else {
                if nested {
                    return Err(format!("config key '{key}' is not an option of {}", sub.as_deref().unwrap_or("")));
                }
                continue;
            };
            if present(&argv, &long, arg.get_short()) || !added.insert(long.clone()) {
                continue;
            }
            let flag = format!("--{long}");
            match (arg.get_action(), value) {
                (ArgAction::SetTrue, Value::Bool(true)) => extra.push(OsString::from(flag)),
                (ArgAction::SetTrue, Value::Bool(false)) => {}
                (ArgAction::SetTrue, _) => return Err(format!("config key '{key}' must be true or false")),
                (_, v) => {
                    let text = value_text(v).ok_or_else(|| format!("config key '{key}' has an unusable value"))?;
                    extra.push(OsString::from(format!("{flag}={text}")));
                }
            }
        }
    }
    argv.extend(extra);
    Ok(argv)
}
