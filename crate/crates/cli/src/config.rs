//! `--config FILE.json`: an object of flag names to values, spliced into
//! the argument list behind the subcommand. Command-line flags win.

use std::ffi::OsString;
use std::fs;

use serde_json::Value;

use crate::error::CliError;

pub fn expand(argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(pos) = argv.iter().position(|a| a == "--config" || a.to_string_lossy().starts_with("--config=")) else {
        return Ok(argv);
    };
    let mut argv = argv;
    let flag = argv.remove(pos).to_string_lossy().into_owned();
    let path = match flag.strip_prefix("--config=") {
        Some(p) => p.to_owned(),
        None => {
            if pos >= argv.len() {
                return Err(CliError::Config("--config needs a file path".into()));
            }
            argv.remove(pos).to_string_lossy().into_owned()
        }
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::Io { path: path.clone(), message: e.to_string() })?;
    let value: Value =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{path}: line {}: {e}", e.line())))?;
    let Value::Object(map) = value else {
        return Err(CliError::Config(format!("{path}: expected a JSON object of flag values")));
    };

    let present: Vec<String> = argv
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_owned())
        .collect();
    let mut extra = Vec::new();
    for (key, value) in map {
        let name = key.replace('_', "-");
        if name == "config" {
            return Err(CliError::Config(format!("{path}: nested config files are not supported")));
        }
        if present.contains(&name) {
            continue;
        }
        let flag = format!("--{name}");
        match value {
            Value::Bool(true) => extra.push(flag),
            Value::Bool(false) | Value::Null => {}
            Value::Number(n) => extra.push(format!("{flag}={n}")),
            Value::String(s) => extra.push(format!("{flag}={s}")),
            Value::Array(items) => {
                for item in items {
                    match item {
                        Value::Number(n) => extra.push(format!("{flag}={n}")),
                        Value::String(s) => extra.push(format!("{flag}={s}")),
                        other => return Err(CliError::Config(format!("{path}: unsupported value {other} in '{key}'"))),
                    }
                }
            }
            Value::Object(_) => return Err(CliError::Config(format!("{path}: '{key}' must not be an object"))),
        }
    }
    argv.extend(extra.into_iter().map(OsString::from));
    Ok(argv)
}
