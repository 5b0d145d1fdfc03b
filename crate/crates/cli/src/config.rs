//! Flat `key=value` config files and the argument merge.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

/// Parses `key=value` lines. Blank lines and lines starting with `#` are
/// ignored, so a run manifest can be fed back in as a config file.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
        let k = k.trim();
        if k.is_empty() {
            return Err(format!("config line {}: empty key", i + 1));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

pub fn read_config(path: &Path) -> Result<Vec<(String, String)>, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("cannot read config {}: {e}", path.display()))?;
    parse_config(&text)
}

/// Finds the value of `--config` in raw arguments, in either
/// `--config path` or `--config=path` form.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

/// Splices config entries in as `--key value` pairs right after the verb.
/// Later occurrences win in the parser, so the user's own flags, which
/// follow, take precedence. Keys the verb does not know are then rejected
/// by the parser like any unknown flag.
pub fn splice(args: &[OsString], verbs: &[&str], entries: &[(String, String)]) -> Vec<OsString> {
    let verb_at = args
        .iter()
        .skip(1)
        .position(|a| verbs.contains(&a.to_string_lossy().as_ref()))
        .map(|i| i + 1);
    let Some(at) = verb_at else {
        return args.to_vec();
    };
    let mut out: Vec<OsString> = args[..=at].to_vec();
    for (k, v) in entries {
        if k == "config" {
            continue;
        }
        out.push(format!("--{k}").into());
        out.push(v.into());
    }
    out.extend_from_slice(&args[at + 1..]);
    out
}
