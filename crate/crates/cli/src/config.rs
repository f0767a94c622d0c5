//! Flat `key = value` configuration files.
//!
//! Keys are flag names without the leading dashes. The file is turned into
//! flags placed ahead of the command-line ones, so explicit flags win.

use std::fs;
use std::path::Path;

use kitaev_dimer::Error;

/// Flags that switch something on; `key = true` emits the bare flag.
const SWITCHES: &[&str] = &["no-gate", "inject-corruption"];

pub fn parse(text: &str) -> Result<Vec<(String, String)>, Error> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", n + 1)))?;
        let k = k.trim().trim_start_matches("--");
        if k.is_empty() || k == "config" {
            return Err(Error::Parse(format!("config line {}: invalid key '{k}'", n + 1)));
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn to_flags(pairs: &[(String, String)]) -> Result<Vec<String>, Error> {
    let mut flags = Vec::new();
    for (k, v) in pairs {
        if SWITCHES.contains(&k.as_str()) {
            match v.as_str() {
                "true" | "1" | "yes" => flags.push(format!("--{k}")),
                "false" | "0" | "no" => {}
                other => return Err(Error::Parse(format!("config key {k}: expected a boolean, got '{other}'"))),
            }
        } else {
            flags.push(format!("--{k}={v}"));
        }
    }
    Ok(flags)
}

/// Splices flags from `--config FILE` in front of the user's flags.
pub fn expand_args(args: Vec<String>) -> Result<Vec<String>, Error> {
    let mut path = None;
    for (i, a) in args.iter().enumerate() {
        if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else if a == "--config" {
            path = args.get(i + 1).cloned();
        }
    }
    let Some(path) = path else { return Ok(args) };
    let text = fs::read_to_string(Path::new(&path)).map_err(|source| Error::Io { path: path.clone(), source })?;
    let injected = to_flags(&parse(&text)?)?;
    // the subcommand is the first positional argument
    let Some(sub) = args.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1) else {
        return Ok(args);
    };
    let mut out = args[..=sub].to_vec();
    out.extend(injected);
    out.extend(args[sub + 1..].iter().cloned());
    Ok(out)
}
