//! Flat `key=value` files whose entries act as flag defaults.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context};
use clap::{ArgAction, Command};

/// Turns the file into argument tokens for `sub`. Keys are long flag names
/// (`g-min` or `g_min`); `#` starts a comment line.
pub fn config_args(path: &Path, sub: &Command) -> anyhow::Result<Vec<OsString>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value", path.display(), i + 1);
        };
        let key = key.trim().replace('_', "-");
        let value = value.trim();
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && key != "config")
            .with_context(|| format!("{}:{}: unknown key `{key}` for `{}`", path.display(), i + 1, sub.get_name()))?;
        match arg.get_action() {
            ArgAction::SetTrue => match value {
                "true" => out.push(format!("--{key}").into()),
                "false" => {}
                _ => bail!("{}:{}: `{key}` expects true or false", path.display(), i + 1),
            },
            _ => out.push(format!("--{key}={value}").into()),
        }
    }
    Ok(out)
}

/// Value of `--config` if present anywhere in `args`.
pub fn find_config(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}
