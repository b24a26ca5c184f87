//! `key = value` configuration files.
//!
//! A file passed with `--config` supplies values for long options of the
//! chosen subcommand; options present on the command line take precedence.
//! Resolved configurations are written in the same format so any run can be
//! repeated with `--config`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{anyhow, Context, Result};
use clap::{ArgAction, CommandFactory};
use serde::Serialize;

use crate::args::Cli;
use crate::UsageError;

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| anyhow!(UsageError(format!("config line {}: expected key = value", i + 1))))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = a.to_str().and_then(|s| s.strip_prefix("--config=")) {
            return Some(rest.into());
        }
    }
    None
}

fn given_on_command_line(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let with_value = format!("--{key}=");
    args.iter().any(|a| {
        a.to_str()
            .is_some_and(|s| s == flag || s.starts_with(&with_value))
    })
}

/// Returns `args` extended with the options from the `--config` file, if
/// any, that the command line does not already set.
pub fn inject(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(&path)
        .with_context(|| format!("reading config {}", path.to_string_lossy()))
        .map_err(|e| anyhow!(UsageError(format!("{e:#}"))))?;
    let pairs = parse(&text)?;
    let root = Cli::command();
    let Some(sub) = args
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find_map(|a| root.find_subcommand(a))
    else {
        // let clap report the missing subcommand
        return Ok(args);
    };
    let mut extra: Vec<OsString> = Vec::new();
    for (key, value) in pairs {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && key != "config")
            .ok_or_else(|| {
                anyhow!(UsageError(format!(
                    "unknown config key {key:?} for {}",
                    sub.get_name()
                )))
            })?;
        if given_on_command_line(&args, &key) {
            continue;
        }
        match arg.get_action() {
            ArgAction::SetTrue => match value.as_str() {
                "true" => extra.push(format!("--{key}").into()),
                "false" => {}
                _ => return Err(anyhow!(UsageError(format!("{key} expects true or false")))),
            },
            _ => {
                extra.push(format!("--{key}").into());
                extra.push(value.into());
            }
        }
    }
    let mut out = args;
    out.extend(extra);
    Ok(out)
}

/// Renders serialized arguments as a config file for `command`.
pub fn render<T: Serialize>(command: &str, args: &T) -> Result<String> {
    let value = serde_json::to_value(args)?;
    let map = value
        .as_object()
        .ok_or_else(|| anyhow!("arguments are not a record"))?;
    let mut out = format!("# ddorder {command}\n");
    for (key, v) in map {
        let text = match v {
            serde_json::Value::Null => continue,
            serde_json::Value::String(s) => s.clone(),
            serde_json::Value::Array(items) => items
                .iter()
                .map(|x| x.as_str().map(str::to_string).unwrap_or_else(|| x.to_string()))
                .collect::<Vec<_>>()
                .join(","),
            other => other.to_string(),
        };
        let _ = writeln!(out, "{key} = {text}");
    }
    Ok(out)
}

pub fn write<T: Serialize>(path: &Path, command: &str, args: &T) -> Result<()> {
    std::fs::write(path, render(command, args)?).with_context(|| format!("writing {}", path.display()))
}
