//! `--config FILE` support.
//!
//! Each non-blank line not starting with `#` is `key = value`, where `key`
//! is a long flag of the chosen subcommand. Entries are spliced in right
//! after the subcommand name, so any flag repeated on the command line
//! overrides them. Switches take `true` or `false`.

use std::ffi::OsString;
use std::fs;

use anyhow::{Context, Result};
use clap::Command;

use crate::usage;

/// Value of `--config`, in either `--config X` or `--config=X` form.
fn config_path(argv: &[OsString]) -> Option<OsString> {
    let mut it = argv.iter().skip(1);
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--" {
            break;
        }
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Index of the subcommand name, skipping global flags and their values.
fn subcommand_index(command: &Command, argv: &[OsString]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let s = argv[i].to_string_lossy();
        if s == "--config" {
            i += 2;
            continue;
        }
        if command.find_subcommand(s.as_ref()).is_some() {
            return Some(i);
        }
        i += 1;
    }
    None
}

pub fn parse_lines(text: &str) -> Result<Vec<(String, String)>> {
    let mut entries = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| usage(format!("config line {}: expected key = value", n + 1)))?;
        entries.push((key.trim().to_string(), value.trim().to_string()));
    }
    Ok(entries)
}

/// Command line with the config file's entries spliced in.
pub fn expand(command: &Command, mut argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = fs::read_to_string(&path)
        .with_context(|| format!("reading config {}", path.to_string_lossy()))?;
    let Some(at) = subcommand_index(command, &argv) else {
        // clap reports the missing subcommand
        return Ok(argv);
    };
    let sub = command
        .find_subcommand(argv[at].to_string_lossy().as_ref())
        .expect("index points at a subcommand");

    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in parse_lines(&text)? {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
            .ok_or_else(|| {
                usage(format!(
                    "config key {key:?} is not a flag of {}",
                    sub.get_name()
                ))
            })?;
        let flag = format!("--{key}");
        if arg.get_action().takes_values() {
            injected.push(flag.into());
            injected.push(value.into());
        } else {
            match value.as_str() {
                "true" => injected.push(flag.into()),
                "false" => {}
                _ => return Err(usage(format!("config key {key:?} expects true or false"))),
            }
        }
    }
    argv.splice(at + 1..at + 1, injected);
    Ok(argv)
}
