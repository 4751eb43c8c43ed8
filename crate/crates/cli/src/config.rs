//! `--config FILE` support.
//!
//! The file is TOML. Top-level keys apply to every subcommand; a table named
//! after the subcommand applies to that subcommand only and wins over the
//! top level:
//!
//! ```toml
//! jobs = 4
//!
//! [rerank]
//! method = "templated"
//! grammar = "grammar.txt"
//! rule = "th3"
//! ```
//!
//! Keys are flag names (`beam_size` and `beam-size` both work). The values
//! are spliced in right after the subcommand name, so flags given on the
//! command line come later and take precedence.

use anyhow::Result;
use toml::Value;

use crate::{Usage, COMMANDS};

fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = a.strip_prefix("--config=") {
            return Some(v.to_string());
        }
    }
    None
}

pub(crate) fn subcommand_index(argv: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < argv.len() {
        let a = argv[i].as_str();
        if a == "--config" || a == "--jobs" {
            i += 2;
            continue;
        }
        if COMMANDS.contains(&a) {
            return Some(i);
        }
        i += 1;
    }
    None
}

fn flag(key: &str, value: &Value) -> Result<Option<String>, String> {
    let name = key.replace('_', "-");
    let text = match value {
        Value::Boolean(true) => return Ok(Some(format!("--{name}"))),
        Value::Boolean(false) => return Ok(None),
        Value::String(s) => s.clone(),
        Value::Integer(n) => n.to_string(),
        Value::Float(x) => x.to_string(),
        Value::Array(items) => items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.clone()),
                Value::Integer(n) => Ok(n.to_string()),
                Value::Float(x) => Ok(x.to_string()),
                _ => Err(format!("{key}: only strings and numbers are allowed in lists")),
            })
            .collect::<Result<Vec<_>, _>>()?
            .join(","),
        _ => return Err(format!("{key}: unsupported value type")),
    };
    Ok(Some(format!("--{name}={text}")))
}

/// Returns `argv` with the config file's flags spliced in.
pub(crate) fn apply(argv: Vec<String>) -> Result<Vec<String>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let Some(at) = subcommand_index(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(&path).map_err(|e| Usage(format!("config {path}: {e}")))?;
    let table: toml::Table = text.parse().map_err(|e| Usage(format!("config {path}: {e}")))?;
    let command = argv[at].as_str();

    let mut flags = Vec::new();
    let mut push = |key: &str, value: &Value| -> Result<()> {
        if key == "config" {
            return Ok(());
        }
        if let Some(f) = flag(key, value).map_err(|e| Usage(format!("config {path}: {e}")))? {
            flags.push(f);
        }
        Ok(())
    };
    for (key, value) in &table {
        if !value.is_table() {
            push(key, value)?;
        }
    }
    if let Some(Value::Table(section)) = table.get(command) {
        for (key, value) in section {
            push(key, value)?;
        }
    }

    let mut out = argv[..=at].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[at + 1..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn args(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn splices_after_subcommand() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.toml");
        std::fs::write(&p, "jobs = 2\nverbose = false\n[rerank]\nrule = \"th1\"\nbeam_size = 5\n[train]\nepochs = 3\n")
            .unwrap();
        let argv = args(&format!("lfrerank --config {} rerank --rule th3", p.display()));
        let out = apply(argv).unwrap();
        assert_eq!(out[3..], args("rerank --jobs=2 --beam-size=5 --rule=th1 --rule th3")[..]);
    }

    #[test]
    fn no_config_is_identity() {
        let argv = args("lfrerank oracle --dataset d");
        assert_eq!(apply(argv.clone()).unwrap(), argv);
    }

    #[test]
    fn bad_files_are_usage_errors() {
        let argv = args("lfrerank --config /nonexistent/c.toml oracle");
        assert!(apply(argv).unwrap_err().downcast_ref::<Usage>().is_some());
    }
}
