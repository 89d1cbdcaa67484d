//! TOML config files merged under command-line flags.
//!
//! Top-level keys become global flags and `[subcommand]` tables become
//! flags of that subcommand; a flag given on the command line always wins.
//! Keys use the flag name with `_` or `-`, e.g. `max_capture = 3`.

use std::path::PathBuf;

use anyhow::{Context, Result};

const GLOBAL_WITH_VALUE: &[&str] = &["--threads", "--config"];

/// Path given with `--config`, if any.
pub fn config_path(args: &[String]) -> Option<PathBuf> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(p));
        }
    }
    None
}

pub fn load(path: &PathBuf) -> Result<toml::Table> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    text.parse::<toml::Table>()
        .with_context(|| format!("parsing config {}", path.display()))
}

fn subcommand_index(args: &[String]) -> Option<usize> {
    let mut i = 1;
    while i < args.len() {
        let a = &args[i];
        if GLOBAL_WITH_VALUE.contains(&a.as_str()) {
            i += 2;
        } else if a.starts_with('-') {
            i += 1;
        } else {
            return Some(i);
        }
    }
    None
}

fn has_flag(args: &[String], flag: &str) -> bool {
    args.iter()
        .any(|a| a == flag || a.strip_prefix(flag).is_some_and(|rest| rest.starts_with('=')))
}

fn to_args(table: &toml::Table, present: &[String]) -> Vec<String> {
    let mut out = Vec::new();
    for (key, value) in table {
        if value.is_table() {
            continue;
        }
        let flag = format!("--{}", key.replace('_', "-"));
        if has_flag(present, &flag) {
            continue;
        }
        let values: Vec<&toml::Value> = match value {
            toml::Value::Array(a) => a.iter().collect(),
            v => vec![v],
        };
        for v in values {
            match v {
                toml::Value::Boolean(true) => out.push(flag.clone()),
                toml::Value::Boolean(false) => {}
                toml::Value::String(s) => out.extend([flag.clone(), s.clone()]),
                other => out.extend([flag.clone(), other.to_string()]),
            }
        }
    }
    out
}

/// `args` with config values inserted for every flag not already present.
pub fn merge(args: Vec<String>, config: &toml::Table) -> Vec<String> {
    let Some(sub) = subcommand_index(&args) else {
        return args;
    };
    let mut out: Vec<String> = args[..1].to_vec();
    out.extend(to_args(config, &args));
    out.extend_from_slice(&args[1..=sub]);
    if let Some(toml::Value::Table(t)) = config.get(&args[sub]) {
        out.extend(to_args(t, &args));
    }
    out.extend_from_slice(&args[sub + 1..]);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argv(s: &str) -> Vec<String> {
        s.split_whitespace().map(str::to_string).collect()
    }

    #[test]
    fn flags_win_over_config() {
        let cfg: toml::Table = "threads = 2\n[train]\nepochs = 50\nlr = 0.01\nmodel = \"memory\"\n"
            .parse()
            .unwrap();
        let merged = merge(
            argv("senscommon --config c.toml train --epochs 5 --dataset d.json"),
            &cfg,
        );
        assert_eq!(
            merged,
            argv("senscommon --threads 2 --config c.toml train --lr 0.01 --model memory --epochs 5 --dataset d.json")
        );
    }

    #[test]
    fn equals_form_counts_as_present() {
        let cfg: toml::Table = "[mine]\nmax_capture = 3\njson = true\n".parse().unwrap();
        let merged = merge(argv("senscommon mine --max-capture=4"), &cfg);
        assert_eq!(merged, argv("senscommon mine --json --max-capture=4"));
        assert_eq!(
            config_path(&argv("x --config=a.toml mine")),
            Some(PathBuf::from("a.toml"))
        );
    }
}
