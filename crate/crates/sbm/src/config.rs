//! `key=value` config files.
//!
//! Keys are long flag names without the dashes; `#` starts a comment.
//! The entries are spliced into the command line right after the
//! subcommand, so any flag given explicitly comes later and wins.

use crate::error::{CliError, CliResult};
use std::path::Path;

/// Subcommands that accept a config file.
pub const SUBCOMMANDS: [&str; 6] = [
    "simulate",
    "localtime",
    "rayknight",
    "suplaw",
    "functional",
    "validate",
];

/// Parses `key=value` lines. `true` turns a key into a bare switch and
/// `false` drops it.
pub fn parse_config(text: &str) -> CliResult<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| {
            CliError::Config(format!("config line {}: expected key=value", n + 1))
        })?;
        let k = k.trim().trim_start_matches("--").replace('_', "-");
        if k.is_empty() || k == "config" {
            return Err(CliError::Config(format!(
                "config line {}: invalid key '{}'",
                n + 1,
                k
            )));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

pub fn load_config(path: &Path) -> CliResult<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", path.display())))?;
    parse_config(&text)
}

/// Removes `--config FILE` from `args` and inserts the file's entries as
/// flags directly after the subcommand.
pub fn expand_args(args: Vec<String>) -> CliResult<Vec<String>> {
    let mut rest = Vec::with_capacity(args.len());
    let mut file = None;
    let mut it = args.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let f = it
                .next()
                .ok_or_else(|| CliError::Config("--config needs a file".into()))?;
            file = Some(f);
        } else if let Some(f) = a.strip_prefix("--config=") {
            file = Some(f.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(file) = file else {
        return Ok(rest);
    };
    let entries = load_config(Path::new(&file))?;
    let at = rest
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.as_str()))
        .ok_or_else(|| CliError::Config("--config needs a subcommand".into()))?;
    let flags = entries.into_iter().filter_map(|(k, v)| match v.as_str() {
        "true" => Some(format!("--{k}")),
        "false" => None,
        _ => Some(format!("--{k}={v}")),
    });
    rest.splice(at + 1..at + 1, flags);
    Ok(rest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let c = parse_config("# run\nbeta = 0.7\n\nseed=3 # trailing\nhorizon_=1\n").unwrap();
        assert_eq!(
            c,
            vec![
                ("beta".into(), "0.7".into()),
                ("seed".into(), "3".into()),
                ("horizon-".into(), "1".into())
            ]
        );
        assert!(parse_config("beta 0.7").is_err());
        assert!(parse_config("=1").is_err());
    }

    #[test]
    fn entries_precede_explicit_flags() {
        let dir = tempfile::tempdir().unwrap();
        let f = dir.path().join("run.conf");
        std::fs::write(&f, "beta=0.6\nseed=1\n").unwrap();
        let args = vec![
            "sbm".to_string(),
            "simulate".into(),
            "--config".into(),
            f.display().to_string(),
            "--beta".into(),
            "0.7".into(),
        ];
        let out = expand_args(args).unwrap();
        assert_eq!(
            out,
            vec!["sbm", "simulate", "--beta=0.6", "--seed=1", "--beta", "0.7"]
        );
    }
}
