//! `key = value` config files.
//!
//! Each line becomes `--key=value` and is spliced in right after the
//! subcommand, ahead of the real flags, so anything on the command line
//! wins. Keys the subcommand does not know are rejected by the parser.

use std::ffi::OsString;
use std::path::Path;

use crate::{CliError, CliResult};

/// Flags encoded by a config file's text.
pub fn parse(text: &str) -> CliResult<Vec<OsString>> {
    let mut flags = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let bad = |why: &str| CliError::Usage(format!("config line {}: {why}: `{raw}`", n + 1));
        let (key, value) = line.split_once('=').ok_or_else(|| bad("expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
            return Err(bad("malformed key"));
        }
        if key == "config" {
            return Err(bad("config files cannot include other config files"));
        }
        match value {
            "true" => flags.push(format!("--{key}").into()),
            "false" => {}
            _ => flags.push(format!("--{key}={value}").into()),
        }
    }
    Ok(flags)
}

fn config_path(argv: &[OsString]) -> CliResult<Option<OsString>> {
    let mut it = argv.iter();
    while let Some(arg) = it.next() {
        let s = arg.to_string_lossy();
        if s == "--config" {
            return it
                .next()
                .cloned()
                .map(Some)
                .ok_or_else(|| CliError::Usage("--config needs a path".into()));
        }
        if let Some(path) = s.strip_prefix("--config=") {
            return Ok(Some(path.into()));
        }
    }
    Ok(None)
}

/// `argv` with the config file's flags inserted after the subcommand.
pub fn expand(argv: Vec<OsString>) -> CliResult<Vec<OsString>> {
    let Some(path) = config_path(&argv)? else { return Ok(argv) };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", Path::new(&path).display())))?;
    let flags = parse(&text)?;
    let Some(sub) = argv.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')) else {
        return Ok(argv);
    };
    let at = sub + 2;
    let mut out = argv[..at].to_vec();
    out.extend(flags);
    out.extend_from_slice(&argv[at..]);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn strs(v: &[OsString]) -> Vec<String> {
        v.iter().map(|s| s.to_string_lossy().into_owned()).collect()
    }

    #[test]
    fn lines_and_comments() {
        let f = parse("# header\na = 1\n b=-0.5  # trailing\n\nquick = true\nverbose = false\n").unwrap();
        assert_eq!(strs(&f), ["--a=1", "--b=-0.5", "--quick"]);
        assert!(parse("nonsense\n").is_err());
        assert!(parse("= 3\n").is_err());
        assert!(parse("config = x\n").is_err());
    }

    #[test]
    fn spliced_after_subcommand() {
        let dir = std::env::temp_dir().join(format!("tailwedge-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("run.conf");
        std::fs::write(&path, "model = gamma\nk = 2\n").unwrap();
        let argv: Vec<OsString> =
            ["tailwedge", "mgf", "--config", path.to_str().unwrap(), "--k", "3"].map(Into::into).to_vec();
        let out = strs(&expand(argv).unwrap());
        assert_eq!(out[..4], ["tailwedge", "mgf", "--model=gamma", "--k=2"]);
        assert_eq!(out.last().unwrap(), "3");
        std::fs::remove_dir_all(&dir).unwrap();
    }
}
