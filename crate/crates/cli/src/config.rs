use std::path::Path;

use crate::CliError;

/// Expands `--config FILE` into flags placed right after the subcommand, so flags given on the command line win.
pub fn inject(argv: Vec<String>) -> Result<Vec<String>, CliError> {
    let mut rest = Vec::with_capacity(argv.len());
    let mut path = None;
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            let p = it.next().ok_or_else(|| CliError::Validation("--config needs a file".into()))?;
            path = Some(p);
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let flags = read_flags(Path::new(&path))?;
    if rest.len() < 2 {
        return Err(CliError::Validation("--config given without a subcommand".into()));
    }
    let mut out = rest[..2].to_vec();
    out.extend(flags);
    out.extend_from_slice(&rest[2..]);
    Ok(out)
}

fn read_flags(path: &Path) -> Result<Vec<String>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    parse_flags(&text)
}

/// `key = value` lines; blank lines and `#` comments are skipped.
pub fn parse_flags(text: &str) -> Result<Vec<String>, CliError> {
    let mut flags = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("config line {}: expected key=value, got {line:?}", n + 1)))?;
        let k = k.trim().replace('_', "-");
        if k.is_empty() {
            return Err(CliError::Validation(format!("config line {}: empty key", n + 1)));
        }
        flags.push(format!("--{k}"));
        flags.push(v.trim().to_string());
    }
    Ok(flags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_from_lines() {
        let f = parse_flags("# run\nl = 1\n\ngamma=-0.25\nbase_cells = 16\n").unwrap();
        assert_eq!(f, ["--l", "1", "--gamma", "-0.25", "--base-cells", "16"]);
        assert!(parse_flags("oops").is_err());
    }
}
