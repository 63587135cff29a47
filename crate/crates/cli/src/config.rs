//! Flat TOML config files whose keys mirror the long flags of a subcommand.
//!
//! The file is turned into `--key value` tokens placed right after the
//! subcommand name, so anything given on the command line comes later and
//! wins.

use std::path::Path;

use toml::Value;

/// Pulls `--config PATH` (or `--config=PATH`) out of `args`.
pub fn take_config_flag(args: &mut Vec<String>) -> Result<Option<String>, String> {
    let mut found = None;
    let mut i = 1;
    while i < args.len() {
        if args[i] == "--" {
            break;
        }
        if args[i] == "--config" {
            if i + 1 >= args.len() {
                return Err("--config needs a path".into());
            }
            found = Some(args.remove(i + 1));
            args.remove(i);
            continue;
        }
        if let Some(path) = args[i].strip_prefix("--config=") {
            found = Some(path.to_string());
            args.remove(i);
            continue;
        }
        i += 1;
    }
    Ok(found)
}

fn scalar(key: &str, v: &Value) -> Result<String, String> {
    match v {
        Value::String(s) => Ok(s.clone()),
        Value::Integer(n) => Ok(n.to_string()),
        Value::Float(x) => Ok(x.to_string()),
        other => Err(format!("config key `{key}`: unsupported value {other}")),
    }
}

/// Flag tokens for a parsed config document. Arrays become comma lists,
/// `true` becomes a bare switch and `false` is dropped.
pub fn config_tokens(text: &str) -> Result<Vec<String>, String> {
    let table: toml::Table = text.parse().map_err(|e| format!("config: {e}"))?;
    let mut out = Vec::new();
    for (key, value) in &table {
        let flag = format!("--{}", key.replace('_', "-"));
        match value {
            Value::Boolean(true) => out.push(flag),
            Value::Boolean(false) => {}
            Value::Array(items) => {
                let parts: Result<Vec<String>, String> = items.iter().map(|v| scalar(key, v)).collect();
                out.push(flag);
                out.push(parts?.join(","));
            }
            Value::Table(_) => return Err(format!("config key `{key}`: nested tables are not supported")),
            v => {
                out.push(flag);
                out.push(scalar(key, v)?);
            }
        }
    }
    Ok(out)
}

pub fn load_tokens(path: &Path) -> Result<Vec<String>, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    config_tokens(&text)
}

/// Inserts `tokens` after the first argument naming a subcommand.
pub fn splice(args: &mut Vec<String>, subcommands: &[String], tokens: Vec<String>) -> Result<(), String> {
    let pos = args
        .iter()
        .skip(1)
        .position(|a| subcommands.iter().any(|s| s == a))
        .ok_or("a config file needs a subcommand")?;
    let at = pos + 2;
    args.splice(at..at, tokens);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokens_from_flat_table() {
        let t = config_tokens("case = \"mixed\"\nlambda = 0.72\nrect = [0.2, 0.99, 0.2, 0.99]\nverify = false\n").unwrap();
        assert_eq!(t, ["--case", "mixed", "--lambda", "0.72", "--rect", "0.2,0.99,0.2,0.99"]);
    }

    #[test]
    fn config_flag_removed() {
        let mut a: Vec<String> = ["twomap", "scan", "--config=x.toml", "--resolution", "4"].map(String::from).to_vec();
        assert_eq!(take_config_flag(&mut a).unwrap().as_deref(), Some("x.toml"));
        assert_eq!(a, ["twomap", "scan", "--resolution", "4"]);
    }

    #[test]
    fn splice_after_subcommand() {
        let mut a: Vec<String> = ["twomap", "--threads", "2", "scan", "--resolution", "8"].map(String::from).to_vec();
        splice(&mut a, &["scan".to_string()], vec!["--resolution".into(), "4".into()]).unwrap();
        assert_eq!(a, ["twomap", "--threads", "2", "scan", "--resolution", "4", "--resolution", "8"]);
    }
}
