//! `key = value` config files that mirror long flags.
//!
//! Entries are turned into `--key=value` tokens placed before the command
//! line arguments, so explicit flags win. Keys are checked against the
//! subcommand's flags before anything else runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{ArgAction, ArgMatches, Command};

use crate::Failure;

/// Where one config value came from, for diagnostics.
#[derive(Debug, Clone)]
pub struct Origin {
    pub line: usize,
    /// 1-based column of the first character of the value.
    pub column: usize,
}

#[derive(Debug, Default)]
pub struct ConfigFile {
    pub path: Option<PathBuf>,
    pub entries: Vec<(String, String, Origin)>,
}

impl ConfigFile {
    pub fn load(path: &Path, command: &Command) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text, Some(path.to_path_buf()), command)
    }

    pub fn parse(text: &str, path: Option<PathBuf>, command: &Command) -> Result<Self, Failure> {
        let known = config_keys(command);
        let name = path.as_ref().map_or_else(|| "<config>".to_string(), |p| p.display().to_string());
        let mut entries = Vec::new();
        for (index, raw) in text.lines().enumerate() {
            let line = index + 1;
            let trimmed = raw.trim_start();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let indent = raw.len() - trimmed.len();
            let Some(eq) = raw.find('=') else {
                return Err(Failure::Config(format!("{name}:{line}:{}: expected `key = value`", indent + 1)));
            };
            let key = raw[..eq].trim();
            if !known.contains_key(key) {
                return Err(Failure::Config(format!("{name}:{line}:{}: unknown key `{key}`", indent + 1)));
            }
            let after = &raw[eq + 1..];
            let value = after.trim();
            let column = eq + 2 + (after.len() - after.trim_start().len());
            entries.push((key.to_string(), value.to_string(), Origin { line, column }));
        }
        Ok(Self { path, entries })
    }

    /// Flag tokens for clap, in file order.
    pub fn tokens(&self, command: &Command) -> Result<Vec<String>, Failure> {
        let known = config_keys(command);
        let mut out = Vec::new();
        for (key, value, origin) in &self.entries {
            if known[key.as_str()] {
                match value.as_str() {
                    "true" => out.push(format!("--{key}")),
                    "false" => {}
                    other => {
                        return Err(self.error_at(origin, 0, &format!("`{key}` expects true or false, got `{other}`")));
                    }
                }
            } else {
                out.push(format!("--{key}={value}"));
            }
        }
        Ok(out)
    }

    pub fn origin(&self, key: &str) -> Option<&Origin> {
        self.entries.iter().rev().find(|(k, _, _)| k == key).map(|(_, _, o)| o)
    }

    /// Diagnostic pointing `offset` characters into the value at `origin`.
    pub fn error_at(&self, origin: &Origin, offset: usize, message: &str) -> Failure {
        let name = self.path.as_ref().map_or_else(|| "<config>".to_string(), |p| p.display().to_string());
        Failure::Config(format!("{name}:{}:{}: {message}", origin.line, origin.column + offset))
    }
}

/// Long flags a config file may set, mapped to whether they are switches.
fn config_keys(command: &Command) -> BTreeMap<&str, bool> {
    command
        .get_arguments()
        .filter_map(|a| a.get_long().map(|long| (long, matches!(a.get_action(), ArgAction::SetTrue))))
        .filter(|(long, _)| !matches!(*long, "config" | "help" | "version"))
        .collect()
}

/// Every resolved flag value as config lines, defaults included. `out` is
/// left out so a config can be replayed into another directory.
pub fn resolved(command: &Command, matches: &ArgMatches) -> String {
    let mut text = String::new();
    for arg in command.get_arguments() {
        let Some(long) = arg.get_long() else { continue };
        if matches!(long, "config" | "help" | "version" | "out") {
            continue;
        }
        let id = arg.get_id().as_str();
        if matches!(arg.get_action(), ArgAction::SetTrue) {
            text.push_str(&format!("{long} = {}\n", matches.get_flag(id)));
            continue;
        }
        if let Some(values) = matches.get_raw(id) {
            for value in values {
                text.push_str(&format!("{long} = {}\n", value.to_string_lossy()));
            }
        }
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::Arg;

    fn command() -> Command {
        Command::new("t")
            .arg(Arg::new("template").long("template"))
            .arg(Arg::new("fast").long("fast").action(ArgAction::SetTrue))
            .arg(Arg::new("config").long("config"))
    }

    #[test]
    fn parses_entries_and_columns() {
        let cfg = ConfigFile::parse("# comment\ntemplate =  D=2:0|1\n\nfast = true\n", None, &command()).unwrap();
        assert_eq!(cfg.entries.len(), 2);
        let origin = cfg.origin("template").unwrap();
        assert_eq!((origin.line, origin.column), (2, 13));
        assert_eq!(cfg.tokens(&command()).unwrap(), vec!["--template=D=2:0|1", "--fast"]);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_lines() {
        let err = ConfigFile::parse("template = x\n  colour = red\n", None, &command()).unwrap_err();
        assert_eq!(err.to_string(), "<config>:2:3: unknown key `colour`");
        let err = ConfigFile::parse("template\n", None, &command()).unwrap_err();
        assert_eq!(err.to_string(), "<config>:1:1: expected `key = value`");
        assert!(ConfigFile::parse("config = other.cfg\n", None, &command()).is_err());
        let bad_switch = ConfigFile::parse("fast = yes\n", None, &command()).unwrap();
        assert_eq!(
            bad_switch.tokens(&command()).unwrap_err().to_string(),
            "<config>:1:8: `fast` expects true or false, got `yes`"
        );
    }
}
