//! Run configuration files: one `key = value` per line mirroring the
//! command-line flags, `#` comments, repeated keys for repeated flags.
//!
//! ```text
//! command = orbit
//! named = fibonacci_lucas
//! nmax = 300
//! tables = fib.txt
//! tables = luc.txt
//! ```

use anyhow::{bail, Context, Result};

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunConfig {
    pub command: String,
    /// Flag name without dashes and its value; `true` marks a bare switch.
    pub params: Vec<(String, String)>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut command = None;
        let mut params = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .with_context(|| format!("line {}: expected `key = value`", i + 1))?;
            let (k, v) = (k.trim(), v.trim());
            if k.is_empty() || k.contains(char::is_whitespace) {
                bail!("line {}: bad key `{k}`", i + 1);
            }
            if k == "command" {
                if command.replace(v.to_string()).is_some() {
                    bail!("line {}: command given twice", i + 1);
                }
            } else {
                params.push((k.to_string(), v.to_string()));
            }
        }
        let command = command.context("configuration has no `command` line")?;
        Ok(RunConfig { command, params })
    }

    pub fn render(&self) -> String {
        let mut s = format!("command = {}\n", self.command);
        for (k, v) in &self.params {
            s.push_str(&format!("{k} = {v}\n"));
        }
        s
    }

    /// Argument vector for the parser, program name first. The figure id
    /// travels as `id`.
    pub fn to_argv(&self) -> Vec<String> {
        let mut argv = vec!["toral".to_string(), self.command.clone()];
        for (k, v) in &self.params {
            argv.push(format!("--{k}"));
            if v != "true" {
                argv.push(v.clone());
            }
        }
        argv
    }

    /// Inverse of [`RunConfig::to_argv`] for argument lists written as
    /// `command [id] --key value ... --switch`.
    pub fn from_argv(args: &[String]) -> Result<Self> {
        let mut it = args.iter().peekable();
        let command = it.next().context("missing subcommand")?.clone();
        let mut params = Vec::new();
        while let Some(a) = it.next() {
            if let Some(key) = a.strip_prefix("--") {
                let value = match it.peek() {
                    Some(v) if !v.starts_with("--") => it.next().cloned().unwrap_or_default(),
                    _ => "true".to_string(),
                };
                params.push((key.to_string(), value));
            } else {
                params.push(("id".to_string(), a.clone()));
            }
        }
        Ok(RunConfig { command, params })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = "# example\ncommand = orbit\nnamed = fibonacci_lucas\nnmax = 300\ntables = a.txt\ntables = b.txt\nallow-non-hyperbolic = true\n";
        let c = RunConfig::parse(text).unwrap();
        assert_eq!(c.params.len(), 5);
        assert_eq!(RunConfig::parse(&c.render()).unwrap(), c);
        let argv = c.to_argv();
        assert_eq!(argv.last().unwrap(), "--allow-non-hyperbolic");
        assert_eq!(RunConfig::from_argv(&argv[1..]).unwrap(), c);
    }

    #[test]
    fn negative_values_and_positionals() {
        let args: Vec<String> = ["figure", "4", "--nmax", "50"].iter().map(|s| s.to_string()).collect();
        let c = RunConfig::from_argv(&args).unwrap();
        assert_eq!(c.params[0], ("id".to_string(), "4".to_string()));
        let args: Vec<String> = ["forms", "--t", "-4"].iter().map(|s| s.to_string()).collect();
        let c = RunConfig::from_argv(&args).unwrap();
        assert_eq!(c.params[0].1, "-4");
    }

    #[test]
    fn rejects_bad_files() {
        assert!(RunConfig::parse("nmax = 3\n").is_err());
        assert!(RunConfig::parse("command = beta\ncommand = nu\n").is_err());
        assert!(RunConfig::parse("command = beta\njunk\n").is_err());
        assert!(RunConfig::parse("command = beta\nbad key = 1\n").is_err());
    }
}
