// SPDX-License-Identifier: MIT OR Apache-2.0

//! TOML run configs. One optional top-level `out` key plus one table per
//! subcommand whose keys mirror that subcommand's long flags (with `_`
//! for `-`). Flags given on the command line win over the file.

use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;

use crate::error::{config_err, CliError, CliResult};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "CHRONOSTEER_OUT";
pub const DEFAULT_OUT: &str = "chronosteer-out";

const SECTIONS: [&str; 7] = [
    "toygen",
    "extract",
    "manifold",
    "steer",
    "disentangle",
    "align",
    "eval",
];

#[derive(Debug, Default)]
pub struct ConfigFile {
    pub out: Option<PathBuf>,
    sections: toml::Table,
}

impl ConfigFile {
    pub fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Config(msg) => config_err(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| config_err(e.to_string()))?;
        let out = match table.remove("out") {
            None => None,
            Some(toml::Value::String(s)) => Some(PathBuf::from(s)),
            Some(other) => return Err(config_err(format!("`out` must be a string, got {other}"))),
        };
        for (key, value) in &table {
            if !SECTIONS.contains(&key.as_str()) {
                return Err(config_err(format!("unknown key `{key}`")));
            }
            if !value.is_table() {
                return Err(config_err(format!("`{key}` must be a table")));
            }
        }
        Ok(Self {
            out,
            sections: table,
        })
    }

    /// Merge the `[section]` table with command-line flags. Flags that were
    /// not given serialize as null and leave the file value in place.
    pub fn resolve<T: Serialize + DeserializeOwned>(
        &self,
        section: &str,
        flags: &T,
    ) -> CliResult<T> {
        let mut merged = match self.sections.get(section) {
            Some(t) => serde_json::to_value(t)?,
            None => Value::Object(Default::default()),
        };
        let Value::Object(base) = &mut merged else {
            unreachable!("sections are tables");
        };
        if let Value::Object(given) = serde_json::to_value(flags)? {
            for (k, v) in given {
                if !v.is_null() {
                    base.insert(k, v);
                }
            }
        }
        serde_json::from_value(merged).map_err(|e| config_err(format!("[{section}]: {e}")))
    }

    /// Output directory: flag, then the file's `out`, then `$CHRONOSTEER_OUT`.
    pub fn out_dir(&self, flag: Option<&Path>) -> PathBuf {
        flag.map(Path::to_path_buf)
            .or_else(|| self.out.clone())
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from(DEFAULT_OUT))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Default, PartialEq, Serialize, Deserialize)]
    #[serde(default, deny_unknown_fields)]
    struct Demo {
        lambda: Option<f64>,
        k: Option<usize>,
        layers: Option<Vec<usize>>,
    }

    #[test]
    fn flags_win_over_file() {
        let cfg = ConfigFile::parse("out = \"runs/a\"\n[steer]\nlambda = 0.2\nk = 2\n").unwrap();
        let flags = Demo {
            lambda: Some(0.1),
            layers: Some(vec![1, 2]),
            ..Demo::default()
        };
        let got: Demo = cfg.resolve("steer", &flags).unwrap();
        assert_eq!(
            got,
            Demo {
                lambda: Some(0.1),
                k: Some(2),
                layers: Some(vec![1, 2])
            }
        );
        assert_eq!(cfg.out_dir(None), PathBuf::from("runs/a"));
        assert_eq!(cfg.out_dir(Some(Path::new("x"))), PathBuf::from("x"));
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(matches!(
            ConfigFile::parse("bogus = 1"),
            Err(CliError::Config(_))
        ));
        assert!(matches!(
            ConfigFile::parse("[nope]\na = 1"),
            Err(CliError::Config(_))
        ));
        let cfg = ConfigFile::parse("[steer]\nlamda = 0.1").unwrap();
        assert!(matches!(
            cfg.resolve::<Demo>("steer", &Demo::default()),
            Err(CliError::Config(_))
        ));
    }
}
