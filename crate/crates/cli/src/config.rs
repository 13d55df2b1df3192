//! Flat key-value configuration files with `[section]` headers.
//!
//! The format is deliberately dumb: one `key = value` per line, `#` comments,
//! no nesting, unknown sections or keys are hard errors. Command-line flags
//! override file values.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

/// Known sections and the keys each accepts.
const SCHEMA: &[(&str, &[&str])] = &[
    (
        "run",
        &["preset", "mass_kg", "nucleons", "seed", "out", "format"],
    ),
    (
        "single",
        &["sigma0_m", "sigma0_list_m", "horizon", "samples", "dt"],
    ),
    (
        "double",
        &["x0", "k0", "gamma0", "dt", "horizon", "n_paths", "b"],
    ),
    (
        "grid",
        &[
            "scenario", "n", "length", "dt", "horizon", "snapshots", "x0", "k0", "a0_re",
            "a0_im", "record_every",
        ],
    ),
    ("master", &["t", "a0_re", "a0_im", "x0", "k0", "n", "length"]),
    (
        "hitting",
        &["b", "b0", "eta", "dt_s", "s_max", "n_paths", "post_window"],
    ),
    (
        "ensemble",
        &[
            "scenario", "n_paths", "dt", "steps", "record_every", "n", "length", "x0",
        ],
    ),
    ("verify", &["suite", "n_paths"]),
];

/// Parsed configuration: `(section, key) -> value` strings.
#[derive(Debug, Default, Clone)]
pub struct Config {
    values: BTreeMap<(String, String), String>,
}

impl Config {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut section = String::new();
        let mut values = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
                let name = name.trim();
                if !SCHEMA.iter().any(|(s, _)| *s == name) {
                    return Err(ConfigError(format!(
                        "line {}: unknown section [{}]",
                        lineno + 1,
                        name
                    )));
                }
                section = name.to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError(format!(
                    "line {}: expected `key = value`, got `{raw}`",
                    lineno + 1
                )));
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if section.is_empty() {
                return Err(ConfigError(format!(
                    "line {}: key `{key}` before any [section]",
                    lineno + 1
                )));
            }
            let allowed = SCHEMA
                .iter()
                .find(|(s, _)| *s == section)
                .map(|(_, keys)| keys.contains(&key.as_str()))
                .unwrap_or(false);
            if !allowed {
                return Err(ConfigError(format!(
                    "line {}: unknown key `{key}` in section [{section}]",
                    lineno + 1
                )));
            }
            if values.insert((section.clone(), key.clone()), value).is_some() {
                return Err(ConfigError(format!(
                    "line {}: duplicate key `{key}` in section [{section}]",
                    lineno + 1
                )));
            }
        }
        Ok(Config { values })
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.values
            .get(&(section.to_string(), key.to_string()))
            .map(|s| s.as_str())
    }

    pub fn get_f64(&self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(section, key)
            .map(|v| {
                v.parse::<f64>().map_err(|_| {
                    ConfigError(format!("[{section}] {key} = `{v}` is not a number"))
                })
            })
            .transpose()
    }

    pub fn get_usize(&self, section: &str, key: &str) -> Result<Option<usize>, ConfigError> {
        self.get(section, key)
            .map(|v| {
                v.parse::<usize>().map_err(|_| {
                    ConfigError(format!("[{section}] {key} = `{v}` is not a count"))
                })
            })
            .transpose()
    }

    pub fn get_u64(&self, section: &str, key: &str) -> Result<Option<u64>, ConfigError> {
        self.get(section, key)
            .map(|v| {
                v.parse::<u64>()
                    .map_err(|_| ConfigError(format!("[{section}] {key} = `{v}` is not an integer")))
            })
            .transpose()
    }

    /// Comma-separated float list.
    pub fn get_f64_list(&self, section: &str, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        self.get(section, key)
            .map(|v| {
                v.split(',')
                    .map(|item| {
                        item.trim().parse::<f64>().map_err(|_| {
                            ConfigError(format!(
                                "[{section}] {key}: `{item}` is not a number"
                            ))
                        })
                    })
                    .collect()
            })
            .transpose()
    }
}
