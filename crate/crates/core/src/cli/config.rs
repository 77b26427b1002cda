use std::ffi::OsString;
use std::path::Path;

use crate::error::{Error, Result};

/// `key=value` lines mirroring command-line flags. Blank lines and lines
/// starting with `#` are ignored; keys may use `-` or `_`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RunConfig {
    pub entries: Vec<(String, String)>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::invalid(format!("config line {}: expected key=value", lineno + 1))
            })?;
            let key = key.trim().replace('_', "-");
            if key.is_empty() {
                return Err(Error::invalid(format!("config line {}: empty key", lineno + 1)));
            }
            entries.push((key, value.trim().to_string()));
        }
        Ok(RunConfig { entries })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
    }

    /// Checks every key against the allowed flag names and renders the
    /// entries as `--key value` arguments.
    pub fn to_args(&self, allowed: &[String]) -> Result<Vec<OsString>> {
        let mut out = Vec::with_capacity(2 * self.entries.len());
        for (key, value) in &self.entries {
            if key == "config" || !allowed.iter().any(|a| a == key) {
                return Err(Error::invalid(format!("unknown config key {key:?}")));
            }
            out.push(OsString::from(format!("--{key}")));
            out.push(OsString::from(value));
        }
        Ok(out)
    }
}
