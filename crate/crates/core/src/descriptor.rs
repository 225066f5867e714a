//! Parser for the `kind:key=value,key=value` descriptor grammar shared by
//! families, wall structures and tiling windows.

use std::collections::BTreeMap;

use crate::error::{descriptor_error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor {
    pub kind: String,
    pub params: BTreeMap<String, String>,
    raw: String,
}

impl Descriptor {
    pub fn parse(input: &str) -> Result<Self> {
        let raw = input.trim();
        let (kind, rest) = match raw.split_once(':') {
            Some((k, r)) => (k.trim(), Some(r)),
            None => (raw, None),
        };
        if kind.is_empty() {
            return Err(descriptor_error(input, "missing kind"));
        }
        let mut params = BTreeMap::new();
        if let Some(rest) = rest {
            for part in rest.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                let (key, value) = part
                    .split_once('=')
                    .ok_or_else(|| descriptor_error(input, format!("expected key=value, got `{part}`")))?;
                if params.insert(key.trim().to_string(), value.trim().to_string()).is_some() {
                    return Err(descriptor_error(input, format!("duplicate key `{}`", key.trim())));
                }
            }
        }
        Ok(Self {
            kind: kind.to_ascii_lowercase(),
            params,
            raw: raw.to_string(),
        })
    }

    pub fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.params.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| descriptor_error(&self.raw, format!("cannot parse value of `{key}`"))),
        }
    }

    pub fn require<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.get(key)?
            .ok_or_else(|| descriptor_error(&self.raw, format!("missing `{key}`")))
    }

    /// Rejects keys outside `allowed`.
    pub fn only(&self, allowed: &[&str]) -> Result<()> {
        match self.params.keys().find(|k| !allowed.contains(&k.as_str())) {
            Some(k) => Err(descriptor_error(&self.raw, format!("unknown key `{k}`"))),
            None => Ok(()),
        }
    }

    pub fn raw(&self) -> &str {
        &self.raw
    }
}
