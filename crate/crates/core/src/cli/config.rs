//! `key = value` configuration with `[section]` headers; later sources override earlier ones.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::path::Path;

/// Flattened parameters: keys inside `[section]` become `section.key`; `[run]` maps to bare keys.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Params {
    values: BTreeMap<String, String>,
}

impl Params {
    pub fn parse(text: &str) -> Result<Self> {
        let mut values = BTreeMap::new();
        let mut section = String::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| Error::Parse(format!("line {}: unterminated section header", i + 1)))?
                    .trim();
                section = if name == "run" { String::new() } else { name.to_string() };
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected key = value", i + 1)))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(Error::Parse(format!("line {}: empty key", i + 1)));
            }
            let key = if section.is_empty() { k.to_string() } else { format!("{section}.{k}") };
            values.insert(key, v.trim().to_string());
        }
        Ok(Params { values })
    }

    /// Reads a config file, or the `inputs` object of a manifest when the file is JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        if path.extension().is_some_and(|e| e == "json") {
            let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
            let inputs = v
                .get("inputs")
                .and_then(|i| i.as_object())
                .ok_or_else(|| Error::Parse(format!("{}: manifest has no inputs object", path.display())))?;
            let mut values = BTreeMap::new();
            for (k, val) in inputs {
                let s = val.as_str().ok_or_else(|| Error::Parse(format!("manifest input {k} is not a string")))?;
                values.insert(k.clone(), s.to_string());
            }
            return Ok(Params { values });
        }
        Self::parse(&text)
    }

    /// Applies `key=value` overrides.
    pub fn apply_overrides(&mut self, sets: &[String]) -> Result<()> {
        for s in sets {
            let (k, v) = s.split_once('=').ok_or_else(|| Error::ConfigError(format!("override '{s}' is not key=value")))?;
            self.values.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(())
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(key.to_string(), value.into());
    }

    /// Fills defaults and rejects keys outside the schema.
    pub fn resolve(&mut self, schema: &[(&str, &str)]) -> Result<()> {
        for k in self.values.keys() {
            if !schema.iter().any(|(s, _)| s == k) {
                return Err(Error::ConfigError(format!("unknown key '{k}'")));
            }
        }
        for (k, d) in schema {
            self.values.entry(k.to_string()).or_insert_with(|| d.to_string());
        }
        Ok(())
    }

    pub fn entries(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn str(&self, key: &str) -> Result<&str> {
        self.values.get(key).map(String::as_str).ok_or_else(|| Error::ConfigError(format!("missing key '{key}'")))
    }

    pub fn f64(&self, key: &str) -> Result<f64> {
        let s = self.str(key)?;
        s.parse::<f64>().map_err(|_| Error::ConfigError(format!("{key} = '{s}' is not a number")))
    }

    pub fn usize(&self, key: &str) -> Result<usize> {
        let s = self.str(key)?;
        s.parse::<usize>().map_err(|_| Error::ConfigError(format!("{key} = '{s}' is not a nonnegative integer")))
    }

    pub fn bool(&self, key: &str) -> Result<bool> {
        match self.str(key)? {
            "true" | "yes" | "1" => Ok(true),
            "false" | "no" | "0" => Ok(false),
            s => Err(Error::ConfigError(format!("{key} = '{s}' is not a boolean"))),
        }
    }

    /// Comma-separated numbers.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>> {
        let s = self.str(key)?;
        if s.is_empty() {
            return Ok(Vec::new());
        }
        s.split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|_| Error::ConfigError(format!("{key}: '{p}' is not a number"))))
            .collect()
    }

    /// Value that may be `auto`.
    pub fn opt_f64(&self, key: &str) -> Result<Option<f64>> {
        if self.str(key)? == "auto" {
            Ok(None)
        } else {
            self.f64(key).map(Some)
        }
    }

    /// Canonical text form; parses back to the same parameters.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut current: Option<&str> = None;
        let mut bare: Vec<(&String, &String)> = Vec::new();
        let mut grouped: Vec<(&str, &str, &String)> = Vec::new();
        for (k, v) in &self.values {
            match k.split_once('.') {
                Some((s, rest)) => grouped.push((s, rest, v)),
                None => bare.push((k, v)),
            }
        }
        if !bare.is_empty() {
            out.push_str("[run]\n");
            for (k, v) in bare {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        for (s, k, v) in grouped {
            if current != Some(s) {
                out.push_str(&format!("\n[{s}]\n"));
                current = Some(s);
            }
            out.push_str(&format!("{k} = {v}\n"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_and_comments() {
        let p = Params::parse("# header\nmodel = ch\n[flow]\nrtol = 1e-9 # tight\n[run]\nt = 0.5\n").unwrap();
        assert_eq!(p.str("model").unwrap(), "ch");
        assert_eq!(p.f64("flow.rtol").unwrap(), 1e-9);
        assert_eq!(p.f64("t").unwrap(), 0.5);
    }

    #[test]
    fn overrides_and_schema() {
        let mut p = Params::parse("t = 1").unwrap();
        p.apply_overrides(&["t=2".into()]).unwrap();
        p.resolve(&[("t", "1"), ("k", "32")]).unwrap();
        assert_eq!(p.f64("t").unwrap(), 2.0);
        assert_eq!(p.usize("k").unwrap(), 32);
        let mut bad = Params::parse("bogus = 1").unwrap();
        assert!(matches!(bad.resolve(&[("t", "1")]), Err(Error::ConfigError(_))));
    }

    #[test]
    fn text_round_trip() {
        let p = Params::parse("a = 1\n[flow]\nrtol = 1e-9\natol = 1e-12\n").unwrap();
        assert_eq!(Params::parse(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn malformed_lines() {
        assert!(Params::parse("[flow\n").is_err());
        assert!(Params::parse("novalue\n").is_err());
    }
}
