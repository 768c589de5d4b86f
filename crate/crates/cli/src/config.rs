//! Layered key-value configuration: preset defaults, then the config file,
//! then `--set` overrides. Keys are `section.name`.

use std::path::Path;

use toml::{Table, Value};

use crate::CliError;

#[derive(Debug, Clone, Default)]
pub struct Config {
    table: Table,
}

fn parse_value(raw: &str) -> Value {
    match toml::from_str::<Table>(&format!("v = {raw}")) {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| Value::String(raw.to_string())),
        Err(_) => Value::String(raw.to_string()),
    }
}

fn merge(into: &mut Table, from: Table) {
    for (k, v) in from {
        match (into.get_mut(&k), v) {
            (Some(Value::Table(a)), Value::Table(b)) => merge(a, b),
            (_, v) => {
                into.insert(k, v);
            }
        }
    }
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let table: Table = toml::from_str(text).map_err(|e| CliError::Config(format!("config parse error: {e}")))?;
        Ok(Config { table })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    /// Keys in `other` replace keys here.
    pub fn overlay(&mut self, other: Config) {
        merge(&mut self.table, other.table);
    }

    /// Applies one `section.key=value` assignment. The value is read as a
    /// TOML literal when possible and as a bare string otherwise.
    pub fn set(&mut self, assignment: &str) -> Result<(), CliError> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects key=value, got `{assignment}`")))?;
        let parts: Vec<&str> = key.trim().split('.').collect();
        if parts.iter().any(|p| p.is_empty()) {
            return Err(CliError::Config(format!("malformed key `{key}`")));
        }
        let mut node = &mut self.table;
        for p in &parts[..parts.len() - 1] {
            let entry = node.entry(p.to_string()).or_insert_with(|| Value::Table(Table::new()));
            node = match entry {
                Value::Table(t) => t,
                _ => return Err(CliError::Config(format!("`{p}` in `{key}` is not a section"))),
            };
        }
        node.insert(parts[parts.len() - 1].to_string(), parse_value(raw.trim()));
        Ok(())
    }

    pub fn table(&self) -> &Table {
        &self.table
    }

    fn lookup(&self, key: &str) -> Option<&Value> {
        let mut parts = key.split('.');
        let mut v = self.table.get(parts.next()?)?;
        for p in parts {
            v = v.as_table()?.get(p)?;
        }
        Some(v)
    }

    fn missing(key: &str) -> CliError {
        CliError::Config(format!("missing config key `{key}`"))
    }

    fn bad(key: &str, want: &str, v: &Value) -> CliError {
        CliError::Config(format!("config key `{key}` must be {want}, got `{v}`"))
    }

    fn as_f64(key: &str, v: &Value) -> Result<f64, CliError> {
        match v {
            Value::Float(x) => Ok(*x),
            Value::Integer(i) => Ok(*i as f64),
            _ => Err(Self::bad(key, "a number", v)),
        }
    }

    pub fn f64(&self, key: &str) -> Result<f64, CliError> {
        let v = self.lookup(key).ok_or_else(|| Self::missing(key))?;
        Self::as_f64(key, v)
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64, CliError> {
        self.lookup(key).map_or(Ok(default), |v| Self::as_f64(key, v))
    }

    pub fn usize(&self, key: &str) -> Result<usize, CliError> {
        let v = self.lookup(key).ok_or_else(|| Self::missing(key))?;
        match v {
            Value::Integer(i) if *i >= 0 => Ok(*i as usize),
            _ => Err(Self::bad(key, "a non-negative integer", v)),
        }
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize, CliError> {
        if self.lookup(key).is_some() {
            self.usize(key)
        } else {
            Ok(default)
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool, CliError> {
        match self.lookup(key) {
            None => Ok(default),
            Some(Value::Boolean(b)) => Ok(*b),
            Some(v) => Err(Self::bad(key, "true or false", v)),
        }
    }

    pub fn str_or<'a>(&'a self, key: &str, default: &'a str) -> Result<&'a str, CliError> {
        match self.lookup(key) {
            None => Ok(default),
            Some(Value::String(s)) => Ok(s),
            Some(v) => Err(Self::bad(key, "a string", v)),
        }
    }

    pub fn opt_str(&self, key: &str) -> Result<Option<&str>, CliError> {
        match self.lookup(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(v) => Err(Self::bad(key, "a string", v)),
        }
    }

    /// A number or an array of numbers.
    pub fn f64_list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        let v = self.lookup(key).ok_or_else(|| Self::missing(key))?;
        match v {
            Value::Array(items) => items.iter().map(|x| Self::as_f64(key, x)).collect(),
            other => Ok(vec![Self::as_f64(key, other)?]),
        }
    }

    pub fn has(&self, key: &str) -> bool {
        self.lookup(key).is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_overrides_file() {
        let mut c = Config::from_toml("[chain]\nn = 4\nt_c = 0.5\n").unwrap();
        c.set("chain.t_c=2").unwrap();
        c.set("chain.hopping=open_nn").unwrap();
        assert_eq!(c.f64("chain.t_c").unwrap(), 2.0);
        assert_eq!(c.usize("chain.n").unwrap(), 4);
        assert_eq!(c.str_or("chain.hopping", "x").unwrap(), "open_nn");
    }

    #[test]
    fn missing_key_is_named() {
        let c = Config::default();
        let err = c.f64("anneal.tau_ev").unwrap_err().to_string();
        assert!(err.contains("anneal.tau_ev"), "{err}");
    }

    #[test]
    fn lists_accept_scalars() {
        let mut c = Config::default();
        c.set("sweep.t_c=[0.1, 1]").unwrap();
        c.set("x.y=3").unwrap();
        assert_eq!(c.f64_list("sweep.t_c").unwrap(), vec![0.1, 1.0]);
        assert_eq!(c.f64_list("x.y").unwrap(), vec![3.0]);
    }

    #[test]
    fn overlay_merges_sections() {
        let mut base = Config::from_toml("[chain]\nn = 20\nt_c = 1.0\n").unwrap();
        base.overlay(Config::from_toml("[chain]\nt_c = 0.1\n").unwrap());
        assert_eq!(base.usize("chain.n").unwrap(), 20);
        assert_eq!(base.f64("chain.t_c").unwrap(), 0.1);
    }
}
