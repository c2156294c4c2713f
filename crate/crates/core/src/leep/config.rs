//! Flat `key = value` configuration files.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Default)]
pub struct ConfigMap {
    entries: BTreeMap<String, (usize, String)>,
    used: RefCell<BTreeSet<String>>,
}

impl ConfigMap {
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, "expected 'key = value'"))?;
            let key = key.trim();
            if key.is_empty() {
                return Err(Error::parse(i + 1, "empty key"));
            }
            if entries.insert(key.to_string(), (i + 1, value.trim().to_string())).is_some() {
                return Err(Error::parse(i + 1, format!("duplicate key '{key}'")));
            }
        }
        Ok(ConfigMap {
            entries,
            used: RefCell::new(BTreeSet::new()),
        })
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        let Some((line, value)) = self.entries.get(key) else {
            return Ok(None);
        };
        self.used.borrow_mut().insert(key.to_string());
        value
            .parse()
            .map(Some)
            .map_err(|_| Error::parse(*line, format!("invalid value '{value}' for '{key}'")))
    }

    pub fn get_or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    /// Comma-separated values.
    pub fn get_list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        let Some((line, value)) = self.entries.get(key) else {
            return Ok(None);
        };
        self.used.borrow_mut().insert(key.to_string());
        value
            .split(',')
            .map(|v| {
                let v = v.trim();
                v.parse()
                    .map_err(|_| Error::parse(*line, format!("invalid list entry '{v}' for '{key}'")))
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    /// Line number of `key`, for reporting range errors.
    pub fn line(&self, key: &str) -> usize {
        self.entries.get(key).map_or(0, |(l, _)| *l)
    }

    /// Fails on the first key no getter asked for.
    pub fn finish(&self) -> Result<()> {
        let used = self.used.borrow();
        match self.entries.iter().find(|(k, _)| !used.contains(*k)) {
            Some((k, (line, _))) => Err(Error::parse(*line, format!("unknown key '{k}'"))),
            None => Ok(()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_values_and_reports_lines() {
        let c = ConfigMap::parse("# comment\nn = 4\nalpha=0.5\nseeds = 1, 2,3\n\nbad = x\n").unwrap();
        assert_eq!(c.get::<usize>("n").unwrap(), Some(4));
        assert_eq!(c.get_or("alpha", 1.0).unwrap(), 0.5);
        assert_eq!(c.get_or("missing", 7u32).unwrap(), 7);
        assert_eq!(c.get_list::<u64>("seeds").unwrap(), Some(vec![1, 2, 3]));
        assert!(matches!(c.finish(), Err(Error::Parse { line: 6, .. })));
        assert!(matches!(c.get::<f64>("bad"), Err(Error::Parse { line: 6, .. })));
        assert!(c.finish().is_ok());
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(ConfigMap::parse("a = 1\nnoequals\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(ConfigMap::parse("a = 1\na = 2\n"), Err(Error::Parse { line: 2, .. })));
    }
}
