//! Flat `key = value` configuration files.
//!
//! One assignment per line, `#` starts a comment, keys are dotted lowercase
//! identifiers. Every key must be consumed by the selected task (or belong
//! to the small output/jobs allowlist) — unknown keys abort the run so a
//! typo cannot silently fall back to a default. A resolved config can be
//! re-serialized as a manifest whose `config_hash` line (FNV-1a 64) detects
//! hand edits.

use std::cell::RefCell;
use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

/// Keys that any task may carry without reading them itself.
pub const COMMON_KEYS: &[&str] = &[
    "task",
    "seed",
    "jobs",
    "format",
    "output.dir",
    "config_hash",
    "sweep.param",
    "sweep.values",
];

/// Keys excluded from manifests (execution environment, not experiment
/// identity).
pub const MANIFEST_EXCLUDED: &[&str] = &["jobs", "format", "output.dir", "config_hash"];

#[derive(Debug, Clone)]
pub struct Config {
    pairs: BTreeMap<String, String>,
    used: RefCell<BTreeSet<String>>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key
            .chars()
            .all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || matches!(c, '.' | '_' | '-'))
}

impl Config {
    pub fn empty() -> Self {
        Config {
            pairs: BTreeMap::new(),
            used: RefCell::new(BTreeSet::new()),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Parses config text; `origin` names the source in diagnostics.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                anyhow!("{origin}:{}: expected `key = value`, got `{line}`", lineno + 1)
            })?;
            let key = key.trim();
            let value = value.trim();
            if !valid_key(key) {
                bail!(
                    "{origin}:{}: invalid key `{key}` (lowercase letters, digits, `.`, `_`, `-`)",
                    lineno + 1
                );
            }
            if value.is_empty() {
                bail!("{origin}:{}: key `{key}` has an empty value", lineno + 1);
            }
            if pairs.insert(key.to_string(), value.to_string()).is_some() {
                bail!("{origin}:{}: duplicate key `{key}`", lineno + 1);
            }
        }
        let cfg = Config {
            pairs,
            used: RefCell::new(BTreeSet::new()),
        };
        cfg.verify_hash(origin)?;
        Ok(cfg)
    }

    /// Verifies a `config_hash` line when present (manifests carry one).
    fn verify_hash(&self, origin: &str) -> Result<()> {
        if let Some(stored) = self.pairs.get("config_hash") {
            let body = self.manifest_body();
            let computed = format!("{:016x}", fnv1a64(body.as_bytes()));
            if stored != &computed {
                bail!(
                    "{origin}: config_hash mismatch (stored {stored}, content hashes to \
                     {computed}); the manifest was edited after it was written"
                );
            }
        }
        Ok(())
    }

    /// Sets (or overrides) a key programmatically.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.pairs.insert(key.to_string(), value.to_string());
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.used.borrow_mut().insert(key.to_string());
        self.pairs.get(key).map(|s| s.as_str())
    }

    pub fn get_str(&self, key: &str) -> Option<String> {
        self.raw(key).map(|s| s.to_string())
    }

    pub fn str_or(&self, key: &str, default: &str) -> String {
        self.raw(key).unwrap_or(default).to_string()
    }

    pub fn usize_or(&self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| anyhow!("config key `{key}`: invalid unsigned integer `{v}`")),
        }
    }

    pub fn u64_or(&self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| anyhow!("config key `{key}`: invalid unsigned integer `{v}`")),
        }
    }

    pub fn f64_or(&self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| anyhow!("config key `{key}`: invalid number `{v}`")),
        }
    }

    pub fn bool_or(&self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(anyhow!("config key `{key}`: expected true/false, got `{v}`")),
        }
    }

    pub fn require_usize(&self, key: &str) -> Result<usize> {
        self.raw(key)
            .ok_or_else(|| anyhow!("config key `{key}` is required"))?
            .parse()
            .map_err(|_| anyhow!("config key `{key}`: invalid unsigned integer"))
    }

    pub fn require_f64(&self, key: &str) -> Result<f64> {
        self.raw(key)
            .ok_or_else(|| anyhow!("config key `{key}` is required"))?
            .parse()
            .map_err(|_| anyhow!("config key `{key}`: invalid number"))
    }

    /// Comma-separated float list.
    pub fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .split(',')
                .map(|item| {
                    let item = item.trim();
                    item.parse()
                        .map_err(|_| anyhow!("config key `{key}`: invalid number `{item}`"))
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some),
        }
    }

    /// Comma-separated raw string list.
    pub fn str_list(&self, key: &str) -> Option<Vec<String>> {
        self.raw(key)
            .map(|v| v.split(',').map(|s| s.trim().to_string()).collect())
    }

    /// Fails when a key was neither read by the task nor allowlisted — the
    /// guard that catches misspelled keys.
    pub fn check_unknown(&self) -> Result<()> {
        let used = self.used.borrow();
        let stray: Vec<&str> = self
            .pairs
            .keys()
            .map(|k| k.as_str())
            .filter(|k| !used.contains(*k) && !COMMON_KEYS.contains(k))
            .collect();
        if stray.is_empty() {
            Ok(())
        } else {
            bail!("unknown config key(s): {}", stray.join(", "))
        }
    }

    /// Sorted `key = value` lines of everything a manifest records.
    fn manifest_body(&self) -> String {
        let mut body = String::new();
        for (k, v) in &self.pairs {
            if MANIFEST_EXCLUDED.contains(&k.as_str()) {
                continue;
            }
            body.push_str(k);
            body.push_str(" = ");
            body.push_str(v);
            body.push('\n');
        }
        body
    }

    /// Full manifest text: the body plus its `config_hash` line.
    pub fn manifest_text(&self) -> String {
        let body = self.manifest_body();
        format!("{body}config_hash = {:016x}\n", fnv1a64(body.as_bytes()))
    }
}

/// FNV-1a 64-bit hash.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_defaults_and_lists() {
        let cfg = Config::parse(
            "# experiment\nn = 12  # sites\nu = 1.5\nvalues = 1, 2.5, -3e-1\nflag = true\n",
            "test",
        )
        .unwrap();
        assert_eq!(cfg.require_usize("n").unwrap(), 12);
        assert_eq!(cfg.require_f64("u").unwrap(), 1.5);
        assert_eq!(
            cfg.f64_list("values").unwrap().unwrap(),
            vec![1.0, 2.5, -0.3]
        );
        assert!(cfg.bool_or("flag", false).unwrap());
        assert_eq!(cfg.usize_or("missing", 7).unwrap(), 7);
        cfg.check_unknown().unwrap();
    }

    #[test]
    fn rejects_malformed_lines_and_duplicates() {
        assert!(Config::parse("just words\n", "t").is_err());
        assert!(Config::parse("Bad = 1\n", "t").is_err());
        assert!(Config::parse("a = 1\na = 2\n", "t").is_err());
        assert!(Config::parse("a =\n", "t").is_err());
        let line = Config::parse("ok = 1\nnope\n", "t").unwrap_err().to_string();
        assert!(line.contains("t:2"), "got: {line}");
    }

    #[test]
    fn unknown_keys_are_caught_after_reads() {
        let cfg = Config::parse("n = 3\ntypo = 1\n", "t").unwrap();
        let _ = cfg.require_usize("n");
        let err = cfg.check_unknown().unwrap_err().to_string();
        assert!(err.contains("typo"), "got: {err}");
    }

    #[test]
    fn manifest_round_trips_and_detects_edits() {
        let mut cfg = Config::parse("n = 3\nu = 1.5\njobs = 4\n", "t").unwrap();
        cfg.set("task", "rate-triangle");
        cfg.set("seed", 9u64);
        let text = cfg.manifest_text();
        assert!(!text.contains("jobs"), "jobs must not enter the manifest");
        let reread = Config::parse(&text, "manifest").unwrap();
        assert_eq!(reread.manifest_text(), text);
        let tampered = text.replace("u = 1.5", "u = 2.5");
        let err = Config::parse(&tampered, "manifest").unwrap_err().to_string();
        assert!(err.contains("config_hash mismatch"), "got: {err}");
    }

    #[test]
    fn fnv_matches_reference_vectors() {
        // published FNV-1a 64 test vectors
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
        assert_eq!(fnv1a64(b"foobar"), 0x85944171f73967e8);
    }
}
