//! Flat pass/fail report: one assertion per line, `key: PASS`,
//! `key: FAIL` or `key: REPORTED(value)`.

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    /// Carries the first few violations.
    Fail(Vec<String>),
    Reported(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Check {
    pub key: String,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Report {
    checks: Vec<Check>,
}

const KEEP: usize = 5;

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, key: impl Into<String>, outcome: Outcome) {
        self.checks.push(Check { key: key.into(), outcome });
    }

    /// Records a check from its violation list. When `asserted` is false a
    /// nonempty list is downgraded to `REPORTED(n violations)`.
    pub fn check(&mut self, key: impl Into<String>, violations: Vec<String>, asserted: bool) {
        let outcome = if violations.is_empty() {
            Outcome::Pass
        } else if asserted {
            Outcome::Fail(violations.into_iter().take(KEEP).collect())
        } else {
            Outcome::Reported(format!("{} violations", violations.len()))
        };
        self.push(key, outcome);
    }

    pub fn reported(&mut self, key: impl Into<String>, value: impl fmt::Display) {
        self.push(key, Outcome::Reported(value.to_string()));
    }

    pub fn extend(&mut self, other: Report) {
        self.checks.extend(other.checks);
    }

    /// Prefixes every key of `other` before merging.
    pub fn extend_prefixed(&mut self, prefix: &str, other: Report) {
        for mut c in other.checks {
            c.key = format!("{prefix}.{}", c.key);
            self.checks.push(c);
        }
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| matches!(c.outcome, Outcome::Fail(_)))
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn get(&self, key: &str) -> Option<&Outcome> {
        self.checks.iter().find(|c| c.key == key).map(|c| &c.outcome)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            match &c.outcome {
                Outcome::Pass => writeln!(f, "{}: PASS", c.key)?,
                Outcome::Fail(_) => writeln!(f, "{}: FAIL", c.key)?,
                Outcome::Reported(v) => writeln!(f, "{}: REPORTED({v})", c.key)?,
            }
        }
        Ok(())
    }
}
