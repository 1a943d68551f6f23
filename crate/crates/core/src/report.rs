//! Pass/fail tables for identity checks.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// What an entry's measured deviation is expected to do.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Expect {
    /// The identity holds: deviation must not exceed the bound.
    AtMost(f64),
    /// A witness of failure: deviation must reach at least the bound.
    AtLeast(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckEntry {
    pub name: String,
    pub deviation: f64,
    pub expect: Expect,
}

impl CheckEntry {
    pub fn passed(&self) -> bool {
        match self.expect {
            Expect::AtMost(tol) => self.deviation <= tol,
            Expect::AtLeast(min) => self.deviation >= min,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    pub title: String,
    pub entries: Vec<CheckEntry>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Self {
        Report { title: title.into(), entries: Vec::new() }
    }

    pub fn push(&mut self, name: impl Into<String>, deviation: f64, expect: Expect) {
        self.entries.push(CheckEntry { name: name.into(), deviation, expect });
    }

    pub fn at_most(&mut self, name: impl Into<String>, deviation: f64, tol: f64) {
        self.push(name, deviation, Expect::AtMost(tol));
    }

    pub fn at_least(&mut self, name: impl Into<String>, deviation: f64, min: f64) {
        self.push(name, deviation, Expect::AtLeast(min));
    }

    pub fn passed(&self) -> bool {
        self.entries.iter().all(CheckEntry::passed)
    }

    pub fn entry(&self, name: &str) -> Option<&CheckEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn extend(&mut self, other: Report) {
        self.entries.extend(other.entries);
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.entries.iter().map(|e| e.name.chars().count()).max().unwrap_or(8).max(8);
        writeln!(f, "# {}", self.title)?;
        writeln!(f, "{:<width$}  {:>12}  {:>14}  status", "identity", "deviation", "criterion")?;
        for e in &self.entries {
            let crit = match e.expect {
                Expect::AtMost(t) => alloc::format!("<= {t:.1e}"),
                Expect::AtLeast(t) => alloc::format!(">= {t:.1e}"),
            };
            let status = if e.passed() { "pass" } else { "FAIL" };
            writeln!(f, "{:<width$}  {:>12.3e}  {:>14}  {}", e.name, e.deviation, crit, status)?;
        }
        Ok(())
    }
}
