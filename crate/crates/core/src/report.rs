//! Named residual checks collected by the verification routines.

use std::fmt;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    checks: Vec<Check>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records `residual` against `bound`; passes when `residual <= bound`.
    pub fn record<T: Real>(&mut self, name: impl Into<String>, residual: T, bound: T) -> bool {
        let residual = residual.to_f64_lossy();
        let bound = bound.to_f64_lossy();
        let passed = residual <= bound;
        self.checks.push(Check { name: name.into(), residual, bound, passed });
        passed
    }

    /// Records a boolean outcome as residual 0 or 1.
    pub fn record_flag(&mut self, name: impl Into<String>, passed: bool) {
        self.checks.push(Check {
            name: name.into(),
            residual: if passed { 0.0 } else { 1.0 },
            bound: 0.0,
            passed,
        });
    }

    pub fn extend(&mut self, prefix: &str, other: Report) {
        for mut c in other.checks {
            c.name = format!("{prefix}.{}", c.name);
            self.checks.push(c);
        }
    }

    pub fn checks(&self) -> &[Check] {
        &self.checks
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn residual(&self, name: &str) -> Option<f64> {
        self.get(name).map(|c| c.residual)
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn max_residual(&self) -> f64 {
        self.checks.iter().fold(0.0, |m, c| m.max(c.residual))
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            writeln!(f, "{mark} {:<40} {:.3e} (bound {:.1e})", c.name, c.residual, c.bound)?;
        }
        Ok(())
    }
}
