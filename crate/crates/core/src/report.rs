//! Check items and certificate reports: failures are data, not panics.

use serde::{Deserialize, Serialize};

/// One named check with its measured residual.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckItem {
    pub name: String,
    pub passed: bool,
    /// Measured quantity (residual, margin, or extremum, per the check).
    pub value: f64,
    /// Threshold the value was compared against (NaN for pure predicates).
    pub tolerance: f64,
}

impl CheckItem {
    /// Passes when `|value| <= tol`.
    pub fn abs(name: &str, value: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            passed: value.abs() <= tol,
            value,
            tolerance: tol,
        }
    }

    /// Passes when the stated predicate held; `value` records the evidence.
    pub fn predicate(name: &str, ok: bool, value: f64) -> Self {
        Self {
            name: name.into(),
            passed: ok,
            value,
            tolerance: f64::NAN,
        }
    }
}

/// A bundle of checks under one heading.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificateReport {
    pub subject: String,
    pub items: Vec<CheckItem>,
}

impl CertificateReport {
    pub fn new(subject: &str) -> Self {
        Self {
            subject: subject.into(),
            items: Vec::new(),
        }
    }

    pub fn push(&mut self, item: CheckItem) {
        self.items.push(item);
    }

    pub fn passed(&self) -> bool {
        self.items.iter().all(|i| i.passed)
    }

    pub fn item(&self, name: &str) -> Option<&CheckItem> {
        self.items.iter().find(|i| i.name == name)
    }

    /// One line per check, `PASS`/`FAIL` first.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for i in &self.items {
            let status = if i.passed { "PASS" } else { "FAIL" };
            if i.tolerance.is_nan() {
                out.push_str(&format!(
                    "{status} [{}] {} (value {:.3e})\n",
                    self.subject, i.name, i.value
                ));
            } else {
                out.push_str(&format!(
                    "{status} [{}] {} (value {:.3e}, tol {:.1e})\n",
                    self.subject, i.name, i.value, i.tolerance
                ));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn report_aggregates_pass_fail() {
        let mut r = CertificateReport::new("t");
        r.push(CheckItem::abs("small", 1e-12, 1e-9));
        assert!(r.passed());
        r.push(CheckItem::predicate("positive", false, -1.0));
        assert!(!r.passed());
        assert!(r.item("small").unwrap().passed);
        assert!(r.render().contains("FAIL"));
    }
}
