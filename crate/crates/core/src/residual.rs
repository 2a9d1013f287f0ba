//! Named residual collections with max-merge semantics.

use std::collections::BTreeMap;

use crate::tensor::Tensor;

/// Check name to max-abs violation, plus the values of as-printed variants
/// for checks whose printed formula is known to differ from the one used.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ResidualBlock {
    entries: BTreeMap<String, f64>,
    printed: BTreeMap<String, f64>,
}

/// Max that lets NaN win, so a broken value is never hidden by a later finite one.
fn worse(a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        f64::NAN
    } else {
        a.max(b)
    }
}

fn segment_prefix(name: &str, prefix: &str) -> bool {
    let p = prefix.trim_end_matches('.');
    name == p
        || name
            .strip_prefix(p)
            .is_some_and(|rest| rest.starts_with('.'))
}

impl ResidualBlock {
    pub fn new() -> ResidualBlock {
        ResidualBlock::default()
    }

    /// Records `value` under `name`, keeping the larger of old and new.
    pub fn insert(&mut self, name: &str, value: f64) {
        let v = value.abs();
        self.entries
            .entry(name.to_string())
            .and_modify(|e| *e = worse(*e, v))
            .or_insert(v);
    }

    pub fn insert_tensor(&mut self, name: &str, t: &Tensor) {
        let m = t.values().into_iter().fold(0.0, |m, v| worse(m, v.abs()));
        self.insert(name, m);
    }

    /// Records the residual of the as-printed variant of check `name`.
    pub fn insert_printed(&mut self, name: &str, value: f64) {
        let v = value.abs();
        self.printed
            .entry(name.to_string())
            .and_modify(|e| *e = worse(*e, v))
            .or_insert(v);
    }

    pub fn merge(&mut self, other: ResidualBlock) {
        for (k, v) in other.entries {
            self.insert(&k, v);
        }
        for (k, v) in other.printed {
            self.insert_printed(&k, v);
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.entries.get(name).copied()
    }

    pub fn printed(&self, name: &str) -> Option<f64> {
        self.printed.get(name).copied()
    }

    pub fn entries(&self) -> &BTreeMap<String, f64> {
        &self.entries
    }

    pub fn printed_entries(&self) -> &BTreeMap<String, f64> {
        &self.printed
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Largest entry whose name starts with `prefix`.
    pub fn max_with_prefix(&self, prefix: &str) -> f64 {
        self.entries
            .iter()
            .filter(|(k, _)| k.starts_with(prefix))
            .fold(0.0, |m, (_, &v)| worse(m, v))
    }

    /// Names of checks whose used form is within `tol` while the printed
    /// variant is not.
    pub fn discrepancies(&self, tol: f64) -> Vec<String> {
        self.printed
            .iter()
            .filter(|(k, &p)| self.get(k).is_some_and(|v| v <= tol) && !(p <= tol))
            .map(|(k, _)| k.clone())
            .collect()
    }

    /// Keeps only checks (and printed variants) selected by one of the
    /// prefixes; a prefix matches whole dot-separated segments, so `cons`
    /// selects `cons.8.2` but not `constraint.3.6`.
    pub fn retain_prefixes(&mut self, prefixes: &[String]) {
        let keep = |k: &String| prefixes.iter().any(|p| segment_prefix(k, p));
        self.entries.retain(|k, _| keep(k));
        self.printed.retain(|k, _| keep(k));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_matches_whole_segments() {
        let mut b = ResidualBlock::new();
        for n in ["cons.8.2", "constraint.3.6", "tefe.7.4", "cosmo.closed.C5"] {
            b.insert(n, 0.0);
        }
        b.retain_prefixes(&["cons".into(), "cosmo.closed.".into(), "tefe.7.4".into()]);
        let kept: Vec<_> = b.entries().keys().cloned().collect();
        assert_eq!(kept, ["cons.8.2", "cosmo.closed.C5", "tefe.7.4"]);
    }

    #[test]
    fn max_merge_and_nan() {
        let mut b = ResidualBlock::new();
        b.insert("x", 1e-3);
        b.insert("x", -2e-3);
        b.insert("x", 1e-4);
        assert_eq!(b.get("x"), Some(2e-3));
        b.insert("y", f64::NAN);
        b.insert("y", 1.0);
        assert!(b.get("y").unwrap().is_nan());
        let mut c = ResidualBlock::new();
        c.insert("x", 5e-3);
        b.merge(c);
        assert_eq!(b.get("x"), Some(5e-3));
        assert!(b.max_with_prefix("x").eq(&5e-3));
    }

    #[test]
    fn discrepancy_needs_printed_failure_and_used_pass() {
        let mut b = ResidualBlock::new();
        b.insert("a", 1e-12);
        b.insert_printed("a", 0.5);
        b.insert("b", 1e-12);
        b.insert_printed("b", 1e-13);
        b.insert("c", 0.3);
        b.insert_printed("c", 0.5);
        assert_eq!(b.discrepancies(1e-9), vec!["a".to_string()]);
    }
}
