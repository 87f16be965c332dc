//! Claim reports and the check accumulator used to build them.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::herm::Dims;

/// Tool name, version and the generator behind every seeded draw.
pub const TOOL_VERSION: &str = concat!("pseslab ", env!("CARGO_PKG_VERSION"), " (rng ChaCha8Rng)");

/// Outcome of one claim runner. Field names are part of the external
/// report format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimReport {
    pub claim_id: String,
    pub dims: Dims,
    pub params: BTreeMap<String, f64>,
    pub seed: u64,
    pub trials: u64,
    /// Smallest slack over all checks; negative means a violation.
    pub max_violation: f64,
    pub pass: bool,
    pub notes: Vec<String>,
    pub wall_time_s: f64,
    pub tool_version: String,
}

/// Accumulates inequality and equality checks.
///
/// An inequality `a ≥ b` contributes slack `a − b` and passes when the slack
/// is at least `−tol`. An equality contributes `−|a − b|` and passes when
/// `|a − b|` is within its own tolerance.
#[derive(Debug, Clone)]
pub struct Checks {
    tol: f64,
    worst: f64,
    failures: Vec<String>,
    notes: Vec<String>,
    trials: u64,
}

impl Checks {
    pub fn new(tol: f64) -> Self {
        Checks {
            tol,
            worst: f64::INFINITY,
            failures: Vec::new(),
            notes: Vec::new(),
            trials: 0,
        }
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    fn record(&mut self, slack: f64, ok: bool, what: impl FnOnce() -> String) {
        let slack = if slack.is_nan() { f64::NEG_INFINITY } else { slack };
        self.worst = self.worst.min(slack);
        if !ok && self.failures.len() < 8 {
            self.failures.push(what());
        }
    }

    /// `value ≥ bound − tol`.
    pub fn ge(&mut self, name: &str, value: f64, bound: f64) {
        let slack = value - bound;
        let ok = slack >= -self.tol;
        self.record(slack, ok, || format!("{name}: {value} < {bound}"));
    }

    /// `|value − expected| ≤ tol`, with the given tolerance.
    pub fn close(&mut self, name: &str, value: f64, expected: f64, tol: f64) {
        let err = (value - expected).abs();
        let ok = err <= tol;
        self.record(-err, ok, || {
            format!("{name}: {value} differs from {expected} by {err:e} (tol {tol:e})")
        });
    }

    /// A boolean sub-check; contributes no slack.
    pub fn holds(&mut self, name: &str, ok: bool) {
        if !ok {
            self.record(f64::NEG_INFINITY, false, || format!("{name} failed"));
        }
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn add_trials(&mut self, n: u64) {
        self.trials += n;
    }

    pub fn merge(&mut self, other: Checks) {
        self.worst = self.worst.min(other.worst);
        for f in other.failures {
            if self.failures.len() < 8 {
                self.failures.push(f);
            }
        }
        self.notes.extend(other.notes);
        self.trials += other.trials;
    }

    pub fn pass(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn max_violation(&self) -> f64 {
        if self.worst == f64::INFINITY {
            0.0
        } else {
            // keep JSON finite
            self.worst.max(f64::MIN)
        }
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn into_report(
        self,
        claim_id: &str,
        dims: Dims,
        params: BTreeMap<String, f64>,
        seed: u64,
        wall_time_s: f64,
    ) -> ClaimReport {
        let pass = self.pass();
        let max_violation = self.max_violation();
        let mut notes = self.notes;
        notes.extend(self.failures.into_iter().map(|f| format!("FAIL {f}")));
        ClaimReport {
            claim_id: claim_id.to_string(),
            dims,
            params,
            seed,
            trials: self.trials,
            max_violation,
            pass,
            notes,
            wall_time_s,
            tool_version: TOOL_VERSION.to_string(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_track_worst_slack() {
        let mut c = Checks::new(1e-9);
        c.ge("a", 1.0, 0.5);
        c.ge("b", -1e-10, 0.0);
        assert!(c.pass());
        assert!((c.max_violation() + 1e-10).abs() < 1e-20);
        c.close("c", 1.0, 1.0 + 1e-6, 1e-9);
        assert!(!c.pass());
        assert!((c.max_violation() + 1e-6).abs() < 1e-15);
    }

    #[test]
    fn nan_and_boolean_failures_stay_finite() {
        let mut c = Checks::new(1e-9);
        c.ge("nan", f64::NAN, 0.0);
        c.holds("flag", false);
        assert!(!c.pass());
        assert!(c.max_violation().is_finite());
    }

    #[test]
    fn tool_version_names_the_generator() {
        assert!(TOOL_VERSION.contains(crate::herm::RNG_NAME));
    }

    #[test]
    fn report_json_round_trip() {
        let mut c = Checks::new(1e-9);
        c.ge("x", 0.25, 0.0);
        c.add_trials(3);
        c.note("hello");
        let mut params = BTreeMap::new();
        params.insert("r".to_string(), 0.1);
        let rep = c.into_report("lemma-con1", Dims::new(2).unwrap(), params, 7, 0.5);
        let s = serde_json::to_string(&rep).unwrap();
        assert!(s.starts_with("{\"claim_id\":\"lemma-con1\",\"dims\":{\"d_loc\":2,\"D\":4}"));
        let back: ClaimReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, rep);
    }
}
