use alloc::string::String;
use alloc::vec::Vec;

/// How a verification routine chooses the instances it checks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    /// Every instance (rectangle, sub-collection, set, permutation) is checked.
    Exhaustive,
    /// `trials` instances drawn from a ChaCha stream seeded with `seed`.
    Random { trials: usize, seed: u64 },
}

/// Number of failure descriptions kept verbatim; further failures are only counted.
const KEPT_FAILURES: usize = 16;

/// Outcome of a verification routine.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckReport {
    pub name: String,
    pub tolerance: f64,
    pub checks: u64,
    pub failed: u64,
    pub max_deviation: f64,
    pub failures: Vec<String>,
}

impl CheckReport {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        CheckReport { name: name.into(), tolerance, checks: 0, failed: 0, max_deviation: 0.0, failures: Vec::new() }
    }

    /// Records one comparison. NaN deviations count as failures.
    pub fn record(&mut self, deviation: f64, describe: impl FnOnce() -> String) {
        self.checks += 1;
        if deviation > self.max_deviation || deviation.is_nan() {
            self.max_deviation = deviation;
        }
        if deviation.is_nan() || deviation > self.tolerance {
            self.failed += 1;
            if self.failures.len() < KEPT_FAILURES {
                self.failures.push(describe());
            }
        }
    }

    /// Folds `checks` comparisons whose largest deviation is `max_deviation`.
    pub fn record_batch(&mut self, checks: u64, max_deviation: f64, describe: impl FnOnce() -> String) {
        if checks == 0 {
            return;
        }
        self.record(max_deviation, describe);
        self.checks += checks - 1;
    }

    pub fn merge(&mut self, other: CheckReport) {
        self.checks += other.checks;
        self.failed += other.failed;
        if other.max_deviation > self.max_deviation || other.max_deviation.is_nan() {
            self.max_deviation = other.max_deviation;
        }
        for f in other.failures {
            if self.failures.len() < KEPT_FAILURES {
                self.failures.push(f);
            }
        }
    }

    pub fn passed(&self) -> bool {
        self.failed == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;

    #[test]
    fn empty_report_passes() {
        let r = CheckReport::new("x", 1e-10);
        assert!(r.passed());
        assert_eq!(r.checks, 0);
    }

    #[test]
    fn nan_fails() {
        let mut r = CheckReport::new("x", 1e-10);
        r.record(f64::NAN, || "nan".to_string());
        assert!(!r.passed());
        assert!(r.max_deviation.is_nan());
    }

    #[test]
    fn failures_are_capped() {
        let mut r = CheckReport::new("x", 0.0);
        for _ in 0..100 {
            r.record(1.0, || "bad".to_string());
        }
        assert_eq!(r.failed, 100);
        assert_eq!(r.failures.len(), KEPT_FAILURES);
    }
}
