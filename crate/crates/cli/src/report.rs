//! Machine-readable JSON reports: check-suite outcomes and the side-by-side
//! method comparison summary.

use serde::Serialize;
use thermotop_core::checks::CheckResult;
use thermotop_core::diagnostics::RunSummary;

#[derive(Debug, Serialize)]
pub struct CheckLine {
    pub name: String,
    pub samples: usize,
    pub worst: f64,
    pub bound: f64,
    pub passed: bool,
}

impl From<&CheckResult> for CheckLine {
    fn from(r: &CheckResult) -> Self {
        Self {
            name: r.name.to_string(),
            samples: r.samples,
            worst: r.worst,
            bound: r.bound,
            passed: r.passed,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub passed: bool,
    pub checks: Vec<CheckLine>,
}

impl SuiteReport {
    pub fn new(name: &str, results: &[CheckResult]) -> Self {
        Self {
            name: name.to_string(),
            passed: thermotop_core::checks::all_passed(results),
            checks: results.iter().map(CheckLine::from).collect(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CheckReport {
    pub seed: u64,
    pub passed: bool,
    pub suites: Vec<SuiteReport>,
}

impl CheckReport {
    pub fn new(seed: u64, suites: Vec<SuiteReport>) -> Self {
        Self {
            seed,
            passed: suites.iter().all(|s| s.passed),
            suites,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct MethodSummary {
    pub method: String,
    pub records: usize,
    pub finite_records: usize,
    pub max_rel_energy_dev: f64,
    pub energy_drift_slope: f64,
    pub min_entropy_increment: f64,
    pub max_kn_identity_residual: Option<f64>,
    pub max_gamma_norm_dev: f64,
    pub max_orthogonality_defect: f64,
    pub wall_clock_seconds: f64,
}

impl MethodSummary {
    pub fn new(method: &str, records: usize, summary: &RunSummary) -> Self {
        Self {
            method: method.to_string(),
            records,
            finite_records: summary.finite_records,
            max_rel_energy_dev: summary.max_rel_energy_dev,
            energy_drift_slope: summary.energy_drift_slope,
            min_entropy_increment: summary.min_entropy_increment,
            max_kn_identity_residual: summary.max_kn_identity_residual,
            max_gamma_norm_dev: summary.max_gamma_norm_dev,
            max_orthogonality_defect: summary.max_orthogonality_defect,
            wall_clock_seconds: summary.wall_clock_seconds,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct CompareSummary {
    pub vi: MethodSummary,
    pub rk2: MethodSummary,
    /// Whether the implicit scheme's energy drift magnitude is below the
    /// explicit baseline's.
    pub vi_drift_smaller: bool,
}

#[cfg(test)]
mod tests {
    use super::*;
    use thermotop_core::checks::algebra_suite;

    #[test]
    fn report_serializes_with_aggregate_flags() {
        let suite = SuiteReport::new("algebra", &algebra_suite(1, 10));
        let report = CheckReport::new(1, vec![suite]);
        assert!(report.passed);
        let json = serde_json::to_string_pretty(&report).unwrap();
        assert!(json.contains("\"seed\": 1"));
        assert!(json.contains("hat-vee-roundtrip"));
    }
}
