//! Machine-readable verification reports.

use serde::Serialize;

use crate::error::Error;

/// One failed identity, with both sides reproduced verbatim.
#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct Failure {
    pub case: usize,
    pub identity: String,
    pub inputs: String,
    pub lhs: String,
    pub rhs: String,
}

impl Failure {
    pub fn from_error(case: usize, err: Error) -> Failure {
        match err {
            Error::IdentityFailed {
                identity,
                inputs,
                lhs,
                rhs,
            } => Failure {
                case,
                identity,
                inputs,
                lhs,
                rhs,
            },
            other => Failure {
                case,
                identity: "evaluation error".into(),
                inputs: other.to_string(),
                lhs: String::new(),
                rhs: String::new(),
            },
        }
    }
}

/// The result of running a verification suite. `passed + failures.len()`
/// always equals `cases`; failures are sorted by case index so identical
/// flags and seed reproduce identical reports byte for byte (the wall-time
/// field aside).
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub suite: String,
    pub params: serde_json::Value,
    pub cases: usize,
    pub passed: usize,
    pub failures: Vec<Failure>,
    pub wall_ms: u128,
}

impl Report {
    pub fn new(suite: &str, params: serde_json::Value) -> Report {
        Report {
            suite: suite.to_string(),
            params,
            cases: 0,
            passed: 0,
            failures: Vec::new(),
            wall_ms: 0,
        }
    }

    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    /// Folds per-case outcomes (at most one failure recorded per case).
    pub fn absorb(&mut self, outcomes: Vec<Option<Failure>>) {
        for outcome in outcomes {
            self.cases += 1;
            match outcome {
                None => self.passed += 1,
                Some(f) => self.failures.push(f),
            }
        }
        self.failures.sort_by_key(|f| f.case);
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization")
    }
}
