use std::fmt;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Outcome of a law or morphism check.
///
/// Numerical checks pass exactly when `residual <= tolerance`; exact checks
/// (`tolerance == None`) pass exactly when no witness was found, and then
/// `residual` counts the violating samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub verdict: Verdict,
    pub residual: f64,
    pub tolerance: Option<f64>,
    pub samples: usize,
    pub witness: Option<String>,
}

impl CheckReport {
    /// `witness` describes the worst sample; it is kept only on failure.
    pub fn numeric(residual: f64, tolerance: f64, samples: usize, witness: Option<String>) -> Self {
        let pass = residual <= tolerance;
        CheckReport {
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            residual,
            tolerance: Some(tolerance),
            samples,
            witness: if pass { None } else { witness },
        }
    }

    pub fn exact(samples: usize, violations: usize, witness: Option<String>) -> Self {
        let pass = witness.is_none();
        CheckReport {
            verdict: if pass { Verdict::Pass } else { Verdict::Fail },
            residual: violations as f64,
            tolerance: None,
            samples,
            witness,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }
}

impl fmt::Display for CheckReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.passed() { "pass" } else { "FAIL" };
        write!(f, "{verdict} residual={:e} samples={}", self.residual, self.samples)?;
        if let Some(tol) = self.tolerance {
            write!(f, " tol={tol:e}")?;
        }
        if let Some(w) = &self.witness {
            write!(f, " witness: {w}")?;
        }
        Ok(())
    }
}

pub(crate) fn format_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", parts.join(", "))
}
