use std::fmt;

use serde::{Deserialize, Serialize};

use super::bootstrap::{bootstrap_ci_stream, BootstrapCI};
use super::StatsError;

/// Ratio of call rates, or `Unbounded` when the baseline rate is zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Lift {
    Ratio(f64),
    Unbounded,
}

impl Lift {
    pub fn ratio(self) -> Option<f64> {
        match self {
            Lift::Ratio(r) => Some(r),
            Lift::Unbounded => None,
        }
    }
}

impl fmt::Display for Lift {
    /// Two significant figures: `3.4×`, `15×`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Lift::Unbounded => f.write_str("unbounded"),
            Lift::Ratio(r) if *r >= 10.0 => write!(f, "{:.0}×", r),
            Lift::Ratio(r) => write!(f, "{:.1}×", r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiftReport {
    pub baseline: BootstrapCI,
    pub with_tools: BootstrapCI,
    pub lift: Lift,
}

/// Call-rate lift of `with_tools` over `baseline`. The two intervals use
/// streams 0 and 1 of `seed`.
pub fn call_rate_lift(
    baseline: &[bool],
    with_tools: &[bool],
    resamples: usize,
    level: f64,
    seed: u64,
) -> Result<LiftReport, StatsError> {
    let b = bootstrap_ci_stream(baseline, resamples, level, seed, 0)?;
    let w = bootstrap_ci_stream(with_tools, resamples, level, seed, 1)?;
    let lift = if b.point == 0.0 {
        Lift::Unbounded
    } else {
        Lift::Ratio(w.point / b.point)
    };
    Ok(LiftReport {
        baseline: b,
        with_tools: w,
        lift,
    })
}
