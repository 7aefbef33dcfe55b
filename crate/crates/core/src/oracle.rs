//! Reference solutions used to score predictions.

use crate::crossover::{build_basis, revised_simplex, SimplexResult, SimplexStatus};
use crate::error::{Error, Result};
use crate::ipm::{solve, SolveOptions, SolveStatus, SolveTrace, StopRule};
use crate::lp::{ActiveSetLabel, LabelSource, StandardLP};

/// Components below this count as active.
pub const ACTIVE_THRESHOLD: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Oracle {
    Simplex,
    Ipm,
}

pub fn simplex_iteration_limit(lp: &StandardLP) -> usize {
    50 * (lp.m() + lp.n()) + 1000
}

/// Revised simplex from the first independent columns, with phase 1.
pub fn simplex_solution(lp: &StandardLP) -> Result<SimplexResult> {
    let start = build_basis(lp, &[], &nalgebra::DVector::zeros(lp.n()))?;
    let res = revised_simplex(lp, &start, simplex_iteration_limit(lp))?;
    match res.status {
        SimplexStatus::Optimal => Ok(res),
        other => Err(Error::Status(format!("{other:?} (simplex oracle)").to_lowercase())),
    }
}

/// Unperturbed interior point run to a relative residual below 1e-8.
pub fn ipm_solution(lp: &StandardLP) -> Result<SolveTrace> {
    let trace = solve(lp, &SolveOptions::unperturbed().with_stop(StopRule::relres(1e-8)))?;
    match trace.status {
        SolveStatus::Converged => Ok(trace),
        other => Err(Error::Status(format!("{other:?} (interior point oracle)").to_lowercase())),
    }
}

pub fn actual_active_set(lp: &StandardLP, oracle: Oracle) -> Result<ActiveSetLabel> {
    let (x, source) = match oracle {
        Oracle::Simplex => (simplex_solution(lp)?.x, LabelSource::SimplexOracle),
        Oracle::Ipm => (ipm_solution(lp)?.final_iterate().x.clone(), LabelSource::IpmOracle),
    };
    let indices = (0..x.len()).filter(|&i| x[i] < ACTIVE_THRESHOLD).collect();
    Ok(ActiveSetLabel::new(indices, source))
}
