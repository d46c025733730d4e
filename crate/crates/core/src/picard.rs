//! Direct fixed-point (Picard) iteration with an optional damping factor.
//!
//! The stopping rule is the Euclidean step test `||x_k - x_{k+1}||_2 < tol`.
//! When it first fires at index `k`, the solver returns `x_{k+1}` and reports
//! `iterations = k`; the map has then been evaluated `k + 1` times. So a map
//! whose starting point is already fixed converges with zero iterations.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::FixedPointMap;
use crate::point::{distance, UnitPoint};

/// Step threshold used by the convergence experiment.
pub const DEFAULT_TOLERANCE: f64 = 1e-3;
pub const DEFAULT_MAX_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub tolerance: f64,
    pub max_iterations: usize,
    /// `1.0` is plain Picard iteration.
    pub damping: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
            damping: 1.0,
        }
    }
}

impl SolverConfig {
    pub fn with_tolerance(tolerance: f64) -> Self {
        Self {
            tolerance,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance > 0.0 && self.tolerance.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "tolerance",
                reason: format!("{} is not a positive real", self.tolerance),
            });
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter {
                name: "max_iterations",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidParameter {
                name: "damping",
                reason: format!("{} not in (0, 1]", self.damping),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveResult {
    pub solution: UnitPoint,
    /// Index `k` at which `||x_k - x_{k+1}|| < tol` first held.
    pub iterations: usize,
    /// Map evaluations spent on iteration steps (the residual check is extra).
    pub evaluations: usize,
    pub converged: bool,
    /// `||f(x*) - x*||_2`, recomputed from the returned solution.
    pub residual: f64,
    /// `||x_k - x_{k+1}||_2` of the last step taken.
    pub final_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub iterate: UnitPoint,
    /// Distance to the previous iterate; `None` for the starting point.
    pub step_norm: Option<f64>,
}

fn check_output(out: &[f64], iterate: usize) -> Result<()> {
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { iterate });
    }
    if let Some(index) = out.iter().position(|v| !(*v > 0.0 && *v < 1.0)) {
        return Err(Error::OutputOutOfDomain {
            iterate,
            index,
            value: out[index],
        });
    }
    Ok(())
}

fn run<M, F>(map: &M, x0: &UnitPoint, config: &SolverConfig, mut visit: F) -> Result<SolveResult>
where
    M: FixedPointMap + ?Sized,
    F: FnMut(&[f64], f64),
{
    config.validate()?;
    let dim = map.dim();
    if x0.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: x0.dim(),
        });
    }

    let mut x = x0.values().to_vec();
    let mut fx = vec![0.0; dim];
    let mut next = vec![0.0; dim];
    let mut converged = false;
    let mut final_step = f64::NAN;
    let mut evaluations = 0;

    while evaluations < config.max_iterations {
        map.eval_into(&x, &mut fx);
        evaluations += 1;
        check_output(&fx, evaluations)?;

        let d = config.damping;
        for ((n, xi), fi) in next.iter_mut().zip(&x).zip(&fx) {
            *n = if d == 1.0 { *fi } else { (1.0 - d) * xi + d * fi };
        }
        final_step = distance(&x, &next);
        if !final_step.is_finite() {
            return Err(Error::NonFinite { iterate: evaluations });
        }
        std::mem::swap(&mut x, &mut next);
        visit(&x, final_step);

        if final_step < config.tolerance {
            converged = true;
            break;
        }
    }

    map.eval_into(&x, &mut fx);
    let residual = distance(&fx, &x);
    let iterations = if converged { evaluations - 1 } else { evaluations };
    Ok(SolveResult {
        solution: UnitPoint::new(x)?,
        iterations,
        evaluations,
        converged,
        residual,
        final_step,
    })
}

/// Iterate `x_{k+1} = (1 - damping) x_k + damping f(x_k)` from `x0`.
///
/// Running out of iterations is not an error: the result carries
/// `converged = false` and the last iterate.
pub fn picard_solve<M: FixedPointMap + ?Sized>(map: &M, x0: &UnitPoint, config: &SolverConfig) -> Result<SolveResult> {
    run(map, x0, config, |_, _| {})
}

/// Like [`picard_solve`], but also returns every iterate, starting with `x0`.
pub fn solve_trajectory<M: FixedPointMap + ?Sized>(
    map: &M,
    x0: &UnitPoint,
    config: &SolverConfig,
) -> Result<(SolveResult, Vec<TrajectoryPoint>)> {
    let mut history = vec![TrajectoryPoint {
        iterate: x0.clone(),
        step_norm: None,
    }];
    let mut pending = Ok(());
    let result = run(map, x0, config, |x, step| {
        if pending.is_ok() {
            match UnitPoint::new(x.to_vec()) {
                Ok(iterate) => history.push(TrajectoryPoint {
                    iterate,
                    step_norm: Some(step),
                }),
                Err(e) => pending = Err(e),
            }
        }
    })?;
    pending?;
    Ok((result, history))
}
