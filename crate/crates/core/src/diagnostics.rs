//! Continuity probes of the inner solution `F*` and finite-difference
//! contraction estimates.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::map::{restrict, FixedPointMap};
use crate::nested::{inner_fixed_point, NestedConfig};
use crate::point::{check_open_unit, UnitPoint};

pub const DEFAULT_FD_STEP: f64 = 1e-6;
pub const POWER_ITERATIONS: usize = 200;
const POWER_SEED: u64 = 0x5eed;

/// Step sizes `1e-2, 5e-3, ...` halving down to `1e-5`.
pub fn default_steps() -> Vec<f64> {
    std::iter::successors(Some(1e-2), |h| Some(h / 2.0))
        .take_while(|h| *h >= 1e-5)
        .collect()
}

/// Inner-solve settings for continuity probes. The bracket is pushed close
/// to machine resolution so that `|F*(p+h) - F*(p)| / h` is meaningful at
/// `h = 1e-5`.
pub fn probe_config() -> NestedConfig {
    NestedConfig {
        inner_tolerance: 1e-14,
        ..NestedConfig::default()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub free_index: usize,
    pub parameter_index: usize,
    pub base_value: f64,
    pub step_sizes: Vec<f64>,
    pub deltas: Vec<f64>,
    pub lipschitz_estimates: Vec<f64>,
    /// Resolution of each `F*` value; deltas are compared up to this.
    pub noise_floor: f64,
    pub pass: bool,
}

/// Perturb parameter `vary_index` of `F*_{free_index}` by each step in
/// `steps` and record how far the inner fixed point moves.
///
/// Passes when the shifts shrink with the step (each within 10% of the
/// previous, up to the solve resolution) and the smallest shift is at most
/// `10 * min(h) * L0`, where `L0` is the slope estimate at the largest step.
/// A jump in `F*` keeps the shift constant while `h` shrinks and fails the
/// second test.
pub fn continuity_probe<M: FixedPointMap + ?Sized>(
    map: &M,
    free_index: usize,
    base_frozen: &[f64],
    vary_index: usize,
    steps: &[f64],
    config: &NestedConfig,
) -> Result<ContinuityReport> {
    let dim = map.dim();
    if vary_index >= dim || vary_index == free_index {
        return Err(Error::IndexOutOfRange { index: vary_index, dim });
    }
    if steps.is_empty() || steps.iter().any(|h| h.is_nan() || *h <= 0.0) || steps.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig(
            "steps must be positive and strictly decreasing".into(),
        ));
    }
    let slot = if vary_index < free_index {
        vary_index
    } else {
        vary_index - 1
    };

    let solve = |frozen: &[f64], step: f64| -> Result<f64> {
        let r = restrict(map, free_index, frozen)?;
        inner_fixed_point(&r, config)
            .map(|s| s.value)
            .map_err(|e| Error::Sample {
                sample: step,
                source: Box::new(e),
            })
    };

    let base_value = solve(base_frozen, 0.0)?;
    let mut frozen = base_frozen.to_vec();
    let mut deltas = Vec::with_capacity(steps.len());
    for &h in steps {
        frozen[slot] = base_frozen[slot] + h;
        check_open_unit(&frozen)?;
        deltas.push((solve(&frozen, h)? - base_value).abs());
    }

    let lipschitz_estimates: Vec<f64> = deltas.iter().zip(steps).map(|(d, h)| d / h).collect();
    let noise_floor = 2.0 * config.inner_tolerance;
    let shrinking = deltas.windows(2).all(|w| w[1] <= 1.1 * w[0] + noise_floor);
    let h_min = steps[steps.len() - 1];
    let d_min = deltas.iter().cloned().fold(f64::INFINITY, f64::min);
    let small = d_min <= 10.0 * h_min * lipschitz_estimates[0] + noise_floor;

    Ok(ContinuityReport {
        free_index,
        parameter_index: vary_index,
        base_value,
        step_sizes: steps.to_vec(),
        deltas,
        lipschitz_estimates,
        noise_floor,
        pass: shrinking && small,
    })
}

/// Central-difference Jacobian, `J[i][j] = d f_i / d x_j`.
pub fn finite_difference_jacobian<M: FixedPointMap + ?Sized>(
    map: &M,
    at: &UnitPoint,
    fd_step: f64,
) -> Result<Vec<Vec<f64>>> {
    let columns = check_jacobian_args(map, at, fd_step)?
        .into_par_iter()
        .map(|j| jacobian_column(map, at.values(), j, fd_step))
        .collect::<Result<Vec<_>>>()?;
    Ok(transpose(columns))
}

/// Serial twin of [`finite_difference_jacobian`].
pub fn finite_difference_jacobian_serial<M: FixedPointMap + ?Sized>(
    map: &M,
    at: &UnitPoint,
    fd_step: f64,
) -> Result<Vec<Vec<f64>>> {
    let columns = check_jacobian_args(map, at, fd_step)?
        .map(|j| jacobian_column(map, at.values(), j, fd_step))
        .collect::<Result<Vec<_>>>()?;
    Ok(transpose(columns))
}

fn check_jacobian_args<M: FixedPointMap + ?Sized>(
    map: &M,
    at: &UnitPoint,
    fd_step: f64,
) -> Result<std::ops::Range<usize>> {
    let n = map.dim();
    if at.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: at.dim(),
        });
    }
    if fd_step.is_nan() || fd_step <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "fd_step",
            reason: format!("{fd_step}"),
        });
    }
    for (index, &v) in at.values().iter().enumerate() {
        if !(v - fd_step > 0.0 && v + fd_step < 1.0) {
            return Err(Error::OutOfDomain { index, value: v });
        }
    }
    Ok(0..n)
}

fn jacobian_column<M: FixedPointMap + ?Sized>(map: &M, at: &[f64], j: usize, h: f64) -> Result<Vec<f64>> {
    let n = at.len();
    let mut x = at.to_vec();
    let mut plus = vec![0.0; n];
    let mut minus = vec![0.0; n];
    x[j] = at[j] + h;
    map.eval_into(&x, &mut plus);
    x[j] = at[j] - h;
    map.eval_into(&x, &mut minus);
    let col: Vec<f64> = plus.iter().zip(&minus).map(|(p, m)| (p - m) / (2.0 * h)).collect();
    if col.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { iterate: j });
    }
    Ok(col)
}

fn transpose(columns: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = columns.len();
    (0..n).map(|i| columns.iter().map(|c| c[i]).collect()).collect()
}

/// Dominant eigenvalue magnitude by power iteration from a seeded random
/// start. Returns `||A v||` for the final normalized iterate `v`.
pub fn power_iteration(matrix: &[Vec<f64>], iterations: usize, seed: u64) -> Result<f64> {
    let n = matrix.len();
    if matrix.iter().any(|row| row.len() != n) {
        return Err(Error::InvalidConfig("matrix must be square".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(Open01)).collect();
    let mut norm = normalize(&mut v);
    for _ in 0..iterations {
        let mut w: Vec<f64> = matrix
            .iter()
            .map(|row| row.iter().zip(&v).map(|(a, b)| a * b).sum())
            .collect();
        norm = normalize(&mut w);
        if !norm.is_finite() {
            return Err(Error::NonFinite { iterate: 0 });
        }
        if norm == 0.0 {
            return Ok(0.0);
        }
        v = w;
    }
    Ok(norm)
}

fn normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub spectral_radius_estimate: f64,
    pub fd_step: f64,
    pub contractive: bool,
}

/// Estimate the local contraction factor of `map` at `at`.
pub fn contraction_estimate<M: FixedPointMap + ?Sized>(
    map: &M,
    at: &UnitPoint,
    fd_step: f64,
) -> Result<ContractionReport> {
    let jac = finite_difference_jacobian(map, at, fd_step)?;
    let rho = power_iteration(&jac, POWER_ITERATIONS, POWER_SEED)?;
    Ok(ContractionReport {
        spectral_radius_estimate: rho,
        fd_step,
        contractive: rho < 1.0,
    })
}
