//! Constructive existence solver.
//!
//! Coordinates are eliminated one at a time. The innermost coordinate is
//! solved by bisection on `g(t) = F(t; p) - t` with every other coordinate
//! frozen, which defines the inner solution `F*(p)`. Substituting `F*` gives
//! a reduced map in the next coordinate, solved the same way, and so on
//! outward. Every evaluation of a reduced map at level `k` re-solves all
//! levels below it, so cost grows like `(bisection steps)^dim`: this is a
//! verification oracle for small systems, not a production solver.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::{FixedPointMap, RestrictedMap};
use crate::point::{distance, UnitPoint};

/// Acceptance threshold for the a-posteriori residual check of [`nested_solve`].
pub const NESTED_RESIDUAL_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NestedConfig {
    /// Bisection stops once the bracket is at most this wide.
    pub inner_tolerance: f64,
    /// Initial bracket is `[margin, 1 - margin]`.
    pub margin: f64,
    pub max_depth: usize,
}

impl Default for NestedConfig {
    fn default() -> Self {
        Self {
            inner_tolerance: 1e-10,
            margin: 1e-9,
            max_depth: 4,
        }
    }
}

impl NestedConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.inner_tolerance > 0.0 && self.inner_tolerance < self.margin && self.margin < 0.5;
        if !ok {
            return Err(Error::InvalidConfig(format!(
                "need 0 < inner_tolerance < margin < 0.5, got {} and {}",
                self.inner_tolerance, self.margin
            )));
        }
        if self.max_depth == 0 {
            return Err(Error::InvalidParameter {
                name: "max_depth",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Upper bound on bisection steps per inner solve.
    pub fn max_bisections(&self) -> usize {
        ((1.0 - 2.0 * self.margin) / self.inner_tolerance).log2().ceil() as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InnerSolution {
    pub value: f64,
    /// Final bracket; `g` is positive at the left end and negative at the right.
    pub bracket: (f64, f64),
    pub bisections: usize,
}

/// Bisection on `g(t) = f(t) - t` over `[margin, 1 - margin]`.
fn bisect<F>(coordinate: usize, config: &NestedConfig, mut f: F) -> Result<InnerSolution>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut g = |t: f64| -> Result<f64> {
        let v = f(t)? - t;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite { iterate: 0 })
        }
    };
    let exact = |t: f64| InnerSolution {
        value: t,
        bracket: (t, t),
        bisections: 0,
    };

    let (mut lo, mut hi) = (config.margin, 1.0 - config.margin);
    let mut g_lo = g(lo)?;
    if g_lo == 0.0 {
        return Ok(exact(lo));
    }
    if g_lo < 0.0 {
        return Err(Error::BoundaryViolated {
            coordinate,
            at: lo,
            g: g_lo,
        });
    }
    let mut g_hi = g(hi)?;
    if g_hi == 0.0 {
        return Ok(exact(hi));
    }
    if g_hi > 0.0 {
        return Err(Error::BoundaryViolated {
            coordinate,
            at: hi,
            g: g_hi,
        });
    }

    let mut bisections = 0;
    while hi - lo > config.inner_tolerance {
        let mid = lo + 0.5 * (hi - lo);
        bisections += 1;
        let g_mid = g(mid)?;
        if g_mid == 0.0 {
            return Ok(InnerSolution {
                value: mid,
                bracket: (mid, mid),
                bisections,
            });
        }
        if g_mid > 0.0 {
            (lo, g_lo) = (mid, g_mid);
        } else {
            (hi, g_hi) = (mid, g_mid);
        }
        assert!(g_lo > 0.0 && g_hi < 0.0, "bisection lost its sign change");
    }
    Ok(InnerSolution {
        value: lo + 0.5 * (hi - lo),
        bracket: (lo, hi),
        bisections,
    })
}

/// Fixed point of a one-dimensional restriction, i.e. `F*(p)` for the
/// frozen parameters `p` of `rmap`.
pub fn inner_fixed_point<M: FixedPointMap + ?Sized>(
    rmap: &RestrictedMap<'_, M>,
    config: &NestedConfig,
) -> Result<InnerSolution> {
    config.validate()?;
    bisect(rmap.free_index(), config, |t| Ok(rmap.evaluate(t)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NestedSolution {
    pub solution: UnitPoint,
    /// `||f(x*) - x*||_2` by direct evaluation.
    pub residual: f64,
    pub evaluations: usize,
}

fn wrap(err: Error, coordinate: usize) -> Error {
    match err {
        Error::Nested { mut path, source } => {
            path.insert(0, coordinate);
            Error::Nested { path, source }
        }
        other => Error::Nested {
            path: vec![coordinate],
            source: Box::new(other),
        },
    }
}

fn sign_changes(values: &[f64]) -> usize {
    values.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
}

struct Nested<'a, M: ?Sized> {
    map: &'a M,
    /// `order[0]` is the innermost coordinate.
    order: &'a [usize],
    config: NestedConfig,
    out: Vec<f64>,
    /// Per level: outer coordinate bits -> values of `order[..=k]`.
    cache: Vec<HashMap<Vec<u64>, Vec<f64>>>,
    evaluations: usize,
    scan: Option<usize>,
    single_crossing: bool,
}

impl<'a, M: FixedPointMap + ?Sized> Nested<'a, M> {
    fn new(map: &'a M, order: &'a [usize], config: NestedConfig, scan: Option<usize>) -> Self {
        Self {
            map,
            order,
            config,
            out: vec![0.0; map.dim()],
            cache: vec![HashMap::new(); order.len()],
            evaluations: 0,
            scan,
            single_crossing: true,
        }
    }

    /// The reduced map at level `k`: all inner levels re-solved at `t`.
    fn reduced(&mut self, k: usize, t: f64, x: &mut [f64]) -> Result<f64> {
        x[self.order[k]] = t;
        if k > 0 {
            self.solve_level(k - 1, x)?;
        }
        self.map.eval_into(x, &mut self.out);
        self.evaluations += 1;
        Ok(self.out[self.order[k]])
    }

    fn solve_level(&mut self, k: usize, x: &mut [f64]) -> Result<()> {
        let order = self.order;
        let key: Vec<u64> = order[k + 1..].iter().map(|&c| x[c].to_bits()).collect();
        if let Some(values) = self.cache[k].get(&key) {
            for (&c, &v) in order[..=k].iter().zip(values) {
                x[c] = v;
            }
            return Ok(());
        }

        let coordinate = order[k];
        if let Some(points) = self.scan {
            let (lo, hi) = (self.config.margin, 1.0 - self.config.margin);
            let mut g = Vec::with_capacity(points);
            for j in 0..points {
                let t = lo + (hi - lo) * j as f64 / (points - 1) as f64;
                g.push(self.reduced(k, t, x).map_err(|e| wrap(e, coordinate))? - t);
            }
            if sign_changes(&g) != 1 {
                self.single_crossing = false;
            }
        }

        let config = self.config;
        let solved = bisect(coordinate, &config, |t| self.reduced(k, t, x)).map_err(|e| wrap(e, coordinate))?;
        x[coordinate] = solved.value;
        if k > 0 {
            self.solve_level(k - 1, x)?;
        }
        let values = order[..=k].iter().map(|&c| x[c]).collect();
        self.cache[k].insert(key, values);
        Ok(())
    }
}

fn check_order(dim: usize, order: &[usize], config: &NestedConfig) -> Result<()> {
    config.validate()?;
    if dim > config.max_depth {
        return Err(Error::TooDeep {
            dim,
            max_depth: config.max_depth,
        });
    }
    if order.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: order.len(),
        });
    }
    let mut seen = vec![false; dim];
    for &c in order {
        if c >= dim {
            return Err(Error::IndexOutOfRange { index: c, dim });
        }
        if std::mem::replace(&mut seen[c], true) {
            return Err(Error::InvalidConfig(format!("order is not a permutation: {order:?}")));
        }
    }
    Ok(())
}

/// Solve `f(x) = x` by nested bisection. `order[0]` is eliminated first
/// (innermost) and `order[dim - 1]` is solved last over its reduced map.
pub fn nested_solve<M: FixedPointMap + ?Sized>(
    map: &M,
    order: &[usize],
    config: &NestedConfig,
) -> Result<NestedSolution> {
    let dim = map.dim();
    check_order(dim, order, config)?;

    let mut solver = Nested::new(map, order, *config, None);
    let mut x = vec![0.5; dim];
    solver.solve_level(dim - 1, &mut x)?;

    let mut fx = vec![0.0; dim];
    map.eval_into(&x, &mut fx);
    let residual = distance(&fx, &x);
    if residual.is_nan() || residual > NESTED_RESIDUAL_THRESHOLD {
        return Err(Error::ResidualTooLarge {
            residual,
            threshold: NESTED_RESIDUAL_THRESHOLD,
        });
    }
    Ok(NestedSolution {
        solution: UnitPoint::new(x)?,
        residual,
        evaluations: solver.evaluations + 1,
    })
}

/// Grid screen for a unique fixed point.
///
/// Runs the nested construction, and before each bisection samples the
/// reduced `g` on `points` evenly spaced values; returns `true` only if every
/// scan showed exactly one sign change.
pub fn uniqueness_screen<M: FixedPointMap + ?Sized>(
    map: &M,
    order: &[usize],
    config: &NestedConfig,
    points: usize,
) -> Result<bool> {
    check_order(map.dim(), order, config)?;
    if points < 2 {
        return Err(Error::InvalidParameter {
            name: "points",
            reason: "a scan needs at least two points".into(),
        });
    }
    let mut solver = Nested::new(map, order, *config, Some(points));
    let mut x = vec![0.5; map.dim()];
    solver.solve_level(map.dim() - 1, &mut x)?;
    Ok(solver.single_crossing)
}

/// `F*` of coordinate `free_index` sampled along one parameter axis.
///
/// `frozen_base` holds the `dim - 1` frozen coordinates (free slot removed);
/// `vary_index` is a full-space coordinate index distinct from `free_index`.
pub fn inner_solution_curve<M: FixedPointMap + ?Sized>(
    map: &M,
    free_index: usize,
    frozen_base: &[f64],
    vary_index: usize,
    samples: &[f64],
    config: &NestedConfig,
) -> Result<Vec<(f64, f64)>> {
    let dim = map.dim();
    if vary_index >= dim {
        return Err(Error::IndexOutOfRange { index: vary_index, dim });
    }
    if vary_index == free_index {
        return Err(Error::InvalidConfig("vary_index must differ from free_index".into()));
    }
    let slot = if vary_index < free_index {
        vary_index
    } else {
        vary_index - 1
    };
    let mut frozen = frozen_base.to_vec();
    samples
        .iter()
        .map(|&s| {
            if slot < frozen.len() {
                frozen[slot] = s;
            }
            let r = crate::map::restrict(map, free_index, &frozen)?;
            let v = inner_fixed_point(&r, config).map_err(|e| Error::Sample {
                sample: s,
                source: Box::new(e),
            })?;
            Ok((s, v.value))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::{restrict, FnMap};
    use crate::picard::{picard_solve, SolverConfig};

    fn toy2() -> impl FixedPointMap {
        FnMap::new(2, |x: &[f64], o: &mut [f64]| {
            o[0] = (x[0] + x[1] + 1.0) / 4.0;
            o[1] = (x[0] + 1.0) / 3.0;
        })
    }

    fn scalar(f: impl Fn(f64) -> f64 + Send + Sync) -> impl FixedPointMap {
        FnMap::new(1, move |x: &[f64], o: &mut [f64]| o[0] = f(x[0]))
    }

    fn solve1(f: impl Fn(f64) -> f64 + Send + Sync) -> InnerSolution {
        let m = scalar(f);
        let r = restrict(&m, 0, &[]).unwrap();
        inner_fixed_point(&r, &NestedConfig::default()).unwrap()
    }

    #[test]
    fn inner_examples() {
        assert!((solve1(|_| 0.8).value - 0.8).abs() < 1e-10);
        assert!((solve1(|t| (t + 1.5) / 4.0).value - 0.5).abs() < 1e-10);
        assert!((solve1(|t| (1.0 + t) / 3.0).value - 0.5).abs() < 1e-10);
    }

    #[test]
    fn bisection_count_is_bounded_exactly() {
        let cfg = NestedConfig::default();
        assert_eq!(cfg.max_bisections(), 34);
        let s = solve1(|t| 0.3 + 0.2 * t.sin());
        assert_eq!(s.bisections, 34);
        assert!(s.bracket.1 - s.bracket.0 <= cfg.inner_tolerance);
        let m = scalar(|t| 0.3 + 0.2 * t.sin());
        assert!(m.dim() == 1);
        let (lo, hi) = s.bracket;
        assert!(0.3 + 0.2 * lo.sin() - lo > 0.0);
        assert!(0.3 + 0.2 * hi.sin() - hi < 0.0);
    }

    #[test]
    fn sign_violation_is_reported_as_boundary_error() {
        let m = scalar(|t| t / 2.0);
        let r = restrict(&m, 0, &[]).unwrap();
        let err = inner_fixed_point(&r, &NestedConfig::default()).unwrap_err();
        assert!(matches!(err, Error::BoundaryViolated { coordinate: 0, .. }));

        let m = scalar(|t| (t + 1.0) / 2.0);
        let r = restrict(&m, 0, &[]).unwrap();
        assert!(matches!(
            inner_fixed_point(&r, &NestedConfig::default()),
            Err(Error::BoundaryViolated { .. })
        ));
    }

    #[test]
    fn exact_zero_at_endpoint_returns_it() {
        let cfg = NestedConfig::default();
        let s = solve1(move |_| 1e-9);
        assert_eq!(s.value, cfg.margin);
        assert_eq!(s.bisections, 0);
    }

    #[test]
    fn non_finite_evaluation_errors() {
        let m = scalar(|t| if t > 0.4 { f64::NAN } else { 0.9 });
        let r = restrict(&m, 0, &[]).unwrap();
        assert!(matches!(
            inner_fixed_point(&r, &NestedConfig::default()),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn nested_examples() {
        let s = nested_solve(&scalar(|t| (1.0 + t) / 3.0), &[0], &NestedConfig::default()).unwrap();
        assert!((s.solution.values()[0] - 0.5).abs() < 1e-8);

        let s = nested_solve(&toy2(), &[0, 1], &NestedConfig::default()).unwrap();
        for v in s.solution.values() {
            assert!((v - 0.5).abs() < 1e-8);
        }
        assert!(s.residual < 1e-9);
    }

    #[test]
    fn inner_curve_is_closed_form() {
        let grid: Vec<f64> = (1..=9).map(|k| k as f64 / 10.0).collect();
        let curve = inner_solution_curve(&toy2(), 0, &[0.5], 1, &grid, &NestedConfig::default()).unwrap();
        for (s, v) in curve {
            assert!((v - (s + 1.0) / 3.0).abs() < 1e-8);
        }
        let at = inner_solution_curve(&toy2(), 0, &[0.5], 1, &[0.2], &NestedConfig::default()).unwrap();
        assert!((at[0].1 - 0.4).abs() < 1e-8);

        let c = FnMap::new(2, |_: &[f64], o: &mut [f64]| o.fill(0.7));
        let curve = inner_solution_curve(&c, 1, &[0.5], 0, &grid, &NestedConfig::default()).unwrap();
        assert!(curve.iter().all(|(_, v)| (v - 0.7).abs() < 1e-10));
    }

    #[test]
    fn inner_curve_errors_name_the_sample() {
        // f_0 = x_1 / 2 + 0.01 breaks the lower sign condition only when x_1 is tiny
        let f = FnMap::new(2, |x: &[f64], o: &mut [f64]| {
            o[0] = if x[1] < 0.05 { x[0] / 2.0 } else { 0.5 };
            o[1] = 0.5;
        });
        let err = inner_solution_curve(&f, 0, &[0.5], 1, &[0.5, 0.01], &NestedConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Sample { sample, .. } if sample == 0.01));
        assert!(inner_solution_curve(&f, 0, &[0.5], 0, &[0.5], &NestedConfig::default()).is_err());
    }

    #[test]
    fn failure_path_lists_coordinates_outer_to_inner() {
        let f = FnMap::new(2, |x: &[f64], o: &mut [f64]| {
            o[0] = x[0] / 2.0;
            o[1] = 0.5;
        });
        let err = nested_solve(&f, &[0, 1], &NestedConfig::default()).unwrap_err();
        match err {
            Error::Nested { path, source } => {
                assert_eq!(path, vec![1, 0]);
                assert!(matches!(*source, Error::BoundaryViolated { coordinate: 0, .. }));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn order_and_depth_are_validated() {
        let cfg = NestedConfig::default();
        assert!(nested_solve(&toy2(), &[0, 0], &cfg).is_err());
        assert!(nested_solve(&toy2(), &[0], &cfg).is_err());
        assert!(nested_solve(&toy2(), &[0, 2], &cfg).is_err());
        let big = FnMap::new(5, |_: &[f64], o: &mut [f64]| o.fill(0.5));
        assert!(matches!(
            nested_solve(&big, &[0, 1, 2, 3, 4], &cfg),
            Err(Error::TooDeep { dim: 5, max_depth: 4 })
        ));
        let bad = NestedConfig {
            inner_tolerance: 1e-3,
            ..cfg
        };
        assert!(nested_solve(&toy2(), &[0, 1], &bad).is_err());
    }

    #[test]
    fn agrees_with_picard_under_every_order() {
        let f = FnMap::new(3, |x: &[f64], o: &mut [f64]| {
            o[0] = 0.2 + 0.3 * x[1] * x[2];
            o[1] = 0.1 + 0.5 * x[0].powi(2) + 0.1 * x[2];
            o[2] = (0.5 + 0.4 * (x[0] - x[1])).clamp(0.01, 0.99);
        });
        let p = picard_solve(&f, &UnitPoint::midpoint(3), &SolverConfig::with_tolerance(1e-9)).unwrap();
        for order in [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
            assert!(uniqueness_screen(&f, &order, &NestedConfig::default(), 9).unwrap());
            let s = nested_solve(&f, &order, &NestedConfig::default()).unwrap();
            for (a, b) in s.solution.values().iter().zip(p.solution.values()) {
                assert!((a - b).abs() < 1e-5, "order {order:?}");
            }
        }
    }

    #[test]
    fn screen_flags_multiple_crossings() {
        // g(t) = 0.5 + 0.45 sin(6 pi t) - t crosses zero several times
        let f = scalar(|t| 0.5 + 0.45 * (6.0 * std::f64::consts::PI * t).sin());
        assert!(!uniqueness_screen(&f, &[0], &NestedConfig::default(), 64).unwrap());
        assert!(uniqueness_screen(&scalar(|t| (1.0 + t) / 3.0), &[0], &NestedConfig::default(), 64).unwrap());
    }
}
