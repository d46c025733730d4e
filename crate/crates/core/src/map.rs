//! The map abstraction consumed by every solver, its one-coordinate and
//! coordinate-subset restrictions, and the boundary-sign verifier.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::point::{check_open_unit, UnitPoint};

/// Distance from {0, 1} at which boundary signs are probed.
pub const DEFAULT_BOUNDARY_MARGIN: f64 = 1e-6;

/// A deterministic system `f: (0,1)^n -> (0,1)^n`.
///
/// Implementations must be pure: the same input always yields bitwise
/// identical output, and evaluation never touches shared mutable state.
pub trait FixedPointMap: Send + Sync {
    fn dim(&self) -> usize;

    /// Writes `f(x)` into `out`. Both slices have length `dim()`.
    fn eval_into(&self, x: &[f64], out: &mut [f64]);

    fn boundary_margin(&self) -> f64 {
        DEFAULT_BOUNDARY_MARGIN
    }

    /// Checked evaluation: validates the input and the output domain.
    fn evaluate(&self, x: &UnitPoint) -> Result<UnitPoint> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: x.dim(),
            });
        }
        let mut out = vec![0.0; self.dim()];
        self.eval_into(x.values(), &mut out);
        UnitPoint::new(out)
    }
}

impl<M: FixedPointMap + ?Sized> FixedPointMap for &M {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).eval_into(x, out)
    }
    fn boundary_margin(&self) -> f64 {
        (**self).boundary_margin()
    }
}

impl<M: FixedPointMap + ?Sized> FixedPointMap for Box<M> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).eval_into(x, out)
    }
    fn boundary_margin(&self) -> f64 {
        (**self).boundary_margin()
    }
}

/// A map given by a closure, mostly for toys and tests.
pub struct FnMap<F> {
    dim: usize,
    f: F,
}

impl<F> FnMap<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        assert!(dim > 0, "map dimension must be positive");
        Self { dim, f }
    }
}

impl<F> FixedPointMap for FnMap<F>
where
    F: Fn(&[f64], &mut [f64]) + Send + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }
    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }
}

/// Inserts `t` at `free_index` into the `dim - 1` frozen values.
pub(crate) fn assemble(free_index: usize, t: f64, frozen: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(frozen.len() + 1);
    x.extend_from_slice(&frozen[..free_index]);
    x.push(t);
    x.extend_from_slice(&frozen[free_index..]);
    x
}

/// The scalar map `t -> f_i(x)` with every coordinate except `i` frozen.
#[derive(Clone)]
pub struct RestrictedMap<'a, M: ?Sized> {
    base: &'a M,
    free_index: usize,
    point: Vec<f64>,
}

impl<'a, M: FixedPointMap + ?Sized> RestrictedMap<'a, M> {
    pub fn free_index(&self) -> usize {
        self.free_index
    }

    /// The frozen coordinates, in layout order with the free slot removed.
    pub fn frozen(&self) -> Vec<f64> {
        let mut v = self.point.clone();
        v.remove(self.free_index);
        v
    }

    pub fn base(&self) -> &'a M {
        self.base
    }

    /// Component `free_index` of the base map at the assembled point.
    pub fn evaluate(&self, t: f64) -> f64 {
        let mut x = self.point.clone();
        x[self.free_index] = t;
        let mut out = vec![0.0; x.len()];
        self.base.eval_into(&x, &mut out);
        out[self.free_index]
    }
}

/// Freeze every coordinate but `free_index`.
pub fn restrict<'a, M: FixedPointMap + ?Sized>(
    map: &'a M,
    free_index: usize,
    frozen: &[f64],
) -> Result<RestrictedMap<'a, M>> {
    let dim = map.dim();
    if free_index >= dim {
        return Err(Error::IndexOutOfRange { index: free_index, dim });
    }
    if frozen.len() != dim - 1 {
        return Err(Error::DimensionMismatch {
            expected: dim - 1,
            actual: frozen.len(),
        });
    }
    check_open_unit(frozen)?;
    Ok(RestrictedMap {
        base: map,
        free_index,
        point: assemble(free_index, 0.5, frozen),
    })
}

/// The base map restricted to a subset of its coordinates, with the rest
/// held at fixed values. Itself a [`FixedPointMap`] of lower dimension.
pub struct Subsystem<'a, M: ?Sized> {
    base: &'a M,
    coords: Vec<usize>,
    background: Vec<f64>,
}

impl<'a, M: FixedPointMap + ?Sized> Subsystem<'a, M> {
    /// `background` is a full-dimension point; entries at `coords` are ignored.
    pub fn new(base: &'a M, coords: Vec<usize>, background: &[f64]) -> Result<Self> {
        let dim = base.dim();
        if background.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: background.len(),
            });
        }
        check_open_unit(background)?;
        if coords.is_empty() {
            return Err(Error::Empty("subsystem needs at least one coordinate"));
        }
        for (k, &c) in coords.iter().enumerate() {
            if c >= dim {
                return Err(Error::IndexOutOfRange { index: c, dim });
            }
            if coords[..k].contains(&c) {
                return Err(Error::InvalidConfig(format!("coordinate {c} listed twice")));
            }
        }
        Ok(Self {
            base,
            coords,
            background: background.to_vec(),
        })
    }

    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    /// Embed a subsystem point into the full space.
    pub fn lift(&self, x: &[f64]) -> Vec<f64> {
        let mut full = self.background.clone();
        for (&c, &v) in self.coords.iter().zip(x) {
            full[c] = v;
        }
        full
    }
}

impl<M: FixedPointMap + ?Sized> FixedPointMap for Subsystem<'_, M> {
    fn dim(&self) -> usize {
        self.coords.len()
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let full = self.lift(x);
        let mut full_out = vec![0.0; full.len()];
        self.base.eval_into(&full, &mut full_out);
        for (o, &c) in out.iter_mut().zip(&self.coords) {
            *o = full_out[c];
        }
    }

    fn boundary_margin(&self) -> f64 {
        self.base.boundary_margin()
    }
}

/// Which condition a boundary probe violated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryFailure {
    /// `F(margin) <= margin`
    Lower,
    /// `F(1 - margin) >= 1 - margin`
    Upper,
    /// Some output component left `(0,1)`.
    OutOfDomain,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryCounterexample {
    pub coordinate: usize,
    pub failure: BoundaryFailure,
    pub point: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundaryReport {
    pub passed: bool,
    pub margin: f64,
    pub evaluations: usize,
    pub failures: usize,
    /// The first few failures, in probe order.
    pub counterexamples: Vec<BoundaryCounterexample>,
}

const MAX_COUNTEREXAMPLES: usize = 16;

/// Checks the sign conditions `F_i(margin; p) > margin` and
/// `F_i(1 - margin; p) < 1 - margin` for every coordinate `i` over
/// `probe_count` random frozen contexts `p`.
pub fn verify_boundary_property<M: FixedPointMap + ?Sized>(
    map: &M,
    probe_count: usize,
    margin: f64,
    rng_seed: u64,
) -> Result<BoundaryReport> {
    if !(margin > 0.0 && margin < 0.5) {
        return Err(Error::InvalidParameter {
            name: "margin",
            reason: format!("{margin} not in (0, 0.5)"),
        });
    }
    if probe_count == 0 {
        return Err(Error::InvalidParameter {
            name: "probe_count",
            reason: "must be at least 1".into(),
        });
    }

    let dim = map.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut x = vec![0.0; dim];
    let mut out = vec![0.0; dim];
    let mut report = BoundaryReport {
        passed: true,
        margin,
        evaluations: 0,
        failures: 0,
        counterexamples: Vec::new(),
    };

    for coordinate in 0..dim {
        for _ in 0..probe_count {
            for v in x.iter_mut() {
                *v = rng.sample(Open01);
            }
            for (end, failure) in [(margin, BoundaryFailure::Lower), (1.0 - margin, BoundaryFailure::Upper)] {
                x[coordinate] = end;
                map.eval_into(&x, &mut out);
                report.evaluations += 1;

                let value = out[coordinate];
                let bad = match out.iter().position(|v| !(*v > 0.0 && *v < 1.0)) {
                    Some(j) => Some((BoundaryFailure::OutOfDomain, out[j])),
                    None => match failure {
                        BoundaryFailure::Lower if value <= end => Some((failure, value)),
                        BoundaryFailure::Upper if value >= end => Some((failure, value)),
                        _ => None,
                    },
                };
                if let Some((failure, value)) = bad {
                    report.passed = false;
                    report.failures += 1;
                    if report.counterexamples.len() < MAX_COUNTEREXAMPLES {
                        report.counterexamples.push(BoundaryCounterexample {
                            coordinate,
                            failure,
                            point: x.clone(),
                            value,
                        });
                    }
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy2() -> impl FixedPointMap {
        FnMap::new(2, |x: &[f64], out: &mut [f64]| {
            out[0] = (x[0] + x[1] + 1.0) / 4.0;
            out[1] = (x[0] + 1.0) / 3.0;
        })
    }

    #[test]
    fn constant_map_passes_boundary() {
        let f = FnMap::new(1, |_: &[f64], out: &mut [f64]| out[0] = 0.5);
        let r = verify_boundary_property(&f, 10, 1e-6, 1).unwrap();
        assert!(r.passed);
        assert_eq!(r.evaluations, 20);
    }

    #[test]
    fn halving_map_fails_at_lower_end() {
        let f = FnMap::new(1, |x: &[f64], out: &mut [f64]| out[0] = x[0] / 2.0);
        let r = verify_boundary_property(&f, 5, 1e-6, 1).unwrap();
        assert!(!r.passed);
        assert_eq!(r.failures, 5);
        assert!(r
            .counterexamples
            .iter()
            .all(|c| c.failure == BoundaryFailure::Lower && c.value == 0.5e-6));
    }

    #[test]
    fn out_of_domain_output_is_recorded() {
        let f = FnMap::new(2, |x: &[f64], out: &mut [f64]| {
            out[0] = 0.5;
            out[1] = if x[0] > 0.9 { 1.0 } else { 0.5 };
        });
        let r = verify_boundary_property(&f, 4, 1e-6, 3).unwrap();
        assert!(!r.passed);
        let c = &r.counterexamples[0];
        assert_eq!(c.failure, BoundaryFailure::OutOfDomain);
        assert_eq!(c.value, 1.0);
        assert!(c.point[0] > 0.9);
    }

    #[test]
    fn boundary_rejects_bad_arguments() {
        let f = toy2();
        assert!(verify_boundary_property(&f, 1, 0.5, 0).is_err());
        assert!(verify_boundary_property(&f, 1, 0.0, 0).is_err());
        assert!(verify_boundary_property(&f, 0, 1e-6, 0).is_err());
    }

    #[test]
    fn restriction_substitutes_frozen_values() {
        let f = toy2();
        let r0 = restrict(&f, 0, &[0.5]).unwrap();
        for t in [0.1, 0.3, 0.77] {
            assert_eq!(r0.evaluate(t), (t + 1.5) / 4.0);
        }
        let r1 = restrict(&f, 1, &[0.5]).unwrap();
        for t in [0.1, 0.3, 0.77] {
            assert_eq!(r1.evaluate(t), 0.5);
        }
        assert_eq!(r1.frozen(), vec![0.5]);
    }

    #[test]
    fn restriction_errors() {
        let f = toy2();
        assert!(matches!(restrict(&f, 2, &[0.5]), Err(Error::IndexOutOfRange { .. })));
        assert!(matches!(
            restrict(&f, 0, &[0.5, 0.5]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(restrict(&f, 0, &[1.0]), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn subsystem_lifts_and_projects() {
        let f = toy2();
        let s = Subsystem::new(&f, vec![1], &[0.2, 0.5]).unwrap();
        assert_eq!(s.dim(), 1);
        let mut out = [0.0];
        s.eval_into(&[0.9], &mut out);
        assert_eq!(out[0], 1.2 / 3.0);
        assert!(Subsystem::new(&f, vec![0, 0], &[0.2, 0.5]).is_err());
        assert!(Subsystem::new(&f, vec![2], &[0.2, 0.5]).is_err());
    }

    #[test]
    fn checked_evaluate_validates_dimension() {
        let f = toy2();
        assert!(f.evaluate(&UnitPoint::midpoint(3)).is_err());
        let y = f.evaluate(&UnitPoint::midpoint(2)).unwrap();
        assert_eq!(y.values(), &[0.5, 0.5]);
    }
}
