//! Small closed-form systems with known fixed points.

use crate::map::{FixedPointMap, FnMap};

/// `f(x) = (1 + x) / 3`, fixed point 1/2, derivative 1/3.
pub fn one_third() -> impl FixedPointMap {
    FnMap::new(1, |x: &[f64], o: &mut [f64]| o[0] = (1.0 + x[0]) / 3.0)
}

/// `f(x1, x2) = ((x1 + x2 + 1) / 4, (x1 + 1) / 3)`, fixed point (1/2, 1/2).
/// Its inner solution in the first coordinate is `F1*(x2) = (x2 + 1) / 3`.
pub fn linear_pair() -> impl FixedPointMap {
    FnMap::new(2, |x: &[f64], o: &mut [f64]| {
        o[0] = (x[0] + x[1] + 1.0) / 4.0;
        o[1] = (x[0] + 1.0) / 3.0;
    })
}

/// A smooth nonlinear 3-d system with a unique fixed point.
pub fn smooth_triple() -> impl FixedPointMap {
    FnMap::new(3, |x: &[f64], o: &mut [f64]| {
        o[0] = 0.2 + 0.3 * x[1] * x[2];
        o[1] = 0.1 + 0.5 * x[0] * x[0] + 0.1 * x[2];
        o[2] = 0.25 + 0.5 / (1.0 + (-4.0 * (x[0] - x[1])).exp());
    })
}

/// Every shipped toy with its name.
pub fn all() -> Vec<(&'static str, Box<dyn FixedPointMap>)> {
    vec![
        ("one_third", Box::new(one_third())),
        ("linear_pair", Box::new(linear_pair())),
        ("smooth_triple", Box::new(smooth_triple())),
    ]
}
