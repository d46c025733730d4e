//! Fixed-point solvers on the open unit hypercube, with a reference
//! single-gateway LoRaWAN uplink/downlink success-probability model.
//!
//! * [`picard`]: direct fixed-point iteration with a Euclidean step stop.
//! * [`nested`]: the constructive nested-bisection existence solver.
//! * [`diagnostics`]: continuity probes of inner solutions and contraction
//!   estimates from finite-difference Jacobians.
//! * [`lorawan`]: the 12-dimensional reference model.
//! * [`harness`]: parameter sweeps, iteration statistics, CSV and SVG output.
//! * [`verify`]: the property suites behind `fpnet verify`.

pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod lorawan;
pub mod map;
pub mod nested;
pub mod picard;
pub mod point;
pub mod toys;
pub mod verify;

pub use diagnostics::{continuity_probe, contraction_estimate, ContinuityReport, ContractionReport};
pub use error::{Error, Result};
pub use harness::{run_sweep, summarize, GroupSummary, SweepGrid, SweepRecord, SweptParameter};
pub use lorawan::{build_model, LorawanModel, SweepParameters};
pub use map::{restrict, verify_boundary_property, FixedPointMap, FnMap, RestrictedMap, Subsystem};
pub use nested::{inner_fixed_point, nested_solve, NestedConfig};
pub use picard::{picard_solve, solve_trajectory, SolveResult, SolverConfig};
pub use point::{euclidean_distance, UnitPoint};
