//! Property suites run by `fpnet verify`. Each suite returns a serializable
//! outcome; a suite passes only if every one of its checks passes.

use std::fmt;
use std::str::FromStr;

use rand::distr::Open01;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::diagnostics::{continuity_probe, contraction_estimate, default_steps, probe_config, DEFAULT_FD_STEP};
use crate::error::{Error, Result};
use crate::lorawan::{build_model, ParameterDomain, SweepParameters, STATE_DIM};
use crate::map::{verify_boundary_property, FixedPointMap, Subsystem, DEFAULT_BOUNDARY_MARGIN};
use crate::nested::{nested_solve, uniqueness_screen, NestedConfig};
use crate::picard::{picard_solve, SolverConfig};
use crate::point::UnitPoint;
use crate::toys;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Boundary,
    Continuity,
    Oracle,
    Contraction,
}

impl Suite {
    pub const ALL: [Suite; 4] = [Suite::Boundary, Suite::Continuity, Suite::Oracle, Suite::Contraction];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Boundary => "boundary",
            Suite::Continuity => "continuity",
            Suite::Oracle => "oracle",
            Suite::Contraction => "contraction",
        }
    }

    pub fn run(self, seed: u64) -> Result<SuiteOutcome> {
        match self {
            Suite::Boundary => boundary_suite(100, 1000, seed),
            Suite::Continuity => continuity_suite(20, seed),
            Suite::Oracle => oracle_suite(20, seed),
            Suite::Contraction => contraction_suite(),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub suite: &'static str,
    pub passed: bool,
    pub checks: usize,
    pub failures: Vec<String>,
    pub details: Value,
}

impl SuiteOutcome {
    fn new(suite: Suite) -> Self {
        Self {
            suite: suite.name(),
            passed: true,
            checks: 0,
            failures: Vec::new(),
            details: Value::Null,
        }
    }

    fn check(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.passed = false;
            self.failures.push(what());
        }
    }
}

/// Boundary sign conditions of the reference model for `tuples` random
/// parameter tuples drawn from [`ParameterDomain::default`].
pub fn boundary_suite(tuples: usize, probes: usize, seed: u64) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(Suite::Boundary);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = ParameterDomain::default();
    let mut evaluations = 0;
    for k in 0..tuples {
        let params = domain.sample(&mut rng);
        let model = build_model(&params)?;
        let r = verify_boundary_property(&model, probes, DEFAULT_BOUNDARY_MARGIN, seed.wrapping_add(k as u64))?;
        evaluations += r.evaluations;
        out.check(r.passed, || {
            format!("tuple {k} {params:?}: {} failing probes", r.failures)
        });
    }
    out.details =
        json!({ "tuples": tuples, "probes": probes, "margin": DEFAULT_BOUNDARY_MARGIN, "evaluations": evaluations });
    Ok(out)
}

/// Continuity of `F*` on the linear toy and on the reference model at
/// `bases` random base points, varying every other coordinate in turn.
pub fn continuity_suite(bases: usize, seed: u64) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(Suite::Continuity);
    let steps = default_steps();
    let cfg = probe_config();

    let toy = continuity_probe(&toys::linear_pair(), 0, &[0.5], 1, &steps, &cfg)?;
    let slope_ok = toy.lipschitz_estimates.iter().all(|l| (l - 1.0 / 3.0).abs() <= 1e-6);
    out.check(toy.pass && slope_ok, || {
        format!("linear_pair: {:?}", toy.lipschitz_estimates)
    });

    let model = build_model(&SweepParameters::default())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_slope: f64 = 0.0;
    for b in 0..bases {
        // keep the base far enough from 1 for the largest step
        let frozen: Vec<f64> = (0..STATE_DIM - 1)
            .map(|_| 0.02 + 0.96 * rng.sample::<f64, _>(Open01))
            .collect();
        for vary in 1..STATE_DIM {
            let r = continuity_probe(&model, 0, &frozen, vary, &steps, &cfg)?;
            max_slope = r.lipschitz_estimates.iter().cloned().fold(max_slope, f64::max);
            out.check(r.pass, || format!("base {b}, axis {vary}: deltas {:?}", r.deltas));
        }
    }
    out.details = json!({ "bases": bases, "axes": STATE_DIM - 1, "steps": steps, "max_lipschitz_estimate": max_slope });
    Ok(out)
}

/// Agreement between the nested construction and Picard iteration on the
/// shipped toys and on random 3-coordinate restrictions of the model that
/// pass a uniqueness grid screen.
pub fn oracle_suite(restrictions: usize, seed: u64) -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(Suite::Oracle);
    let tight = SolverConfig::with_tolerance(1e-9);
    let nested = NestedConfig::default();
    let mut worst: f64 = 0.0;

    let mut compare = |out: &mut SuiteOutcome, name: &str, map: &dyn FixedPointMap| -> Result<()> {
        let order: Vec<usize> = (0..map.dim()).collect();
        let n = nested_solve(map, &order, &nested)?;
        let p = picard_solve(map, &UnitPoint::midpoint(map.dim()), &tight)?;
        let gap = n
            .solution
            .values()
            .iter()
            .zip(p.solution.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(gap);
        out.check(p.converged && gap <= 1e-5, || format!("{name}: gap {gap:e}"));
        Ok(())
    };

    for (name, toy) in toys::all() {
        compare(&mut out, name, toy.as_ref())?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let domain = ParameterDomain::default();
    let mut accepted = 0;
    let mut screened_out = 0;
    while accepted < restrictions {
        if screened_out > 10 * restrictions {
            return Err(Error::InvalidConfig(
                "too many restrictions failed the uniqueness screen".into(),
            ));
        }
        let model = build_model(&domain.sample(&mut rng))?;
        let coords = sample(&mut rng, STATE_DIM, 3).into_vec();
        let background: Vec<f64> = (0..STATE_DIM).map(|_| rng.sample(Open01)).collect();
        let sub = Subsystem::new(&model, coords.clone(), &background)?;
        if !uniqueness_screen(&sub, &[0, 1, 2], &nested, 17)? {
            screened_out += 1;
            continue;
        }
        compare(&mut out, &format!("restriction {accepted} {coords:?}"), &sub)?;
        accepted += 1;
    }
    out.details = json!({ "toys": toys::all().len(), "restrictions": restrictions, "screened_out": screened_out, "max_gap": worst });
    Ok(out)
}

/// Contraction at the default-parameter fixed point and the linear toy's
/// dominant eigenvalue.
pub fn contraction_suite() -> Result<SuiteOutcome> {
    let mut out = SuiteOutcome::new(Suite::Contraction);
    let model = build_model(&SweepParameters::default())?;
    let fixed = picard_solve(
        &model,
        &UnitPoint::midpoint(STATE_DIM),
        &SolverConfig::with_tolerance(1e-12),
    )?;
    let r = contraction_estimate(&model, &fixed.solution, DEFAULT_FD_STEP)?;
    out.check(fixed.converged && r.contractive, || {
        format!("reference model: rho = {}", r.spectral_radius_estimate)
    });

    let toy = contraction_estimate(&toys::linear_pair(), &UnitPoint::midpoint(2), DEFAULT_FD_STEP)?;
    let exact = (0.25 + (1.0f64 / 16.0 + 1.0 / 3.0).sqrt()) / 2.0;
    out.check((toy.spectral_radius_estimate - exact).abs() <= 1e-3, || {
        format!("linear_pair: rho = {} vs {exact}", toy.spectral_radius_estimate)
    });
    out.details = json!({ "reference_model": r, "linear_pair": toy, "linear_pair_exact": exact });
    Ok(out)
}
