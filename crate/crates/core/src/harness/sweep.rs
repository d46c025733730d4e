use std::time::Instant;

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lorawan::{build_model, SweepParameters, NUM_SF, STATE_DIM};
use crate::picard::{picard_solve, SolverConfig};
use crate::point::UnitPoint;

/// Starting points are drawn uniformly from `(INIT_MARGIN, 1 - INIT_MARGIN)`.
pub const INIT_MARGIN: f64 = 1e-6;

/// Seeded uniform starting point.
pub fn random_init(dim: usize, seed: u64) -> UnitPoint {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..dim.max(1))
        .map(|_| INIT_MARGIN + (1.0 - 2.0 * INIT_MARGIN) * rng.sample::<f64, _>(Open01))
        .collect();
    UnitPoint::new(values).expect("samples lie strictly inside the cube")
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of run `(config_index, init_index)`, independent of execution order.
pub fn derive_run_seed(base_seed: u64, config_index: usize, init_index: usize) -> u64 {
    splitmix64(splitmix64(base_seed ^ splitmix64(config_index as u64)) ^ init_index as u64)
}

/// Reconstruction extras held fixed across a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixedExtras {
    #[serde(rename = "N")]
    pub n: u32,
    pub q: [f64; NUM_SF],
    #[serde(rename = "T7")]
    pub t7: f64,
    pub d: u32,
}

impl Default for FixedExtras {
    fn default() -> Self {
        let p = SweepParameters::default();
        Self {
            n: p.n,
            q: p.q,
            t7: p.t7,
            d: p.d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    pub alpha_values: Vec<f64>,
    pub m_values: Vec<u32>,
    pub p_values: Vec<f64>,
    #[serde(rename = "C_values")]
    pub c_values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    pub inits_per_config: usize,
    pub base_seed: u64,
    pub fixed: FixedExtras,
}

impl Default for SweepGrid {
    /// 5 x 4 x 3 x 2 x 3 configurations, 10 starts each: 3600 runs.
    fn default() -> Self {
        Self {
            alpha_values: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            m_values: vec![1, 2, 4, 8],
            p_values: vec![0.0, 0.5, 1.0],
            c_values: vec![0.01, 0.1],
            lambda_values: vec![1.0 / 6000.0, 1.0 / 600.0, 1.0 / 60.0],
            inits_per_config: 10,
            base_seed: 1,
            fixed: FixedExtras::default(),
        }
    }
}

impl SweepGrid {
    /// A grid with one value per parameter taken from `params`.
    pub fn single(params: &SweepParameters, inits_per_config: usize, base_seed: u64) -> Self {
        Self {
            alpha_values: vec![params.alpha],
            m_values: vec![params.m],
            p_values: vec![params.p],
            c_values: vec![params.c],
            lambda_values: vec![params.lambda],
            inits_per_config,
            base_seed,
            fixed: FixedExtras {
                n: params.n,
                q: params.q,
                t7: params.t7,
                d: params.d,
            },
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let grid: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        grid.validate()?;
        Ok(grid)
    }

    pub fn config_count(&self) -> usize {
        self.alpha_values.len()
            * self.m_values.len()
            * self.p_values.len()
            * self.c_values.len()
            * self.lambda_values.len()
    }

    pub fn run_count(&self) -> usize {
        self.config_count() * self.inits_per_config
    }

    pub fn validate(&self) -> Result<()> {
        if self.config_count() == 0 {
            return Err(Error::InvalidConfig(
                "every parameter list needs at least one value".into(),
            ));
        }
        if self.inits_per_config == 0 {
            return Err(Error::InvalidConfig("inits_per_config must be at least 1".into()));
        }
        (0..self.config_count()).try_for_each(|k| self.parameters(k).validate())
    }

    /// Parameters of configuration `index`; `alpha` varies slowest, `lambda` fastest.
    pub fn parameters(&self, index: usize) -> SweepParameters {
        let mut k = index;
        let mut pick = |len: usize| {
            let i = k % len;
            k /= len;
            i
        };
        let l = pick(self.lambda_values.len());
        let c = pick(self.c_values.len());
        let p = pick(self.p_values.len());
        let m = pick(self.m_values.len());
        let a = pick(self.alpha_values.len());
        SweepParameters {
            alpha: self.alpha_values[a],
            m: self.m_values[m],
            p: self.p_values[p],
            c: self.c_values[c],
            lambda: self.lambda_values[l],
            n: self.fixed.n,
            q: self.fixed.q,
            t7: self.fixed.t7,
            d: self.fixed.d,
        }
    }
}

/// One solved instance of the sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub alpha: f64,
    pub m: u32,
    pub p: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub lambda: f64,
    pub config_index: usize,
    pub init_index: usize,
    pub run_seed: u64,
    pub x0: UnitPoint,
    pub iterations: usize,
    pub converged: bool,
    pub final_step: f64,
    pub residual: f64,
    /// Seconds; zero unless timing was requested.
    pub wall_time: f64,
    pub solution: Option<UnitPoint>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    pub parallel: bool,
    /// Wall-clock timing makes output differ between executions.
    pub record_wall_time: bool,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            parallel: true,
            record_wall_time: false,
        }
    }
}

/// Solve a single `(config, init)` pair exactly as the sweep would.
pub fn run_single(
    grid: &SweepGrid,
    solver: &SolverConfig,
    config_index: usize,
    init_index: usize,
    record_wall_time: bool,
) -> SweepRecord {
    let params = grid.parameters(config_index);
    let run_seed = derive_run_seed(grid.base_seed, config_index, init_index);
    let x0 = random_init(STATE_DIM, run_seed);

    let start = Instant::now();
    let outcome = build_model(&params).and_then(|model| picard_solve(&model, &x0, solver));
    let wall_time = if record_wall_time {
        start.elapsed().as_secs_f64()
    } else {
        0.0
    };

    let mut record = SweepRecord {
        alpha: params.alpha,
        m: params.m,
        p: params.p,
        c: params.c,
        lambda: params.lambda,
        config_index,
        init_index,
        run_seed,
        x0,
        iterations: 0,
        converged: false,
        final_step: f64::NAN,
        residual: f64::NAN,
        wall_time,
        solution: None,
        error: None,
    };
    match outcome {
        Ok(r) => {
            record.iterations = r.iterations;
            record.converged = r.converged;
            record.final_step = r.final_step;
            record.residual = r.residual;
            record.solution = Some(r.solution);
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Run every `(config, init)` pair of `grid`, in parallel, without timing.
pub fn run_sweep(grid: &SweepGrid, solver: &SolverConfig) -> Result<Vec<SweepRecord>> {
    run_sweep_with(grid, solver, SweepOptions::default())
}

/// Records come back in index order regardless of `options.parallel`.
pub fn run_sweep_with(grid: &SweepGrid, solver: &SolverConfig, options: SweepOptions) -> Result<Vec<SweepRecord>> {
    grid.validate()?;
    solver.validate()?;
    let inits = grid.inits_per_config;
    let one = |k: usize| run_single(grid, solver, k / inits, k % inits, options.record_wall_time);
    let records = if options.parallel {
        (0..grid.run_count()).into_par_iter().map(one).collect()
    } else {
        (0..grid.run_count()).map(one).collect()
    };
    Ok(records)
}
