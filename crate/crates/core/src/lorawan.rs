//! Reference single-gateway LoRaWAN uplink/downlink model.
//!
//! This is a reference instance, not the published model: it keeps the
//! 12-dimensional state `[S7_UL..S12_UL, S7_DL..S12_DL]`, the parameter
//! names (alpha, m, p, C, lambda) and the UL/DL coupling, and fills in the
//! rest with the simplest smooth submodels:
//!
//! * per-SF pure ALOHA on orthogonal spreading factors,
//! * Erlang-B blocking over the gateway demodulator chains,
//! * confirmed traffic retried up to `m` times until both the uplink and its
//!   acknowledgment get through,
//! * a half-duplex gateway whose acknowledgment airtime is admitted in
//!   proportion `C / (C + U)` to its duty-cycle budget.
//!
//! Given the current iterate `S`, with `T_i` the SF-`i` time-on-air:
//!
//! ```text
//! sigma_i = S_i^UL S_i^DL,          E_i = (1 - (1 - sigma_i)^m) / sigma_i
//! G_i     = N q_i lambda T_i ((1 - alpha) + alpha E_i)
//! a_i     = p T_i + (1 - p) T_12
//! U       = sum_j N q_j lambda alpha E_j S_j^UL a_j
//! A       = C / (C + U)
//! f_i^UL  = exp(-2 G_i) (1 - B(d, sum_j G_j)) exp(-A U)
//! f_i^DL  = A exp(-G_i)
//! ```

use rand::distr::Open01;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::map::FixedPointMap;

pub const SPREADING_FACTORS: [u8; 6] = [7, 8, 9, 10, 11, 12];
pub const NUM_SF: usize = 6;
pub const STATE_DIM: usize = 2 * NUM_SF;

/// Numerical floor/ceiling on model outputs.
pub const OUTPUT_CLAMP: f64 = 1e-12;

/// Index of `S_sf^UL` in the state vector.
pub fn ul_index(sf: u8) -> usize {
    debug_assert!((7..=12).contains(&sf));
    usize::from(sf - 7)
}

/// Index of `S_sf^DL` in the state vector.
pub fn dl_index(sf: u8) -> usize {
    NUM_SF + ul_index(sf)
}

/// Human-readable coordinate names in layout order.
pub fn coordinate_names() -> Vec<String> {
    let ul = SPREADING_FACTORS.iter().map(|sf| format!("S{sf}_UL"));
    let dl = SPREADING_FACTORS.iter().map(|sf| format!("S{sf}_DL"));
    ul.chain(dl).collect()
}

/// Model parameters. Serialized field names are the ones used in
/// configuration files; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParameters {
    /// Fraction of devices sending confirmed traffic.
    pub alpha: f64,
    /// Maximum transmission attempts per confirmed message.
    pub m: u32,
    /// Probability the ACK goes out in the first receive window (same SF)
    /// rather than the second (SF12).
    pub p: f64,
    /// Gateway downlink duty-cycle budget.
    #[serde(rename = "C")]
    pub c: f64,
    /// Messages per second per device.
    pub lambda: f64,
    #[serde(rename = "N")]
    pub n: u32,
    /// Fraction of devices on SF7..SF12.
    pub q: [f64; NUM_SF],
    /// Time-on-air at SF7, seconds.
    #[serde(rename = "T7")]
    pub t7: f64,
    /// Demodulator chains at the gateway.
    pub d: u32,
}

impl Default for SweepParameters {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            m: 8,
            p: 0.9,
            c: 0.01,
            lambda: 1.0 / 600.0,
            n: 500,
            q: [1.0 / 6.0; NUM_SF],
            t7: 0.0566,
            d: 8,
        }
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

impl SweepParameters {
    pub fn validate(&self) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !unit(self.alpha) {
            return Err(invalid("alpha", format!("{} not in [0, 1]", self.alpha)));
        }
        if self.m < 1 {
            return Err(invalid("m", "must be at least 1"));
        }
        if !unit(self.p) {
            return Err(invalid("p", format!("{} not in [0, 1]", self.p)));
        }
        if !(self.c > 0.0 && self.c <= 1.0) {
            return Err(invalid("C", format!("{} not in (0, 1]", self.c)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(invalid("lambda", format!("{} is not a positive real", self.lambda)));
        }
        if self.n < 1 {
            return Err(invalid("N", "must be at least 1"));
        }
        if self.q.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(invalid("q", "fractions must be non-negative"));
        }
        let total: f64 = self.q.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid("q", format!("fractions sum to {total}, not 1")));
        }
        if !(self.t7 > 0.0 && self.t7.is_finite()) {
            return Err(invalid("T7", format!("{} is not a positive real", self.t7)));
        }
        if self.d < 1 {
            return Err(invalid("d", "must be at least 1"));
        }
        Ok(())
    }

    /// Parse a flat JSON document using the field names above.
    pub fn from_json(text: &str) -> Result<Self> {
        let params: Self = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        params.validate()?;
        Ok(params)
    }
}

/// Time-on-air per SF, doubling with each step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadingFactorTable {
    pub toa: [f64; NUM_SF],
}

impl SpreadingFactorTable {
    pub fn from_t7(t7: f64) -> Self {
        let mut toa = [0.0; NUM_SF];
        for (k, t) in toa.iter_mut().enumerate() {
            *t = t7 * f64::from(1u32 << k);
        }
        Self { toa }
    }
}

/// Erlang-B blocking probability for `servers` servers and offered `load`
/// (Erlangs), via `B_k = load B_{k-1} / (k + load B_{k-1})`.
pub fn erlang_b(servers: u32, load: f64) -> f64 {
    let mut b = 1.0;
    for k in 1..=servers {
        let lb = load * b;
        b = lb / (f64::from(k) + lb);
    }
    b
}

/// Expected transmissions when each attempt succeeds with probability
/// `sigma` and at most `m` attempts are made: `(1 - (1 - sigma)^m) / sigma`.
pub fn expected_attempts(sigma: f64, m: u32) -> f64 {
    if sigma >= 1.0 {
        return 1.0;
    }
    // 1 - (1-s)^m = -expm1(m ln(1-s)) stays accurate as s -> 0
    let numerator = -(f64::from(m) * (-sigma).ln_1p()).exp_m1();
    if sigma < 1e-300 || numerator == 0.0 {
        return f64::from(m);
    }
    (numerator / sigma).clamp(1.0, f64::from(m))
}

/// The reference model as a 12-dimensional [`FixedPointMap`].
#[derive(Debug, Clone, PartialEq)]
pub struct LorawanModel {
    params: SweepParameters,
    table: SpreadingFactorTable,
    /// `N q_i lambda` per SF.
    rate: [f64; NUM_SF],
    /// ACK airtime per SF.
    ack: [f64; NUM_SF],
}

/// Build the reference model for `params`.
pub fn build_model(params: &SweepParameters) -> Result<LorawanModel> {
    params.validate()?;
    let table = SpreadingFactorTable::from_t7(params.t7);
    let t12 = table.toa[NUM_SF - 1];
    let mut rate = [0.0; NUM_SF];
    let mut ack = [0.0; NUM_SF];
    for i in 0..NUM_SF {
        rate[i] = f64::from(params.n) * params.q[i] * params.lambda;
        ack[i] = params.p * table.toa[i] + (1.0 - params.p) * t12;
    }
    Ok(LorawanModel {
        params: params.clone(),
        table,
        rate,
        ack,
    })
}

/// Intermediate quantities of one evaluation, exposed for inspection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModelTerms {
    pub attempts: [f64; NUM_SF],
    pub load: [f64; NUM_SF],
    pub downlink_demand: f64,
    pub admission: f64,
    pub blocking: f64,
}

impl LorawanModel {
    pub fn params(&self) -> &SweepParameters {
        &self.params
    }

    pub fn table(&self) -> &SpreadingFactorTable {
        &self.table
    }

    pub fn terms(&self, x: &[f64]) -> ModelTerms {
        let alpha = self.params.alpha;
        let mut attempts = [0.0; NUM_SF];
        let mut load = [0.0; NUM_SF];
        let mut demand = 0.0;
        for i in 0..NUM_SF {
            let (ul, dl) = (x[i], x[NUM_SF + i]);
            attempts[i] = expected_attempts(ul * dl, self.params.m);
            load[i] = self.rate[i] * self.table.toa[i] * ((1.0 - alpha) + alpha * attempts[i]);
            demand += self.rate[i] * alpha * attempts[i] * ul * self.ack[i];
        }
        let c = self.params.c;
        ModelTerms {
            attempts,
            load,
            downlink_demand: demand,
            admission: c / (c + demand),
            blocking: erlang_b(self.params.d, load.iter().sum()),
        }
    }
}

impl FixedPointMap for LorawanModel {
    fn dim(&self) -> usize {
        STATE_DIM
    }

    fn eval_into(&self, x: &[f64], out: &mut [f64]) {
        let t = self.terms(x);
        let gateway_idle = (-t.admission * t.downlink_demand).exp();
        let available = 1.0 - t.blocking;
        let clamp = |v: f64| v.clamp(OUTPUT_CLAMP, 1.0 - OUTPUT_CLAMP);
        for i in 0..NUM_SF {
            out[i] = clamp((-2.0 * t.load[i]).exp() * available * gateway_idle);
            out[NUM_SF + i] = clamp(t.admission * (-t.load[i]).exp());
        }
    }
}

/// Range over which random parameter tuples are drawn for property checks.
///
/// The swept parameters cover the default sweep grid except that `lambda`
/// stops at 1/600: above that, retransmission-saturated SF12 uplinks drop
/// below the 1e-6 boundary probe and the sign conditions no longer hold.
/// The non-swept extras stay at their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterDomain {
    pub alpha: (f64, f64),
    pub m: (u32, u32),
    pub p: (f64, f64),
    pub c: (f64, f64),
    /// Sampled log-uniformly.
    pub lambda: (f64, f64),
}

impl Default for ParameterDomain {
    fn default() -> Self {
        Self {
            alpha: (0.0, 1.0),
            m: (1, 8),
            p: (0.0, 1.0),
            c: (0.01, 0.1),
            lambda: (1.0 / 6000.0, 1.0 / 600.0),
        }
    }
}

impl ParameterDomain {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> SweepParameters {
        let mut uniform = |(lo, hi): (f64, f64)| lo + (hi - lo) * rng.sample::<f64, _>(Open01);
        let alpha = uniform(self.alpha);
        let p = uniform(self.p);
        let c = uniform(self.c);
        let (llo, lhi) = self.lambda;
        let lambda = uniform((llo.ln(), lhi.ln())).exp();
        let m = rng.random_range(self.m.0..=self.m.1);
        SweepParameters {
            alpha,
            m,
            p,
            c,
            lambda,
            ..SweepParameters::default()
        }
    }
}
