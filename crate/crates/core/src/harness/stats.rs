use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::SweepRecord;
use crate::error::{Error, Result};

/// The five parameters a sweep can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum SweptParameter {
    #[serde(rename = "alpha")]
    Alpha,
    #[serde(rename = "m")]
    M,
    #[serde(rename = "p")]
    P,
    #[serde(rename = "C")]
    C,
    #[serde(rename = "lambda")]
    Lambda,
}

impl SweptParameter {
    pub const ALL: [SweptParameter; 5] = [Self::Alpha, Self::M, Self::P, Self::C, Self::Lambda];

    pub fn name(self) -> &'static str {
        match self {
            Self::Alpha => "alpha",
            Self::M => "m",
            Self::P => "p",
            Self::C => "C",
            Self::Lambda => "lambda",
        }
    }

    pub fn value(self, r: &SweepRecord) -> f64 {
        match self {
            Self::Alpha => r.alpha,
            Self::M => f64::from(r.m),
            Self::P => r.p,
            Self::C => r.c,
            Self::Lambda => r.lambda,
        }
    }
}

impl fmt::Display for SweptParameter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweptParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown sweep parameter `{s}`")))
    }
}

/// Five-number summary of iteration counts over the converged records of
/// one parameter value.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupSummary {
    pub parameter: SweptParameter,
    pub value: f64,
    /// Converged records in the group.
    pub count: usize,
    pub non_converged: usize,
    pub min: Option<f64>,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
    pub max: Option<f64>,
}

impl GroupSummary {
    /// e.g. `alpha = 0.25`
    pub fn group_key(&self) -> String {
        format!("{} = {}", self.parameter, self.value)
    }
}

/// Quantile of sorted data by linear interpolation between order
/// statistics at position `(n - 1) q`.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// One summary per distinct value of `group_by`, in ascending value order.
pub fn summarize(records: &[SweepRecord], group_by: SweptParameter) -> Result<Vec<GroupSummary>> {
    if records.is_empty() {
        return Err(Error::Empty("no records to summarize"));
    }
    let mut values: Vec<f64> = records.iter().map(|r| group_by.value(r)).collect();
    values.sort_by(f64::total_cmp);
    values.dedup();

    Ok(values
        .into_iter()
        .map(|value| {
            let group = records.iter().filter(|r| group_by.value(r) == value);
            let mut iters: Vec<f64> = group
                .clone()
                .filter(|r| r.converged)
                .map(|r| r.iterations as f64)
                .collect();
            iters.sort_by(f64::total_cmp);
            let non_converged = group.filter(|r| !r.converged).count();
            let stat = |q: f64| (!iters.is_empty()).then(|| quantile(&iters, q));
            GroupSummary {
                parameter: group_by,
                value,
                count: iters.len(),
                non_converged,
                min: stat(0.0),
                q1: stat(0.25),
                median: stat(0.5),
                q3: stat(0.75),
                max: stat(1.0),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::point::UnitPoint;
    use proptest::prelude::*;

    fn record(alpha: f64, iterations: usize, converged: bool) -> SweepRecord {
        SweepRecord {
            alpha,
            m: 8,
            p: 0.9,
            c: 0.01,
            lambda: 1e-3,
            config_index: 0,
            init_index: 0,
            run_seed: 0,
            x0: UnitPoint::midpoint(12),
            iterations,
            converged,
            final_step: 0.0,
            residual: 0.0,
            wall_time: 0.0,
            solution: None,
            error: None,
        }
    }

    #[test]
    fn five_number_summary_of_one_to_five() {
        let rs: Vec<_> = (1..=5).map(|k| record(0.5, k, true)).collect();
        let s = &summarize(&rs, SweptParameter::Alpha).unwrap()[0];
        assert_eq!(s.count, 5);
        assert_eq!(
            (s.min, s.q1, s.median, s.q3, s.max),
            (Some(1.0), Some(2.0), Some(3.0), Some(4.0), Some(5.0))
        );
        assert_eq!(s.group_key(), "alpha = 0.5");
    }

    #[test]
    fn single_record_group() {
        let s = &summarize(&[record(0.1, 7, true)], SweptParameter::Alpha).unwrap()[0];
        assert!([s.min, s.q1, s.median, s.q3, s.max].iter().all(|v| *v == Some(7.0)));
    }

    #[test]
    fn interpolates_between_order_statistics() {
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.25), 1.75);
        assert_eq!(quantile(&[1.0, 2.0, 3.0, 4.0], 0.5), 2.5);
    }

    #[test]
    fn non_converged_are_counted_not_summarized() {
        let rs = vec![record(0.0, 3, true), record(0.0, 1000, false), record(1.0, 1000, false)];
        let s = summarize(&rs, SweptParameter::Alpha).unwrap();
        assert_eq!(s.len(), 2);
        assert_eq!((s[0].count, s[0].non_converged, s[0].max), (1, 1, Some(3.0)));
        assert_eq!((s[1].count, s[1].non_converged, s[1].median), (0, 1, None));
        assert!(summarize(&[], SweptParameter::Alpha).is_err());
    }

    #[test]
    fn parameter_names_parse() {
        for p in SweptParameter::ALL {
            assert_eq!(p.name().parse::<SweptParameter>().unwrap(), p);
        }
        assert!("Alpha".parse::<SweptParameter>().is_err());
    }

    proptest! {
        #[test]
        fn order_insensitive_and_ordered(
            data in prop::collection::vec((0usize..3, 0usize..60, any::<bool>()), 1..60),
            seed in any::<u64>(),
        ) {
            let rs: Vec<_> = data.iter().map(|&(g, it, c)| record(g as f64 / 4.0, it, c)).collect();
            let mut shuffled = rs.clone();
            // deterministic Fisher-Yates driven by the seed
            let mut s = seed;
            for i in (1..shuffled.len()).rev() {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                shuffled.swap(i, (s >> 33) as usize % (i + 1));
            }
            let a = summarize(&rs, SweptParameter::Alpha).unwrap();
            prop_assert_eq!(&a, &summarize(&shuffled, SweptParameter::Alpha).unwrap());
            for g in &a {
                if g.count > 0 {
                    let v = [g.min, g.q1, g.median, g.q3, g.max].map(Option::unwrap);
                    prop_assert!(v.windows(2).all(|w| w[0] <= w[1]));
                }
            }
        }
    }
}
