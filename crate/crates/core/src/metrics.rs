//! Consensus predicate and polarization measures.

use crate::error::{Error, Result};
use crate::graph::{Configuration, SimState};
use crate::search::Trace;

/// Population variance of `values`, or `None` when empty.
pub fn population_variance(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    Some(values.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n)
}

/// `max - min` of `values`, or `None` when empty.
pub fn spread(values: &[f64]) -> Option<f64> {
    let first = *values.first()?;
    let (lo, hi) = values
        .iter()
        .fold((first, first), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    Some(hi - lo)
}

/// All pairwise opinion differences are strictly below `epsilon`.
pub fn consensus(s: &SimState, epsilon: f64) -> bool {
    config_consensus(&s.network, epsilon)
}

pub fn config_consensus(c: &Configuration, epsilon: f64) -> bool {
    spread(c.opinions()).is_some_and(|d| d < epsilon)
}

pub fn variance(c: &Configuration) -> Result<f64> {
    population_variance(c.opinions()).ok_or_else(|| Error::InvalidParameter("no agents".into()))
}

pub fn distance(c: &Configuration) -> Result<f64> {
    spread(c.opinions()).ok_or_else(|| Error::InvalidParameter("no agents".into()))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PolarizationRow {
    pub step: u64,
    pub comm: u64,
    pub variance: f64,
    pub distance: f64,
}

impl PolarizationRow {
    pub fn of(s: &SimState) -> Result<Self> {
        Ok(PolarizationRow {
            step: s.step,
            comm: s.comm,
            variance: variance(&s.network)?,
            distance: distance(&s.network)?,
        })
    }
}

/// One row per state of the trace, in step order.
pub fn polarization_report(trace: &Trace) -> Result<Vec<PolarizationRow>> {
    trace.states().map(PolarizationRow::of).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::vaccine;

    #[test]
    fn consensus_examples() {
        let c = vaccine();
        let flat = c.with_opinions(vec![0.5; 6]).unwrap();
        assert!(config_consensus(&flat, 1e-9));
        assert!(!consensus(&SimState::new(c.clone()), 0.01));
        let near = c
            .with_opinions(vec![0.480, 0.479, 0.479, 0.4795, 0.48, 0.4799])
            .unwrap();
        assert!(config_consensus(&near, 0.002));
    }

    #[test]
    fn consensus_is_strict() {
        let c = vaccine()
            .with_opinions(vec![0.25, 0.5, 0.5, 0.5, 0.5, 0.5])
            .unwrap();
        assert!(!config_consensus(&c, 0.25));
        assert!(config_consensus(&c, 0.250001));
    }

    #[test]
    fn variance_examples() {
        let c = vaccine();
        // mean 0.48; squared deviations sum to 0.961
        assert!((variance(&c).unwrap() - 0.961 / 6.0).abs() < 1e-12);
        assert_eq!(
            variance(&c.with_opinions(vec![0.3; 6]).unwrap()).unwrap(),
            0.0
        );
        assert_eq!(population_variance(&[0.0, 1.0]), Some(0.25));
        assert_eq!(population_variance(&[]), None);
    }

    #[test]
    fn distance_examples() {
        let c = vaccine();
        assert_eq!(distance(&c).unwrap(), 0.92);
        assert_eq!(
            distance(&c.with_opinions(vec![0.7; 6]).unwrap()).unwrap(),
            0.0
        );
        assert_eq!(spread(&[]), None);
    }

    #[test]
    fn report_of_empty_trace() {
        let s = SimState::new(vaccine());
        let rows = polarization_report(&Trace::new(s.clone())).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].step, 0);
        assert_eq!(rows[0].distance, 0.92);
    }
}
