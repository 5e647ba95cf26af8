use super::LogHistogram;
use crate::sim::SimTime;

/// Default number of raw samples kept for exact order statistics.
pub const DEFAULT_EXACT_CAP: usize = 1 << 20;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum QuantileError {
    #[error("quantile level must lie strictly between 0 and 1, got {0}")]
    OutOfRange(f64),
    #[error("no samples recorded")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantileEstimate {
    pub value: SimTime,
    /// Fewer than `ceil(1/(1-q))` samples: the estimate is the maximum or
    /// close to it and should not be read as a tail quantile.
    pub insufficient: bool,
    /// Computed from raw samples rather than histogram bins.
    pub exact: bool,
}

/// 1-based rank of the q-quantile among `n` ordered samples.
pub fn quantile_rank(q: f64, n: u64) -> u64 {
    // Guard against q*n landing a hair above an integer.
    (((q * n as f64) - 1e-9).ceil() as u64).clamp(1, n.max(1))
}

/// Samples needed before the q-quantile is distinguishable from the maximum.
pub fn min_samples_for(q: f64) -> u64 {
    ((1.0 / (1.0 - q)) - 1e-9).ceil() as u64
}

/// Delay samples of one flow: raw values while under a memory cap, plus a
/// log histogram that always holds every sample.
#[derive(Debug, Clone)]
pub struct DelayAccumulator {
    exact: Option<Vec<u64>>,
    exact_cap: usize,
    sorted: bool,
    hist: LogHistogram,
    sum_ns: u128,
}

impl Default for DelayAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl DelayAccumulator {
    pub fn new() -> Self {
        Self::with_exact_cap(DEFAULT_EXACT_CAP)
    }

    pub fn with_exact_cap(cap: usize) -> Self {
        DelayAccumulator {
            exact: Some(Vec::new()),
            exact_cap: cap,
            sorted: true,
            hist: LogHistogram::new(),
            sum_ns: 0,
        }
    }

    pub fn record(&mut self, delay: SimTime) {
        self.hist.record(delay);
        self.sum_ns += delay.as_nanos() as u128;
        if let Some(v) = self.exact.as_mut() {
            if v.len() >= self.exact_cap {
                self.exact = None;
            } else {
                v.push(delay.as_nanos());
                self.sorted = false;
            }
        }
    }

    pub fn count(&self) -> u64 {
        self.hist.count()
    }

    pub fn is_exact(&self) -> bool {
        self.exact.is_some()
    }

    pub fn histogram(&self) -> &LogHistogram {
        &self.hist
    }

    pub fn mean(&self) -> Option<SimTime> {
        let n = self.count();
        (n > 0).then(|| SimTime::from_nanos((self.sum_ns / n as u128) as u64))
    }

    pub fn max(&self) -> SimTime {
        self.hist.max()
    }

    /// Sorts the raw samples in place so later quantile queries are cheap.
    pub fn finalize(&mut self) {
        if let Some(v) = self.exact.as_mut() {
            if !self.sorted {
                v.sort_unstable();
                self.sorted = true;
            }
        }
    }

    pub fn quantile(&self, q: f64) -> Result<QuantileEstimate, QuantileError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(QuantileError::OutOfRange(q));
        }
        let n = self.count();
        if n == 0 {
            return Err(QuantileError::Empty);
        }
        let rank = quantile_rank(q, n);
        let insufficient = n < min_samples_for(q);
        let (value, exact) = match &self.exact {
            Some(v) => {
                let idx = (rank - 1) as usize;
                let ns = if self.sorted {
                    v[idx]
                } else {
                    let mut copy = v.clone();
                    *copy.select_nth_unstable(idx).1
                };
                (SimTime::from_nanos(ns), true)
            }
            None => (self.hist.value_at_rank(rank).expect("rank within count"), false),
        };
        Ok(QuantileEstimate {
            value,
            insufficient,
            exact,
        })
    }

    /// Histogram-only estimate, regardless of whether raw samples are kept.
    pub fn histogram_quantile(&self, q: f64) -> Result<SimTime, QuantileError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(QuantileError::OutOfRange(q));
        }
        let n = self.count();
        if n == 0 {
            return Err(QuantileError::Empty);
        }
        Ok(self.hist.value_at_rank(quantile_rank(q, n)).expect("rank within count"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_exact_median() {
        let mut a = DelayAccumulator::new();
        for ms in [1, 2, 3] {
            a.record(SimTime::from_millis(ms));
        }
        assert_eq!(a.count(), 3);
        let m = a.quantile(0.5).unwrap();
        assert!(m.exact);
        assert_eq!(m.value, SimTime::from_millis(2));
    }

    #[test]
    fn zero_delay_is_accepted() {
        let mut a = DelayAccumulator::new();
        a.record(SimTime::ZERO);
        assert_eq!(a.count(), 1);
        assert_eq!(a.quantile(0.5).unwrap().value, SimTime::ZERO);
    }

    #[test]
    fn uniform_grid_median() {
        let mut a = DelayAccumulator::new();
        for us in (1..=100).rev() {
            a.record(SimTime::from_micros(us));
        }
        assert_eq!(a.quantile(0.5).unwrap().value, SimTime::from_micros(50));
        a.finalize();
        assert_eq!(a.quantile(0.99).unwrap().value, SimTime::from_micros(99));
    }

    #[test]
    fn insufficient_samples_flag() {
        let mut a = DelayAccumulator::new();
        for i in 0..100_000u64 {
            a.record(SimTime::from_nanos(1_000 + i));
        }
        assert!(a.quantile(0.999999).unwrap().insufficient);
        assert!(!a.quantile(0.99).unwrap().insufficient);
    }

    #[test]
    fn out_of_range_levels() {
        let a = DelayAccumulator::new();
        assert_eq!(a.quantile(0.0), Err(QuantileError::OutOfRange(0.0)));
        assert_eq!(a.quantile(1.0), Err(QuantileError::OutOfRange(1.0)));
        assert_eq!(a.quantile(0.5), Err(QuantileError::Empty));
    }

    #[test]
    fn exact_list_disabled_past_cap() {
        let mut a = DelayAccumulator::with_exact_cap(10);
        for i in 0..11u64 {
            a.record(SimTime::from_micros(i + 1));
        }
        assert!(!a.is_exact());
        let q = a.quantile(0.5).unwrap();
        assert!(!q.exact);
        let truth = 6_000.0;
        assert!((q.value.as_nanos() as f64 - truth) / truth <= 0.01);
    }

    #[test]
    fn rank_rounding() {
        assert_eq!(quantile_rank(0.5, 100), 50);
        assert_eq!(quantile_rank(0.999999, 1_000_000), 999_999);
        assert_eq!(quantile_rank(0.999999, 20_000_000), 19_999_980);
        assert_eq!(min_samples_for(0.999999), 1_000_000);
        assert_eq!(min_samples_for(0.5), 2);
    }
}
