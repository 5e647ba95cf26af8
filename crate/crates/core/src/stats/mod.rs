//! Delay recording, quantiles, CCDF export and airtime auditing.

mod airtime;
mod delay;
mod histogram;
mod report;

pub use airtime::{AccessKind, AirtimeLedger, ExclusionViolation, QuietInterval, TxInterval};
pub use delay::{
    min_samples_for, quantile_rank, DelayAccumulator, QuantileError, QuantileEstimate,
    DEFAULT_EXACT_CAP,
};
pub use histogram::{LogHistogram, BIN_RATIO};
pub use report::{
    conservation_report, ConservationError, FlowCounters, FlowStats, RunReport, REPORTED_QUANTILES,
};
