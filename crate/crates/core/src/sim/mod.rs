//! Deterministic discrete-event machinery: integer-nanosecond clock, event
//! queue, scheduler and labelled random substreams.

mod engine;
mod queue;
mod rng;
mod time;

pub use engine::{RunSummary, Scheduler, TraceEvent};
pub use queue::{Event, EventHandle, EventQueue};
pub use rng::RngStream;
pub use time::SimTime;
