use std::io::Write;
use std::time::{Duration, Instant};

use super::{EventHandle, EventQueue, SimTime};

/// Labels an event for trace output.
pub trait TraceEvent {
    fn kind(&self) -> &'static str;
    fn target(&self) -> String;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunSummary {
    pub events: u64,
    pub end_time: SimTime,
    pub wall_time: Duration,
}

/// Single-threaded discrete-event scheduler: a clock plus an [`EventQueue`].
pub struct Scheduler<E> {
    now: SimTime,
    queue: EventQueue<E>,
    processed: u64,
    trace: Option<Box<dyn Write + Send>>,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Scheduler {
            now: SimTime::ZERO,
            queue: EventQueue::new(),
            processed: 0,
            trace: None,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn processed(&self) -> u64 {
        self.processed
    }

    pub fn pending(&self) -> usize {
        self.queue.len()
    }

    /// Writes one `fire_at_ns kind target` line per processed event.
    pub fn set_trace(&mut self, sink: Box<dyn Write + Send>) {
        self.trace = Some(sink);
    }

    /// Panics if `at` lies in the past: that is always a model bug.
    pub fn schedule(&mut self, at: SimTime, payload: E) -> EventHandle {
        assert!(
            at >= self.now,
            "event scheduled in the past: at {} while clock is {}",
            at,
            self.now
        );
        self.queue.push(at, payload)
    }

    pub fn schedule_in(&mut self, delay: SimTime, payload: E) -> EventHandle {
        let at = self.now + delay;
        self.queue.push(at, payload)
    }

    pub fn cancel(&mut self, handle: EventHandle) -> bool {
        self.queue.cancel(handle)
    }

    /// Processes every event with `fire_at <= t_end`, then advances the clock
    /// to `t_end`.
    pub fn run_until<F>(&mut self, t_end: SimTime, mut handler: F) -> RunSummary
    where
        E: TraceEvent,
        F: FnMut(&mut Scheduler<E>, E),
    {
        let started = Instant::now();
        let before = self.processed;
        while let Some(t) = self.queue.peek_time() {
            if t > t_end {
                break;
            }
            let ev = self.queue.pop().expect("peeked event");
            debug_assert!(ev.fire_at >= self.now);
            self.now = ev.fire_at;
            self.processed += 1;
            if let Some(sink) = self.trace.as_mut() {
                // Trace output is best effort; a failing sink must not abort the run.
                let _ = writeln!(
                    sink,
                    "{} {} {}",
                    ev.fire_at.as_nanos(),
                    ev.payload.kind(),
                    ev.payload.target()
                );
            }
            handler(self, ev.payload);
        }
        if t_end > self.now {
            self.now = t_end;
        }
        if let Some(sink) = self.trace.as_mut() {
            let _ = sink.flush();
        }
        RunSummary {
            events: self.processed - before,
            end_time: self.now,
            wall_time: started.elapsed(),
        }
    }
}
