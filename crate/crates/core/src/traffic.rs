//! Packet arrival processes.

use crate::ids::{DeviceId, FlowId};
use crate::sim::{RngStream, SimTime};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TrafficClass {
    BestEffort,
    TimeSensitive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowModel {
    /// Alternating exponential On/Off periods; constant-bit-rate arrivals
    /// at `rate_on_bps` while On.
    OnOff {
        mean_on: SimTime,
        mean_off: SimTime,
        rate_on_bps: f64,
    },
    Poisson {
        rate_bps: f64,
    },
    Cbr {
        rate_bps: f64,
    },
}

impl FlowModel {
    /// Long-run average offered load.
    pub fn mean_rate_bps(&self) -> f64 {
        match *self {
            FlowModel::OnOff {
                mean_on,
                mean_off,
                rate_on_bps,
            } => {
                let on = mean_on.as_secs_f64();
                rate_on_bps * on / (on + mean_off.as_secs_f64())
            }
            FlowModel::Poisson { rate_bps } | FlowModel::Cbr { rate_bps } => rate_bps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub id: FlowId,
    pub name: String,
    pub src: DeviceId,
    pub dst: DeviceId,
    pub model: FlowModel,
    pub packet_bytes: u32,
    pub class: TrafficClass,
}

/// A MAC service data unit; the unit of delay measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Packet {
    pub flow: FlowId,
    pub seq: u64,
    pub bytes: u32,
    pub arrival: SimTime,
    pub class: TrafficClass,
    pub dst: DeviceId,
    /// Failed transmission attempts so far.
    pub retries: u8,
}

impl Packet {
    pub fn bits(&self) -> u64 {
        self.bytes as u64 * 8
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SourceEvent {
    Arrival(Packet),
    /// On/Off sources only; `on` is the phase being entered.
    PhaseChange { on: bool },
}

/// Generator state for one flow.
#[derive(Debug, Clone)]
pub struct FlowSource {
    spec: FlowSpec,
    seq: u64,
    on: bool,
    phase_start: SimTime,
    phase_end: SimTime,
    /// Arrivals emitted in the current On phase (or since t=0 for CBR).
    burst_index: u64,
    next_poisson: SimTime,
    generated_bits: u64,
}

impl FlowSource {
    /// Initial state at t=0. On/Off sources start On with probability
    /// `mean_on / (mean_on + mean_off)`.
    pub fn new(spec: FlowSpec, rng: &mut RngStream) -> Self {
        let mut src = FlowSource {
            spec,
            seq: 0,
            on: true,
            phase_start: SimTime::ZERO,
            phase_end: SimTime::MAX,
            burst_index: 0,
            next_poisson: SimTime::ZERO,
            generated_bits: 0,
        };
        match src.spec.model {
            FlowModel::OnOff {
                mean_on, mean_off, ..
            } => {
                let p_on = mean_on.as_secs_f64() / (mean_on.as_secs_f64() + mean_off.as_secs_f64());
                src.on = rng.uniform() < p_on;
                let mean = if src.on { mean_on } else { mean_off };
                src.phase_end = draw_phase(mean, rng);
            }
            FlowModel::Poisson { .. } => {
                src.next_poisson = SimTime::from_secs_f64(rng.exponential(src.mean_gap_secs()));
            }
            FlowModel::Cbr { .. } => {}
        }
        src
    }

    pub fn spec(&self) -> &FlowSpec {
        &self.spec
    }

    pub fn is_on(&self) -> bool {
        self.on
    }

    pub fn generated(&self) -> u64 {
        self.seq
    }

    pub fn generated_bits(&self) -> u64 {
        self.generated_bits
    }

    fn packet_bits(&self) -> f64 {
        self.spec.packet_bytes as f64 * 8.0
    }

    fn mean_gap_secs(&self) -> f64 {
        let rate = match self.spec.model {
            FlowModel::OnOff { rate_on_bps, .. } => rate_on_bps,
            FlowModel::Poisson { rate_bps } | FlowModel::Cbr { rate_bps } => rate_bps,
        };
        self.packet_bits() / rate
    }

    /// k-th deterministic arrival after `start`, computed from the start so
    /// that rounding does not accumulate.
    fn spaced(&self, start: SimTime, k: u64) -> SimTime {
        start + SimTime::from_secs_f64(k as f64 * self.mean_gap_secs())
    }

    fn emit(&mut self, at: SimTime) -> SourceEvent {
        let p = Packet {
            flow: self.spec.id,
            seq: self.seq,
            bytes: self.spec.packet_bytes,
            arrival: at,
            class: self.spec.class,
            dst: self.spec.dst,
            retries: 0,
        };
        self.seq += 1;
        self.generated_bits += p.bits();
        SourceEvent::Arrival(p)
    }

    /// Time and kind of the next source event; advances the state past it.
    pub fn next_event(&mut self, rng: &mut RngStream) -> (SimTime, SourceEvent) {
        match self.spec.model {
            FlowModel::OnOff {
                mean_on, mean_off, ..
            } => {
                if self.on {
                    let t = self.spaced(self.phase_start, self.burst_index);
                    if t < self.phase_end {
                        self.burst_index += 1;
                        return (t, self.emit(t));
                    }
                }
                let t = self.phase_end;
                self.on = !self.on;
                self.phase_start = t;
                self.burst_index = 0;
                let mean = if self.on { mean_on } else { mean_off };
                self.phase_end = t + draw_phase(mean, rng);
                (t, SourceEvent::PhaseChange { on: self.on })
            }
            FlowModel::Poisson { .. } => {
                let t = self.next_poisson;
                self.next_poisson = t + SimTime::from_secs_f64(rng.exponential(self.mean_gap_secs()));
                (t, self.emit(t))
            }
            FlowModel::Cbr { .. } => {
                let t = self.spaced(SimTime::ZERO, self.burst_index);
                self.burst_index += 1;
                (t, self.emit(t))
            }
        }
    }
}

/// Exponential phase duration, at least 1 ns so that phases always advance.
fn draw_phase(mean: SimTime, rng: &mut RngStream) -> SimTime {
    let d = SimTime::from_secs_f64(rng.exponential(mean.as_secs_f64()));
    if d == SimTime::ZERO {
        SimTime::from_nanos(1)
    } else {
        d
    }
}

/// Measured generated-bit rate over `horizon`.
pub fn offered_load_bps(generated_bits: u64, horizon: SimTime) -> f64 {
    generated_bits as f64 / horizon.as_secs_f64()
}

/// Runs a source alone up to `horizon` and returns its generated bits.
pub fn simulate_offered_bits(spec: &FlowSpec, seed: u64, horizon: SimTime) -> u64 {
    let mut rng = RngStream::new(seed, &format!("traffic.{}", spec.name));
    let mut src = FlowSource::new(spec.clone(), &mut rng);
    let mut bits = 0;
    loop {
        let (t, ev) = src.next_event(&mut rng);
        if t >= horizon {
            break;
        }
        if let SourceEvent::Arrival(p) = ev {
            bits += p.bits();
        }
    }
    bits
}

#[cfg(test)]
mod tests {
    use super::*;

    fn onoff(mean_ms: u64, rate: f64) -> FlowSpec {
        FlowSpec {
            id: FlowId(0),
            name: "f0".into(),
            src: DeviceId(0),
            dst: DeviceId(1),
            model: FlowModel::OnOff {
                mean_on: SimTime::from_nanos(mean_ms),
                mean_off: SimTime::from_nanos(mean_ms),
                rate_on_bps: rate,
            },
            packet_bytes: 1500,
            class: TrafficClass::BestEffort,
        }
    }

    #[test]
    fn on_phase_spacing_is_three_microseconds() {
        let mut rng = RngStream::new(1, "t");
        let mut src = FlowSource::new(onoff(4_150_000, 4e9), &mut rng);
        let mut last: Option<SimTime> = None;
        let mut checked = 0;
        while checked < 1000 {
            let (t, ev) = src.next_event(&mut rng);
            match ev {
                SourceEvent::Arrival(_) => {
                    if let Some(prev) = last {
                        assert_eq!(t - prev, SimTime::from_micros(3));
                        checked += 1;
                    }
                    last = Some(t);
                }
                SourceEvent::PhaseChange { .. } => last = None,
            }
        }
    }

    #[test]
    fn off_phase_has_no_arrivals() {
        let mut rng = RngStream::new(5, "t");
        let mut src = FlowSource::new(onoff(4_150_000, 4e9), &mut rng);
        let mut on = src.is_on();
        for _ in 0..200_000 {
            match src.next_event(&mut rng).1 {
                SourceEvent::Arrival(_) => assert!(on),
                SourceEvent::PhaseChange { on: o } => on = o,
            }
        }
    }

    #[test]
    fn sequence_numbers_are_gapless() {
        let mut rng = RngStream::new(2, "t");
        let mut src = FlowSource::new(onoff(1_000_000, 1e9), &mut rng);
        let mut expect = 0;
        let mut last_t = SimTime::ZERO;
        for _ in 0..10_000 {
            let (t, ev) = src.next_event(&mut rng);
            assert!(t >= last_t);
            last_t = t;
            if let SourceEvent::Arrival(p) = ev {
                assert_eq!(p.seq, expect);
                expect += 1;
            }
        }
    }

    #[test]
    fn cbr_rate_is_exact() {
        let spec = FlowSpec {
            model: FlowModel::Cbr { rate_bps: 100e6 },
            ..onoff(1, 1.0)
        };
        let horizon = SimTime::from_secs(1);
        let bits = simulate_offered_bits(&spec, 1, horizon);
        let rate = offered_load_bps(bits, horizon);
        assert!((rate - 100e6).abs() <= 12_000.0, "rate {rate}");
    }

    #[test]
    fn mean_rate_of_symmetric_onoff_is_half_peak() {
        assert_eq!(onoff(4_150_000, 4e9).model.mean_rate_bps(), 2e9);
    }
}
