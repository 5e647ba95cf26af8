use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use super::DelayAccumulator;
use crate::ids::{FlowId, LinkId};
use crate::sim::SimTime;

/// Quantile levels reported in every summary.
pub const REPORTED_QUANTILES: [(f64, &str); 3] =
    [(0.5, "p50_us"), (0.99, "p99_us"), (0.999999, "p999999_us")];

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlowCounters {
    pub generated: u64,
    pub delivered: u64,
    pub dropped_buffer: u64,
    pub dropped_retry: u64,
    pub queued_end: u64,
    pub inflight_end: u64,
}

impl FlowCounters {
    pub fn accounted(&self) -> u64 {
        self.delivered + self.dropped_buffer + self.dropped_retry + self.queued_end + self.inflight_end
    }

    pub fn is_balanced(&self) -> bool {
        self.generated == self.accounted()
    }
}

#[derive(Debug, Clone)]
pub struct FlowStats {
    pub id: FlowId,
    pub name: String,
    pub counters: FlowCounters,
    pub generated_bits: u64,
    pub delays: DelayAccumulator,
}

impl FlowStats {
    pub fn new(id: FlowId, name: impl Into<String>) -> Self {
        FlowStats {
            id,
            name: name.into(),
            counters: FlowCounters::default(),
            generated_bits: 0,
            delays: DelayAccumulator::new(),
        }
    }

    pub fn record_delivery(&mut self, delay: SimTime) {
        self.counters.delivered += 1;
        self.delays.record(delay);
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("conservation audit failed: {}", describe_imbalance(.0))]
pub struct ConservationError(pub Vec<(String, FlowCounters)>);

fn describe_imbalance(rows: &[(String, FlowCounters)]) -> String {
    rows.iter()
        .map(|(name, c)| {
            format!(
                "{name}: generated={} accounted={} (delivered={} dropped_buffer={} dropped_retry={} queued={} inflight={})",
                c.generated, c.accounted(), c.delivered, c.dropped_buffer, c.dropped_retry, c.queued_end, c.inflight_end
            )
        })
        .collect::<Vec<_>>()
        .join("; ")
}

/// Checks `generated == delivered + dropped + queued + in-flight` for every flow.
pub fn conservation_report(flows: &[FlowStats]) -> Result<Vec<(String, FlowCounters)>, ConservationError> {
    let rows: Vec<(String, FlowCounters)> =
        flows.iter().map(|f| (f.name.clone(), f.counters)).collect();
    let bad: Vec<_> = rows.iter().filter(|(_, c)| !c.is_balanced()).cloned().collect();
    if bad.is_empty() {
        Ok(rows)
    } else {
        Err(ConservationError(bad))
    }
}

/// Everything a finished run reports.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub seed: u64,
    pub horizon: SimTime,
    pub events: u64,
    pub flows: Vec<FlowStats>,
    pub link_utilization: Vec<(LinkId, f64)>,
    /// TXOPs started per MCS index.
    pub mcs_txops: BTreeMap<u8, u64>,
    /// `(device, link, fraction)` of time a backlogged device deferred to
    /// transmissions of other BSSs.
    pub obss_blocking: Vec<(String, LinkId, f64)>,
    pub preemption_latencies: Vec<SimTime>,
}

impl RunReport {
    pub fn flow(&self, name: &str) -> Option<&FlowStats> {
        self.flows.iter().find(|f| f.name == name)
    }

    /// MCS index used by the most TXOPs; ties go to the higher index.
    pub fn dominant_mcs(&self) -> Option<u8> {
        self.mcs_txops
            .iter()
            .max_by_key(|(&mcs, &n)| (n, mcs))
            .map(|(&mcs, _)| mcs)
    }

    /// Worst per-flow value of a quantile, in seconds.
    pub fn worst_quantile(&self, q: f64) -> Option<SimTime> {
        self.flows
            .iter()
            .filter_map(|f| f.delays.quantile(q).ok().map(|e| e.value))
            .max()
    }

    pub fn summary_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "seed={} duration_s={} events={}",
            self.seed,
            fmt_secs(self.horizon),
            self.events
        );
        for f in &self.flows {
            let _ = write!(s, "flow={} delivered={}", f.name, f.counters.delivered);
            let mut insufficient = false;
            for (q, key) in REPORTED_QUANTILES {
                match f.delays.quantile(q) {
                    Ok(e) => {
                        insufficient |= e.insufficient;
                        let _ = write!(s, " {key}={:.3}", e.value.as_micros_f64());
                    }
                    Err(_) => {
                        let _ = write!(s, " {key}=-");
                    }
                }
            }
            let c = &f.counters;
            let mean = f.delays.mean().map(|m| format!("{:.3}", m.as_micros_f64()));
            let _ = writeln!(
                s,
                " mean_us={} max_us={:.3} generated={} dropped_buffer={} dropped_retry={} queued_end={} inflight_end={} offered_mbps={:.3} insufficient_tail={}",
                mean.as_deref().unwrap_or("-"),
                f.delays.max().as_micros_f64(),
                c.generated,
                c.dropped_buffer,
                c.dropped_retry,
                c.queued_end,
                c.inflight_end,
                f.generated_bits as f64 / self.horizon.as_secs_f64() / 1e6,
                insufficient
            );
        }
        for (link, u) in &self.link_utilization {
            let _ = writeln!(s, "link={} utilization={:.6}", link.0, u);
        }
        for (mcs, n) in &self.mcs_txops {
            let _ = writeln!(s, "mcs={mcs} txops={n}");
        }
        for (dev, link, frac) in &self.obss_blocking {
            let _ = writeln!(s, "blocking device={dev} link={} fraction={frac:.6}", link.0);
        }
        if !self.preemption_latencies.is_empty() {
            let worst = self.preemption_latencies.iter().max().copied().unwrap_or_default();
            let _ = writeln!(
                s,
                "preemptions={} max_insertion_us={:.3}",
                self.preemption_latencies.len(),
                worst.as_micros_f64()
            );
        }
        s
    }

    pub fn ccdf_csv(flow: &FlowStats) -> String {
        let mut s = String::from("delay_us,ccdf\n");
        for (edge, p) in flow.delays.histogram().ccdf() {
            let _ = writeln!(s, "{:.3},{:.6e}", edge.as_micros_f64(), p);
        }
        s
    }

    /// Writes `summary.txt` and one `ccdf_<flow>.csv` per flow into `dir`.
    pub fn export(&self, dir: &Path) -> io::Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let summary = dir.join("summary.txt");
        fs::write(&summary, self.summary_text())?;
        written.push(summary);
        for f in &self.flows {
            let p = dir.join(format!("ccdf_{}.csv", f.name));
            fs::write(&p, Self::ccdf_csv(f))?;
            written.push(p);
        }
        Ok(written)
    }
}

fn fmt_secs(t: SimTime) -> String {
    format!("{}", t.as_secs_f64())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report_with(flows: Vec<FlowStats>) -> RunReport {
        RunReport {
            seed: 1,
            horizon: SimTime::from_secs(1),
            events: 0,
            flows,
            link_utilization: vec![(LinkId(0), 0.5)],
            mcs_txops: BTreeMap::from([(13, 10), (4, 3)]),
            obss_blocking: vec![],
            preemption_latencies: vec![],
        }
    }

    #[test]
    fn zero_traffic_balances() {
        let f = FlowStats::new(FlowId(0), "f0");
        let rows = conservation_report(&[f]).unwrap();
        assert_eq!(rows[0].1, FlowCounters::default());
    }

    #[test]
    fn imbalance_is_reported_per_flow() {
        let mut f = FlowStats::new(FlowId(0), "f0");
        f.counters.generated = 5;
        f.counters.delivered = 4;
        let err = conservation_report(&[f]).unwrap_err();
        assert_eq!(err.0.len(), 1);
        assert!(err.to_string().contains("f0: generated=5 accounted=4"));
    }

    #[test]
    fn summary_format() {
        let mut f = FlowStats::new(FlowId(0), "ap1");
        for us in 1..=100 {
            f.counters.generated += 1;
            f.record_delivery(SimTime::from_micros(us));
        }
        let r = report_with(vec![f]);
        let text = r.summary_text();
        let line = text.lines().nth(1).unwrap();
        assert!(line.starts_with("flow=ap1 delivered=100 p50_us=50.000 p99_us=99.000 p999999_us=100.000"));
        assert!(text.contains("link=0 utilization=0.500000"));
        assert!(text.contains("mcs=13 txops=10"));
        assert_eq!(r.dominant_mcs(), Some(13));
    }

    #[test]
    fn export_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = FlowStats::new(FlowId(0), "ap1");
        f.record_delivery(SimTime::from_micros(10));
        let r = report_with(vec![f]);
        let files = r.export(dir.path()).unwrap();
        assert_eq!(files.len(), 2);
        let csv = fs::read_to_string(dir.path().join("ccdf_ap1.csv")).unwrap();
        assert!(csv.starts_with("delay_us,ccdf\n"));
    }
}
