use std::collections::BTreeMap;

use crate::ids::{DeviceId, LinkId};
use crate::phy::Subband;
use crate::sim::SimTime;

/// How the transmitter obtained the medium.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AccessKind {
    Contention,
    /// Part of a multi-AP coordinated TXOP with the given group id.
    Coordinated(u64),
    /// Protected access inside an R-TWT service period.
    Protected,
}

/// One busy interval on a link, tagged by its transmitter.
#[derive(Debug, Clone, PartialEq)]
pub struct TxInterval {
    pub link: LinkId,
    pub transmitter: DeviceId,
    pub start: SimTime,
    pub end: SimTime,
    /// Instant the TXOP containing this interval was obtained.
    pub txop_start: SimTime,
    pub access: AccessKind,
    pub subband: Subband,
    pub mpdus: u32,
    /// Every MPDU belongs to an R-TWT member flow of the transmitter.
    pub member_only: bool,
}

impl TxInterval {
    pub fn overlaps(&self, other: &TxInterval) -> bool {
        self.start < other.end && other.start < self.end && self.subband.overlaps(&other.subband)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExclusionViolation {
    pub link: LinkId,
    pub a: DeviceId,
    pub b: DeviceId,
    pub a_start: SimTime,
    pub b_start: SimTime,
}

/// Quiet interval of an R-TWT service period on one link.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuietInterval {
    pub link: LinkId,
    pub owner: DeviceId,
    pub start: SimTime,
    pub end: SimTime,
}

/// Per-link busy intervals of a run.
#[derive(Debug, Clone, Default)]
pub struct AirtimeLedger {
    intervals: Vec<TxInterval>,
}

impl AirtimeLedger {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns the index for later end-time adjustment.
    pub fn push(&mut self, iv: TxInterval) -> usize {
        self.intervals.push(iv);
        self.intervals.len() - 1
    }

    pub fn set_end(&mut self, idx: usize, end: SimTime) {
        self.intervals[idx].end = end;
    }

    pub fn set_mpdus(&mut self, idx: usize, mpdus: u32) {
        self.intervals[idx].mpdus = mpdus;
    }

    pub fn intervals(&self) -> &[TxInterval] {
        &self.intervals
    }

    /// Clips every interval to `[0, horizon]`, dropping ones that start after it.
    pub fn clip(&mut self, horizon: SimTime) {
        self.intervals.retain(|iv| iv.start < horizon);
        for iv in &mut self.intervals {
            iv.end = iv.end.min(horizon);
        }
    }

    fn by_link(&self) -> BTreeMap<LinkId, Vec<&TxInterval>> {
        let mut m: BTreeMap<LinkId, Vec<&TxInterval>> = BTreeMap::new();
        for iv in &self.intervals {
            m.entry(iv.link).or_default().push(iv);
        }
        for v in m.values_mut() {
            v.sort_by_key(|iv| (iv.start, iv.transmitter));
        }
        m
    }

    /// Overlapping transmissions by devices that sense each other. Overlaps
    /// that began at the same instant (equal backoff) or belong to the same
    /// coordinated TXOP are legitimate.
    pub fn exclusion_violations<F>(&self, senses: F) -> Vec<ExclusionViolation>
    where
        F: Fn(LinkId, DeviceId, DeviceId) -> bool,
    {
        let mut out = Vec::new();
        for (link, ivs) in self.by_link() {
            let mut active: Vec<&TxInterval> = Vec::new();
            for iv in ivs {
                active.retain(|a| a.end > iv.start);
                for a in &active {
                    if a.transmitter == iv.transmitter || !a.overlaps(iv) {
                        continue;
                    }
                    if !senses(link, a.transmitter, iv.transmitter) {
                        continue;
                    }
                    let same_access = a.txop_start == iv.txop_start;
                    let same_group = matches!(
                        (a.access, iv.access),
                        (AccessKind::Coordinated(x), AccessKind::Coordinated(y)) if x == y
                    );
                    if !same_access && !same_group {
                        out.push(ExclusionViolation {
                            link,
                            a: a.transmitter,
                            b: iv.transmitter,
                            a_start: a.start,
                            b_start: iv.start,
                        });
                    }
                }
                active.push(iv);
            }
        }
        out
    }

    /// Intervals that intersect a quiet interval without being member traffic
    /// of the period's owner.
    pub fn quiet_violations(&self, quiet: &[QuietInterval]) -> Vec<TxInterval> {
        self.intervals
            .iter()
            .filter(|iv| {
                quiet.iter().any(|q| {
                    q.link == iv.link
                        && iv.start < q.end
                        && q.start < iv.end
                        && !(iv.transmitter == q.owner && iv.member_only)
                })
            })
            .cloned()
            .collect()
    }

    /// Longest span from TXOP acquisition to the end of any of its intervals.
    pub fn longest_txop(&self) -> SimTime {
        let mut spans: BTreeMap<(LinkId, DeviceId, SimTime), SimTime> = BTreeMap::new();
        for iv in &self.intervals {
            let e = spans.entry((iv.link, iv.transmitter, iv.txop_start)).or_insert(iv.end);
            *e = (*e).max(iv.end);
        }
        spans
            .iter()
            .map(|(&(_, _, start), &end)| end - start)
            .max()
            .unwrap_or(SimTime::ZERO)
    }

    pub fn largest_aggregate(&self) -> u32 {
        self.intervals.iter().map(|iv| iv.mpdus).max().unwrap_or(0)
    }

    /// Total busy time per (link, transmitter).
    pub fn busy_by_transmitter(&self) -> BTreeMap<(LinkId, DeviceId), SimTime> {
        let mut m: BTreeMap<(LinkId, DeviceId), SimTime> = BTreeMap::new();
        for iv in &self.intervals {
            *m.entry((iv.link, iv.transmitter)).or_default() += iv.end - iv.start;
        }
        m
    }

    /// Fraction of `horizon` during which at least one transmitter was active.
    pub fn utilization(&self, link: LinkId, horizon: SimTime) -> f64 {
        let mut ivs: Vec<(SimTime, SimTime)> = self
            .intervals
            .iter()
            .filter(|iv| iv.link == link)
            .map(|iv| (iv.start, iv.end))
            .collect();
        ivs.sort();
        let mut busy = SimTime::ZERO;
        let mut cur: Option<(SimTime, SimTime)> = None;
        for (s, e) in ivs {
            match cur {
                Some((cs, ce)) if s <= ce => cur = Some((cs, ce.max(e))),
                Some((cs, ce)) => {
                    busy += ce - cs;
                    cur = Some((s, e));
                }
                None => cur = Some((s, e)),
            }
        }
        if let Some((cs, ce)) = cur {
            busy += ce - cs;
        }
        busy.as_secs_f64() / horizon.as_secs_f64()
    }

    /// Self-overlap of one transmitter on one link, which would mean a
    /// device transmitted twice at once.
    pub fn self_overlaps(&self) -> usize {
        let mut count = 0;
        for ivs in self.by_link().values() {
            let mut last_end: BTreeMap<DeviceId, SimTime> = BTreeMap::new();
            for iv in ivs {
                let e = last_end.entry(iv.transmitter).or_insert(SimTime::ZERO);
                if iv.start < *e && iv.subband == Subband::FULL {
                    count += 1;
                }
                *e = (*e).max(iv.end);
            }
        }
        count
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(dev: u32, s: u64, e: u64, txop: u64) -> TxInterval {
        TxInterval {
            link: LinkId(0),
            transmitter: DeviceId(dev),
            start: SimTime::from_micros(s),
            end: SimTime::from_micros(e),
            txop_start: SimTime::from_micros(txop),
            access: AccessKind::Contention,
            subband: Subband::FULL,
            mpdus: 1,
            member_only: false,
        }
    }

    #[test]
    fn equal_start_overlap_is_a_collision_not_a_violation() {
        let mut l = AirtimeLedger::new();
        l.push(iv(0, 0, 100, 0));
        l.push(iv(1, 0, 80, 0));
        assert!(l.exclusion_violations(|_, _, _| true).is_empty());
    }

    #[test]
    fn staggered_overlap_is_flagged_only_when_sensed() {
        let mut l = AirtimeLedger::new();
        l.push(iv(0, 0, 100, 0));
        l.push(iv(1, 50, 150, 50));
        assert_eq!(l.exclusion_violations(|_, _, _| true).len(), 1);
        assert!(l.exclusion_violations(|_, _, _| false).is_empty());
    }

    #[test]
    fn utilization_unions_overlaps() {
        let mut l = AirtimeLedger::new();
        l.push(iv(0, 0, 100, 0));
        l.push(iv(1, 50, 150, 50));
        l.push(iv(1, 300, 400, 300));
        assert!((l.utilization(LinkId(0), SimTime::from_micros(1000)) - 0.25).abs() < 1e-12);
    }

    #[test]
    fn quiet_interval_audit() {
        let mut l = AirtimeLedger::new();
        l.push(iv(0, 0, 100, 0));
        let mut m = iv(1, 200, 300, 200);
        m.member_only = true;
        l.push(m);
        let q = QuietInterval {
            link: LinkId(0),
            owner: DeviceId(1),
            start: SimTime::from_micros(150),
            end: SimTime::from_micros(350),
        };
        assert!(l.quiet_violations(&[q]).is_empty());
        let q2 = QuietInterval {
            start: SimTime::from_micros(90),
            ..q
        };
        assert_eq!(l.quiet_violations(&[q2]).len(), 1);
    }

    #[test]
    fn txop_span() {
        let mut l = AirtimeLedger::new();
        l.push(iv(0, 0, 100, 0));
        l.push(iv(0, 100, 130, 0));
        l.push(iv(0, 500, 520, 500));
        assert_eq!(l.longest_txop(), SimTime::from_micros(130));
    }
}
