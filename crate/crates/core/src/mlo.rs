//! Multi-link device logic: the shared transmit buffer and per-mode link
//! usage rules.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::ids::{FlowId, LinkId};
use crate::sim::SimTime;
use crate::traffic::{Packet, TrafficClass};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MloMode {
    /// Single radio on one designated link.
    Mlsr,
    /// Listens on every link, transmits on one at a time.
    Emlsr,
    /// Independent radios; simultaneous transmit and receive allowed.
    EmlmrStr,
    /// Independent radios that must align transmission starts across links.
    EmlmrNstr,
}

impl MloMode {
    pub fn as_str(self) -> &'static str {
        match self {
            MloMode::Mlsr => "mlsr",
            MloMode::Emlsr => "emlsr",
            MloMode::EmlmrStr => "emlmr_str",
            MloMode::EmlmrNstr => "emlmr_nstr",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "mlsr" => Some(MloMode::Mlsr),
            "emlsr" => Some(MloMode::Emlsr),
            "emlmr_str" | "str" => Some(MloMode::EmlmrStr),
            "emlmr_nstr" | "nstr" => Some(MloMode::EmlmrNstr),
            _ => None,
        }
    }

    /// Maximum number of links carrying full-rate transmissions at once.
    pub fn max_concurrent(self, links: usize) -> usize {
        match self {
            MloMode::Mlsr | MloMode::Emlsr => 1.min(links),
            MloMode::EmlmrStr | MloMode::EmlmrNstr => links,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MldConfig {
    pub mode: MloMode,
    /// Affiliated links; the first is the designated link for MLSR.
    pub links: Vec<LinkId>,
    /// EMLSR radio switch-back delay after a TXOP.
    pub switch_delay: SimTime,
}

/// What the MLD is doing on one of its links.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LinkActivity {
    /// `(start, end)` of the transmission in progress, if any.
    pub tx: Option<(SimTime, SimTime)>,
    /// End of the most recent completed transmission.
    pub last_end: Option<SimTime>,
}

/// Links on which the device may run its backoff right now.
pub fn eligible_links(
    mld: &MldConfig,
    activity: &BTreeMap<LinkId, LinkActivity>,
    now: SimTime,
) -> BTreeSet<LinkId> {
    let busy = |l: &LinkId| activity.get(l).is_some_and(|a| a.tx.is_some());
    match mld.mode {
        MloMode::Mlsr => mld
            .links
            .first()
            .filter(|l| !busy(l))
            .copied()
            .into_iter()
            .collect(),
        MloMode::Emlsr => {
            if mld.links.iter().any(busy) {
                return BTreeSet::new();
            }
            let radio_back = mld
                .links
                .iter()
                .filter_map(|l| activity.get(l).and_then(|a| a.last_end))
                .max()
                .map(|end| end + mld.switch_delay);
            if radio_back.is_some_and(|t| now < t) {
                return BTreeSet::new();
            }
            mld.links.iter().copied().collect()
        }
        MloMode::EmlmrStr | MloMode::EmlmrNstr => {
            mld.links.iter().filter(|l| !busy(l)).copied().collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StartDecision {
    Start,
    DeferUntil(SimTime),
}

/// NSTR start-alignment rule: a new transmission may start on `link` only if
/// every ongoing transmission on the other links started within one slot of
/// `now`; otherwise it waits for the latest of them to end.
pub fn nstr_start(
    link: LinkId,
    activity: &BTreeMap<LinkId, LinkActivity>,
    now: SimTime,
    slot: SimTime,
) -> StartDecision {
    let mut defer: Option<SimTime> = None;
    for (l, a) in activity {
        if *l == link {
            continue;
        }
        if let Some((start, end)) = a.tx {
            if now.saturating_sub(start) > slot && end > now {
                defer = Some(defer.map_or(end, |d| d.max(end)));
            }
        }
    }
    defer.map_or(StartDecision::Start, StartDecision::DeferUntil)
}

/// Single transmit buffer of a multi-link device.
///
/// Packets are not bound to a link until a TXOP dequeues them. Time-sensitive
/// packets are served before best-effort ones; each class is FIFO. Packets
/// handed to a TXOP stay charged against the capacity until they are
/// delivered, dropped or requeued.
#[derive(Debug, Clone)]
pub struct SharedQueue {
    urgent: VecDeque<Packet>,
    normal: VecDeque<Packet>,
    capacity: usize,
    in_flight: usize,
}

impl SharedQueue {
    pub fn new(capacity: usize) -> Self {
        SharedQueue {
            urgent: VecDeque::new(),
            normal: VecDeque::new(),
            capacity,
            in_flight: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.urgent.len() + self.normal.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn in_flight(&self) -> usize {
        self.in_flight
    }

    fn occupancy(&self) -> usize {
        self.len() + self.in_flight
    }

    fn class_queue(&mut self, class: TrafficClass) -> &mut VecDeque<Packet> {
        match class {
            TrafficClass::TimeSensitive => &mut self.urgent,
            TrafficClass::BestEffort => &mut self.normal,
        }
    }

    /// Drop-tail admission; returns the packet back when the buffer is full.
    pub fn enqueue(&mut self, p: Packet) -> Result<(), Packet> {
        if self.occupancy() >= self.capacity {
            return Err(p);
        }
        self.class_queue(p.class).push_back(p);
        Ok(())
    }

    /// Admits a packet straight into flight, bypassing the queue.
    pub fn admit_in_flight(&mut self, p: Packet) -> Result<Packet, Packet> {
        if self.occupancy() >= self.capacity {
            return Err(p);
        }
        self.in_flight += 1;
        Ok(p)
    }

    pub fn head(&self) -> Option<&Packet> {
        self.urgent.front().or_else(|| self.normal.front())
    }

    pub fn any_matching(&self, pred: impl Fn(&Packet) -> bool) -> bool {
        self.urgent.iter().chain(self.normal.iter()).any(pred)
    }

    /// First packet in service order satisfying `pred`.
    pub fn first_matching(&self, pred: impl Fn(&Packet) -> bool) -> Option<&Packet> {
        self.urgent.iter().chain(self.normal.iter()).find(|p| pred(p))
    }

    /// Removes up to `max_mpdus` packets for one A-MPDU, all addressed to the
    /// same receiver as the first one taken and totalling at most `max_bits`.
    /// The first packet is always taken, even if it alone exceeds `max_bits`.
    /// `filter` restricts eligible packets; non-matching ones keep their place.
    pub fn take_aggregate(
        &mut self,
        max_mpdus: usize,
        max_bits: u64,
        filter: Option<&dyn Fn(&Packet) -> bool>,
    ) -> Vec<Packet> {
        let mut out: Vec<Packet> = Vec::new();
        let mut bits = 0u64;
        'classes: for class in [TrafficClass::TimeSensitive, TrafficClass::BestEffort] {
            let q = self.class_queue(class);
            let mut i = 0;
            while i < q.len() {
                if out.len() >= max_mpdus {
                    break 'classes;
                }
                let p = q[i];
                if filter.is_some_and(|f| !f(&p)) {
                    i += 1;
                    continue;
                }
                if let Some(first) = out.first() {
                    if p.dst != first.dst || bits + p.bits() > max_bits {
                        break 'classes;
                    }
                }
                bits += p.bits();
                out.push(q.remove(i).expect("index in range"));
            }
        }
        self.in_flight += out.len();
        out
    }

    /// Returns in-flight packets to the head of their class queues,
    /// preserving their relative order.
    pub fn requeue_front(&mut self, packets: Vec<Packet>) {
        assert!(packets.len() <= self.in_flight, "requeue of packets not in flight");
        self.in_flight -= packets.len();
        for p in packets.into_iter().rev() {
            self.class_queue(p.class).push_front(p);
        }
    }

    /// In-flight packets leave the buffer (delivered or dropped).
    pub fn release(&mut self, n: usize) {
        assert!(n <= self.in_flight, "release of packets not in flight");
        self.in_flight -= n;
    }

    pub fn queued_by_flow(&self) -> BTreeMap<FlowId, u64> {
        let mut m = BTreeMap::new();
        for p in self.urgent.iter().chain(self.normal.iter()) {
            *m.entry(p.flow).or_insert(0) += 1;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ids::DeviceId;

    fn pkt(seq: u64, class: TrafficClass) -> Packet {
        Packet {
            flow: FlowId(0),
            seq,
            bytes: 1500,
            arrival: SimTime::ZERO,
            class,
            dst: DeviceId(1),
            retries: 0,
        }
    }

    fn fill(q: &mut SharedQueue, n: u64) {
        for s in 0..n {
            q.enqueue(pkt(s, TrafficClass::BestEffort)).unwrap();
        }
    }

    fn mld(mode: MloMode) -> MldConfig {
        MldConfig {
            mode,
            links: vec![LinkId(0), LinkId(1)],
            switch_delay: SimTime::ZERO,
        }
    }

    fn tx_on(link: u32, start: u64, end: u64) -> BTreeMap<LinkId, LinkActivity> {
        BTreeMap::from([(
            LinkId(link),
            LinkActivity {
                tx: Some((SimTime::from_micros(start), SimTime::from_micros(end))),
                last_end: None,
            },
        )])
    }

    #[test]
    fn str_contends_on_all_idle_links() {
        let e = eligible_links(&mld(MloMode::EmlmrStr), &BTreeMap::new(), SimTime::ZERO);
        assert_eq!(e, BTreeSet::from([LinkId(0), LinkId(1)]));
        let e = eligible_links(&mld(MloMode::EmlmrStr), &tx_on(0, 0, 100), SimTime::from_micros(5));
        assert_eq!(e, BTreeSet::from([LinkId(1)]));
    }

    #[test]
    fn mlsr_uses_designated_link_only() {
        let e = eligible_links(&mld(MloMode::Mlsr), &BTreeMap::new(), SimTime::ZERO);
        assert_eq!(e, BTreeSet::from([LinkId(0)]));
    }

    #[test]
    fn emlsr_suspends_during_txop_and_switch_delay() {
        let mut cfg = mld(MloMode::Emlsr);
        cfg.switch_delay = SimTime::from_micros(10);
        assert!(eligible_links(&cfg, &tx_on(0, 0, 100), SimTime::from_micros(50)).is_empty());
        let done = BTreeMap::from([(
            LinkId(0),
            LinkActivity {
                tx: None,
                last_end: Some(SimTime::from_micros(100)),
            },
        )]);
        assert!(eligible_links(&cfg, &done, SimTime::from_micros(105)).is_empty());
        assert_eq!(eligible_links(&cfg, &done, SimTime::from_micros(110)).len(), 2);
    }

    #[test]
    fn nstr_defers_unaligned_start() {
        let act = tx_on(0, 0, 4000);
        let slot = SimTime::from_micros(9);
        assert_eq!(nstr_start(LinkId(1), &act, SimTime::from_micros(5), slot), StartDecision::Start);
        assert_eq!(
            nstr_start(LinkId(1), &act, SimTime::from_micros(500), slot),
            StartDecision::DeferUntil(SimTime::from_micros(4000))
        );
    }

    #[test]
    fn concurrent_grants_take_disjoint_packets() {
        let mut q = SharedQueue::new(10_240);
        fill(&mut q, 3000);
        let a = q.take_aggregate(1024, u64::MAX, None);
        let b = q.take_aggregate(1024, u64::MAX, None);
        assert_eq!((a.len(), b.len(), q.len()), (1024, 1024, 952));
        assert!(a.iter().all(|p| b.iter().all(|o| o.seq != p.seq)));
    }

    #[test]
    fn single_packet_second_grant_is_empty() {
        let mut q = SharedQueue::new(10);
        fill(&mut q, 1);
        assert_eq!(q.take_aggregate(1024, u64::MAX, None).len(), 1);
        assert!(q.take_aggregate(1024, u64::MAX, None).is_empty());
    }

    #[test]
    fn urgent_class_first_and_requeue_order() {
        let mut q = SharedQueue::new(100);
        fill(&mut q, 3);
        q.enqueue(pkt(99, TrafficClass::TimeSensitive)).unwrap();
        let taken = q.take_aggregate(10, u64::MAX, None);
        assert_eq!(taken.iter().map(|p| p.seq).collect::<Vec<_>>(), vec![99, 0, 1, 2]);
        q.requeue_front(taken[1..].to_vec());
        q.release(1);
        let again = q.take_aggregate(10, u64::MAX, None);
        assert_eq!(again.iter().map(|p| p.seq).collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn drop_tail_counts_in_flight() {
        let mut q = SharedQueue::new(2);
        fill(&mut q, 2);
        assert!(q.enqueue(pkt(5, TrafficClass::BestEffort)).is_err());
        let t = q.take_aggregate(1, u64::MAX, None);
        assert!(q.enqueue(pkt(6, TrafficClass::BestEffort)).is_err());
        q.release(t.len());
        assert!(q.enqueue(pkt(7, TrafficClass::BestEffort)).is_ok());
    }

    #[test]
    fn filter_skips_without_reordering() {
        let mut q = SharedQueue::new(100);
        for s in 0..6 {
            let mut p = pkt(s, TrafficClass::BestEffort);
            p.flow = FlowId((s % 2) as u32);
            q.enqueue(p).unwrap();
        }
        let f = |p: &Packet| p.flow == FlowId(1);
        let taken = q.take_aggregate(10, u64::MAX, Some(&f));
        assert_eq!(taken.iter().map(|p| p.seq).collect::<Vec<_>>(), vec![1, 3, 5]);
        assert_eq!(q.head().unwrap().seq, 0);
    }

    #[test]
    fn head_exceeding_budget_still_taken() {
        let mut q = SharedQueue::new(10);
        fill(&mut q, 3);
        assert_eq!(q.take_aggregate(1024, 100, None).len(), 1);
    }
}
