//! Per-link CSMA/CA, TXOP construction with A-MPDU aggregation and BlockAck,
//! R-TWT service periods and preemption by the TXOP holder.

use std::collections::BTreeSet;

use crate::ids::{DeviceId, FlowId, LinkId};
use crate::mlo::SharedQueue;
use crate::phy::{mpdu_error_trial, LinkRate};
use crate::sim::{RngStream, SimTime};
use crate::traffic::{Packet, TrafficClass};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MacError {
    #[error("R-TWT service period on {ap} overlaps an existing one")]
    OverlappingSp { ap: DeviceId },
    #[error("R-TWT service period duration must be positive and shorter than its period")]
    InvalidSp,
    #[error("contention window bounds are inconsistent (min {min}, max {max})")]
    ContentionWindow { min: u32, max: u32 },
    #[error("DIFS must exceed SIFS")]
    InterframeSpacing,
}

/// EDCA timing and aggregation limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdcaParams {
    pub slot: SimTime,
    pub sifs: SimTime,
    pub difs: SimTime,
    pub cw_min: u32,
    pub cw_max: u32,
    pub retry_limit: u8,
    pub block_ack: SimTime,
    pub txop_limit: SimTime,
    pub max_ampdu: u32,
}

impl Default for EdcaParams {
    fn default() -> Self {
        EdcaParams {
            slot: SimTime::from_micros(9),
            sifs: SimTime::from_micros(16),
            difs: SimTime::from_micros(34),
            cw_min: 15,
            cw_max: 1023,
            retry_limit: 7,
            block_ack: SimTime::from_micros(32),
            txop_limit: SimTime::from_micros(5484),
            max_ampdu: 1024,
        }
    }
}

impl EdcaParams {
    pub fn validate(&self) -> Result<(), MacError> {
        if self.cw_min > self.cw_max {
            return Err(MacError::ContentionWindow {
                min: self.cw_min,
                max: self.cw_max,
            });
        }
        if self.difs <= self.sifs {
            return Err(MacError::InterframeSpacing);
        }
        Ok(())
    }

    /// SIFS plus BlockAck appended to every data PPDU.
    pub fn ack_overhead(&self) -> SimTime {
        self.sifs + self.block_ack
    }
}

/// Binary exponential backoff state of one device on one link.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Backoff {
    /// Remaining idle slots; `None` until drawn for the next access.
    pub counter: Option<u32>,
    pub cw: u32,
}

impl Backoff {
    pub fn new(cw_min: u32) -> Self {
        Backoff {
            counter: None,
            cw: cw_min,
        }
    }

    pub fn ensure_drawn(&mut self, rng: &mut RngStream) -> u32 {
        *self.counter.get_or_insert_with(|| rng.uniform_int(self.cw))
    }

    /// Reset after a TXOP whose PPDU was decoded.
    pub fn on_success(&mut self, cw_min: u32) {
        self.cw = cw_min;
        self.counter = None;
    }

    /// Double after a lost PPDU (collision or SINR outage).
    pub fn on_failure(&mut self, cw_max: u32) {
        self.cw = (2 * self.cw + 1).min(cw_max);
        self.counter = None;
    }

    /// Applies countdown progress when the medium turns busy at `now`.
    /// Only whole idle slots elapsed since `countdown_start` count.
    pub fn freeze(&mut self, countdown_start: SimTime, now: SimTime, slot: SimTime) {
        if let Some(c) = self.counter.as_mut() {
            if now > countdown_start {
                let elapsed = ((now - countdown_start).as_nanos() / slot.as_nanos()) as u32;
                *c = c.saturating_sub(elapsed);
            }
        }
    }
}

/// Instant at which a device's backoff expires, given when the medium last
/// became idle, when the device started contending and its counter.
pub fn access_time(idle_since: SimTime, armed_at: SimTime, counter: u32, edca: &EdcaParams) -> SimTime {
    countdown_start(idle_since, armed_at, edca) + edca.slot.mul(counter as u64)
}

/// Start of slot counting: DIFS after the medium went idle, but never before
/// the device started contending.
pub fn countdown_start(idle_since: SimTime, armed_at: SimTime, edca: &EdcaParams) -> SimTime {
    (idle_since + edca.difs).max(armed_at)
}

/// Restricted TWT service period, repeating every `period` from `start`.
#[derive(Debug, Clone, PartialEq)]
pub struct RtwtSp {
    pub ap: DeviceId,
    /// Links the period applies to; empty means all links of the AP.
    pub links: Vec<LinkId>,
    pub start: SimTime,
    pub duration: SimTime,
    pub period: SimTime,
    pub members: BTreeSet<FlowId>,
}

impl RtwtSp {
    pub fn applies_to(&self, link: LinkId) -> bool {
        self.links.is_empty() || self.links.contains(&link)
    }

    /// The occurrence active at `t`, if any, as `[start, end)`.
    pub fn active_at(&self, t: SimTime) -> Option<(SimTime, SimTime)> {
        if t < self.start {
            return None;
        }
        let k = (t - self.start).as_nanos() / self.period.as_nanos();
        let s = self.start + self.period.mul(k);
        let e = s + self.duration;
        (t < e).then_some((s, e))
    }

    /// First occurrence start at or after `t`.
    pub fn next_start(&self, t: SimTime) -> SimTime {
        if t <= self.start {
            return self.start;
        }
        let k = (t - self.start).as_nanos().div_ceil(self.period.as_nanos());
        self.start + self.period.mul(k)
    }
}

/// All service periods of a scenario.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RtwtCalendar {
    sps: Vec<RtwtSp>,
}

impl RtwtCalendar {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a service period; periods of one AP may not overlap.
    pub fn schedule(&mut self, sp: RtwtSp) -> Result<(), MacError> {
        if sp.duration == SimTime::ZERO || sp.duration >= sp.period {
            return Err(MacError::InvalidSp);
        }
        for other in self.sps.iter().filter(|o| o.ap == sp.ap) {
            if sps_overlap(other, &sp) {
                return Err(MacError::OverlappingSp { ap: sp.ap });
            }
        }
        self.sps.push(sp);
        Ok(())
    }

    pub fn periods(&self) -> &[RtwtSp] {
        &self.sps
    }

    pub fn is_empty(&self) -> bool {
        self.sps.is_empty()
    }

    /// Active service period on `link` at `t`: `(index, start, end)`.
    pub fn active(&self, link: LinkId, t: SimTime) -> Option<(usize, SimTime, SimTime)> {
        self.sps.iter().enumerate().find_map(|(i, sp)| {
            if !sp.applies_to(link) {
                return None;
            }
            sp.active_at(t).map(|(s, e)| (i, s, e))
        })
    }

    /// Earliest service-period start on `link` at or after `t`.
    pub fn next_start(&self, link: LinkId, t: SimTime) -> Option<SimTime> {
        self.sps
            .iter()
            .filter(|sp| sp.applies_to(link))
            .map(|sp| sp.next_start(t))
            .min()
    }
}

fn sps_overlap(a: &RtwtSp, b: &RtwtSp) -> bool {
    let shares_link = a.links.is_empty() || b.links.is_empty() || a.links.iter().any(|l| b.links.contains(l));
    if !shares_link {
        return false;
    }
    // Check occurrences over one hyper-period-ish window.
    let horizon = a.start.max(b.start) + a.period.max(b.period).mul(64);
    let mut ta = a.start;
    while ta < horizon {
        let ea = ta + a.duration;
        let sb = b.next_start(ta.saturating_sub(b.duration));
        if sb < ea && ta < sb + b.duration {
            return true;
        }
        ta += a.period;
    }
    false
}

/// A planned transmission: one A-MPDU followed by SIFS and BlockAck.
#[derive(Debug, Clone, PartialEq)]
pub struct TxopPlan {
    pub link: LinkId,
    pub rate: LinkRate,
    pub mpdus: Vec<Packet>,
    pub txop_start: SimTime,
    /// Start of the data PPDU (after any sounding overhead).
    pub ppdu_start: SimTime,
    pub ppdu_end: SimTime,
    /// End of the BlockAck.
    pub end: SimTime,
    pub hard_end: SimTime,
}

impl TxopPlan {
    pub fn planned_airtime(&self) -> SimTime {
        self.end - self.txop_start
    }

    pub fn payload_bits(&self) -> u64 {
        self.mpdus.iter().map(Packet::bits).sum()
    }
}

/// Inputs constraining one TXOP.
#[derive(Debug, Clone, Copy)]
pub struct TxopLimits {
    pub edca: EdcaParams,
    /// Latest instant the TXOP may occupy the medium (next quiet interval,
    /// coordinated slot end or service-period end).
    pub hard_end: SimTime,
    /// Fixed airtime charged before the data PPDU (e.g. CSI sounding).
    pub overhead: SimTime,
}

/// Dequeues an A-MPDU for a TXOP starting at `now`.
///
/// The aggregate is bounded by the MPDU limit, by the TXOP limit and by
/// `hard_end`. A head MPDU that alone exceeds the TXOP limit is still sent
/// on its own, but nothing is ever planned across `hard_end`; in that case
/// the packets go back to the queue and `None` is returned.
pub fn build_txop(
    queue: &mut SharedQueue,
    link: LinkId,
    rate: LinkRate,
    now: SimTime,
    limits: &TxopLimits,
    filter: Option<&dyn Fn(&Packet) -> bool>,
) -> Option<TxopPlan> {
    let edca = &limits.edca;
    let txop_end = now + edca.txop_limit;
    let limit_end = txop_end.min(limits.hard_end);
    let fixed = limits.overhead + rate.preamble + edca.ack_overhead();
    let data_budget = limit_end.checked_sub(now).and_then(|d| d.checked_sub(fixed));
    let max_bits = data_budget
        .map(|b| rate.bits_in(b.as_nanos() / rate.symbol.as_nanos()))
        .unwrap_or(0);
    let mpdus = queue.take_aggregate(edca.max_ampdu as usize, max_bits, filter);
    if mpdus.is_empty() {
        return None;
    }
    let bits: u64 = mpdus.iter().map(Packet::bits).sum();
    let ppdu_start = now + limits.overhead;
    let ppdu_end = ppdu_start + rate.ppdu_duration(bits);
    let end = ppdu_end + edca.ack_overhead();
    if end > limits.hard_end {
        queue.requeue_front(mpdus);
        return None;
    }
    Some(TxopPlan {
        link,
        rate,
        mpdus,
        txop_start: now,
        ppdu_start,
        ppdu_end,
        end,
        hard_end: limits.hard_end,
    })
}

/// Per-MPDU outcome of a completed TXOP.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TxReport {
    pub delivered: Vec<Packet>,
    /// Failed MPDUs still under the retry limit, in original order.
    pub retry: Vec<Packet>,
    pub dropped: Vec<Packet>,
}

/// Resolves every MPDU of a PPDU. If the PPDU was not decodable (SINR
/// below the MCS threshold) every MPDU fails; otherwise each fails
/// independently with probability `per`.
pub fn resolve_mpdus(
    mpdus: Vec<Packet>,
    decodable: bool,
    per: f64,
    retry_limit: u8,
    rng: &mut RngStream,
) -> TxReport {
    let mut r = TxReport::default();
    for mut p in mpdus {
        let failed = !decodable || mpdu_error_trial(per, rng);
        if !failed {
            r.delivered.push(p);
            continue;
        }
        p.retries = p.retries.saturating_add(1);
        if p.retries > retry_limit {
            r.dropped.push(p);
        } else {
            r.retry.push(p);
        }
    }
    r
}

/// The holder's data PPDU currently on air.
#[derive(Debug, Clone, Copy)]
pub struct ActivePpdu<'a> {
    pub txop_start: SimTime,
    pub ppdu_start: SimTime,
    pub ppdu_end: SimTime,
    /// End of the TXOP's final BlockAck.
    pub end: SimTime,
    pub rate: LinkRate,
    pub mpdus: &'a [Packet],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreemptReject {
    Disabled,
    NotHolder,
    NotTimeSensitive,
    /// The urgent frame would push the TXOP beyond its limit.
    ExceedsTxop,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PreemptionOutcome {
    /// The ongoing PPDU stops at `cut`; its first `sent` MPDUs were fully on
    /// air and the rest go back to the queue.
    Truncated {
        cut: SimTime,
        sent: usize,
        urgent_ppdu_start: SimTime,
        urgent_ppdu_end: SimTime,
        end: SimTime,
        insertion_latency: SimTime,
    },
    /// Arrival fell in the SIFS/BlockAck gap; the urgent PPDU follows the
    /// BlockAck after SIFS.
    AfterBlockAck {
        urgent_ppdu_start: SimTime,
        urgent_ppdu_end: SimTime,
        end: SimTime,
        insertion_latency: SimTime,
    },
    Rejected(PreemptReject),
}

/// Replaces the rest of an ongoing best-effort PPDU with a time-sensitive
/// frame at the next OFDM symbol boundary.
pub fn preempt(
    active: &ActivePpdu<'_>,
    now: SimTime,
    urgent: &Packet,
    enabled: bool,
    caller_is_holder: bool,
    edca: &EdcaParams,
) -> PreemptionOutcome {
    use PreemptionOutcome::*;
    if !enabled {
        return Rejected(PreemptReject::Disabled);
    }
    if !caller_is_holder {
        return Rejected(PreemptReject::NotHolder);
    }
    if urgent.class != TrafficClass::TimeSensitive {
        return Rejected(PreemptReject::NotTimeSensitive);
    }
    let rate = active.rate;
    let limit = active.txop_start + edca.txop_limit;
    let urgent_air = rate.ppdu_duration(urgent.bits());
    let data_start = active.ppdu_start + rate.preamble;

    if now >= active.ppdu_end {
        let start = active.end + edca.sifs;
        let ppdu_end = start + urgent_air;
        let end = ppdu_end + edca.ack_overhead();
        if end > limit {
            return Rejected(PreemptReject::ExceedsTxop);
        }
        return AfterBlockAck {
            urgent_ppdu_start: start,
            urgent_ppdu_end: ppdu_end,
            end,
            insertion_latency: start + rate.preamble - now,
        };
    }

    // Inside the preamble nothing has been sent yet: abort right away.
    let (cut, sent) = if now <= data_start {
        (now.max(active.ppdu_start), 0)
    } else {
        let sym = rate.symbol.as_nanos();
        let into = (now - data_start).as_nanos();
        let symbols = into.div_ceil(sym);
        let cut = data_start + SimTime::from_nanos(symbols * sym);
        let mut cum = 0u64;
        let sent = active
            .mpdus
            .iter()
            .take_while(|p| {
                cum += p.bits();
                rate.symbols_for(cum) <= symbols
            })
            .count();
        (cut, sent)
    };
    let ppdu_end = cut + urgent_air;
    let end = ppdu_end + edca.ack_overhead();
    if end > limit {
        return Rejected(PreemptReject::ExceedsTxop);
    }
    Truncated {
        cut,
        sent,
        urgent_ppdu_start: cut,
        urgent_ppdu_end: ppdu_end,
        end,
        insertion_latency: cut + rate.preamble - now,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phy::{McsTable, PhyConfig};

    fn rate(mcs: u8) -> LinkRate {
        let t = McsTable::wifi7_default();
        LinkRate::new(*t.by_index(mcs).unwrap(), &PhyConfig::new(6.0, 160).unwrap(), 2).unwrap()
    }

    fn pkt(seq: u64) -> Packet {
        Packet {
            flow: FlowId(0),
            seq,
            bytes: 1500,
            arrival: SimTime::ZERO,
            class: TrafficClass::BestEffort,
            dst: DeviceId(1),
            retries: 0,
        }
    }

    fn queue_of(n: u64) -> SharedQueue {
        let mut q = SharedQueue::new(10_240);
        for s in 0..n {
            q.enqueue(pkt(s)).unwrap();
        }
        q
    }

    fn limits() -> TxopLimits {
        TxopLimits {
            edca: EdcaParams::default(),
            hard_end: SimTime::MAX,
            overhead: SimTime::ZERO,
        }
    }

    #[test]
    fn single_contender_access_time() {
        let edca = EdcaParams::default();
        let t = access_time(SimTime::ZERO, SimTime::ZERO, 5, &edca);
        assert_eq!(t, SimTime::from_micros(79));
    }

    #[test]
    fn backoff_freeze_counts_whole_slots() {
        let mut b = Backoff {
            counter: Some(10),
            cw: 15,
        };
        b.freeze(SimTime::from_micros(34), SimTime::from_micros(34 + 9 * 3 + 5), SimTime::from_micros(9));
        assert_eq!(b.counter, Some(7));
        b.freeze(SimTime::from_micros(100), SimTime::from_micros(50), SimTime::from_micros(9));
        assert_eq!(b.counter, Some(7));
    }

    #[test]
    fn contention_window_doubles_and_resets() {
        let mut b = Backoff::new(15);
        for expect in [31, 63, 127, 255, 511, 1023, 1023] {
            b.on_failure(1023);
            assert_eq!(b.cw, expect);
        }
        b.on_success(15);
        assert_eq!((b.cw, b.counter), (15, None));
    }

    #[test]
    fn mcs13_plan_is_aggregation_limited() {
        let mut q = queue_of(2000);
        let p = build_txop(&mut q, LinkId(0), rate(13), SimTime::ZERO, &limits(), None).unwrap();
        assert_eq!(p.mpdus.len(), 1024);
        assert_eq!(p.planned_airtime(), SimTime::from_nanos(4_314_400 + 48_000));
        assert_eq!(q.len(), 976);
    }

    #[test]
    fn mcs4_plan_is_txop_limited() {
        let mut q = queue_of(2000);
        let p = build_txop(&mut q, LinkId(0), rate(4), SimTime::ZERO, &limits(), None).unwrap();
        assert_eq!(p.mpdus.len(), 388);
        assert!(p.planned_airtime() <= SimTime::from_micros(5484));
    }

    #[test]
    fn plan_truncated_before_quiet_interval() {
        let mut q = queue_of(2000);
        let mut l = limits();
        l.hard_end = SimTime::from_micros(200);
        let p = build_txop(&mut q, LinkId(0), rate(13), SimTime::ZERO, &l, None).unwrap();
        assert!(p.end <= SimTime::from_micros(200));
        // 200 - 44 - 48 = 108 us -> 7 symbols -> 274_400 bits -> 22 MPDUs.
        assert_eq!(p.mpdus.len(), 22);
    }

    #[test]
    fn no_room_before_quiet_interval_defers() {
        let mut q = queue_of(5);
        let mut l = limits();
        l.hard_end = SimTime::from_micros(60);
        assert!(build_txop(&mut q, LinkId(0), rate(13), SimTime::ZERO, &l, None).is_none());
        assert_eq!((q.len(), q.in_flight()), (5, 0));
    }

    #[test]
    fn oversized_head_goes_alone() {
        let mut q = SharedQueue::new(10);
        let mut big = pkt(0);
        big.bytes = 2_000_000;
        q.enqueue(big).unwrap();
        q.enqueue(pkt(1)).unwrap();
        let p = build_txop(&mut q, LinkId(0), rate(0), SimTime::ZERO, &limits(), None).unwrap();
        assert_eq!(p.mpdus.len(), 1);
    }

    #[test]
    fn resolve_without_errors_delivers_all() {
        let mut rng = RngStream::new(1, "r");
        let r = resolve_mpdus((0..100).map(pkt).collect(), true, 0.0, 7, &mut rng);
        assert_eq!(r.delivered.len(), 100);
    }

    #[test]
    fn undecodable_ppdu_fails_everything_in_order() {
        let mut rng = RngStream::new(1, "r");
        let r = resolve_mpdus((0..10).map(pkt).collect(), false, 0.0, 7, &mut rng);
        assert!(r.delivered.is_empty());
        assert_eq!(r.retry.iter().map(|p| p.seq).collect::<Vec<_>>(), (0..10).collect::<Vec<_>>());
        assert!(r.retry.iter().all(|p| p.retries == 1));
    }

    #[test]
    fn retry_limit_drops() {
        let mut rng = RngStream::new(1, "r");
        let mut p = pkt(0);
        p.retries = 7;
        let r = resolve_mpdus(vec![p], false, 0.0, 7, &mut rng);
        assert_eq!(r.dropped.len(), 1);
    }

    #[test]
    fn rtwt_calendar_rules() {
        let sp = |start| RtwtSp {
            ap: DeviceId(0),
            links: vec![],
            start: SimTime::from_micros(start),
            duration: SimTime::from_micros(500),
            period: SimTime::from_micros(10_000),
            members: BTreeSet::from([FlowId(1)]),
        };
        let mut cal = RtwtCalendar::new();
        cal.schedule(sp(1000)).unwrap();
        assert_eq!(cal.schedule(sp(1200)), Err(MacError::OverlappingSp { ap: DeviceId(0) }));
        cal.schedule(sp(5000)).unwrap();
        assert_eq!(cal.next_start(LinkId(0), SimTime::from_micros(1001)), Some(SimTime::from_micros(5000)));
        assert_eq!(cal.next_start(LinkId(0), SimTime::from_micros(5001)), Some(SimTime::from_micros(11_000)));
        assert!(cal.active(LinkId(0), SimTime::from_micros(11_499)).is_some());
        assert!(cal.active(LinkId(0), SimTime::from_micros(11_500)).is_none());
        let mut bad = sp(0);
        bad.duration = bad.period;
        assert_eq!(RtwtCalendar::new().schedule(bad), Err(MacError::InvalidSp));
    }

    fn urgent() -> Packet {
        Packet {
            class: TrafficClass::TimeSensitive,
            bytes: 100,
            ..pkt(1_000)
        }
    }

    #[test]
    fn preemption_mid_symbol() {
        let mpdus: Vec<Packet> = (0..100).map(pkt).collect();
        let r = rate(13);
        let bits: u64 = mpdus.iter().map(Packet::bits).sum();
        let ppdu_end = r.ppdu_duration(bits);
        let active = ActivePpdu {
            txop_start: SimTime::ZERO,
            ppdu_start: SimTime::ZERO,
            ppdu_end,
            end: ppdu_end + SimTime::from_micros(48),
            rate: r,
            mpdus: &mpdus,
        };
        let now = SimTime::from_nanos(44_000 + 5 * 13_600 + 100);
        match preempt(&active, now, &urgent(), true, true, &EdcaParams::default()) {
            PreemptionOutcome::Truncated {
                cut,
                sent,
                insertion_latency,
                ..
            } => {
                assert_eq!(cut, SimTime::from_nanos(44_000 + 6 * 13_600));
                // 6 symbols carry 235_200 bits: 19 whole MPDUs.
                assert_eq!(sent, 19);
                assert!(insertion_latency <= SimTime::from_nanos(57_600));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn preemption_in_ack_gap_goes_after_block_ack() {
        let mpdus: Vec<Packet> = (0..10).map(pkt).collect();
        let r = rate(13);
        let ppdu_end = SimTime::from_micros(100);
        let active = ActivePpdu {
            txop_start: SimTime::ZERO,
            ppdu_start: SimTime::ZERO,
            ppdu_end,
            end: ppdu_end + SimTime::from_micros(48),
            rate: r,
            mpdus: &mpdus,
        };
        let out = preempt(&active, SimTime::from_micros(110), &urgent(), true, true, &EdcaParams::default());
        assert!(matches!(
            out,
            PreemptionOutcome::AfterBlockAck { urgent_ppdu_start, .. } if urgent_ppdu_start == SimTime::from_micros(164)
        ));
    }

    #[test]
    fn preemption_rejections() {
        let mpdus: Vec<Packet> = (0..10).map(pkt).collect();
        let active = ActivePpdu {
            txop_start: SimTime::ZERO,
            ppdu_start: SimTime::ZERO,
            ppdu_end: SimTime::from_micros(100),
            end: SimTime::from_micros(148),
            rate: rate(13),
            mpdus: &mpdus,
        };
        let e = EdcaParams::default();
        let t = SimTime::from_micros(60);
        assert_eq!(preempt(&active, t, &urgent(), false, true, &e), PreemptionOutcome::Rejected(PreemptReject::Disabled));
        assert_eq!(preempt(&active, t, &urgent(), true, false, &e), PreemptionOutcome::Rejected(PreemptReject::NotHolder));
        assert_eq!(preempt(&active, t, &pkt(3), true, true, &e), PreemptionOutcome::Rejected(PreemptReject::NotTimeSensitive));
    }
}
