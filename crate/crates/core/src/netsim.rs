//! Event-driven network model: per-link CSMA/CA, TXOP execution, multi-link
//! devices, multi-AP coordination, R-TWT service periods and preemption.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::Write;

use crate::coord::{
    cofdma_split, ctdma_slots, form_set, rewrite_contention, ApCoordInfo, ContentionDomain, CoordError,
    CoordinationScheme, CoordinationSet, TdmaSlot,
};
use crate::ids::{DeviceId, FlowId, LinkId};
use crate::mac::{
    build_txop, countdown_start, preempt, resolve_mpdus, ActivePpdu, Backoff, EdcaParams, MacError,
    PreemptionOutcome, RtwtCalendar, RtwtSp, TxopLimits,
};
use crate::mlo::{eligible_links, nstr_start, LinkActivity, MldConfig, MloMode, SharedQueue, StartDecision};
use crate::phy::{
    path_loss_db, select_mcs, sinr_db, Interferer, LinkRate, McsEntry, McsTable, PhyConfig,
    PhyError, Position, Subband,
};
use crate::scenario::{FlowModelConfig, ScenarioConfig};
use crate::sim::{EventHandle, RngStream, RunSummary, Scheduler, SimTime, TraceEvent};
use crate::stats::{
    conservation_report, AccessKind, AirtimeLedger, ConservationError, ExclusionViolation, FlowStats,
    QuietInterval, RunReport, TxInterval,
};
use crate::traffic::{FlowModel, FlowSource, FlowSpec, Packet, SourceEvent, TrafficClass};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum BuildError {
    #[error("topology: {0}")]
    Phy(#[from] PhyError),
    #[error("coordination: {0}")]
    Coord(#[from] CoordError),
    #[error("R-TWT: {0}")]
    Mac(#[from] MacError),
    #[error("MCS table: {0}")]
    Mcs(String),
}

/// End-of-run audit failures.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditFailure {
    pub conservation: Option<ConservationError>,
    pub exclusion: Vec<ExclusionViolation>,
    pub quiet: Vec<TxInterval>,
    pub longest_txop: Option<SimTime>,
    pub largest_aggregate: Option<u32>,
    pub self_overlaps: usize,
}

impl AuditFailure {
    pub fn is_clean(&self) -> bool {
        self.conservation.is_none()
            && self.exclusion.is_empty()
            && self.quiet.is_empty()
            && self.longest_txop.is_none()
            && self.largest_aggregate.is_none()
            && self.self_overlaps == 0
    }
}

impl fmt::Display for AuditFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(c) = &self.conservation {
            parts.push(c.to_string());
        }
        if let Some(v) = self.exclusion.first() {
            parts.push(format!(
                "{} mutual-exclusion violations (first: {} and {} on {} at {} ns / {} ns)",
                self.exclusion.len(),
                v.a,
                v.b,
                v.link,
                v.a_start.as_nanos(),
                v.b_start.as_nanos()
            ));
        }
        if let Some(v) = self.quiet.first() {
            parts.push(format!(
                "{} transmissions inside R-TWT quiet intervals (first: {} on {} at {} ns)",
                self.quiet.len(),
                v.transmitter,
                v.link,
                v.start.as_nanos()
            ));
        }
        if let Some(t) = self.longest_txop {
            parts.push(format!("TXOP of {:.3} us exceeds the limit", t.as_micros_f64()));
        }
        if let Some(n) = self.largest_aggregate {
            parts.push(format!("A-MPDU of {n} MPDUs exceeds the limit"));
        }
        if self.self_overlaps > 0 {
            parts.push(format!("{} overlapping transmissions by single-radio devices", self.self_overlaps));
        }
        write!(f, "audit failed: {}", parts.join("; "))
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error("{0}")]
    Audit(Box<AuditFailure>),
}

/// Static SINR and MCS of one AP-to-STA path.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub link: LinkId,
    pub ap: String,
    pub sta: String,
    pub signal_dbm: f64,
    /// `(transmitter, interferer)` for every AP that may transmit
    /// concurrently on the link.
    pub interferers: Vec<(String, Interferer)>,
    pub noise_dbm: f64,
    pub sinr_db: f64,
    pub mcs: McsEntry,
    pub rate_bps: f64,
}

struct Topology {
    names: Vec<String>,
    /// AP index owning each device's BSS.
    bss: Vec<usize>,
    n_aps: usize,
    streams: Vec<u32>,
    rx_dbm: Vec<Vec<f64>>,
    domain: ContentionDomain,
    coord: CoordinationSet,
    mlds: Vec<MldConfig>,
    phy: PhyConfig,
    table: McsTable,
    links: usize,
}

impl Topology {
    fn build(cfg: &ScenarioConfig) -> Result<Self, BuildError> {
        let n_aps = cfg.aps.len();
        let mut names = Vec::new();
        let mut pos = Vec::new();
        let mut bss = Vec::new();
        let mut antennas = Vec::new();
        let mut streams = Vec::new();
        for (i, a) in cfg.aps.iter().enumerate() {
            names.push(a.name.clone());
            pos.push(Position::new(a.x, a.y));
            bss.push(i);
            antennas.push(a.antennas);
            streams.push(a.streams);
        }
        for s in &cfg.stas {
            names.push(s.name.clone());
            pos.push(Position::new(s.x, s.y));
            bss.push(cfg.aps.iter().position(|a| a.name == s.ap).expect("validated reference"));
            antennas.push(s.antennas);
            streams.push(0);
        }

        let mut phy = PhyConfig::new(cfg.links.freq_ghz, cfg.links.bandwidth_mhz)?;
        phy.symbol_duration = cfg.phy.symbol;
        phy.preamble = cfg.phy.preamble;
        phy.noise_figure_db = cfg.phy.noise_figure_db;
        phy.noise_density_dbm_hz = cfg.phy.noise_density_dbm_hz;
        phy.tx_power_dbm = cfg.phy.tx_power_dbm;
        phy.per = cfg.phy.per;
        phy.validate()?;
        let table = if cfg.phy.mcs_table.is_empty() {
            McsTable::wifi7_default()
        } else {
            McsTable::new(cfg.phy.mcs_table.clone()).map_err(|e| BuildError::Mcs(e.to_string()))?
        };

        let n = names.len();
        let mut rx_dbm = vec![vec![f64::NEG_INFINITY; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    rx_dbm[i][j] = phy.tx_power_dbm - path_loss_db(pos[i], pos[j], phy.freq_ghz)?;
                }
            }
        }

        let links = cfg.links.count as usize;
        let all_links: Vec<LinkId> = (0..links as u32).map(LinkId).collect();
        let mlds: Vec<MldConfig> = cfg
            .aps
            .iter()
            .map(|a| {
                let entry = cfg.mlo.devices.iter().find(|d| d.device == a.name);
                let links = match entry {
                    Some(e) if !e.links.is_empty() => e.links.iter().map(|&l| LinkId(l)).collect(),
                    _ => all_links.clone(),
                };
                MldConfig {
                    mode: entry.map_or(cfg.mlo.mode, |e| e.mode),
                    links,
                    switch_delay: cfg.mlo.switch_delay,
                }
            })
            .collect();
        let on_link = |dev: usize, l: LinkId| dev >= n_aps || mlds[dev].links.contains(&l);

        let mut domain = ContentionDomain::new();
        for &l in &all_links {
            domain.add_link(l);
            for i in 0..n {
                for j in (i + 1)..n {
                    if on_link(i, l) && on_link(j, l) && rx_dbm[i][j] >= cfg.mac.cca_threshold_dbm {
                        domain.add_edge(l, DeviceId(i as u32), DeviceId(j as u32));
                    }
                }
            }
        }

        let member_idx: Vec<usize> = if cfg.coordination.members.is_empty() {
            (0..n_aps).collect()
        } else {
            cfg.coordination
                .members
                .iter()
                .map(|m| cfg.aps.iter().position(|a| &a.name == m).expect("validated reference"))
                .collect()
        };
        let coord = match cfg.coordination.scheme {
            CoordinationScheme::None => CoordinationSet::none(),
            scheme => {
                let infos: Vec<ApCoordInfo> = member_idx
                    .iter()
                    .map(|&a| {
                        let nulls = (n_aps..n)
                            .filter(|&s| bss[s] != a && member_idx.contains(&bss[s]))
                            .map(|s| antennas[s])
                            .sum();
                        ApCoordInfo {
                            id: DeviceId(a as u32),
                            name: cfg.aps[a].name.clone(),
                            antennas: cfg.aps[a].antennas,
                            streams: cfg.aps[a].streams,
                            null_directions: if scheme == CoordinationScheme::Cbf { nulls } else { 0 },
                            admin_domain: cfg.aps[a].admin_domain,
                        }
                    })
                    .collect();
                form_set(
                    &infos,
                    scheme,
                    cfg.coordination.nulling_db.unwrap_or(0.0),
                    cfg.coordination.sounding,
                )?
            }
        };
        if coord.scheme == CoordinationScheme::Cofdma {
            cofdma_split(phy.bandwidth_mhz, coord.members.len())?;
        }
        let bss_of: BTreeMap<DeviceId, DeviceId> =
            (0..n).map(|d| (DeviceId(d as u32), DeviceId(bss[d] as u32))).collect();
        let domain = rewrite_contention(&domain, &coord, &bss_of);

        Ok(Topology {
            names,
            bss,
            n_aps,
            streams,
            rx_dbm,
            domain,
            coord,
            mlds,
            phy,
            table,
            links,
        })
    }

    fn dev(i: usize) -> DeviceId {
        DeviceId(i as u32)
    }

    fn has_port(&self, ap: usize, link: usize) -> bool {
        self.mlds[ap].links.contains(&LinkId(link as u32))
    }

    fn senses(&self, link: usize, a: usize, b: usize) -> bool {
        self.domain.senses(LinkId(link as u32), Self::dev(a), Self::dev(b))
    }

    fn interferer(&self, link: usize, tx: usize, rx: usize) -> Interferer {
        Interferer::new(
            self.rx_dbm[tx][rx],
            self.domain.suppression_db(LinkId(link as u32), Self::dev(tx), Self::dev(rx)),
        )
    }

    fn sub_phy(&self, parts: u8) -> PhyConfig {
        if parts <= 1 {
            return self.phy.clone();
        }
        self.phy
            .with_bandwidth(self.phy.bandwidth_mhz / parts as u32)
            .expect("split validated at build")
    }

    /// SINR-based MCS for `ap` serving `sta` on `link`, assuming interference
    /// from every AP that does not defer to `ap` there.
    fn budget(&self, link: usize, ap: usize, sta: usize, parts: u8) -> LinkBudget {
        let phy = self.sub_phy(parts);
        let noise = phy.noise_dbm();
        let cofdma_peer = |b: usize| {
            parts > 1 && self.coord.contains(Self::dev(b)) && self.coord.contains(Self::dev(ap))
        };
        let interferers: Vec<(String, Interferer)> = (0..self.n_aps)
            .filter(|&b| b != ap && self.has_port(b, link) && !self.senses(link, ap, b) && !cofdma_peer(b))
            .map(|b| (self.names[b].clone(), self.interferer(link, b, sta)))
            .collect();
        let ivs: Vec<Interferer> = interferers.iter().map(|(_, i)| *i).collect();
        let signal = self.rx_dbm[ap][sta];
        let sinr = sinr_db(signal, &ivs, noise);
        let mcs = select_mcs(sinr, &self.table).unwrap_or(self.table.entries()[0]);
        let rate = LinkRate::new(mcs, &phy, self.streams[ap]).expect("validated PHY");
        LinkBudget {
            link: LinkId(link as u32),
            ap: self.names[ap].clone(),
            sta: self.names[sta].clone(),
            signal_dbm: signal,
            interferers,
            noise_dbm: noise,
            sinr_db: sinr,
            mcs,
            rate_bps: rate.rate_bps(),
        }
    }
}

/// Static link budgets of every AP-to-associated-STA path on every link.
pub fn link_budgets(cfg: &ScenarioConfig) -> Result<Vec<LinkBudget>, BuildError> {
    let topo = Topology::build(cfg)?;
    let mut out = Vec::new();
    for l in 0..topo.links {
        for ap in 0..topo.n_aps {
            if !topo.has_port(ap, l) {
                continue;
            }
            for sta in topo.n_aps..topo.names.len() {
                if topo.bss[sta] == ap {
                    out.push(topo.budget(l, ap, sta, 1));
                }
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ev {
    Source(usize),
    Backoff { ap: usize, link: usize },
    TxEnd(usize),
    GroupSlot(u64),
    QuietStart { sp: usize, link: usize },
    QuietEnd { link: usize },
    Wake(usize),
    SpServe { ap: usize, link: usize },
}

impl TraceEvent for Ev {
    fn kind(&self) -> &'static str {
        match self {
            Ev::Source(_) => "source",
            Ev::Backoff { .. } => "backoff",
            Ev::TxEnd(_) => "tx_end",
            Ev::GroupSlot(_) => "group_slot",
            Ev::QuietStart { .. } => "quiet_start",
            Ev::QuietEnd { .. } => "quiet_end",
            Ev::Wake(_) => "wake",
            Ev::SpServe { .. } => "sp_serve",
        }
    }

    fn target(&self) -> String {
        match *self {
            Ev::Source(f) => format!("flow{f}"),
            Ev::Backoff { ap, link } | Ev::SpServe { ap, link } => format!("dev{ap}.link{link}"),
            Ev::TxEnd(slot) => format!("tx{slot}"),
            Ev::GroupSlot(g) => format!("group{g}"),
            Ev::QuietStart { sp, link } => format!("sp{sp}.link{link}"),
            Ev::QuietEnd { link } => format!("link{link}"),
            Ev::Wake(ap) => format!("dev{ap}"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Armed {
    handle: EventHandle,
    countdown_start: SimTime,
    fire_at: SimTime,
}

/// MAC state of one AP on one link.
struct Port {
    backoff: Backoff,
    rng: RngStream,
    /// Ongoing transmissions of devices this port defers to.
    sensed: u32,
    idle_since: SimTime,
    armed: Option<Armed>,
    tx: Option<usize>,
    group: Option<u64>,
    sp_pending: bool,
    /// A TXOP did not fit before the next service period; wait for it to end.
    wait_quiet: bool,
    blocked_since: Option<SimTime>,
    blocked: SimTime,
}

struct Ap {
    mld: MldConfig,
    activity: BTreeMap<LinkId, LinkActivity>,
    queue: SharedQueue,
    flows: Vec<usize>,
    ports: Vec<Option<Port>>,
    per_rng: RngStream,
    wake_at: Option<SimTime>,
}

struct Flow {
    ap: usize,
    source: FlowSource,
    rng: RngStream,
    next: (SimTime, SourceEvent),
    scheduled: bool,
    /// Arrivals may be applied lazily while the queue is backlogged.
    lazy: bool,
}

struct Segment {
    mpdus: Vec<Packet>,
    ppdu_start: SimTime,
    ppdu_end: SimTime,
}

struct ActiveTx {
    ap: usize,
    link: usize,
    dst: usize,
    subband: Subband,
    rate: LinkRate,
    txop_start: SimTime,
    hard_end: SimTime,
    end: SimTime,
    segments: Vec<Segment>,
    handle: EventHandle,
    ledger_idx: usize,
    overlappers: Vec<(usize, Subband)>,
    access: AccessKind,
    preempted: bool,
}

struct Group {
    link: usize,
    start: SimTime,
    members: Vec<usize>,
    slots: Vec<TdmaSlot>,
    next: usize,
    active: usize,
}

/// Everything a finished run produced.
#[derive(Debug, Clone)]
pub struct RunResult {
    pub report: RunReport,
    pub ledger: AirtimeLedger,
    pub quiet: Vec<QuietInterval>,
    pub summary: RunSummary,
    /// Worst insertion latency of truncating preemptions and of preemptions
    /// queued behind a BlockAck.
    pub truncation_latencies: Vec<SimTime>,
    pub ack_gap_latencies: Vec<SimTime>,
    /// Per-link `(transmitter, receiver, SINR dB, MCS threshold dB)` of every
    /// PPDU that overlapped a concurrent transmission.
    pub overlap_outcomes: Vec<OverlapOutcome>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapOutcome {
    pub link: LinkId,
    pub transmitter: DeviceId,
    pub sinr_db: f64,
    pub suppression_db: f64,
    pub decodable: bool,
}

struct Net {
    topo: Topology,
    edca: EdcaParams,
    per: f64,
    preemption: bool,
    sounding: SimTime,
    horizon: SimTime,
    seed: u64,
    aps: Vec<Ap>,
    flows: Vec<Flow>,
    stats: Vec<FlowStats>,
    /// `neighbors[link][ap]`: APs that defer to `ap` on `link`.
    neighbors: Vec<Vec<Vec<usize>>>,
    /// Precomputed rates keyed by `(link, ap, sta, subband count)`.
    rates: BTreeMap<(usize, usize, usize, u8), LinkRate>,
    noise: BTreeMap<u8, f64>,
    calendar: RtwtCalendar,
    txs: Vec<Option<ActiveTx>>,
    free_txs: Vec<usize>,
    groups: BTreeMap<u64, Group>,
    next_group: u64,
    ledger: AirtimeLedger,
    quiet_log: Vec<QuietInterval>,
    mcs_txops: BTreeMap<u8, u64>,
    truncation_latencies: Vec<SimTime>,
    ack_gap_latencies: Vec<SimTime>,
    overlap_outcomes: Vec<OverlapOutcome>,
}

/// One configured simulation run.
pub struct Simulation {
    sched: Scheduler<Ev>,
    net: Net,
}

fn flow_model(m: FlowModelConfig) -> FlowModel {
    match m {
        FlowModelConfig::OnOff {
            mean_on,
            mean_off,
            rate_mbps,
        } => FlowModel::OnOff {
            mean_on,
            mean_off,
            rate_on_bps: rate_mbps * 1e6,
        },
        FlowModelConfig::Poisson { rate_mbps } => FlowModel::Poisson {
            rate_bps: rate_mbps * 1e6,
        },
        FlowModelConfig::Cbr { rate_mbps } => FlowModel::Cbr {
            rate_bps: rate_mbps * 1e6,
        },
    }
}

impl Simulation {
    /// Builds the network for `cfg` with the run seed `seed`.
    pub fn new(cfg: &ScenarioConfig, seed: u64) -> Result<Self, BuildError> {
        let topo = Topology::build(cfg)?;
        let edca = cfg.mac.edca;
        let n_aps = topo.n_aps;
        let device_index = |name: &str| topo.names.iter().position(|n| n == name).expect("validated reference");

        let mut calendar = RtwtCalendar::new();
        let mut members_of_any_sp = BTreeSet::new();
        for r in &cfg.mac.rtwt {
            let members: BTreeSet<FlowId> = r
                .flows
                .iter()
                .map(|f| FlowId(cfg.flows.iter().position(|x| &x.name == f).expect("validated") as u32))
                .collect();
            members_of_any_sp.extend(members.iter().copied());
            calendar.schedule(RtwtSp {
                ap: DeviceId(device_index(&r.ap) as u32),
                links: r.links.iter().map(|&l| LinkId(l)).collect(),
                start: r.start,
                duration: r.duration,
                period: r.period,
                members,
            })?;
        }

        let mut sched = Scheduler::new();
        let mut aps: Vec<Ap> = (0..n_aps)
            .map(|a| {
                let name = &topo.names[a];
                let ports = (0..topo.links)
                    .map(|l| {
                        topo.has_port(a, l).then(|| Port {
                            backoff: Backoff::new(edca.cw_min),
                            rng: RngStream::new(seed, &format!("backoff.{name}.{l}")),
                            sensed: 0,
                            idle_since: SimTime::ZERO,
                            armed: None,
                            tx: None,
                            group: None,
                            sp_pending: false,
                            wait_quiet: false,
                            blocked_since: None,
                            blocked: SimTime::ZERO,
                        })
                    })
                    .collect();
                Ap {
                    mld: topo.mlds[a].clone(),
                    activity: topo.mlds[a].links.iter().map(|&l| (l, LinkActivity::default())).collect(),
                    queue: SharedQueue::new(cfg.mac.buffer_packets as usize),
                    flows: Vec::new(),
                    ports,
                    per_rng: RngStream::new(seed, &format!("per.{name}")),
                    wake_at: None,
                }
            })
            .collect();

        let mut flows = Vec::new();
        let mut stats = Vec::new();
        for (i, f) in cfg.flows.iter().enumerate() {
            let id = FlowId(i as u32);
            let ap = device_index(&f.src);
            let spec = FlowSpec {
                id,
                name: f.name.clone(),
                src: DeviceId(ap as u32),
                dst: DeviceId(device_index(&f.dst) as u32),
                model: flow_model(f.model),
                packet_bytes: f.packet_bytes,
                class: f.class,
            };
            let mut rng = RngStream::new(seed, &format!("traffic.{}", f.name));
            let mut source = FlowSource::new(spec, &mut rng);
            let next = source.next_event(&mut rng);
            sched.schedule(next.0, Ev::Source(i));
            aps[ap].flows.push(i);
            flows.push(Flow {
                ap,
                source,
                rng,
                next,
                scheduled: true,
                lazy: f.class == TrafficClass::BestEffort && !members_of_any_sp.contains(&id),
            });
            stats.push(FlowStats::new(id, f.name.clone()));
        }

        let neighbors = (0..topo.links)
            .map(|l| {
                (0..n_aps)
                    .map(|a| {
                        (0..n_aps)
                            .filter(|&b| b != a && topo.has_port(b, l) && topo.senses(l, a, b))
                            .collect()
                    })
                    .collect()
            })
            .collect();

        let mut parts = vec![1u8];
        if topo.coord.scheme == CoordinationScheme::Cofdma {
            parts.push(topo.coord.members.len() as u8);
        }
        let mut rates = BTreeMap::new();
        let mut noise = BTreeMap::new();
        for &p in &parts {
            noise.insert(p, topo.sub_phy(p).noise_dbm());
            for l in 0..topo.links {
                for a in 0..n_aps {
                    if !topo.has_port(a, l) {
                        continue;
                    }
                    for sta in n_aps..topo.names.len() {
                        if topo.bss[sta] == a {
                            let b = topo.budget(l, a, sta, p);
                            let rate = LinkRate::new(b.mcs, &topo.sub_phy(p), topo.streams[a])?;
                            rates.insert((l, a, sta, p), rate);
                        }
                    }
                }
            }
        }

        let horizon = cfg.run.duration;
        for (i, sp) in calendar.periods().iter().enumerate() {
            for l in 0..topo.links {
                if sp.applies_to(LinkId(l as u32)) && sp.start <= horizon {
                    sched.schedule(sp.start, Ev::QuietStart { sp: i, link: l });
                }
            }
        }

        let net = Net {
            edca,
            per: cfg.phy.per,
            preemption: cfg.mac.preemption,
            sounding: if topo.coord.scheme == CoordinationScheme::Cbf {
                topo.coord.sounding
            } else {
                SimTime::ZERO
            },
            horizon,
            seed,
            aps,
            flows,
            stats,
            neighbors,
            rates,
            noise,
            calendar,
            txs: Vec::new(),
            free_txs: Vec::new(),
            groups: BTreeMap::new(),
            next_group: 0,
            ledger: AirtimeLedger::new(),
            quiet_log: Vec::new(),
            mcs_txops: BTreeMap::new(),
            truncation_latencies: Vec::new(),
            ack_gap_latencies: Vec::new(),
            overlap_outcomes: Vec::new(),
            topo,
        };
        Ok(Simulation { sched, net })
    }

    /// Writes one line per processed event to `sink`.
    pub fn with_trace(mut self, sink: Box<dyn Write + Send>) -> Self {
        self.sched.set_trace(sink);
        self
    }

    /// Runs to the configured horizon and audits the result.
    pub fn run(self) -> Result<RunResult, RunError> {
        let (result, audit) = self.run_unchecked();
        if audit.is_clean() {
            Ok(result)
        } else {
            Err(RunError::Audit(Box::new(audit)))
        }
    }

    /// Runs to the horizon and returns the result with its audit, whether
    /// or not the audit passed.
    pub fn run_unchecked(mut self) -> (RunResult, AuditFailure) {
        let horizon = self.net.horizon;
        let net = &mut self.net;
        let summary = self.sched.run_until(horizon, |s, ev| net.handle(s, ev));
        self.net.finish(summary)
    }
}

/// Builds and runs `cfg` with `seed`.
pub fn run_scenario(cfg: &ScenarioConfig, seed: u64) -> Result<RunResult, RunError> {
    Simulation::new(cfg, seed)?.run()
}

type Sched = Scheduler<Ev>;

impl Net {
    fn handle(&mut self, s: &mut Sched, ev: Ev) {
        match ev {
            Ev::Source(f) => self.on_source(s, f),
            Ev::Backoff { ap, link } => self.on_backoff(s, ap, link),
            Ev::TxEnd(slot) => self.on_tx_end(s, slot),
            Ev::GroupSlot(g) => self.ctdma_next(s, g),
            Ev::QuietStart { sp, link } => self.on_quiet_start(s, sp, link),
            Ev::QuietEnd { link } => self.on_quiet_end(s, link),
            Ev::Wake(ap) => {
                self.aps[ap].wake_at = None;
                self.rearm_all(s, ap);
            }
            Ev::SpServe { ap, link } => self.on_sp_serve(s, ap, link),
        }
    }

    fn port(&mut self, ap: usize, link: usize) -> &mut Port {
        self.aps[ap].ports[link].as_mut().expect("port exists")
    }

    fn has_port(&self, ap: usize, link: usize) -> bool {
        self.aps[ap].ports[link].is_some()
    }

    // ---- traffic -------------------------------------------------------

    /// Applies pending source events of flow `f` up to and including `now`.
    /// Returns true if an arrival found the queue empty.
    fn catch_up(&mut self, f: usize, now: SimTime) -> bool {
        let mut woke = false;
        let flow = &mut self.flows[f];
        let ap = &mut self.aps[flow.ap];
        let st = &mut self.stats[f];
        while flow.next.0 <= now {
            if let SourceEvent::Arrival(p) = flow.next.1 {
                st.counters.generated += 1;
                st.generated_bits += p.bits();
                woke |= ap.queue.is_empty();
                if ap.queue.enqueue(p).is_err() {
                    st.counters.dropped_buffer += 1;
                }
            }
            flow.next = flow.source.next_event(&mut flow.rng);
        }
        woke
    }

    fn catch_up_ap(&mut self, ap: usize, now: SimTime) {
        for i in 0..self.aps[ap].flows.len() {
            let f = self.aps[ap].flows[i];
            self.catch_up(f, now);
        }
    }

    fn ensure_scheduled(&mut self, s: &mut Sched, ap: usize) {
        for i in 0..self.aps[ap].flows.len() {
            let f = self.aps[ap].flows[i];
            let flow = &mut self.flows[f];
            if !flow.scheduled {
                flow.scheduled = true;
                s.schedule(flow.next.0.max(s.now()), Ev::Source(f));
            }
        }
    }

    fn on_source(&mut self, s: &mut Sched, f: usize) {
        let now = s.now();
        self.flows[f].scheduled = false;
        let urgent_before = self.flows[f].source.spec().class == TrafficClass::TimeSensitive;
        let woke = self.catch_up(f, now);
        let ap = self.flows[f].ap;
        let flow = &mut self.flows[f];
        if !(flow.lazy && !self.aps[ap].queue.is_empty()) {
            flow.scheduled = true;
            s.schedule(flow.next.0, Ev::Source(f));
        }
        if urgent_before && self.preemption {
            self.try_preempt(s, ap);
        }
        if woke || !self.flows[f].lazy {
            self.rearm_all(s, ap);
        }
    }

    // ---- contention ----------------------------------------------------

    fn eligible(&self, ap: usize, link: usize, now: SimTime) -> bool {
        let a = &self.aps[ap];
        match a.mld.mode {
            MloMode::EmlmrStr | MloMode::EmlmrNstr => a.mld.links.contains(&LinkId(link as u32)),
            _ => eligible_links(&a.mld, &a.activity, now).contains(&LinkId(link as u32)),
        }
    }

    /// Service period active on `link`, with its end.
    fn quiet_filter(&self, link: usize, now: SimTime) -> Option<(usize, SimTime)> {
        let (idx, _, end) = self.calendar.active(LinkId(link as u32), now)?;
        Some((idx, end))
    }

    fn member_pred(&self, sp: usize) -> impl Fn(&Packet) -> bool + '_ {
        let members = &self.calendar.periods()[sp].members;
        move |p: &Packet| members.contains(&p.flow)
    }

    fn disarm(&mut self, s: &mut Sched, ap: usize, link: usize) {
        let now = s.now();
        let slot = self.edca.slot;
        let port = self.port(ap, link);
        if let Some(arm) = port.armed.take() {
            port.backoff.freeze(arm.countdown_start, now, slot);
            s.cancel(arm.handle);
        }
    }

    fn rearm_all(&mut self, s: &mut Sched, ap: usize) {
        for l in 0..self.topo.links {
            if self.has_port(ap, l) {
                self.rearm(s, ap, l);
            }
        }
    }

    /// Brings the backoff of `(ap, link)` in line with the current state:
    /// armed iff the device may and wants to contend on an idle medium.
    fn rearm(&mut self, s: &mut Sched, ap: usize, link: usize) {
        let now = s.now();
        {
            let p = self.port(ap, link);
            if p.tx.is_some() || p.group.is_some() {
                self.disarm(s, ap, link);
                return;
            }
        }
        if let Some((sp, _)) = self.quiet_filter(link, now) {
            self.disarm(s, ap, link);
            let owner = self.calendar.periods()[sp].ap == Topology::dev(ap);
            if owner && self.eligible(ap, link, now) {
                let pred = self.member_pred(sp);
                let wants = self.aps[ap].queue.any_matching(pred);
                let port = self.port(ap, link);
                if wants && port.sensed == 0 && !port.sp_pending {
                    port.sp_pending = true;
                    s.schedule(now, Ev::SpServe { ap, link });
                }
            }
            return;
        }
        let edca = self.edca;
        let eligible = self.eligible(ap, link, now);
        let backlogged = !self.aps[ap].queue.is_empty();
        let p = self.port(ap, link);
        if !eligible || !backlogged || p.sensed > 0 || p.wait_quiet {
            self.disarm(s, ap, link);
            return;
        }
        if p.armed.is_some() {
            return;
        }
        let counter = p.backoff.ensure_drawn(&mut p.rng);
        let cs = countdown_start(p.idle_since, now, &edca);
        let fire_at = cs + edca.slot.mul(counter as u64);
        let handle = s.schedule(fire_at, Ev::Backoff { ap, link });
        p.armed = Some(Armed {
            handle,
            countdown_start: cs,
            fire_at,
        });
    }

    fn on_backoff(&mut self, s: &mut Sched, ap: usize, link: usize) {
        let now = s.now();
        let p = self.port(ap, link);
        p.armed = None;
        p.backoff.counter = Some(0);
        if p.tx.is_some() || p.group.is_some() {
            return;
        }
        if !self.eligible(ap, link, now) || self.quiet_filter(link, now).is_some() {
            self.rearm(s, ap, link);
            return;
        }
        if self.aps[ap].mld.mode == MloMode::EmlmrNstr {
            if let StartDecision::DeferUntil(_) =
                nstr_start(LinkId(link as u32), &self.aps[ap].activity, now, self.edca.slot)
            {
                // Retried when the other link's transmission ends.
                return;
            }
        }
        self.catch_up_ap(ap, now);
        let scheme = self.topo.coord.scheme;
        if matches!(scheme, CoordinationScheme::Ctdma | CoordinationScheme::Cofdma)
            && self.topo.coord.contains(Topology::dev(ap))
        {
            self.port(ap, link).backoff.counter = None;
            self.start_group(s, link);
            return;
        }
        let hard_end = self.next_quiet(link, now);
        let started = self.start_tx(s, ap, link, AccessKind::Contention, hard_end, Subband::FULL, None);
        if !started {
            let p = self.port(ap, link);
            p.backoff.counter = None;
            if !self.aps[ap].queue.is_empty() {
                self.port(ap, link).wait_quiet = true;
            }
            self.rearm(s, ap, link);
        }
    }

    fn next_quiet(&self, link: usize, now: SimTime) -> SimTime {
        self.calendar.next_start(LinkId(link as u32), now).unwrap_or(SimTime::MAX)
    }

    // ---- transmissions -------------------------------------------------

    /// Plans and starts a TXOP of `ap` on `link` at `now`. Returns false if
    /// nothing could be sent.
    #[allow(clippy::too_many_arguments)]
    fn start_tx(
        &mut self,
        s: &mut Sched,
        ap: usize,
        link: usize,
        access: AccessKind,
        hard_end: SimTime,
        subband: Subband,
        members_of: Option<usize>,
    ) -> bool {
        let now = s.now();
        let Some(dst) = ({
            let q = &self.aps[ap].queue;
            match members_of {
                Some(sp) => q.first_matching(self.member_pred(sp)),
                None => q.head(),
            }
            .map(|p| p.dst.index())
        }) else {
            return false;
        };
        let rate = self.rates[&(link, ap, dst, subband.count)];
        let limits = TxopLimits {
            edca: self.edca,
            hard_end,
            overhead: if access == AccessKind::Protected {
                SimTime::ZERO
            } else {
                self.sounding
            },
        };
        let plan = {
            let members = members_of.map(|sp| self.calendar.periods()[sp].members.clone());
            let pred = members.as_ref().map(|m| move |p: &Packet| m.contains(&p.flow));
            let filter: Option<&dyn Fn(&Packet) -> bool> = pred.as_ref().map(|f| f as &dyn Fn(&Packet) -> bool);
            build_txop(&mut self.aps[ap].queue, LinkId(link as u32), rate, now, &limits, filter)
        };
        let Some(plan) = plan else {
            return false;
        };
        if self.aps[ap].queue.is_empty() {
            self.ensure_scheduled(s, ap);
        }
        *self.mcs_txops.entry(rate.mcs.index).or_insert(0) += 1;
        let ledger_idx = self.ledger.push(TxInterval {
            link: LinkId(link as u32),
            transmitter: Topology::dev(ap),
            start: now,
            end: plan.end,
            txop_start: now,
            access,
            subband,
            mpdus: plan.mpdus.len() as u32,
            member_only: members_of.is_some(),
        });
        let slot = self.free_txs.pop().unwrap_or_else(|| {
            self.txs.push(None);
            self.txs.len() - 1
        });
        let handle = s.schedule(plan.end, Ev::TxEnd(slot));
        let mut overlappers = Vec::new();
        for other in self.txs.iter_mut().flatten() {
            // One device sends at most one PPDU per link at a time, so
            // repeated overlaps by the same neighbor are not additive.
            if other.link == link && other.subband.overlaps(&subband) {
                if !other.overlappers.iter().any(|&(o, _)| o == ap) {
                    other.overlappers.push((ap, subband));
                }
                if !overlappers.iter().any(|&(o, _)| o == other.ap) {
                    overlappers.push((other.ap, other.subband));
                }
            }
        }
        self.txs[slot] = Some(ActiveTx {
            ap,
            link,
            dst,
            subband,
            rate,
            txop_start: now,
            hard_end,
            end: plan.end,
            segments: vec![Segment {
                mpdus: plan.mpdus,
                ppdu_start: plan.ppdu_start,
                ppdu_end: plan.ppdu_end,
            }],
            handle,
            ledger_idx,
            overlappers,
            access,
            preempted: false,
        });
        self.port(ap, link).tx = Some(slot);
        self.aps[ap].activity.entry(LinkId(link as u32)).or_default().tx = Some((now, plan.end));

        for i in 0..self.neighbors[link][ap].len() {
            let b = self.neighbors[link][ap][i];
            self.sense_start(s, b, link);
        }
        for l in 0..self.topo.links {
            if l != link && self.has_port(ap, l) {
                self.rearm(s, ap, l);
            }
        }
        true
    }

    fn sense_start(&mut self, s: &mut Sched, b: usize, link: usize) {
        let now = s.now();
        let backlogged = !self.aps[b].queue.is_empty();
        let p = self.port(b, link);
        p.sensed += 1;
        if p.sensed > 1 {
            return;
        }
        if backlogged && p.tx.is_none() {
            p.blocked_since = Some(now);
        }
        // A backoff expiring at this very instant still fires: that is an
        // equal-backoff collision.
        if p.armed.is_some_and(|a| a.fire_at != now) {
            self.disarm(s, b, link);
        }
    }

    fn sense_end(&mut self, s: &mut Sched, b: usize, link: usize) {
        let now = s.now();
        let p = self.port(b, link);
        p.sensed -= 1;
        if p.sensed > 0 {
            return;
        }
        p.idle_since = now;
        if let Some(t) = p.blocked_since.take() {
            p.blocked += now - t;
        }
        self.rearm(s, b, link);
    }

    fn decodable(&mut self, tx: &ActiveTx) -> bool {
        if tx.overlappers.is_empty() {
            return true;
        }
        let noise = self.noise[&tx.subband.count];
        let ivs: Vec<Interferer> = tx
            .overlappers
            .iter()
            .map(|&(o, _)| self.topo.interferer(tx.link, o, tx.dst))
            .collect();
        let sinr = sinr_db(self.topo.rx_dbm[tx.ap][tx.dst], &ivs, noise);
        let ok = sinr >= tx.rate.mcs.min_sinr_db;
        let suppression = ivs.iter().map(|i| i.suppression_db).fold(f64::INFINITY, f64::min);
        self.overlap_outcomes.push(OverlapOutcome {
            link: LinkId(tx.link as u32),
            transmitter: Topology::dev(tx.ap),
            sinr_db: sinr,
            suppression_db: suppression,
            decodable: ok,
        });
        ok
    }

    fn on_tx_end(&mut self, s: &mut Sched, slot: usize) {
        let now = s.now();
        let tx = self.txs[slot].take().expect("live transmission");
        self.free_txs.push(slot);
        let (ap, link) = (tx.ap, tx.link);
        self.catch_up_ap(ap, now);
        let ok = self.decodable(&tx);

        let mut retry = Vec::new();
        let mut released = 0;
        for seg in tx.segments.iter() {
            let report = resolve_mpdus(
                seg.mpdus.clone(),
                ok,
                self.per,
                self.edca.retry_limit,
                &mut self.aps[ap].per_rng,
            );
            for p in &report.delivered {
                self.stats[p.flow.index()].record_delivery(seg.ppdu_end - p.arrival);
            }
            for p in &report.dropped {
                self.stats[p.flow.index()].counters.dropped_retry += 1;
            }
            released += report.delivered.len() + report.dropped.len();
            retry.extend(report.retry);
        }
        let q = &mut self.aps[ap].queue;
        q.release(released);
        q.requeue_front(retry);

        let edca = self.edca;
        let port = self.port(ap, link);
        port.tx = None;
        port.idle_since = port.idle_since.max(now);
        if tx.access != AccessKind::Protected {
            if ok {
                port.backoff.on_success(edca.cw_min);
            } else {
                port.backoff.on_failure(edca.cw_max);
            }
        }
        let act = self.aps[ap].activity.entry(LinkId(link as u32)).or_default();
        act.tx = None;
        act.last_end = Some(now);

        for i in 0..self.neighbors[link][ap].len() {
            let b = self.neighbors[link][ap][i];
            self.sense_end(s, b, link);
        }

        if let AccessKind::Coordinated(g) = tx.access {
            self.group_tx_done(s, g);
        }
        let a = &self.aps[ap];
        if a.mld.mode == MloMode::Emlsr && a.mld.switch_delay > SimTime::ZERO {
            let t = now + a.mld.switch_delay;
            if self.aps[ap].wake_at.is_none_or(|w| w < t) {
                self.aps[ap].wake_at = Some(t);
                s.schedule(t, Ev::Wake(ap));
            }
        }
        self.rearm_all(s, ap);
    }

    // ---- preemption ----------------------------------------------------

    fn try_preempt(&mut self, s: &mut Sched, ap: usize) {
        let now = s.now();
        let is_urgent = |p: &Packet| p.class == TrafficClass::TimeSensitive;
        for link in 0..self.topo.links {
            let Some(urgent) = self.aps[ap].queue.first_matching(is_urgent).copied() else {
                return;
            };
            let Some(slot) = self.aps[ap].ports[link].as_ref().and_then(|p| p.tx) else {
                continue;
            };
            let tx = self.txs[slot].as_ref().expect("live transmission");
            if tx.preempted || now >= tx.end || tx.access == AccessKind::Protected {
                continue;
            }
            let seg = tx.segments.last().expect("at least one segment");
            if seg.mpdus.iter().any(is_urgent) {
                continue;
            }
            let active = ActivePpdu {
                txop_start: tx.txop_start,
                ppdu_start: seg.ppdu_start,
                ppdu_end: seg.ppdu_end,
                end: tx.end,
                rate: tx.rate,
                mpdus: &seg.mpdus,
            };
            let outcome = preempt(&active, now, &urgent, true, true, &self.edca);
            let (start, ppdu_end, end, latency, cut) = match outcome {
                PreemptionOutcome::Truncated {
                    cut,
                    sent,
                    urgent_ppdu_start,
                    urgent_ppdu_end,
                    end,
                    insertion_latency,
                } => (urgent_ppdu_start, urgent_ppdu_end, end, insertion_latency, Some((cut, sent))),
                PreemptionOutcome::AfterBlockAck {
                    urgent_ppdu_start,
                    urgent_ppdu_end,
                    end,
                    insertion_latency,
                } => (urgent_ppdu_start, urgent_ppdu_end, end, insertion_latency, None),
                PreemptionOutcome::Rejected(_) => continue,
            };
            if end > tx.hard_end {
                continue;
            }
            let taken = self.aps[ap].queue.take_aggregate(1, u64::MAX, Some(&is_urgent));
            let tx = self.txs[slot].as_mut().expect("live transmission");
            if let Some((cut, sent)) = cut {
                let seg = tx.segments.last_mut().expect("segment");
                let unsent = seg.mpdus.split_off(sent);
                seg.ppdu_end = cut;
                if seg.mpdus.is_empty() {
                    tx.segments.pop();
                }
                self.aps[ap].queue.requeue_front(unsent);
                self.truncation_latencies.push(latency);
            } else {
                self.ack_gap_latencies.push(latency);
            }
            tx.segments.push(Segment {
                mpdus: taken,
                ppdu_start: start,
                ppdu_end,
            });
            tx.preempted = true;
            tx.end = end;
            s.cancel(tx.handle);
            tx.handle = s.schedule(end, Ev::TxEnd(slot));
            let n: usize = tx.segments.iter().map(|g| g.mpdus.len()).sum();
            let idx = tx.ledger_idx;
            self.ledger.set_end(idx, end);
            self.ledger.set_mpdus(idx, n as u32);
            self.aps[ap].activity.entry(LinkId(link as u32)).or_default().tx = Some((tx.txop_start, end));
        }
    }

    // ---- multi-AP coordination ------------------------------------------

    fn start_group(&mut self, s: &mut Sched, link: usize) {
        let now = s.now();
        let members: Vec<usize> = self
            .topo
            .coord
            .members
            .iter()
            .map(|d| d.index())
            .filter(|&m| self.has_port(m, link))
            .collect();
        let id = self.next_group;
        self.next_group += 1;
        for &m in &members {
            self.disarm(s, m, link);
            self.port(m, link).group = Some(id);
        }
        let hard = self.next_quiet(link, now).min(now + self.edca.txop_limit);
        match self.topo.coord.scheme {
            CoordinationScheme::Ctdma => {
                let ids: Vec<DeviceId> = members.iter().map(|&m| Topology::dev(m)).collect();
                let slots = ctdma_slots(self.edca.txop_limit, &ids, self.edca.sifs).unwrap_or_default();
                self.groups.insert(
                    id,
                    Group {
                        link,
                        start: now,
                        members,
                        slots,
                        next: 0,
                        active: 0,
                    },
                );
                self.ctdma_next(s, id);
            }
            _ => {
                let n = members.len() as u8;
                let mut active = 0;
                for (k, &m) in members.iter().enumerate() {
                    let sub = Subband { index: k as u8, count: n };
                    if !self.eligible(m, link, now) || self.port(m, link).tx.is_some() {
                        continue;
                    }
                    self.catch_up_ap(m, now);
                    if self.start_tx(s, m, link, AccessKind::Coordinated(id), hard, sub, None) {
                        active += 1;
                    }
                }
                self.groups.insert(
                    id,
                    Group {
                        link,
                        start: now,
                        members,
                        slots: Vec::new(),
                        next: 0,
                        active,
                    },
                );
                if active == 0 {
                    self.end_group(s, id);
                }
            }
        }
    }

    /// Starts the next C-TDMA slot that has traffic; a slot owner with no
    /// traffic hands over immediately.
    fn ctdma_next(&mut self, s: &mut Sched, id: u64) {
        let now = s.now();
        loop {
            let Some(g) = self.groups.get(&id) else {
                return;
            };
            if g.next >= g.slots.len() {
                self.end_group(s, id);
                return;
            }
            let k = g.next;
            let link = g.link;
            let m = g.slots[k].member.index();
            let nominal_end = g.start + g.slots[k].offset + g.slots[k].duration;
            self.groups.get_mut(&id).unwrap().next += 1;
            let hard = nominal_end.min(self.next_quiet(link, now));
            if now >= hard || !self.eligible(m, link, now) || self.port(m, link).tx.is_some() {
                continue;
            }
            self.catch_up_ap(m, now);
            if self.start_tx(s, m, link, AccessKind::Coordinated(id), hard, Subband::FULL, None) {
                self.groups.get_mut(&id).unwrap().active = 1;
                return;
            }
        }
    }

    fn group_tx_done(&mut self, s: &mut Sched, id: u64) {
        let now = s.now();
        let Some(g) = self.groups.get_mut(&id) else {
            return;
        };
        g.active -= 1;
        if g.active > 0 {
            return;
        }
        if self.topo.coord.scheme == CoordinationScheme::Ctdma && g.next < g.slots.len() {
            s.schedule(now + self.edca.sifs, Ev::GroupSlot(id));
        } else {
            self.end_group(s, id);
        }
    }

    fn end_group(&mut self, s: &mut Sched, id: u64) {
        let Some(g) = self.groups.remove(&id) else {
            return;
        };
        for &m in &g.members {
            self.port(m, g.link).group = None;
        }
        for &m in &g.members {
            self.rearm(s, m, g.link);
        }
    }

    // ---- R-TWT -----------------------------------------------------------

    fn on_quiet_start(&mut self, s: &mut Sched, sp: usize, link: usize) {
        let now = s.now();
        let (owner, period, end) = {
            let p = &self.calendar.periods()[sp];
            (p.ap, p.period, now + p.duration)
        };
        self.quiet_log.push(QuietInterval {
            link: LinkId(link as u32),
            owner,
            start: now,
            end,
        });
        s.schedule(end, Ev::QuietEnd { link });
        if now + period <= self.horizon {
            s.schedule(now + period, Ev::QuietStart { sp, link });
        }
        for a in 0..self.aps.len() {
            if self.has_port(a, link) {
                self.rearm(s, a, link);
            }
        }
    }

    fn on_quiet_end(&mut self, s: &mut Sched, link: usize) {
        let now = s.now();
        for a in 0..self.aps.len() {
            if let Some(p) = self.aps[a].ports[link].as_mut() {
                p.idle_since = p.idle_since.max(now);
                p.wait_quiet = false;
                self.rearm(s, a, link);
            }
        }
    }

    fn on_sp_serve(&mut self, s: &mut Sched, ap: usize, link: usize) {
        let now = s.now();
        self.port(ap, link).sp_pending = false;
        let Some((sp, end)) = self.quiet_filter(link, now) else {
            return;
        };
        let p = self.port(ap, link);
        if p.tx.is_some() || p.sensed > 0 || self.calendar.periods()[sp].ap != Topology::dev(ap) {
            return;
        }
        self.catch_up_ap(ap, now);
        self.start_tx(s, ap, link, AccessKind::Protected, end, Subband::FULL, Some(sp));
    }

    // ---- end of run ------------------------------------------------------

    fn finish(mut self, summary: RunSummary) -> (RunResult, AuditFailure) {
        let horizon = self.horizon;
        for f in 0..self.flows.len() {
            self.catch_up(f, horizon);
        }
        for a in &mut self.aps {
            for (flow, n) in a.queue.queued_by_flow() {
                self.stats[flow.index()].counters.queued_end += n;
            }
        }
        for tx in self.txs.iter().flatten() {
            for p in tx.segments.iter().flat_map(|g| g.mpdus.iter()) {
                self.stats[p.flow.index()].counters.inflight_end += 1;
            }
        }
        for st in &mut self.stats {
            st.delays.finalize();
        }
        let mut obss_blocking = Vec::new();
        for (i, a) in self.aps.iter_mut().enumerate() {
            for (l, p) in a.ports.iter_mut().enumerate() {
                if let Some(p) = p {
                    if let Some(t) = p.blocked_since.take() {
                        p.blocked += horizon.saturating_sub(t);
                    }
                    let frac = if horizon == SimTime::ZERO {
                        0.0
                    } else {
                        p.blocked.as_secs_f64() / horizon.as_secs_f64()
                    };
                    obss_blocking.push((self.topo.names[i].clone(), LinkId(l as u32), frac));
                }
            }
        }

        let mut audit = AuditFailure::default();
        let longest = self.ledger.longest_txop();
        let largest = self.ledger.largest_aggregate();
        self.ledger.clip(horizon);
        if let Err(e) = conservation_report(&self.stats) {
            audit.conservation = Some(e);
        }
        let domain = &self.topo.domain;
        audit.exclusion = self.ledger.exclusion_violations(|l, a, b| domain.senses(l, a, b));
        audit.quiet = self.ledger.quiet_violations(&self.quiet_log);
        if longest > self.edca.txop_limit {
            audit.longest_txop = Some(longest);
        }
        if largest > self.edca.max_ampdu {
            audit.largest_aggregate = Some(largest);
        }
        let single_radio: BTreeSet<DeviceId> = self
            .aps
            .iter()
            .enumerate()
            .filter(|(_, a)| matches!(a.mld.mode, MloMode::Mlsr | MloMode::Emlsr))
            .map(|(i, _)| Topology::dev(i))
            .collect();
        audit.self_overlaps = single_radio_overlaps(&self.ledger, &single_radio);

        let link_utilization = (0..self.topo.links)
            .map(|l| (LinkId(l as u32), self.ledger.utilization(LinkId(l as u32), horizon)))
            .collect();
        let mut latencies = self.truncation_latencies.clone();
        latencies.extend(self.ack_gap_latencies.iter().copied());
        let report = RunReport {
            seed: self.seed,
            horizon,
            events: summary.events,
            flows: self.stats,
            link_utilization,
            mcs_txops: self.mcs_txops,
            obss_blocking,
            preemption_latencies: latencies,
        };
        (
            RunResult {
                report,
                ledger: self.ledger,
                quiet: self.quiet_log,
                summary,
                truncation_latencies: self.truncation_latencies,
                ack_gap_latencies: self.ack_gap_latencies,
                overlap_outcomes: self.overlap_outcomes,
            },
            audit,
        )
    }
}

/// Concurrent intervals of one device across links, counted only for
/// devices limited to one transmission at a time.
pub fn single_radio_overlaps(ledger: &AirtimeLedger, devices: &BTreeSet<DeviceId>) -> usize {
    let mut by_dev: BTreeMap<DeviceId, Vec<(SimTime, SimTime)>> = BTreeMap::new();
    for iv in ledger.intervals() {
        if devices.contains(&iv.transmitter) {
            by_dev.entry(iv.transmitter).or_default().push((iv.start, iv.end));
        }
    }
    let mut n = 0;
    for ivs in by_dev.values_mut() {
        ivs.sort();
        for w in ivs.windows(2) {
            if w[1].0 < w[0].1 {
                n += 1;
            }
        }
    }
    n
}
