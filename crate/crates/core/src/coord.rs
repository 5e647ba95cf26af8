//! Multi-AP coordination: coordination sets, contention-domain rewriting,
//! coordinated TDMA slots, coordinated OFDMA subchannels and coordinated
//! beamforming null budgets.

use std::collections::{BTreeMap, BTreeSet};

use crate::ids::{DeviceId, LinkId};
use crate::phy::data_subcarriers;
use crate::sim::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoordinationScheme {
    None,
    Ctdma,
    Cofdma,
    Cbf,
}

impl CoordinationScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            CoordinationScheme::None => "none",
            CoordinationScheme::Ctdma => "ctdma",
            CoordinationScheme::Cofdma => "cofdma",
            CoordinationScheme::Cbf => "cbf",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "none" => Some(Self::None),
            "ctdma" => Some(Self::Ctdma),
            "cofdma" => Some(Self::Cofdma),
            "cbf" => Some(Self::Cbf),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoordError {
    #[error("a {0} coordination set needs at least two APs")]
    Singleton(&'static str),
    #[error("AP {ap}: {antennas} antennas cannot serve {streams} streams and place {nulls} nulls")]
    NullBudget {
        ap: String,
        antennas: u32,
        streams: u32,
        nulls: u32,
    },
    #[error("nulling accuracy must be non-negative, got {0} dB")]
    NegativeNulling(f64),
    #[error("AP {0} is not in the same administrative domain as the rest of the set")]
    AdminDomain(String),
    #[error("{bandwidth_mhz} MHz cannot be split into {members} equal subchannels")]
    CofdmaSplit { bandwidth_mhz: u32, members: usize },
}

/// What form_set needs to know about a candidate AP.
#[derive(Debug, Clone, PartialEq)]
pub struct ApCoordInfo {
    pub id: DeviceId,
    pub name: String,
    pub antennas: u32,
    pub streams: u32,
    /// Spatial directions this AP must null toward other members' stations.
    pub null_directions: u32,
    pub admin_domain: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordinationSet {
    pub members: BTreeSet<DeviceId>,
    pub scheme: CoordinationScheme,
    /// CBF residual-interference suppression.
    pub nulling_db: f64,
    /// CBF sounding airtime charged at the start of every TXOP.
    pub sounding: SimTime,
}

impl CoordinationSet {
    pub fn none() -> Self {
        CoordinationSet {
            members: BTreeSet::new(),
            scheme: CoordinationScheme::None,
            nulling_db: 0.0,
            sounding: SimTime::ZERO,
        }
    }

    pub fn contains(&self, ap: DeviceId) -> bool {
        self.scheme != CoordinationScheme::None && self.members.contains(&ap)
    }
}

/// An AP can serve `served_streams` and place `null_directions` nulls only
/// if it has at least that many antennas.
pub fn null_budget_check(antennas: u32, served_streams: u32, null_directions: u32) -> bool {
    antennas >= served_streams + null_directions
}

pub fn form_set(
    aps: &[ApCoordInfo],
    scheme: CoordinationScheme,
    nulling_db: f64,
    sounding: SimTime,
) -> Result<CoordinationSet, CoordError> {
    if scheme == CoordinationScheme::None {
        return Ok(CoordinationSet {
            members: aps.iter().map(|a| a.id).collect(),
            ..CoordinationSet::none()
        });
    }
    if aps.len() < 2 {
        return Err(CoordError::Singleton(scheme.as_str()));
    }
    if let Some(first) = aps.first() {
        if let Some(odd) = aps.iter().find(|a| a.admin_domain != first.admin_domain) {
            return Err(CoordError::AdminDomain(odd.name.clone()));
        }
    }
    if scheme == CoordinationScheme::Cbf {
        if !(nulling_db >= 0.0) {
            return Err(CoordError::NegativeNulling(nulling_db));
        }
        for a in aps {
            if !null_budget_check(a.antennas, a.streams, a.null_directions) {
                return Err(CoordError::NullBudget {
                    ap: a.name.clone(),
                    antennas: a.antennas,
                    streams: a.streams,
                    nulls: a.null_directions,
                });
            }
        }
    }
    Ok(CoordinationSet {
        members: aps.iter().map(|a| a.id).collect(),
        scheme,
        nulling_db: if scheme == CoordinationScheme::Cbf { nulling_db } else { 0.0 },
        sounding: if scheme == CoordinationScheme::Cbf { sounding } else { SimTime::ZERO },
    })
}

fn ordered(a: DeviceId, b: DeviceId) -> (DeviceId, DeviceId) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Carrier-sense graph per link plus per-path interference suppression.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ContentionDomain {
    edges: BTreeMap<LinkId, BTreeSet<(DeviceId, DeviceId)>>,
    suppression: BTreeMap<(LinkId, DeviceId, DeviceId), f64>,
}

impl ContentionDomain {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a link even if nobody senses anybody on it.
    pub fn add_link(&mut self, link: LinkId) {
        self.edges.entry(link).or_default();
    }

    pub fn add_edge(&mut self, link: LinkId, a: DeviceId, b: DeviceId) {
        if a != b {
            self.edges.entry(link).or_default().insert(ordered(a, b));
        }
    }

    pub fn remove_edge(&mut self, link: LinkId, a: DeviceId, b: DeviceId) {
        if let Some(e) = self.edges.get_mut(&link) {
            e.remove(&ordered(a, b));
        }
    }

    pub fn senses(&self, link: LinkId, a: DeviceId, b: DeviceId) -> bool {
        self.edges
            .get(&link)
            .is_some_and(|e| e.contains(&ordered(a, b)))
    }

    pub fn neighbors(&self, link: LinkId, dev: DeviceId) -> Vec<DeviceId> {
        self.edges
            .get(&link)
            .map(|e| {
                e.iter()
                    .filter_map(|&(a, b)| {
                        if a == dev {
                            Some(b)
                        } else if b == dev {
                            Some(a)
                        } else {
                            None
                        }
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    pub fn links(&self) -> impl Iterator<Item = &LinkId> {
        self.edges.keys()
    }

    /// Attenuation applied to interference from `tx` at receiver `rx`.
    pub fn suppression_db(&self, link: LinkId, tx: DeviceId, rx: DeviceId) -> f64 {
        self.suppression.get(&(link, tx, rx)).copied().unwrap_or(0.0)
    }

    pub fn set_suppression(&mut self, link: LinkId, tx: DeviceId, rx: DeviceId, db: f64) {
        self.suppression.insert((link, tx, rx), db);
    }
}

/// Applies a coordination set to the contention domain.
///
/// Under CBF, devices of different member BSSs stop deferring to each other
/// on every link and all cross-BSS interference paths (both directions)
/// carry the nulling suppression. Other schemes leave the domain unchanged.
/// `bss_of` maps every device to the AP of its BSS.
pub fn rewrite_contention(
    domain: &ContentionDomain,
    set: &CoordinationSet,
    bss_of: &BTreeMap<DeviceId, DeviceId>,
) -> ContentionDomain {
    let mut out = domain.clone();
    if set.scheme != CoordinationScheme::Cbf {
        return out;
    }
    let links: Vec<LinkId> = domain.edges.keys().copied().collect();
    let coordinated: Vec<(DeviceId, DeviceId)> = bss_of
        .iter()
        .filter(|(_, ap)| set.members.contains(ap))
        .map(|(&d, &ap)| (d, ap))
        .collect();
    for &(a, ap_a) in &coordinated {
        for &(b, ap_b) in &coordinated {
            if ap_a == ap_b {
                continue;
            }
            for &link in &links {
                out.remove_edge(link, a, b);
                out.set_suppression(link, a, b, set.nulling_db);
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TdmaSlot {
    pub member: DeviceId,
    /// Offset from the start of the coordinated TXOP.
    pub offset: SimTime,
    pub duration: SimTime,
}

/// Splits a TXOP into equal slots allocated in member order, separated by SIFS.
pub fn ctdma_slots(
    txop: SimTime,
    members: &[DeviceId],
    sifs: SimTime,
) -> Result<Vec<TdmaSlot>, CoordError> {
    let n = members.len() as u64;
    if n < 2 {
        return Err(CoordError::Singleton("ctdma"));
    }
    let usable = txop.saturating_sub(sifs.mul(n - 1));
    let slot = SimTime::from_nanos(usable.as_nanos() / n);
    Ok(members
        .iter()
        .enumerate()
        .map(|(k, &member)| TdmaSlot {
            member,
            offset: (slot + sifs).mul(k as u64),
            duration: slot,
        })
        .collect())
}

/// Equal subchannel width per member.
pub fn cofdma_split(bandwidth_mhz: u32, members: usize) -> Result<Vec<u32>, CoordError> {
    let err = CoordError::CofdmaSplit {
        bandwidth_mhz,
        members,
    };
    if members < 2 {
        return Err(CoordError::Singleton("cofdma"));
    }
    if bandwidth_mhz % members as u32 != 0 {
        return Err(err);
    }
    let width = bandwidth_mhz / members as u32;
    if data_subcarriers(width).is_err() {
        return Err(err);
    }
    Ok(vec![width; members])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ap(id: u32, antennas: u32, streams: u32, nulls: u32) -> ApCoordInfo {
        ApCoordInfo {
            id: DeviceId(id),
            name: format!("ap{id}"),
            antennas,
            streams,
            null_directions: nulls,
            admin_domain: 0,
        }
    }

    #[test]
    fn null_budget_truth_table() {
        assert!(null_budget_check(4, 2, 2));
        assert!(!null_budget_check(4, 2, 3));
        assert!(null_budget_check(16, 8, 8));
        assert!(!null_budget_check(2, 2, 1));
        assert!(null_budget_check(0, 0, 0));
    }

    #[test]
    fn form_set_cases() {
        let s = form_set(&[ap(0, 4, 2, 2), ap(1, 4, 2, 2)], CoordinationScheme::Cbf, 30.0, SimTime::ZERO).unwrap();
        assert_eq!(s.members.len(), 2);
        assert_eq!(s.nulling_db, 30.0);
        assert_eq!(
            form_set(&[ap(0, 4, 2, 2)], CoordinationScheme::Ctdma, 0.0, SimTime::ZERO),
            Err(CoordError::Singleton("ctdma"))
        );
        let e = form_set(&[ap(0, 2, 2, 2), ap(1, 4, 2, 2)], CoordinationScheme::Cbf, 30.0, SimTime::ZERO).unwrap_err();
        assert!(matches!(e, CoordError::NullBudget { ref ap, .. } if ap == "ap0"));
        let mut other = ap(1, 4, 2, 2);
        other.admin_domain = 7;
        assert!(matches!(
            form_set(&[ap(0, 4, 2, 2), other], CoordinationScheme::Cofdma, 0.0, SimTime::ZERO),
            Err(CoordError::AdminDomain(_))
        ));
    }

    fn case_domain() -> (ContentionDomain, BTreeMap<DeviceId, DeviceId>) {
        // ap1=0, sta1=1, ap2=2, sta2=3, ap3=4
        let mut d = ContentionDomain::new();
        for l in 0..2 {
            for a in 0..5 {
                for b in (a + 1)..5 {
                    d.add_edge(LinkId(l), DeviceId(a), DeviceId(b));
                }
            }
        }
        let bss = BTreeMap::from([
            (DeviceId(0), DeviceId(0)),
            (DeviceId(1), DeviceId(0)),
            (DeviceId(2), DeviceId(2)),
            (DeviceId(3), DeviceId(2)),
            (DeviceId(4), DeviceId(4)),
        ]);
        (d, bss)
    }

    #[test]
    fn cbf_removes_cross_bss_edges_only() {
        let (d, bss) = case_domain();
        let set = CoordinationSet {
            members: BTreeSet::from([DeviceId(0), DeviceId(2)]),
            scheme: CoordinationScheme::Cbf,
            nulling_db: 30.0,
            sounding: SimTime::ZERO,
        };
        let r = rewrite_contention(&d, &set, &bss);
        for l in [LinkId(0), LinkId(1)] {
            assert!(!r.senses(l, DeviceId(0), DeviceId(2)));
            assert!(!r.senses(l, DeviceId(1), DeviceId(2)));
            assert!(r.senses(l, DeviceId(0), DeviceId(1)));
            assert!(r.senses(l, DeviceId(4), DeviceId(0)));
            assert!(r.senses(l, DeviceId(4), DeviceId(2)));
            assert_eq!(r.suppression_db(l, DeviceId(2), DeviceId(1)), 30.0);
            assert_eq!(r.suppression_db(l, DeviceId(0), DeviceId(3)), 30.0);
            assert_eq!(r.suppression_db(l, DeviceId(4), DeviceId(1)), 0.0);
        }
    }

    #[test]
    fn non_cbf_leaves_domain_unchanged() {
        let (d, bss) = case_domain();
        for scheme in [CoordinationScheme::None, CoordinationScheme::Ctdma, CoordinationScheme::Cofdma] {
            let set = CoordinationSet {
                members: BTreeSet::from([DeviceId(0), DeviceId(2)]),
                scheme,
                nulling_db: 0.0,
                sounding: SimTime::ZERO,
            };
            assert_eq!(rewrite_contention(&d, &set, &bss), d);
        }
    }

    #[test]
    fn ctdma_slot_arithmetic() {
        let txop = SimTime::from_micros(5484);
        let sifs = SimTime::from_micros(16);
        let two = ctdma_slots(txop, &[DeviceId(0), DeviceId(1)], sifs).unwrap();
        assert_eq!(two[0].duration, SimTime::from_micros(2734));
        assert_eq!(two[1].offset, SimTime::from_micros(2750));
        let three = ctdma_slots(txop, &[DeviceId(0), DeviceId(1), DeviceId(2)], sifs).unwrap();
        assert!((three[0].duration.as_micros_f64() - 1817.333).abs() < 0.001);
        let end = three[2].offset + three[2].duration;
        assert!(end <= txop);
        assert!(ctdma_slots(txop, &[DeviceId(0)], sifs).is_err());
    }

    #[test]
    fn cofdma_split_cases() {
        assert_eq!(cofdma_split(160, 2).unwrap(), vec![80, 80]);
        assert_eq!(data_subcarriers(80).unwrap(), 980);
        assert!(matches!(cofdma_split(160, 3), Err(CoordError::CofdmaSplit { .. })));
        assert_eq!(cofdma_split(320, 2).unwrap(), vec![160, 160]);
    }
}
