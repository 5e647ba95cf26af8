//! Typed scenario configuration.

use crate::coord::CoordinationScheme;
use crate::mac::EdcaParams;
use crate::mlo::MloMode;
use crate::phy::McsEntry;
use crate::sim::SimTime;
use crate::traffic::TrafficClass;

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub duration: SimTime,
    pub seed: u64,
    pub trace: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApConfig {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub antennas: u32,
    pub streams: u32,
    pub admin_domain: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StaConfig {
    pub name: String,
    pub x: f64,
    pub y: f64,
    pub antennas: u32,
    pub ap: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinksConfig {
    pub count: u32,
    pub freq_ghz: f64,
    pub bandwidth_mhz: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhySection {
    pub tx_power_dbm: f64,
    pub noise_density_dbm_hz: f64,
    pub noise_figure_db: f64,
    pub per: f64,
    pub preamble: SimTime,
    pub symbol: SimTime,
    /// Replaces the built-in MCS table when non-empty.
    pub mcs_table: Vec<McsEntry>,
}

impl Default for PhySection {
    fn default() -> Self {
        PhySection {
            tx_power_dbm: 20.0,
            noise_density_dbm_hz: -174.0,
            noise_figure_db: 7.0,
            per: 0.10,
            preamble: SimTime::from_micros(44),
            symbol: SimTime::from_nanos(13_600),
            mcs_table: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RtwtEntry {
    pub name: String,
    pub ap: String,
    pub links: Vec<u32>,
    pub start: SimTime,
    pub duration: SimTime,
    pub period: SimTime,
    pub flows: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MacSection {
    pub edca: EdcaParams,
    pub buffer_packets: u32,
    pub cca_threshold_dbm: f64,
    pub preemption: bool,
    pub rtwt: Vec<RtwtEntry>,
}

impl Default for MacSection {
    fn default() -> Self {
        MacSection {
            edca: EdcaParams::default(),
            buffer_packets: 10_240,
            cca_threshold_dbm: -82.0,
            preemption: false,
            rtwt: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MldEntry {
    pub device: String,
    pub mode: MloMode,
    /// Affiliated links; empty means all.
    pub links: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MloSection {
    pub mode: MloMode,
    pub switch_delay: SimTime,
    pub devices: Vec<MldEntry>,
}

impl Default for MloSection {
    fn default() -> Self {
        MloSection {
            mode: MloMode::EmlmrStr,
            switch_delay: SimTime::ZERO,
            devices: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CoordSection {
    pub scheme: CoordinationScheme,
    /// Member AP names; empty means every AP.
    pub members: Vec<String>,
    pub nulling_db: Option<f64>,
    pub sounding: SimTime,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowModelConfig {
    OnOff {
        mean_on: SimTime,
        mean_off: SimTime,
        rate_mbps: f64,
    },
    Poisson {
        rate_mbps: f64,
    },
    Cbr {
        rate_mbps: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowEntry {
    pub name: String,
    pub src: String,
    pub dst: String,
    pub model: FlowModelConfig,
    pub packet_bytes: u32,
    pub class: TrafficClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub run: RunConfig,
    pub aps: Vec<ApConfig>,
    pub stas: Vec<StaConfig>,
    pub links: LinksConfig,
    pub phy: PhySection,
    pub mac: MacSection,
    pub mlo: MloSection,
    pub coordination: CoordSection,
    pub flows: Vec<FlowEntry>,
}
