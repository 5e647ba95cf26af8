//! Canned scenarios.

use super::{parse, ScenarioConfig};

pub const PRESET_NAMES: [&str; 2] = ["case-study-mlo", "case-study-cbf"];

const CASE_STUDY_BASE: &str = "\
# Two overlapping BSSs sharing two 160 MHz links in the 6 GHz band.
[run]
duration_s=120
seed=1

[topology]
ap=ap1 x=5 y=10 antennas=4 streams=2
ap=ap2 x=10 y=10 antennas=4 streams=2
sta=sta1 x=5 y=12.5 antennas=2 ap=ap1
sta=sta2 x=10 y=12.5 antennas=2 ap=ap2

[links]
count=2
freq_ghz=6
bandwidth_mhz=160

[phy]
tx_power_dbm=20
noise_density_dbm_hz=-174
noise_figure_db=7
per=0.1
preamble_us=44
symbol_us=13.6

[mac]
slot_us=9
sifs_us=16
difs_us=34
cw_min=15
cw_max=1023
retry_limit=7
blockack_us=32
txop_limit_us=5484
max_ampdu=1024
buffer_packets=10240
cca_threshold_dbm=-82
preemption=false

[mlo]
mode=emlmr_str

[traffic]
flow=ap1_dl src=ap1 dst=sta1 model=onoff mean_on_ms=4.15 mean_off_ms=4.15 rate_on_mbps=4000 packet_bytes=1500 class=be
flow=ap2_dl src=ap2 dst=sta2 model=onoff mean_on_ms=4.15 mean_off_ms=4.15 rate_on_mbps=4000 packet_bytes=1500 class=be
";

/// Scenario text of a named preset.
pub fn preset_text(name: &str) -> Option<String> {
    let coordination = match name {
        "case-study-mlo" => "\n[coordination]\nscheme=none\n",
        "case-study-cbf" => "\n[coordination]\nscheme=cbf\nmembers=ap1,ap2\nnulling_db=30\nsounding_us=0\n",
        _ => return None,
    };
    Some(format!("{CASE_STUDY_BASE}{coordination}"))
}

pub fn preset(name: &str) -> Option<ScenarioConfig> {
    preset_text(name).map(|t| parse(&t).expect("built-in preset parses"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coord::CoordinationScheme;
    use crate::mlo::MloMode;
    use crate::sim::SimTime;

    #[test]
    fn case_study_geometry() {
        let c = preset("case-study-cbf").unwrap();
        let aps: Vec<_> = c.aps.iter().map(|a| (a.x, a.y)).collect();
        let stas: Vec<_> = c.stas.iter().map(|s| (s.x, s.y)).collect();
        assert_eq!(aps, [(5.0, 10.0), (10.0, 10.0)]);
        assert_eq!(stas, [(5.0, 12.5), (10.0, 12.5)]);
        assert_eq!(c.coordination.scheme, CoordinationScheme::Cbf);
        assert_eq!(c.coordination.nulling_db, Some(30.0));
        assert_eq!(c.mlo.mode, MloMode::EmlmrStr);
        assert_eq!(c.mac.edca.txop_limit, SimTime::from_micros(5484));
        assert_eq!(c.links.count, 2);
    }

    #[test]
    fn presets_round_trip() {
        for name in PRESET_NAMES {
            let c = preset(name).unwrap();
            assert_eq!(parse(&c.to_text()).unwrap(), c, "{name}");
        }
        assert!(preset("nope").is_none());
    }
}
