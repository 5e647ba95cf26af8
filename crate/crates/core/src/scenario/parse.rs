//! Sectioned key=value scenario format.
//!
//! ```text
//! [links]
//! count=2
//! freq_ghz=6
//! bandwidth_mhz=160
//!
//! [topology]
//! ap=ap1 x=5 y=10 antennas=4 streams=2
//! sta=sta1 x=5 y=12.5 antennas=2 ap=ap1
//! ```
//!
//! Scalar keys appear once per section. Entry lines (`ap=`, `sta=`, `flow=`,
//! `rtwt=`, `mcs=`, `device=`) repeat and carry whitespace-separated
//! attributes. `#` starts a comment.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fmt::Write as _;

use super::config::*;
use crate::coord::CoordinationScheme;
use crate::mac::EdcaParams;
use crate::mlo::MloMode;
use crate::phy::{data_subcarriers, CodingRate, McsEntry, McsTable};
use crate::sim::SimTime;
use crate::traffic::TrafficClass;

const NS_PER_S: u64 = 1_000_000_000;
const NS_PER_MS: u64 = 1_000_000;
const NS_PER_US: u64 = 1_000;

const SECTIONS: [&str; 8] = ["run", "topology", "links", "phy", "mac", "mlo", "coordination", "traffic"];

/// Scalar keys a sweep may override.
pub const NUMERIC_KEYS: &[&str] = &[
    "run.duration_s",
    "run.seed",
    "links.count",
    "links.freq_ghz",
    "links.bandwidth_mhz",
    "phy.tx_power_dbm",
    "phy.noise_density_dbm_hz",
    "phy.noise_figure_db",
    "phy.per",
    "phy.preamble_us",
    "phy.symbol_us",
    "mac.slot_us",
    "mac.sifs_us",
    "mac.difs_us",
    "mac.cw_min",
    "mac.cw_max",
    "mac.retry_limit",
    "mac.blockack_us",
    "mac.txop_limit_us",
    "mac.max_ampdu",
    "mac.buffer_packets",
    "mac.cca_threshold_dbm",
    "mlo.switch_delay_us",
    "coordination.nulling_db",
    "coordination.sounding_us",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError {
            line: Some(line),
            message: message.into(),
        }
    }

    fn global(message: impl Into<String>) -> Self {
        ConfigError {
            line: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

/// Every problem found in one scenario text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str("\n")?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

impl From<ConfigError> for ConfigErrors {
    fn from(e: ConfigError) -> Self {
        ConfigErrors(vec![e])
    }
}

/// Parses a non-negative decimal in `unit_ns` units into exact nanoseconds.
pub fn parse_duration(text: &str, unit_ns: u64) -> Result<SimTime, String> {
    let bad = || format!("invalid duration {text:?}");
    let (int, frac) = match text.split_once('.') {
        Some((i, f)) => (i, f),
        None => (text, ""),
    };
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !int.bytes().all(|b| b.is_ascii_digit()) || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let int_v: u64 = if int.is_empty() { 0 } else { int.parse().map_err(|_| bad())? };
    let frac = frac.trim_end_matches('0');
    let mut ns = int_v.checked_mul(unit_ns).ok_or_else(bad)?;
    if !frac.is_empty() {
        let scale = 10u64.checked_pow(frac.len() as u32).ok_or_else(bad)?;
        let f: u64 = frac.parse().map_err(|_| bad())?;
        let num = f as u128 * unit_ns as u128;
        if num % scale as u128 != 0 {
            return Err(format!("duration {text:?} is not a whole number of nanoseconds"));
        }
        ns = ns.checked_add((num / scale as u128) as u64).ok_or_else(bad)?;
    }
    Ok(SimTime::from_nanos(ns))
}

/// Inverse of [`parse_duration`]: shortest exact decimal.
pub fn format_duration(t: SimTime, unit_ns: u64) -> String {
    let ns = t.as_nanos();
    let int = ns / unit_ns;
    let rem = ns % unit_ns;
    if rem == 0 {
        return int.to_string();
    }
    let width = unit_ns.ilog10() as usize;
    let frac = format!("{rem:0width$}");
    format!("{int}.{}", frac.trim_end_matches('0'))
}

struct Item<'a> {
    key: &'a str,
    value: &'a str,
    line: usize,
    used: bool,
}

/// Attribute bag for one entry line or one section's scalar keys.
struct Attrs<'a> {
    what: String,
    fallback_line: Option<usize>,
    items: Vec<Item<'a>>,
    errors: Vec<ConfigError>,
}

impl<'a> Attrs<'a> {
    fn new(what: impl Into<String>, fallback_line: Option<usize>) -> Self {
        Attrs {
            what: what.into(),
            fallback_line,
            items: Vec::new(),
            errors: Vec::new(),
        }
    }

    fn push(&mut self, key: &'a str, value: &'a str, line: usize) {
        if self.items.iter().any(|i| i.key == key) {
            self.errors.push(ConfigError::at(line, format!("duplicate key {key:?} in {}", self.what)));
            return;
        }
        self.items.push(Item {
            key,
            value,
            line,
            used: false,
        });
    }

    fn err(&mut self, line: Option<usize>, msg: String) {
        self.errors.push(ConfigError {
            line: line.or(self.fallback_line),
            message: msg,
        });
    }

    fn raw(&mut self, key: &str) -> Option<(&'a str, usize)> {
        let item = self.items.iter_mut().find(|i| i.key == key)?;
        item.used = true;
        Some((item.value, item.line))
    }

    fn required(&mut self, key: &str) -> Option<(&'a str, usize)> {
        let r = self.raw(key);
        if r.is_none() {
            let msg = format!("missing required key {key:?} in {}", self.what);
            self.err(None, msg);
        }
        r
    }

    fn parsed<T>(&mut self, key: &str, required: bool, f: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        let (v, line) = if required { self.required(key)? } else { self.raw(key)? };
        match f(v) {
            Ok(x) => Some(x),
            Err(m) => {
                self.err(Some(line), format!("{key}: {m}"));
                None
            }
        }
    }

    fn f64(&mut self, key: &str, required: bool) -> Option<f64> {
        self.parsed(key, required, |v| {
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| format!("expected a number, got {v:?}"))
        })
    }

    fn int<T: std::str::FromStr>(&mut self, key: &str, required: bool) -> Option<T> {
        self.parsed(key, required, |v| {
            v.parse::<T>().map_err(|_| format!("expected a non-negative integer, got {v:?}"))
        })
    }

    fn duration(&mut self, key: &str, unit_ns: u64, required: bool) -> Option<SimTime> {
        self.parsed(key, required, |v| parse_duration(v, unit_ns))
    }

    fn bool(&mut self, key: &str) -> Option<bool> {
        self.parsed(key, false, |v| match v {
            "true" | "on" | "yes" | "1" => Ok(true),
            "false" | "off" | "no" | "0" => Ok(false),
            _ => Err(format!("expected true or false, got {v:?}")),
        })
    }

    fn text(&mut self, key: &str, required: bool) -> Option<String> {
        let (v, _) = if required { self.required(key)? } else { self.raw(key)? };
        Some(v.to_string())
    }

    fn list(&mut self, key: &str) -> Vec<String> {
        match self.raw(key) {
            Some((v, _)) => v.split(',').filter(|s| !s.is_empty()).map(str::to_string).collect(),
            None => Vec::new(),
        }
    }

    fn index_list(&mut self, key: &str) -> Vec<u32> {
        self.parsed(key, false, |v| {
            v.split(',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse::<u32>().map_err(|_| format!("expected link indices, got {v:?}")))
                .collect()
        })
        .unwrap_or_default()
    }

    fn finish(mut self, errors: &mut Vec<ConfigError>) {
        for i in self.items.iter().filter(|i| !i.used) {
            self.errors.push(ConfigError::at(i.line, format!("unknown key {:?} in {}", i.key, self.what)));
        }
        errors.append(&mut self.errors);
    }
}

struct Entry<'a> {
    kind: &'a str,
    name: &'a str,
    line: usize,
    attrs: Vec<(&'a str, &'a str)>,
}

impl<'a> Entry<'a> {
    fn attrs(&self) -> Attrs<'a> {
        let mut a = Attrs::new(format!("{} {:?}", self.kind, self.name), Some(self.line));
        for &(k, v) in &self.attrs {
            a.push(k, v, self.line);
        }
        a
    }
}

fn entry_kinds(section: &str) -> &'static [&'static str] {
    match section {
        "topology" => &["ap", "sta"],
        "phy" => &["mcs"],
        "mac" => &["rtwt"],
        "mlo" => &["device"],
        "traffic" => &["flow"],
        _ => &[],
    }
}

struct Sections<'a> {
    scalars: BTreeMap<&'static str, Attrs<'a>>,
    entries: BTreeMap<&'static str, Vec<Entry<'a>>>,
}

fn split_lines<'a>(text: &'a str, errors: &mut Vec<ConfigError>) -> Sections<'a> {
    let mut scalars = BTreeMap::new();
    let mut entries: BTreeMap<&'static str, Vec<Entry<'a>>> = BTreeMap::new();
    for s in SECTIONS {
        scalars.insert(s, Attrs::new(format!("[{s}]"), None));
        entries.insert(s, Vec::new());
    }
    let mut current: Option<&'static str> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(name) = content.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            match SECTIONS.iter().find(|s| **s == name.trim()) {
                Some(s) => current = Some(s),
                None => {
                    errors.push(ConfigError::at(line, format!("unknown section [{}]", name.trim())));
                    current = None;
                }
            }
            continue;
        }
        let Some(section) = current else {
            errors.push(ConfigError::at(line, "key outside of any section"));
            continue;
        };
        let Some((key, _)) = content.split_once('=') else {
            errors.push(ConfigError::at(line, format!("expected key=value, got {content:?}")));
            continue;
        };
        let key = key.trim();
        if entry_kinds(section).contains(&key) {
            let mut tokens = content.split_whitespace();
            let head = tokens.next().unwrap_or("");
            let name = head.split_once('=').map(|(_, v)| v).unwrap_or("");
            if name.is_empty() {
                errors.push(ConfigError::at(line, format!("{key} entry without a name")));
                continue;
            }
            let mut attrs = Vec::new();
            let mut ok = true;
            for tok in tokens {
                match tok.split_once('=') {
                    Some((k, v)) if !k.is_empty() => attrs.push((k, v)),
                    _ => {
                        errors.push(ConfigError::at(line, format!("expected attr=value, got {tok:?}")));
                        ok = false;
                    }
                }
            }
            if ok {
                entries.get_mut(section).unwrap().push(Entry {
                    kind: key,
                    name,
                    line,
                    attrs,
                });
            }
        } else {
            let (k, v) = content.split_once('=').unwrap();
            scalars.get_mut(section).unwrap().push(k.trim(), v.trim(), line);
        }
    }
    Sections { scalars, entries }
}

fn positive(errors: &mut Vec<ConfigError>, line: Option<usize>, what: &str, v: f64) {
    if v <= 0.0 {
        errors.push(ConfigError {
            line,
            message: format!("{what} must be positive"),
        });
    }
}

/// Parses and validates a scenario.
pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigErrors> {
    let mut errors = Vec::new();
    let Sections {
        mut scalars,
        entries: mut sec_entries,
    } = split_lines(text, &mut errors);
    let mut scalar = |name: &str| scalars.remove(name).unwrap();

    let mut a = scalar("run");
    let run = RunConfig {
        duration: a.duration("duration_s", NS_PER_S, false).unwrap_or(SimTime::from_secs(120)),
        seed: a.int("seed", false).unwrap_or(1),
        trace: a.bool("trace").unwrap_or(false),
    };
    a.finish(&mut errors);

    let mut a = scalar("links");
    let count = a.int::<u32>("count", true);
    let freq = a.f64("freq_ghz", true);
    let bw = a.int::<u32>("bandwidth_mhz", true);
    a.finish(&mut errors);
    let links = LinksConfig {
        count: count.unwrap_or(1),
        freq_ghz: freq.unwrap_or(6.0),
        bandwidth_mhz: bw.unwrap_or(160),
    };
    if count == Some(0) {
        errors.push(ConfigError::global("links.count must be at least 1"));
    }
    if let Some(f) = freq {
        positive(&mut errors, None, "links.freq_ghz", f);
    }
    if let Some(b) = bw {
        if data_subcarriers(b).is_err() {
            errors.push(ConfigError::global(format!(
                "links.bandwidth_mhz must be one of 20, 40, 80, 160, 320; got {b}"
            )));
        }
    }

    let mut a = scalar("phy");
    let d = PhySection::default();
    let mut phy = PhySection {
        tx_power_dbm: a.f64("tx_power_dbm", false).unwrap_or(d.tx_power_dbm),
        noise_density_dbm_hz: a.f64("noise_density_dbm_hz", false).unwrap_or(d.noise_density_dbm_hz),
        noise_figure_db: a.f64("noise_figure_db", false).unwrap_or(d.noise_figure_db),
        per: a.f64("per", false).unwrap_or(d.per),
        preamble: a.duration("preamble_us", NS_PER_US, false).unwrap_or(d.preamble),
        symbol: a.duration("symbol_us", NS_PER_US, false).unwrap_or(d.symbol),
        mcs_table: Vec::new(),
    };
    a.finish(&mut errors);
    if !(0.0..1.0).contains(&phy.per) {
        errors.push(ConfigError::global(format!("phy.per must be in [0, 1), got {}", phy.per)));
    }
    if phy.symbol == SimTime::ZERO {
        errors.push(ConfigError::global("phy.symbol_us must be positive"));
    }
    let mcs_entries = sec_entries.remove("phy").unwrap();
    let first_mcs_line = mcs_entries.first().map(|e| e.line);
    for e in &mcs_entries {
        let mut a = e.attrs();
        let index = match e.name.parse::<u8>() {
            Ok(i) => Some(i),
            Err(_) => {
                errors.push(ConfigError::at(e.line, format!("MCS index must be an integer, got {:?}", e.name)));
                None
            }
        };
        let bits = a.int::<u32>("bits", true);
        let rate = a.parsed("rate", true, |v| {
            let (n, d) = v.split_once('/').ok_or_else(|| format!("expected N/D, got {v:?}"))?;
            let num = n.parse::<u32>().map_err(|_| format!("expected N/D, got {v:?}"))?;
            let den = d.parse::<u32>().map_err(|_| format!("expected N/D, got {v:?}"))?;
            if num == 0 || den == 0 || num > den {
                return Err(format!("coding rate {v} out of range"));
            }
            Ok(CodingRate { num, den })
        });
        let min_sinr = a.f64("min_sinr_db", true);
        a.finish(&mut errors);
        if let (Some(index), Some(bits), Some(coding_rate), Some(min_sinr_db)) = (index, bits, rate, min_sinr) {
            phy.mcs_table.push(McsEntry {
                index,
                bits_per_symbol: bits,
                coding_rate,
                min_sinr_db,
            });
        }
    }
    if !phy.mcs_table.is_empty() {
        if let Err(e) = McsTable::new(phy.mcs_table.clone()) {
            errors.push(ConfigError {
                line: first_mcs_line,
                message: format!("MCS table: {e}"),
            });
        }
    }

    let mut a = scalar("mac");
    let de = EdcaParams::default();
    let dm = MacSection::default();
    let edca = EdcaParams {
        slot: a.duration("slot_us", NS_PER_US, false).unwrap_or(de.slot),
        sifs: a.duration("sifs_us", NS_PER_US, false).unwrap_or(de.sifs),
        difs: a.duration("difs_us", NS_PER_US, false).unwrap_or(de.difs),
        cw_min: a.int("cw_min", false).unwrap_or(de.cw_min),
        cw_max: a.int("cw_max", false).unwrap_or(de.cw_max),
        retry_limit: a.int("retry_limit", false).unwrap_or(de.retry_limit),
        block_ack: a.duration("blockack_us", NS_PER_US, false).unwrap_or(de.block_ack),
        txop_limit: a.duration("txop_limit_us", NS_PER_US, false).unwrap_or(de.txop_limit),
        max_ampdu: a.int("max_ampdu", false).unwrap_or(de.max_ampdu),
    };
    let mut mac = MacSection {
        edca,
        buffer_packets: a.int("buffer_packets", false).unwrap_or(dm.buffer_packets),
        cca_threshold_dbm: a.f64("cca_threshold_dbm", false).unwrap_or(dm.cca_threshold_dbm),
        preemption: a.bool("preemption").unwrap_or(false),
        rtwt: Vec::new(),
    };
    a.finish(&mut errors);
    if let Err(e) = mac.edca.validate() {
        errors.push(ConfigError::global(format!("[mac]: {e}")));
    }
    if mac.edca.max_ampdu == 0 {
        errors.push(ConfigError::global("mac.max_ampdu must be at least 1"));
    }
    if mac.buffer_packets == 0 {
        errors.push(ConfigError::global("mac.buffer_packets must be at least 1"));
    }
    if mac.edca.slot == SimTime::ZERO {
        errors.push(ConfigError::global("mac.slot_us must be positive"));
    }
    let rtwt_entries = sec_entries.remove("mac").unwrap();
    for e in &rtwt_entries {
        let mut a = e.attrs();
        let ap = a.text("ap", true);
        let start = a.duration("start_us", NS_PER_US, true);
        let duration = a.duration("duration_us", NS_PER_US, true);
        let period = a.duration("period_us", NS_PER_US, true);
        let flows = a.list("flows");
        let links_ = a.index_list("links");
        a.finish(&mut errors);
        if let (Some(ap), Some(start), Some(duration), Some(period)) = (ap, start, duration, period) {
            mac.rtwt.push(RtwtEntry {
                name: e.name.to_string(),
                ap,
                links: links_,
                start,
                duration,
                period,
                flows,
            });
        }
    }

    let mut a = scalar("mlo");
    let mode = a.parsed("mode", false, |v| MloMode::parse(v).ok_or_else(|| format!("unknown MLO mode {v:?}")));
    let mut mlo = MloSection {
        mode: mode.unwrap_or(MloMode::EmlmrStr),
        switch_delay: a.duration("switch_delay_us", NS_PER_US, false).unwrap_or(SimTime::ZERO),
        devices: Vec::new(),
    };
    a.finish(&mut errors);
    for e in sec_entries.remove("mlo").unwrap() {
        let mut a = e.attrs();
        let mode = a.parsed("mode", true, |v| MloMode::parse(v).ok_or_else(|| format!("unknown MLO mode {v:?}")));
        let links_ = a.index_list("links");
        a.finish(&mut errors);
        if let Some(mode) = mode {
            mlo.devices.push(MldEntry {
                device: e.name.to_string(),
                mode,
                links: links_,
            });
        }
    }

    let mut a = scalar("coordination");
    let scheme = a.parsed("scheme", true, |v| {
        CoordinationScheme::parse(v).ok_or_else(|| format!("unknown scheme {v:?}"))
    });
    let coordination = CoordSection {
        scheme: scheme.unwrap_or(CoordinationScheme::None),
        members: a.list("members"),
        nulling_db: a.f64("nulling_db", false),
        sounding: a.duration("sounding_us", NS_PER_US, false).unwrap_or(SimTime::ZERO),
    };
    a.finish(&mut errors);
    if coordination.scheme == CoordinationScheme::Cbf && coordination.nulling_db.is_none() {
        errors.push(ConfigError::global("coordination.scheme=cbf requires coordination.nulling_db"));
    }
    if coordination.nulling_db.is_some_and(|n| n < 0.0) {
        errors.push(ConfigError::global("coordination.nulling_db must be non-negative"));
    }

    let mut aps = Vec::new();
    let mut stas = Vec::new();
    let mut device_lines: BTreeMap<String, usize> = BTreeMap::new();
    let topo = sec_entries.remove("topology").unwrap();
    scalar("topology").finish(&mut errors);
    for e in &topo {
        if device_lines.insert(e.name.to_string(), e.line).is_some() {
            errors.push(ConfigError::at(e.line, format!("device {:?} defined twice", e.name)));
        }
        let mut a = e.attrs();
        let x = a.f64("x", true);
        let y = a.f64("y", true);
        let antennas = a.int::<u32>("antennas", false).unwrap_or(1);
        if e.kind == "ap" {
            let streams = a.int::<u32>("streams", false).unwrap_or(1);
            let admin_domain = a.int::<u32>("admin_domain", false).unwrap_or(0);
            a.finish(&mut errors);
            if streams == 0 {
                errors.push(ConfigError::at(e.line, "streams must be at least 1"));
            }
            if let (Some(x), Some(y)) = (x, y) {
                aps.push(ApConfig {
                    name: e.name.to_string(),
                    x,
                    y,
                    antennas,
                    streams,
                    admin_domain,
                });
            }
        } else {
            let ap = a.text("ap", true);
            a.finish(&mut errors);
            if let (Some(x), Some(y), Some(ap)) = (x, y, ap) {
                stas.push(StaConfig {
                    name: e.name.to_string(),
                    x,
                    y,
                    antennas,
                    ap,
                });
            }
        }
    }
    if topo.iter().all(|e| e.kind != "ap") {
        errors.push(ConfigError::global("[topology] needs at least one ap= entry"));
    }
    let ap_names: BTreeSet<&str> = aps.iter().map(|a| a.name.as_str()).collect();
    for (s, e) in stas.iter().zip(topo.iter().filter(|e| e.kind == "sta")) {
        if !ap_names.contains(s.ap.as_str()) {
            errors.push(ConfigError::at(e.line, format!("sta {:?} references undefined AP {:?}", s.name, s.ap)));
        }
    }

    let mut flows = Vec::new();
    let flow_entries = sec_entries.remove("traffic").unwrap();
    scalar("traffic").finish(&mut errors);
    let mut flow_names = BTreeSet::new();
    for e in &flow_entries {
        if !flow_names.insert(e.name) {
            errors.push(ConfigError::at(e.line, format!("flow {:?} defined twice", e.name)));
        }
        let mut a = e.attrs();
        let src = a.text("src", true);
        let dst = a.text("dst", true);
        let model_name = a.text("model", true);
        let model = match model_name.as_deref() {
            Some("onoff") => {
                let mean_on = a.duration("mean_on_ms", NS_PER_MS, true);
                let mean_off = a.duration("mean_off_ms", NS_PER_MS, true);
                let rate = a.f64("rate_on_mbps", true);
                for (t, k) in [(mean_on, "mean_on_ms"), (mean_off, "mean_off_ms")] {
                    if t == Some(SimTime::ZERO) {
                        errors.push(ConfigError::at(e.line, format!("{k} must be positive")));
                    }
                }
                match (mean_on, mean_off, rate) {
                    (Some(mean_on), Some(mean_off), Some(rate_mbps)) => Some(FlowModelConfig::OnOff {
                        mean_on,
                        mean_off,
                        rate_mbps,
                    }),
                    _ => None,
                }
            }
            Some("poisson") => a.f64("rate_mbps", true).map(|rate_mbps| FlowModelConfig::Poisson { rate_mbps }),
            Some("cbr") => a.f64("rate_mbps", true).map(|rate_mbps| FlowModelConfig::Cbr { rate_mbps }),
            Some(other) => {
                errors.push(ConfigError::at(e.line, format!("unknown traffic model {other:?}")));
                None
            }
            None => None,
        };
        let packet_bytes = a.int::<u32>("packet_bytes", false).unwrap_or(1500);
        let class = a.parsed("class", false, |v| match v {
            "be" => Ok(TrafficClass::BestEffort),
            "ts" => Ok(TrafficClass::TimeSensitive),
            _ => Err(format!("expected be or ts, got {v:?}")),
        });
        a.finish(&mut errors);
        if packet_bytes == 0 {
            errors.push(ConfigError::at(e.line, "packet_bytes must be positive"));
        }
        if let Some(m) = model {
            let rate = match m {
                FlowModelConfig::OnOff { rate_mbps, .. }
                | FlowModelConfig::Poisson { rate_mbps }
                | FlowModelConfig::Cbr { rate_mbps } => rate_mbps,
            };
            positive(&mut errors, Some(e.line), "flow rate", rate);
        }
        for (role, dev) in [("src", &src), ("dst", &dst)] {
            if let Some(d) = dev {
                if !device_lines.contains_key(d.as_str()) {
                    errors.push(ConfigError::at(
                        e.line,
                        format!("flow {:?} {role} references undefined device {d:?}", e.name),
                    ));
                }
            }
        }
        if let (Some(s), Some(d)) = (&src, &dst) {
            let sta = stas.iter().find(|x| &x.name == d);
            if device_lines.contains_key(s.as_str()) && !ap_names.contains(s.as_str()) {
                errors.push(ConfigError::at(e.line, format!("flow {:?}: src must be an AP (downlink only)", e.name)));
            } else if let Some(sta) = sta {
                if &sta.ap != s {
                    errors.push(ConfigError::at(
                        e.line,
                        format!("flow {:?}: {d} is not associated with {s}", e.name),
                    ));
                }
            } else if device_lines.contains_key(d.as_str()) {
                errors.push(ConfigError::at(e.line, format!("flow {:?}: dst must be a STA", e.name)));
            }
        }
        if let (Some(src), Some(dst), Some(model), Some(class)) =
            (src, dst, model, class.or(Some(TrafficClass::BestEffort)))
        {
            flows.push(FlowEntry {
                name: e.name.to_string(),
                src,
                dst,
                model,
                packet_bytes,
                class,
            });
        }
    }

    for (r, e) in mac.rtwt.iter().zip(&rtwt_entries) {
        if !ap_names.contains(r.ap.as_str()) {
            errors.push(ConfigError::at(e.line, format!("rtwt {:?} references undefined AP {:?}", r.name, r.ap)));
        }
        for f in &r.flows {
            if !flow_names.contains(f.as_str()) {
                errors.push(ConfigError::at(e.line, format!("rtwt {:?} references undefined flow {f:?}", r.name)));
            }
        }
        if r.duration == SimTime::ZERO || r.duration >= r.period {
            errors.push(ConfigError::at(e.line, "R-TWT duration must be positive and shorter than its period"));
        }
        if r.links.iter().any(|l| *l >= links.count) {
            errors.push(ConfigError::at(e.line, format!("rtwt {:?} names a link beyond links.count", r.name)));
        }
    }
    for m in &mlo.devices {
        if !device_lines.contains_key(m.device.as_str()) {
            errors.push(ConfigError::global(format!("[mlo] references undefined device {:?}", m.device)));
        }
        if m.links.iter().any(|l| *l >= links.count) {
            errors.push(ConfigError::global(format!("[mlo] device {:?} names a link beyond links.count", m.device)));
        }
    }
    for m in &coordination.members {
        if !ap_names.contains(m.as_str()) {
            errors.push(ConfigError::global(format!("coordination.members references undefined AP {m:?}")));
        }
    }

    if errors.is_empty() {
        Ok(ScenarioConfig {
            run,
            aps,
            stas,
            links,
            phy,
            mac,
            mlo,
            coordination,
            flows,
        })
    } else {
        errors.sort_by_key(|e| e.line.unwrap_or(usize::MAX));
        Err(ConfigErrors(errors))
    }
}

fn join<T: ToString>(items: &[T]) -> String {
    items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

/// Canonical text form; `parse(serialize(c)) == c`.
pub fn serialize(c: &ScenarioConfig) -> String {
    let mut s = String::new();
    let us = |t: SimTime| format_duration(t, NS_PER_US);
    let _ = writeln!(s, "[run]");
    let _ = writeln!(s, "duration_s={}", format_duration(c.run.duration, NS_PER_S));
    let _ = writeln!(s, "seed={}", c.run.seed);
    let _ = writeln!(s, "trace={}", c.run.trace);

    let _ = writeln!(s, "\n[topology]");
    for a in &c.aps {
        let _ = writeln!(
            s,
            "ap={} x={} y={} antennas={} streams={} admin_domain={}",
            a.name, a.x, a.y, a.antennas, a.streams, a.admin_domain
        );
    }
    for t in &c.stas {
        let _ = writeln!(s, "sta={} x={} y={} antennas={} ap={}", t.name, t.x, t.y, t.antennas, t.ap);
    }

    let _ = writeln!(s, "\n[links]");
    let _ = writeln!(s, "count={}", c.links.count);
    let _ = writeln!(s, "freq_ghz={}", c.links.freq_ghz);
    let _ = writeln!(s, "bandwidth_mhz={}", c.links.bandwidth_mhz);

    let p = &c.phy;
    let _ = writeln!(s, "\n[phy]");
    let _ = writeln!(s, "tx_power_dbm={}", p.tx_power_dbm);
    let _ = writeln!(s, "noise_density_dbm_hz={}", p.noise_density_dbm_hz);
    let _ = writeln!(s, "noise_figure_db={}", p.noise_figure_db);
    let _ = writeln!(s, "per={}", p.per);
    let _ = writeln!(s, "preamble_us={}", us(p.preamble));
    let _ = writeln!(s, "symbol_us={}", us(p.symbol));
    for m in &p.mcs_table {
        let _ = writeln!(
            s,
            "mcs={} bits={} rate={}/{} min_sinr_db={}",
            m.index, m.bits_per_symbol, m.coding_rate.num, m.coding_rate.den, m.min_sinr_db
        );
    }

    let m = &c.mac;
    let e = &m.edca;
    let _ = writeln!(s, "\n[mac]");
    let _ = writeln!(s, "slot_us={}", us(e.slot));
    let _ = writeln!(s, "sifs_us={}", us(e.sifs));
    let _ = writeln!(s, "difs_us={}", us(e.difs));
    let _ = writeln!(s, "cw_min={}", e.cw_min);
    let _ = writeln!(s, "cw_max={}", e.cw_max);
    let _ = writeln!(s, "retry_limit={}", e.retry_limit);
    let _ = writeln!(s, "blockack_us={}", us(e.block_ack));
    let _ = writeln!(s, "txop_limit_us={}", us(e.txop_limit));
    let _ = writeln!(s, "max_ampdu={}", e.max_ampdu);
    let _ = writeln!(s, "buffer_packets={}", m.buffer_packets);
    let _ = writeln!(s, "cca_threshold_dbm={}", m.cca_threshold_dbm);
    let _ = writeln!(s, "preemption={}", m.preemption);
    for r in &m.rtwt {
        let _ = write!(
            s,
            "rtwt={} ap={} start_us={} duration_us={} period_us={}",
            r.name,
            r.ap,
            us(r.start),
            us(r.duration),
            us(r.period)
        );
        if !r.flows.is_empty() {
            let _ = write!(s, " flows={}", join(&r.flows));
        }
        if !r.links.is_empty() {
            let _ = write!(s, " links={}", join(&r.links));
        }
        s.push('\n');
    }

    let _ = writeln!(s, "\n[mlo]");
    let _ = writeln!(s, "mode={}", c.mlo.mode.as_str());
    let _ = writeln!(s, "switch_delay_us={}", us(c.mlo.switch_delay));
    for d in &c.mlo.devices {
        let _ = write!(s, "device={} mode={}", d.device, d.mode.as_str());
        if !d.links.is_empty() {
            let _ = write!(s, " links={}", join(&d.links));
        }
        s.push('\n');
    }

    let co = &c.coordination;
    let _ = writeln!(s, "\n[coordination]");
    let _ = writeln!(s, "scheme={}", co.scheme.as_str());
    if !co.members.is_empty() {
        let _ = writeln!(s, "members={}", join(&co.members));
    }
    if let Some(n) = co.nulling_db {
        let _ = writeln!(s, "nulling_db={n}");
    }
    let _ = writeln!(s, "sounding_us={}", us(co.sounding));

    let _ = writeln!(s, "\n[traffic]");
    for f in &c.flows {
        let _ = write!(s, "flow={} src={} dst={} ", f.name, f.src, f.dst);
        let _ = match f.model {
            FlowModelConfig::OnOff {
                mean_on,
                mean_off,
                rate_mbps,
            } => write!(
                s,
                "model=onoff mean_on_ms={} mean_off_ms={} rate_on_mbps={rate_mbps}",
                format_duration(mean_on, NS_PER_MS),
                format_duration(mean_off, NS_PER_MS)
            ),
            FlowModelConfig::Poisson { rate_mbps } => write!(s, "model=poisson rate_mbps={rate_mbps}"),
            FlowModelConfig::Cbr { rate_mbps } => write!(s, "model=cbr rate_mbps={rate_mbps}"),
        };
        let class = match f.class {
            TrafficClass::BestEffort => "be",
            TrafficClass::TimeSensitive => "ts",
        };
        let _ = writeln!(s, " packet_bytes={} class={class}", f.packet_bytes);
    }
    s
}

/// Returns `text` with `section.key` set to `value`, adding the key if absent.
fn set_scalar(text: &str, section: &str, key: &str, value: &str) -> String {
    let mut out = Vec::new();
    let mut in_section = false;
    let mut done = false;
    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.starts_with('[') {
            if in_section && !done {
                out.push(format!("{key}={value}"));
                done = true;
            }
            in_section = trimmed == format!("[{section}]");
            out.push(line.to_string());
            continue;
        }
        if in_section && trimmed.split_once('=').is_some_and(|(k, _)| k.trim() == key) {
            out.push(format!("{key}={value}"));
            done = true;
            continue;
        }
        out.push(line.to_string());
    }
    if !done {
        if !in_section {
            out.push(format!("[{section}]"));
        }
        out.push(format!("{key}={value}"));
    }
    out.join("\n") + "\n"
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigErrors> {
        parse(text)
    }

    pub fn to_text(&self) -> String {
        serialize(self)
    }

    /// Copy with one numeric scalar key (`section.key`) replaced.
    pub fn with_override(&self, key: &str, value: &str) -> Result<Self, ConfigErrors> {
        if !NUMERIC_KEYS.contains(&key) {
            return Err(ConfigError::global(format!("{key:?} is not a numeric scenario key")).into());
        }
        if value.parse::<f64>().is_err() {
            return Err(ConfigError::global(format!("sweep value {value:?} for {key} is not a number")).into());
        }
        let (section, name) = key.split_once('.').unwrap();
        parse(&set_scalar(&serialize(self), section, name, value))
    }

    /// Stable short identifier of the canonical text.
    pub fn hash_hex(&self) -> String {
        use sha2::{Digest, Sha256};
        let digest = Sha256::digest(serialize(self).as_bytes());
        digest[..8].iter().fold(String::new(), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
[links]
count=1
freq_ghz=6
bandwidth_mhz=160
[topology]
ap=ap1 x=0 y=0
sta=sta1 x=1 y=0 ap=ap1
[coordination]
scheme=none
[traffic]
flow=f1 src=ap1 dst=sta1 model=cbr rate_mbps=100
";

    #[test]
    fn duration_decimal_is_exact() {
        assert_eq!(parse_duration("4.15", NS_PER_MS).unwrap(), SimTime::from_nanos(4_150_000));
        assert_eq!(parse_duration("13.6", NS_PER_US).unwrap(), SimTime::from_nanos(13_600));
        assert_eq!(parse_duration("120", NS_PER_S).unwrap(), SimTime::from_secs(120));
        assert_eq!(parse_duration(".5", NS_PER_S).unwrap(), SimTime::from_millis(500));
        assert!(parse_duration("0.0001", NS_PER_US).is_err());
        assert!(parse_duration("-1", NS_PER_US).is_err());
        assert!(parse_duration("1e3", NS_PER_US).is_err());
        assert!(parse_duration(".", NS_PER_US).is_err());
    }

    #[test]
    fn duration_format_round_trips() {
        for ns in [0u64, 1, 13_600, 4_150_000, 5_484_000, 120_000_000_000, 1_000_000_001] {
            let t = SimTime::from_nanos(ns);
            for unit in [NS_PER_S, NS_PER_MS, NS_PER_US] {
                assert_eq!(parse_duration(&format_duration(t, unit), unit).unwrap(), t);
            }
        }
        assert_eq!(format_duration(SimTime::from_nanos(4_150_000), NS_PER_MS), "4.15");
    }

    #[test]
    fn minimal_scenario_gets_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.run.duration, SimTime::from_secs(120));
        assert_eq!(c.mac.edca, EdcaParams::default());
        assert_eq!(c.mac.buffer_packets, 10_240);
        assert_eq!(c.flows[0].class, TrafficClass::BestEffort);
        assert_eq!(c.flows[0].packet_bytes, 1500);
    }

    #[test]
    fn unknown_keys_and_sections_are_rejected_with_lines() {
        let text = format!("{MINIMAL}[mac]\nbogus=1\n[weird]\n");
        let err = parse(&text).unwrap_err();
        let lines: Vec<_> = err.0.iter().map(|e| e.line).collect();
        assert!(lines.contains(&Some(13)), "{err}");
        assert!(lines.contains(&Some(14)), "{err}");
    }

    #[test]
    fn undefined_flow_device_names_the_line() {
        let text = MINIMAL.replace("dst=sta1", "dst=sta9");
        let err = parse(&text).unwrap_err();
        assert!(err.0.iter().any(|e| e.line == Some(11) && e.message.contains("sta9")), "{err}");
    }

    #[test]
    fn cbf_requires_nulling() {
        let text = MINIMAL.replace("scheme=none", "scheme=cbf");
        let err = parse(&text).unwrap_err();
        assert!(err.to_string().contains("nulling_db"), "{err}");
    }

    #[test]
    fn missing_required_key() {
        let text = MINIMAL.replace("count=1\n", "");
        let err = parse(&text).unwrap_err();
        assert!(err.to_string().contains("\"count\""), "{err}");
    }

    #[test]
    fn override_rejects_non_numeric_keys() {
        let c = parse(MINIMAL).unwrap();
        assert!(c.with_override("coordination.scheme", "cbf").is_err());
        assert!(c.with_override("links.freq_ghz", "abc").is_err());
        let c2 = c.with_override("links.freq_ghz", "5").unwrap();
        assert_eq!(c2.links.freq_ghz, 5.0);
        let c3 = c.with_override("coordination.nulling_db", "20").unwrap();
        assert_eq!(c3.coordination.nulling_db, Some(20.0));
    }

    #[test]
    fn hash_is_stable_and_content_sensitive() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.hash_hex(), parse(MINIMAL).unwrap().hash_hex());
        assert_eq!(c.hash_hex().len(), 16);
        assert_ne!(c.hash_hex(), c.with_override("run.seed", "2").unwrap().hash_hex());
    }
}
