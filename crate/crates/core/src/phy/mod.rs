//! SINR-based PHY abstraction: propagation, link adaptation, rates and PPDU
//! airtime.

mod channel;
mod mcs;

pub use channel::{noise_floor_dbm, path_loss_db, sinr_db, Interferer, Position};
pub use mcs::{select_mcs, CodingRate, McsEntry, McsTable, McsTableError};

use crate::sim::{RngStream, SimTime};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PhyError {
    #[error("transmitter and receiver are co-located")]
    CoLocated,
    #[error("position is not finite")]
    NonFinitePosition,
    #[error("carrier frequency must be positive, got {0} GHz")]
    InvalidFrequency(f64),
    #[error("unsupported channel width {0} MHz")]
    InvalidBandwidth(u32),
    #[error("packet error rate must lie in [0, 1), got {0}")]
    InvalidPer(f64),
    #[error("a PPDU needs at least one MPDU with a non-empty payload")]
    EmptyPpdu,
    #[error("at least one spatial stream is required")]
    NoStreams,
}

/// Equal-width slice of a channel: part `index` of `count`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Subband {
    pub index: u8,
    pub count: u8,
}

impl Subband {
    pub const FULL: Subband = Subband { index: 0, count: 1 };

    pub fn overlaps(&self, other: &Subband) -> bool {
        // Compare [index/count, (index+1)/count) on a common denominator.
        let (a0, a1) = (self.index as u32 * other.count as u32, (self.index as u32 + 1) * other.count as u32);
        let (b0, b1) = (other.index as u32 * self.count as u32, (other.index as u32 + 1) * self.count as u32);
        a0 < b1 && b0 < a1
    }
}

/// Data subcarriers of the HE/EHT tone plan for a channel width.
pub fn data_subcarriers(bandwidth_mhz: u32) -> Result<u32, PhyError> {
    match bandwidth_mhz {
        20 => Ok(234),
        40 => Ok(468),
        80 => Ok(980),
        160 => Ok(1960),
        320 => Ok(3920),
        other => Err(PhyError::InvalidBandwidth(other)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhyConfig {
    pub freq_ghz: f64,
    pub bandwidth_mhz: u32,
    pub data_subcarriers: u32,
    /// OFDM symbol including guard interval (12.8 + 0.8 us).
    pub symbol_duration: SimTime,
    pub preamble: SimTime,
    pub noise_figure_db: f64,
    pub noise_density_dbm_hz: f64,
    /// Total transmit power per link.
    pub tx_power_dbm: f64,
    pub per: f64,
}

impl PhyConfig {
    pub fn new(freq_ghz: f64, bandwidth_mhz: u32) -> Result<Self, PhyError> {
        if !(freq_ghz > 0.0) {
            return Err(PhyError::InvalidFrequency(freq_ghz));
        }
        Ok(PhyConfig {
            freq_ghz,
            bandwidth_mhz,
            data_subcarriers: data_subcarriers(bandwidth_mhz)?,
            symbol_duration: SimTime::from_nanos(13_600),
            preamble: SimTime::from_micros(44),
            noise_figure_db: 7.0,
            noise_density_dbm_hz: -174.0,
            tx_power_dbm: 20.0,
            per: 0.10,
        })
    }

    /// Copy of this configuration restricted to a narrower subchannel.
    pub fn with_bandwidth(&self, bandwidth_mhz: u32) -> Result<Self, PhyError> {
        Ok(PhyConfig {
            bandwidth_mhz,
            data_subcarriers: data_subcarriers(bandwidth_mhz)?,
            ..self.clone()
        })
    }

    pub fn validate(&self) -> Result<(), PhyError> {
        data_subcarriers(self.bandwidth_mhz)?;
        if !(self.freq_ghz > 0.0) {
            return Err(PhyError::InvalidFrequency(self.freq_ghz));
        }
        if !(0.0..1.0).contains(&self.per) {
            return Err(PhyError::InvalidPer(self.per));
        }
        Ok(())
    }

    pub fn noise_dbm(&self) -> f64 {
        noise_floor_dbm(
            self.bandwidth_mhz as f64,
            self.noise_figure_db,
            self.noise_density_dbm_hz,
        )
    }
}

/// Coded information bits per OFDM symbol as an exact fraction `(num, den)`.
fn bits_per_ofdm_symbol(mcs: &McsEntry, cfg: &PhyConfig, streams: u32) -> (u64, u64) {
    let num = cfg.data_subcarriers as u64
        * mcs.bits_per_symbol as u64
        * mcs.coding_rate.num as u64
        * streams as u64;
    (num, mcs.coding_rate.den as u64)
}

pub fn phy_rate_bps(mcs: &McsEntry, cfg: &PhyConfig, streams: u32) -> f64 {
    let (num, den) = bits_per_ofdm_symbol(mcs, cfg, streams);
    (num as f64 / den as f64) / cfg.symbol_duration.as_secs_f64()
}

/// Link rate parameters frozen for one TXOP.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkRate {
    pub mcs: McsEntry,
    pub streams: u32,
    bits_num: u64,
    bits_den: u64,
    pub symbol: SimTime,
    pub preamble: SimTime,
}

impl LinkRate {
    pub fn new(mcs: McsEntry, cfg: &PhyConfig, streams: u32) -> Result<Self, PhyError> {
        if streams == 0 {
            return Err(PhyError::NoStreams);
        }
        let (bits_num, bits_den) = bits_per_ofdm_symbol(&mcs, cfg, streams);
        Ok(LinkRate {
            mcs,
            streams,
            bits_num,
            bits_den,
            symbol: cfg.symbol_duration,
            preamble: cfg.preamble,
        })
    }

    pub fn rate_bps(&self) -> f64 {
        (self.bits_num as f64 / self.bits_den as f64) / self.symbol.as_secs_f64()
    }

    /// OFDM symbols needed for `bits` of payload.
    pub fn symbols_for(&self, bits: u64) -> u64 {
        (bits * self.bits_den).div_ceil(self.bits_num)
    }

    /// Largest payload in bits that fits in `symbols` OFDM symbols.
    pub fn bits_in(&self, symbols: u64) -> u64 {
        symbols * self.bits_num / self.bits_den
    }

    /// Preamble plus whole OFDM symbols carrying `bits`.
    pub fn ppdu_duration(&self, bits: u64) -> SimTime {
        self.preamble + self.symbol.mul(self.symbols_for(bits))
    }
}

/// Airtime of an A-MPDU of `n_mpdus` equal-size MPDUs, rounded up to whole
/// OFDM symbols after the fixed preamble.
pub fn ppdu_airtime(
    n_mpdus: u32,
    mpdu_bytes: u32,
    mcs: &McsEntry,
    cfg: &PhyConfig,
    streams: u32,
) -> Result<SimTime, PhyError> {
    if n_mpdus == 0 || mpdu_bytes == 0 {
        return Err(PhyError::EmptyPpdu);
    }
    let rate = LinkRate::new(*mcs, cfg, streams)?;
    Ok(rate.ppdu_duration(n_mpdus as u64 * mpdu_bytes as u64 * 8))
}

/// One independent Bernoulli(per) trial; `true` means the MPDU was lost.
pub fn mpdu_error_trial(per: f64, rng: &mut RngStream) -> bool {
    debug_assert!((0.0..1.0).contains(&per));
    per > 0.0 && rng.bernoulli(per)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg160() -> PhyConfig {
        PhyConfig::new(6.0, 160).unwrap()
    }

    #[test]
    fn phy_rates() {
        let t = McsTable::wifi7_default();
        let c = cfg160();
        let mbps = |i, ss| phy_rate_bps(t.by_index(i).unwrap(), &c, ss) / 1e6;
        assert!((mbps(13, 2) - 2882.35).abs() < 0.005);
        assert!((mbps(4, 2) - 864.71).abs() < 0.005);
        assert!((mbps(0, 1) - 72.06).abs() < 0.005);
    }

    #[test]
    fn airtime_full_aggregate_fits_txop() {
        let t = McsTable::wifi7_default();
        let d = ppdu_airtime(1024, 1500, t.highest(), &cfg160(), 2).unwrap();
        // 12_288_000 bits over 39_200 bits/symbol -> 314 symbols.
        assert_eq!(d, SimTime::from_nanos(44_000 + 314 * 13_600));
        assert!(d < SimTime::from_micros(5484));
    }

    #[test]
    fn airtime_single_mpdu_is_one_symbol() {
        let t = McsTable::wifi7_default();
        let d = ppdu_airtime(1, 1500, t.highest(), &cfg160(), 2).unwrap();
        assert_eq!(d, SimTime::from_nanos(57_600));
    }

    #[test]
    fn airtime_rejects_empty() {
        let t = McsTable::wifi7_default();
        assert_eq!(ppdu_airtime(0, 1500, t.highest(), &cfg160(), 2), Err(PhyError::EmptyPpdu));
    }

    #[test]
    fn subchannel_halves_tones() {
        let c = cfg160().with_bandwidth(80).unwrap();
        assert_eq!(c.data_subcarriers, 980);
        assert!(PhyConfig::new(6.0, 100).is_err());
    }

    #[test]
    fn subband_overlap() {
        let half = |i| Subband { index: i, count: 2 };
        assert!(!half(0).overlaps(&half(1)));
        assert!(half(1).overlaps(&Subband::FULL));
        assert!(Subband { index: 1, count: 4 }.overlaps(&half(0)));
        assert!(!Subband { index: 2, count: 4 }.overlaps(&half(0)));
    }

    #[test]
    fn per_boundaries() {
        let mut rng = RngStream::new(3, "per");
        assert!((0..10_000).all(|_| !mpdu_error_trial(0.0, &mut rng)));
        let fails = (0..10_000)
            .filter(|_| mpdu_error_trial(1.0 - f64::EPSILON, &mut rng))
            .count();
        assert!(fails >= 9_900);
    }
}
