//! Large-scale propagation and SINR.

use super::PhyError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Position { x, y }
    }

    pub fn distance(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Residential indoor path loss with a 5 m breakpoint: free-space slope up to
/// the breakpoint, 35 dB/decade beyond. No wall or floor penetration terms.
pub fn path_loss_db(tx: Position, rx: Position, freq_ghz: f64) -> Result<f64, PhyError> {
    if !(freq_ghz > 0.0) || !freq_ghz.is_finite() {
        return Err(PhyError::InvalidFrequency(freq_ghz));
    }
    let d = tx.distance(&rx);
    if !d.is_finite() {
        return Err(PhyError::NonFinitePosition);
    }
    if d <= 0.0 {
        return Err(PhyError::CoLocated);
    }
    const BREAKPOINT_M: f64 = 5.0;
    let mut pl = 40.05 + 20.0 * (freq_ghz / 2.4).log10() + 20.0 * d.min(BREAKPOINT_M).log10();
    if d > BREAKPOINT_M {
        pl += 35.0 * (d / BREAKPOINT_M).log10();
    }
    Ok(pl)
}

/// Thermal noise over the band plus receiver noise figure, in dBm.
pub fn noise_floor_dbm(bandwidth_mhz: f64, noise_figure_db: f64, noise_density_dbm_hz: f64) -> f64 {
    noise_density_dbm_hz + 10.0 * (bandwidth_mhz * 1e6).log10() + noise_figure_db
}

/// One interfering transmission as seen by a receiver.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    pub power_dbm: f64,
    /// Attenuation from an imperfect spatial null; zero when not nulled.
    pub suppression_db: f64,
}

impl Interferer {
    pub fn new(power_dbm: f64, suppression_db: f64) -> Self {
        Interferer {
            power_dbm,
            suppression_db,
        }
    }
}

fn dbm_to_mw(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0)
}

pub fn sinr_db(signal_dbm: f64, interferers: &[Interferer], noise_dbm: f64) -> f64 {
    let denom_mw: f64 = interferers
        .iter()
        .map(|i| dbm_to_mw(i.power_dbm - i.suppression_db))
        .sum::<f64>()
        + dbm_to_mw(noise_dbm);
    signal_dbm - 10.0 * denom_mw.log10()
}
