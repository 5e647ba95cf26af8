use std::fmt;

/// Convolutional coding rate `num/den`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CodingRate {
    pub num: u32,
    pub den: u32,
}

impl CodingRate {
    pub const fn new(num: u32, den: u32) -> Self {
        CodingRate { num, den }
    }

    pub fn as_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for CodingRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McsEntry {
    pub index: u8,
    /// log2 of the constellation size.
    pub bits_per_symbol: u32,
    pub coding_rate: CodingRate,
    pub min_sinr_db: f64,
}

impl McsEntry {
    /// Information bits carried per subcarrier per OFDM symbol.
    pub fn spectral_efficiency(&self) -> f64 {
        self.bits_per_symbol as f64 * self.coding_rate.as_f64()
    }

    pub fn name(&self) -> String {
        let modulation = match self.bits_per_symbol {
            1 => "BPSK".to_string(),
            2 => "QPSK".to_string(),
            b => format!("{}-QAM", 1u32 << b),
        };
        format!("MCS{} ({} {})", self.index, modulation, self.coding_rate)
    }
}

/// SINR-threshold link-adaptation table, sorted by index.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum McsTableError {
    #[error("MCS table is empty")]
    Empty,
    #[error("MCS{0}: thresholds must strictly increase with index")]
    ThresholdOrder(u8),
    #[error("MCS{0}: spectral efficiency must strictly increase with index")]
    EfficiencyOrder(u8),
    #[error("MCS{0}: indices must strictly increase")]
    IndexOrder(u8),
    #[error("MCS{0}: invalid coding rate")]
    CodingRate(u8),
}

impl McsTable {
    pub fn new(entries: Vec<McsEntry>) -> Result<Self, McsTableError> {
        if entries.is_empty() {
            return Err(McsTableError::Empty);
        }
        for e in &entries {
            if e.coding_rate.den == 0 || e.coding_rate.num == 0 || e.coding_rate.num > e.coding_rate.den {
                return Err(McsTableError::CodingRate(e.index));
            }
        }
        for w in entries.windows(2) {
            if w[1].index <= w[0].index {
                return Err(McsTableError::IndexOrder(w[1].index));
            }
            if w[1].min_sinr_db <= w[0].min_sinr_db {
                return Err(McsTableError::ThresholdOrder(w[1].index));
            }
            if w[1].spectral_efficiency() <= w[0].spectral_efficiency() {
                return Err(McsTableError::EfficiencyOrder(w[1].index));
            }
        }
        Ok(McsTable { entries })
    }

    /// 802.11be MCS 0..13 with SINR thresholds placed so that the two-BSS
    /// residential geometry maps 48.99/37.4/27.7/17.7 dB onto MCS 13/13/9/4.
    pub fn wifi7_default() -> Self {
        const ROWS: [(u32, u32, u32, f64); 14] = [
            (1, 1, 2, 2.0),
            (2, 1, 2, 5.0),
            (2, 3, 4, 8.0),
            (4, 1, 2, 11.0),
            (4, 3, 4, 14.5),
            (6, 2, 3, 18.0),
            (6, 3, 4, 19.5),
            (6, 5, 6, 21.0),
            (8, 3, 4, 24.0),
            (8, 5, 6, 27.0),
            (10, 3, 4, 30.0),
            (10, 5, 6, 33.0),
            (12, 3, 4, 35.0),
            (12, 5, 6, 37.0),
        ];
        let entries = ROWS
            .iter()
            .enumerate()
            .map(|(i, &(bits, num, den, thr))| McsEntry {
                index: i as u8,
                bits_per_symbol: bits,
                coding_rate: CodingRate::new(num, den),
                min_sinr_db: thr,
            })
            .collect();
        McsTable::new(entries).expect("built-in MCS table is consistent")
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn by_index(&self, index: u8) -> Option<&McsEntry> {
        self.entries.iter().find(|e| e.index == index)
    }

    pub fn highest(&self) -> &McsEntry {
        self.entries.last().expect("non-empty")
    }
}

/// Highest-index entry whose threshold does not exceed `sinr_db`; `None`
/// when even the most robust entry cannot be decoded.
pub fn select_mcs(sinr_db: f64, table: &McsTable) -> Option<McsEntry> {
    table
        .entries
        .iter()
        .rev()
        .find(|e| e.min_sinr_db <= sinr_db)
        .copied()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn case_study_operating_points() {
        let t = McsTable::wifi7_default();
        assert_eq!(select_mcs(48.99, &t).unwrap().index, 13);
        assert_eq!(select_mcs(37.40, &t).unwrap().index, 13);
        assert_eq!(select_mcs(27.68, &t).unwrap().index, 9);
        let m = select_mcs(17.71, &t).unwrap();
        assert_eq!(m.index, 4);
        assert_eq!(m.name(), "MCS4 (16-QAM 3/4)");
        assert_eq!(t.highest().name(), "MCS13 (4096-QAM 5/6)");
    }

    #[test]
    fn below_lowest_threshold_is_sentinel() {
        let t = McsTable::wifi7_default();
        assert!(select_mcs(1.0, &t).is_none());
        assert_eq!(select_mcs(2.0, &t).unwrap().index, 0);
    }

    #[test]
    fn rejects_non_monotone_table() {
        let mut rows = McsTable::wifi7_default().entries().to_vec();
        rows[3].min_sinr_db = 1.0;
        assert_eq!(McsTable::new(rows), Err(McsTableError::ThresholdOrder(3)));
        assert_eq!(McsTable::new(vec![]), Err(McsTableError::Empty));
    }
}
