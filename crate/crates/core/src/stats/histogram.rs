use crate::sim::SimTime;

const FLOOR_NS: f64 = 1_000.0;
const CEIL_NS: f64 = 100e9;
/// Ratio between consecutive bin edges; a reported bin edge is within 1%
/// (plus 1 ns of rounding up) of any sample in that bin.
pub const BIN_RATIO: f64 = 1.01;

/// Log-spaced delay histogram covering 1 us .. 100 s.
///
/// Bin 0 holds `[0, 1 us)`, bin `k >= 1` holds `[1 us * r^(k-1), 1 us * r^k)`,
/// and a final overflow bin holds everything at or above 100 s.
#[derive(Debug, Clone, PartialEq)]
pub struct LogHistogram {
    upper_edges: Vec<f64>,
    counts: Vec<u64>,
    total: u64,
    max_ns: u64,
}

impl Default for LogHistogram {
    fn default() -> Self {
        Self::new()
    }
}

impl LogHistogram {
    pub fn new() -> Self {
        let n = ((CEIL_NS / FLOOR_NS).ln() / BIN_RATIO.ln()).ceil() as usize;
        let mut upper_edges = Vec::with_capacity(n + 1);
        upper_edges.push(FLOOR_NS);
        for k in 1..=n {
            upper_edges.push(FLOOR_NS * BIN_RATIO.powi(k as i32));
        }
        let bins = upper_edges.len() + 1;
        LogHistogram {
            upper_edges,
            counts: vec![0; bins],
            total: 0,
            max_ns: 0,
        }
    }

    pub fn bin_of(&self, ns: u64) -> usize {
        let x = ns as f64;
        if x < FLOOR_NS {
            return 0;
        }
        let last = self.upper_edges.len();
        if x >= self.upper_edges[last - 1] {
            return last;
        }
        let mut k = ((x / FLOOR_NS).ln() / BIN_RATIO.ln()).floor() as usize + 1;
        // The log estimate can land one bin off at an edge.
        while k > 0 && x < self.upper_edges[k - 1] {
            k -= 1;
        }
        while x >= self.upper_edges[k] {
            k += 1;
        }
        k
    }

    pub fn record(&mut self, delay: SimTime) {
        let ns = delay.as_nanos();
        let b = self.bin_of(ns);
        self.counts[b] += 1;
        self.total += 1;
        self.max_ns = self.max_ns.max(ns);
    }

    pub fn count(&self) -> u64 {
        self.total
    }

    pub fn max(&self) -> SimTime {
        SimTime::from_nanos(self.max_ns)
    }

    /// Upper edge of bin `b`, capped by the largest recorded value.
    fn reported_edge(&self, b: usize) -> SimTime {
        let edge = self
            .upper_edges
            .get(b)
            .map(|e| e.ceil() as u64)
            .unwrap_or(self.max_ns);
        SimTime::from_nanos(edge.min(self.max_ns))
    }

    /// Upper edge of the bin holding the sample of 1-based rank `rank`.
    pub fn value_at_rank(&self, rank: u64) -> Option<SimTime> {
        if rank == 0 || rank > self.total {
            return None;
        }
        let mut cum = 0;
        for (b, &c) in self.counts.iter().enumerate() {
            cum += c;
            if cum >= rank {
                return Some(self.reported_edge(b));
            }
        }
        None
    }

    /// `(edge, P(delay > edge))` for every non-empty bin, in increasing edge order.
    pub fn ccdf(&self) -> Vec<(SimTime, f64)> {
        let mut out = Vec::new();
        let mut cum = 0u64;
        for (b, &c) in self.counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            cum += c;
            let tail = (self.total - cum) as f64 / self.total as f64;
            out.push((self.reported_edge(b), tail));
        }
        out
    }

    pub fn merge(&mut self, other: &LogHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        self.max_ns = self.max_ns.max(other.max_ns);
    }
}
