//! System-level simulator for multi-link WLANs with multi-AP coordination.

pub mod batch;
pub mod coord;
pub mod ids;
pub mod mac;
pub mod mlo;
pub mod netsim;
pub mod phy;
pub mod scenario;
pub mod sim;
pub mod stats;
pub mod traffic;
