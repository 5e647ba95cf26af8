//! Scenario files, presets and output layout.

mod config;
mod parse;
mod presets;

pub use config::*;
pub use parse::{format_duration, parse, parse_duration, serialize, ConfigError, ConfigErrors, NUMERIC_KEYS};
pub use presets::{preset, preset_text, PRESET_NAMES};
