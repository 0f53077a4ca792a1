//! LTE downlink waveform: numerology, port-0 reference signals, PSS,
//! resource grid and OFDM synthesis/analysis.

pub mod config;
pub mod crs;
pub mod grid;
pub mod ofdm;
pub mod pss;

pub use config::{CellConfig, TrafficFill, SYMBOLS_PER_SUBFRAME};
pub use crs::{crs_sequence, crs_subcarriers, CrsTable, CRS_SYMBOLS};
pub use grid::{build_grid, build_grid_at, ResourceGrid};
pub use ofdm::{ofdm_demodulate, ofdm_modulate, OfdmDemodulator, OfdmModulator};
pub use pss::pss_generate;
