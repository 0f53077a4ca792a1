use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Symbols per 1 ms subframe with normal cyclic prefix.
pub const SYMBOLS_PER_SUBFRAME: usize = 14;
pub const SYMBOLS_PER_SLOT: usize = 7;
pub const SUBFRAMES_PER_FRAME: usize = 10;
/// Subcarriers per resource block.
pub const SC_PER_RB: usize = 12;
/// Largest downlink bandwidth in resource blocks; CRS sequences are
/// generated for this width and cropped to the centre.
pub const MAX_RB: usize = 110;

/// What fills resource elements that carry neither CRS nor PSS.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrafficFill {
    Empty,
    #[default]
    RandomQpsk,
}

/// Downlink cell and numerology. Defaults are the 5 MHz (25 RB) carrier
/// sampled at 7.68 MHz.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CellConfig {
    /// Physical cell identity, 0..=503.
    pub pci: u16,
    pub n_rb: usize,
    pub n_fft: usize,
    /// Cyclic prefix of the first symbol of each slot, samples.
    pub cp_first: usize,
    /// Cyclic prefix of the other six symbols, samples.
    pub cp_other: usize,
    /// Hz
    pub subcarrier_spacing: f64,
    /// Hz
    pub sample_rate: f64,
    /// Hz, metadata only.
    pub carrier_freq: f64,
    pub traffic_fill: TrafficFill,
    /// Seed for random traffic.
    pub traffic_seed: u64,
    /// Transmit the primary synchronisation signal in subframes 0 and 5.
    pub with_pss: bool,
}

impl Default for CellConfig {
    fn default() -> Self {
        Self {
            pci: 0,
            n_rb: 25,
            n_fft: 512,
            cp_first: 40,
            cp_other: 36,
            subcarrier_spacing: 15_000.0,
            sample_rate: 7_680_000.0,
            carrier_freq: 486_000_000.0,
            traffic_fill: TrafficFill::RandomQpsk,
            traffic_seed: 0,
            with_pss: true,
        }
    }
}

impl CellConfig {
    pub fn with_pci(pci: u16) -> Self {
        Self {
            pci,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.pci > 503 {
            return Err(invalid(format!("pci {} outside 0..=503", self.pci)));
        }
        if self.n_rb == 0 || self.n_rb > MAX_RB {
            return Err(invalid(format!("n_rb {} outside 1..={MAX_RB}", self.n_rb)));
        }
        // the DC bin is left empty
        if self.n_subcarriers() + 1 > self.n_fft {
            return Err(invalid(format!(
                "{} subcarriers do not fit a {}-point transform",
                self.n_subcarriers(),
                self.n_fft
            )));
        }
        let expected = self.n_fft as f64 * self.subcarrier_spacing;
        if (self.sample_rate - expected).abs() > 1e-6 * expected {
            return Err(invalid(format!(
                "sample_rate {} != n_fft * subcarrier_spacing = {}",
                self.sample_rate, expected
            )));
        }
        if self.cp_first < self.cp_other {
            return Err(invalid("cp_first shorter than cp_other"));
        }
        if self.with_pss && self.n_rb < 6 {
            return Err(invalid("PSS needs at least 6 resource blocks"));
        }
        Ok(())
    }

    pub fn n_subcarriers(&self) -> usize {
        self.n_rb * SC_PER_RB
    }

    /// Pilots per CRS-bearing symbol on antenna port 0.
    pub fn n_pilots(&self) -> usize {
        2 * self.n_rb
    }

    /// CRS frequency shift, `pci mod 6`.
    pub fn v_shift(&self) -> usize {
        self.pci as usize % 6
    }

    /// Sector identity carried by the PSS, `pci mod 3`.
    pub fn nid2(&self) -> u8 {
        (self.pci % 3) as u8
    }

    pub fn cp_len(&self, symbol_in_slot: usize) -> usize {
        if symbol_in_slot == 0 {
            self.cp_first
        } else {
            self.cp_other
        }
    }

    pub fn symbol_len(&self, symbol_in_slot: usize) -> usize {
        self.n_fft + self.cp_len(symbol_in_slot)
    }

    pub fn slot_len(&self) -> usize {
        (0..SYMBOLS_PER_SLOT).map(|l| self.symbol_len(l)).sum()
    }

    pub fn subframe_len(&self) -> usize {
        2 * self.slot_len()
    }

    /// Offset of the cyclic prefix of `symbol` (0..14) from the subframe start.
    pub fn symbol_start(&self, symbol: usize) -> usize {
        let slot = symbol / SYMBOLS_PER_SLOT;
        let l = symbol % SYMBOLS_PER_SLOT;
        slot * self.slot_len() + (0..l).map(|i| self.symbol_len(i)).sum::<usize>()
    }

    /// Offset of the transform window of `symbol` (0..14) from the subframe start.
    pub fn fft_window_start(&self, symbol: usize) -> usize {
        self.symbol_start(symbol) + self.cp_len(symbol % SYMBOLS_PER_SLOT)
    }

    /// Estimates per second once channel taps are tracked every symbol.
    pub fn symbol_rate(&self) -> f64 {
        SYMBOLS_PER_SUBFRAME as f64 * self.sample_rate / self.subframe_len() as f64
    }

    /// FFT bin of logical subcarrier `k` (0 = lowest occupied), skipping DC.
    pub fn fft_bin(&self, k: usize) -> usize {
        let half = self.n_subcarriers() / 2;
        if k < half {
            self.n_fft - half + k
        } else {
            k - half + 1
        }
    }

    /// Delay-domain scale of the pilot comb: one bin of the pilot transform
    /// spans `1 / pilot_bandwidth` seconds.
    pub fn pilot_bandwidth(&self) -> f64 {
        6.0 * self.subcarrier_spacing * self.n_pilots() as f64
    }
}
