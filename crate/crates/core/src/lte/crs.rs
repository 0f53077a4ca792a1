//! Cell-specific reference signals on antenna port 0.

use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use super::config::{CellConfig, MAX_RB, SYMBOLS_PER_SLOT};
use crate::error::{Error, Result};

/// Symbols of a subframe that carry port-0 pilots.
pub const CRS_SYMBOLS: [usize; 4] = [0, 4, 7, 11];

const NC: usize = 1600;

/// Length-31 Gold sequence `c(0..len)` for initialisation `c_init`.
pub fn gold_sequence(c_init: u32, len: usize) -> Vec<u8> {
    let total = NC + len + 31;
    let mut x1 = vec![0u8; total];
    let mut x2 = vec![0u8; total];
    x1[0] = 1;
    for (i, b) in x2.iter_mut().take(31).enumerate() {
        *b = ((c_init >> i) & 1) as u8;
    }
    for n in 0..total - 31 {
        x1[n + 31] = x1[n + 3] ^ x1[n];
        x2[n + 31] = x2[n + 3] ^ x2[n + 2] ^ x2[n + 1] ^ x2[n];
    }
    (0..len).map(|n| x1[n + NC] ^ x2[n + NC]).collect()
}

fn c_init(pci: u16, slot: usize, symbol_in_slot: usize) -> u32 {
    let ns = (slot % 20) as u32;
    let l = symbol_in_slot as u32;
    let pci = pci as u32;
    (1 << 10) * (7 * (ns + 1) + l + 1) * (2 * pci + 1) + 2 * pci + 1
}

/// Pilot values for `slot` (taken mod 20) and `symbol_in_slot` (0 or 4),
/// cropped to the configured bandwidth. Length `2 * n_rb`.
pub fn crs_sequence(config: &CellConfig, slot: usize, symbol_in_slot: usize) -> Result<Vec<Complex64>> {
    if symbol_in_slot != 0 && symbol_in_slot != 4 {
        return Err(Error::NotPilotSymbol(symbol_in_slot));
    }
    let c = gold_sequence(c_init(config.pci, slot, symbol_in_slot), 4 * MAX_RB);
    let offset = MAX_RB - config.n_rb;
    Ok((0..config.n_pilots())
        .map(|m| {
            let i = m + offset;
            let re = 1.0 - 2.0 * c[2 * i] as f64;
            let im = 1.0 - 2.0 * c[2 * i + 1] as f64;
            Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
        })
        .collect())
}

/// Offset of the pilot comb within each group of six subcarriers for
/// subframe symbol `symbol` (0..14).
pub fn comb_offset(config: &CellConfig, symbol: usize) -> Result<usize> {
    let v = match symbol {
        0 | 7 => 0,
        4 | 11 => 3,
        other => return Err(Error::NotPilotSymbol(other)),
    };
    Ok((v + config.v_shift()) % 6)
}

/// Logical subcarriers of the pilots in subframe symbol `symbol`.
pub fn crs_subcarriers(config: &CellConfig, symbol: usize) -> Result<Vec<usize>> {
    let off = comb_offset(config, symbol)?;
    Ok((0..config.n_pilots()).map(|m| 6 * m + off).collect())
}

/// Pilot values for subframe symbol `symbol` of frame subframe `subframe`.
pub fn crs_for_subframe_symbol(config: &CellConfig, subframe: usize, symbol: usize) -> Result<Vec<Complex64>> {
    if !CRS_SYMBOLS.contains(&symbol) {
        return Err(Error::NotPilotSymbol(symbol));
    }
    let slot = 2 * (subframe % 10) + symbol / SYMBOLS_PER_SLOT;
    crs_sequence(config, slot, symbol % SYMBOLS_PER_SLOT)
}

/// Precomputed pilots for every (subframe mod 10, pilot symbol) pair.
#[derive(Clone, Debug)]
pub struct CrsTable {
    values: Vec<Vec<Complex64>>,
    subcarriers: Vec<Vec<usize>>,
}

impl CrsTable {
    pub fn new(config: &CellConfig) -> Result<Self> {
        let mut values = Vec::with_capacity(40);
        for sf in 0..10 {
            for &sym in &CRS_SYMBOLS {
                values.push(crs_for_subframe_symbol(config, sf, sym)?);
            }
        }
        let subcarriers = CRS_SYMBOLS
            .iter()
            .map(|&s| crs_subcarriers(config, s))
            .collect::<Result<_>>()?;
        Ok(Self { values, subcarriers })
    }

    fn class(symbol: usize) -> Result<usize> {
        CRS_SYMBOLS
            .iter()
            .position(|&s| s == symbol)
            .ok_or(Error::NotPilotSymbol(symbol))
    }

    pub fn values(&self, subframe: usize, symbol: usize) -> Result<&[Complex64]> {
        let c = Self::class(symbol)?;
        Ok(&self.values[(subframe % 10) * 4 + c])
    }

    pub fn subcarriers(&self, symbol: usize) -> Result<&[usize]> {
        Ok(&self.subcarriers[Self::class(symbol)?])
    }
}
