//! Primary synchronisation signal.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::config::CellConfig;
use crate::error::{invalid, Result};

pub const PSS_LEN: usize = 62;
/// Subframe symbol carrying the PSS (last symbol of the first slot).
pub const PSS_SYMBOL: usize = 6;
/// Subframes of each radio frame carrying the PSS.
pub const PSS_SUBFRAMES: [usize; 2] = [0, 5];
/// Unused subcarriers either side of the sequence.
pub const PSS_GUARD: usize = 5;

/// Zadoff-Chu root for each sector identity.
pub fn pss_root(nid2: u8) -> Result<u32> {
    match nid2 {
        0 => Ok(25),
        1 => Ok(29),
        2 => Ok(34),
        other => Err(invalid(format!("nid2 {other} outside 0..=2"))),
    }
}

/// Length-63 Zadoff-Chu sequence with the centre element removed.
pub fn pss_generate(nid2: u8) -> Result<Vec<Complex64>> {
    let u = pss_root(nid2)? as f64;
    Ok((0..PSS_LEN)
        .map(|n| {
            let n = n as f64;
            let arg = if n < 31.0 {
                -PI * u * n * (n + 1.0) / 63.0
            } else {
                -PI * u * (n + 1.0) * (n + 2.0) / 63.0
            };
            Complex64::from_polar(1.0, arg)
        })
        .collect())
}

/// Logical subcarrier of PSS element 0. Element 31 sits just above DC.
pub fn pss_first_subcarrier(config: &CellConfig) -> usize {
    config.n_subcarriers() / 2 - PSS_LEN / 2
}

/// Whether logical subcarrier `k` is reserved for the PSS (sequence or guard).
pub fn in_pss_band(config: &CellConfig, k: usize) -> bool {
    let lo = pss_first_subcarrier(config) - PSS_GUARD;
    let hi = pss_first_subcarrier(config) + PSS_LEN + PSS_GUARD;
    (lo..hi).contains(&k)
}

pub fn carries_pss(config: &CellConfig, subframe: usize, symbol: usize) -> bool {
    config.with_pss && symbol == PSS_SYMBOL && PSS_SUBFRAMES.contains(&(subframe % 10))
}
