//! Free-space link budget for the direct and backscatter links.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// m/s
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Powers in dBm, gains in dBi, distances in metres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkBudget {
    pub tx_power_dbm: f64,
    pub tx_gain_dbi: f64,
    pub bd_gain_dbi: f64,
    pub rx_gain_dbi: f64,
    pub wavelength: f64,
    pub d_tx_bd: f64,
    pub d_bd_rx: f64,
    pub d_tx_rx: f64,
    /// Reflection loss of the device, dB, subtracted from the backscatter link.
    pub modulation_loss_db: f64,
}

impl Default for LinkBudget {
    fn default() -> Self {
        Self {
            tx_power_dbm: 15.0,
            tx_gain_dbi: 0.0,
            bd_gain_dbi: 0.0,
            rx_gain_dbi: 0.0,
            wavelength: SPEED_OF_LIGHT / 486e6,
            d_tx_bd: 1.0,
            d_bd_rx: 1.0,
            d_tx_rx: 2.0,
            modulation_loss_db: 0.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinkPowers {
    pub direct_dbm: f64,
    pub backscatter_dbm: f64,
}

/// `20 log10(lambda / (4 pi d))`: free-space gain (negative path loss), dB.
pub fn free_space_gain_db(wavelength: f64, distance: f64) -> f64 {
    20.0 * (wavelength / (4.0 * PI * distance)).log10()
}

pub fn link_budget(lb: &LinkBudget) -> Result<LinkPowers> {
    for (name, d) in [("d_tx_bd", lb.d_tx_bd), ("d_bd_rx", lb.d_bd_rx), ("d_tx_rx", lb.d_tx_rx)] {
        if !(d > 0.0) {
            return Err(Error::InvalidParameter(format!("{name} = {d} must be positive")));
        }
    }
    if !(lb.wavelength > 0.0) {
        return Err(Error::InvalidParameter(format!("wavelength {} must be positive", lb.wavelength)));
    }
    let direct = lb.tx_power_dbm + lb.tx_gain_dbi + lb.rx_gain_dbi + free_space_gain_db(lb.wavelength, lb.d_tx_rx);
    let backscatter = lb.tx_power_dbm + lb.tx_gain_dbi + 2.0 * lb.bd_gain_dbi + lb.rx_gain_dbi
        + free_space_gain_db(lb.wavelength, lb.d_tx_bd)
        + free_space_gain_db(lb.wavelength, lb.d_bd_rx)
        - lb.modulation_loss_db;
    Ok(LinkPowers {
        direct_dbm: direct,
        backscatter_dbm: backscatter,
    })
}

/// Transmitter and device fixed in rooms off a straight corridor, the
/// receiver stepped along it. Coordinates in metres.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Corridor {
    pub tx: [f64; 2],
    pub bd: [f64; 2],
    /// First receiver position.
    pub rx_start: [f64; 2],
    /// Step between receiver positions.
    pub rx_step: [f64; 2],
    pub rx_points: usize,
}

impl Default for Corridor {
    fn default() -> Self {
        Self {
            tx: [2.0, 4.0],
            bd: [11.0, -3.0],
            rx_start: [0.0, 0.0],
            rx_step: [1.0, 0.0],
            rx_points: 17,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorridorPoint {
    pub index: usize,
    pub position: [f64; 2],
    pub d_tx_rx: f64,
    pub d_bd_rx: f64,
    pub powers: LinkPowers,
}

fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Link budget at every receiver position. Gains, power and wavelength come
/// from `base`; distances from the geometry.
pub fn corridor_profile(base: &LinkBudget, corridor: &Corridor) -> Result<Vec<CorridorPoint>> {
    let d_tx_bd = distance(corridor.tx, corridor.bd);
    (0..corridor.rx_points)
        .map(|i| {
            let position = [
                corridor.rx_start[0] + i as f64 * corridor.rx_step[0],
                corridor.rx_start[1] + i as f64 * corridor.rx_step[1],
            ];
            let lb = LinkBudget {
                d_tx_bd,
                d_bd_rx: distance(corridor.bd, position),
                d_tx_rx: distance(corridor.tx, position),
                ..base.clone()
            };
            Ok(CorridorPoint {
                index: i,
                position,
                d_tx_rx: lb.d_tx_rx,
                d_bd_rx: lb.d_bd_rx,
                powers: link_budget(&lb)?,
            })
        })
        .collect()
}
