//! Ambient backscatter over LTE cell-specific reference signals.
//!
//! A backscatter device toggles its reflection on and off in 10 ms chips.
//! An LTE receiver estimates the channel impulse response from port-0
//! reference signals, tracks the tap holding the direct and backscatter
//! paths at 14 kHz, and demodulates the on/off pattern from the tap power.
//!
//! The crate covers the whole chain: waveform generation ([`lte`],
//! [`bd`]), the multipath channel ([`channel`]), channel estimation
//! ([`csi`]), the backscatter receiver ([`rx`]) and an experiment harness
//! ([`harness`]).

pub mod bd;
pub mod channel;
pub mod csi;
pub mod dsp;
pub mod error;
pub mod harness;
pub mod iq;
pub mod lte;
pub mod rx;

pub use error::{Error, Result};
pub use iq::IqStream;
