//! LTE-side channel state: timing, pilot estimates and the tracked
//! impulse-response tap.

pub mod estimate;
pub mod timing;

pub use estimate::{
    cir_from_freq, estimate_cir_series, extract_crs_ls, interpolate_taps, tap_select, track_tap, CirSeries,
    CirTransform, FreqEstimate, TapTrack,
};
pub use timing::{resolve_timing, timing_sync, SubframeTiming, TimingMode};
