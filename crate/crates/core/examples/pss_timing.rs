// Recover subframe timing from the primary synchronisation signal of a
// delayed, noisy capture.

use ambc::channel::awgn;
use ambc::csi::timing_sync;
use ambc::lte::{build_grid_at, ofdm_modulate, CellConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = CellConfig::with_pci(101);
    // capture starts partway through subframe 3
    let mut iq = ofdm_modulate(&build_grid_at(&config, 3, 12)?);
    let offset = 2345;
    iq.pad_front(offset);
    let noisy = awgn(&iq, 0.0, iq.mean_power(), 42)?;
    let timing = timing_sync(&noisy, &config)?;
    println!(
        "true boundary {offset} (subframe 3), found {} (subframe {}) at 0 dB SNR",
        timing.start, timing.subframe
    );
    if timing.start.abs_diff(offset) > 1 || timing.subframe != 3 {
        return Err("timing not recovered".into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
