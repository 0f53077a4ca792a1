// Track the channel tap that holds the direct and backscatter paths and
// compare its two levels with the analytic tap model.

use ambc::bd::BdWaveform;
use ambc::channel::{apply_channel, expected_tap_model, BdPathSpec, ChannelSpec, PathSpec};
use ambc::csi::{track_tap, SubframeTiming};
use ambc::lte::{build_grid, ofdm_modulate, CellConfig};
use num_complex::Complex64;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = CellConfig::default();
    let n_subframes = 60;
    let iq = ofdm_modulate(&build_grid(&config, n_subframes)?);

    // device reflects from 20 ms to 40 ms
    let mut waveform = BdWaveform::empty(0.010, config.sample_rate, iq.len())?;
    waveform.add_burst(20 * config.subframe_len(), vec![1, 1])?;
    let spec = ChannelSpec::new(vec![
        PathSpec::new(0.0, Complex64::new(0.8, 0.3)),
        // a later path, two taps away
        PathSpec::new(2.0 / config.pilot_bandwidth(), Complex64::new(0.4, -0.2)),
    ])
    .with_bd(BdPathSpec {
        delay: 0.0,
        amplitude: Complex64::new(0.05, 0.08),
        doppler: 0.0,
        waveform,
    });
    let rx = apply_channel(&iq, &spec)?;
    let track = track_tap(&rx, &config, SubframeTiming { start: 0, subframe: 0 }, None)?;
    let model = expected_tap_model(&spec, &config, track.l0)?;

    let off = track.taps[10 * 14];
    let on = track.taps[30 * 14];
    println!("tracked tap {} at {} Hz", track.l0, track.rate);
    println!("absorbing: measured {off:.5}, model {:.5}", model.tap(0.0));
    println!("reflecting: measured {on:.5}, model {:.5}", model.tap(1.0));
    println!(
        "power step beta: measured {:.5}, model {:.5}",
        on.norm_sqr() - off.norm_sqr(),
        model.beta
    );

    let csv = std::env::temp_dir().join("ambc_tap_track.csv");
    track.write_csv(std::fs::File::create(&csv)?)?;
    println!("tap series written to {}", csv.display());
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
