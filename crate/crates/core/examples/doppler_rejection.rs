// Tap power with a fading direct path: the high-pass stage removes the
// slow variation so the 100 Hz chips decode; without it they do not.

use ambc::bd::{frame_from_u32, BdWaveform};
use ambc::channel::TapModel;
use ambc::rx::{receive, RxConfig, TapPowerSeries};
use num_complex::Complex64;

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let rate = 14_000.0;
    let payload = 0x5EED_1234;
    let mut chips = BdWaveform::empty(0.010, rate, 0)?;
    chips.add_burst(1400, frame_from_u32(payload).chips())?;
    chips.len += 6300;

    // direct path rotating at 2 Hz against a static scatterer in the same tap;
    // the device path rotates with it
    let doppler = 2.0;
    let power: Vec<f64> = chips
        .samples()
        .iter()
        .enumerate()
        .map(|(m, &x)| {
            let rot = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * doppler * m as f64 / rate);
            let model = TapModel::from_gains(rot * 0.1, rot + 0.3);
            model.tap(x).norm_sqr()
        })
        .collect();
    let series = TapPowerSeries::new(power, rate);

    let mut cfg = RxConfig::new(0.010, rate)?;
    for bypass in [false, true] {
        cfg.bypass_highpass = bypass;
        let label = if bypass { "high-pass bypassed" } else { "high-pass on" };
        match receive(&series, &cfg)?.first() {
            Some(p) => println!(
                "{label}: payload {:08X} ({}), sync metric {:.1}",
                p.payload(),
                if p.payload() == payload { "correct" } else { "wrong" },
                p.sync_metric
            ),
            None => println!("{label}: no packet found"),
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
