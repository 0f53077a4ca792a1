// One packet through the whole chain: LTE waveform, two-path channel with
// the device, noise, PSS timing, tap tracking and demodulation.

use ambc::bd::payload_hex;
use ambc::harness::{decode_iq, ExperimentConfig, Scene};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
        [cell]
        pci = 42

        [[path]]
        amplitude = 1.0

        [[path]]
        delay = 4.4444e-7
        amplitude = 0.4
        phase_deg = 60

        [bd_path]
        amplitude = 0.1
        phase_deg = 20

        [channel]
        snr_db = 10
        "#,
        &[],
    )?;
    let scene = Scene::new(&cfg)?;
    let payload = 0xC0FF_EE42;
    let capture = scene.render_default(&[payload])?;
    let reception = decode_iq(&capture.iq, &cfg, None)?;
    println!(
        "LTE timing {:?}, tracking tap {}",
        reception.timing, reception.track.l0
    );
    for p in &reception.packets {
        println!(
            "packet at {} (sent at {}): payload {} sync metric {:.1} SNR estimate {:.1} dB",
            p.frame_start,
            capture.truth[0].tap_start,
            payload_hex(p.payload()),
            p.sync_metric,
            p.snr_est_db
        );
    }
    match reception.packets.first() {
        Some(p) if p.payload() == payload => Ok(()),
        _ => Err("payload not recovered".into()),
    }
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
