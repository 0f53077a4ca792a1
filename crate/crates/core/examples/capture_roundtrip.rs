// Write a two-packet capture to disk, read it back and decode it as a
// recorded file.

use ambc::harness::{decode_capture, write_packet_row, ExperimentConfig, Scene, PACKET_CSV_HEADER};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
        [bd]
        packets = 2
        gap = 0.1

        [channel]
        snr_db = 15
        quantizer_bits = 12
        "#,
        &[],
    )?;
    let scene = Scene::new(&cfg)?;
    let payloads = [0x0123_4567, 0x89AB_CDEF];
    let capture = scene.render_default(&payloads)?;

    let dir = tempfile::tempdir()?;
    let path = dir.path().join("scene.cf32");
    capture.iq.save(&path)?;
    println!("{} bytes written", std::fs::metadata(&path)?.len());

    let packets = decode_capture(&path, &cfg)?;
    let mut out = std::io::stdout().lock();
    use std::io::Write;
    writeln!(out, "{PACKET_CSV_HEADER}")?;
    for p in &packets {
        write_packet_row(&mut out, "scene", p, None)?;
    }
    let decoded: Vec<u32> = packets.iter().map(|p| p.payload()).collect();
    if decoded != payloads {
        return Err(format!("decoded {decoded:08X?}").into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
