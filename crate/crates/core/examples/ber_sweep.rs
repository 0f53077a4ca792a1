// A small BER sweep over decision SNR, printed as CSV.

use ambc::harness::{run_sweep, write_sweep_csv, ExperimentConfig};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::from_toml_str(
        r#"
        [bd]
        lead = 0.05
        trail = 0.1

        [receiver]
        timing = "known"
        frame_sync = "known"

        [sweep]
        snr_db = [0.0, 6.0]
        packets = 2
        seed = 7
        "#,
        &[],
    )?;
    let result = run_sweep(&cfg)?;
    write_sweep_csv(std::io::stdout().lock(), &result.rows)?;
    for (row, lte) in result.rows.iter().zip(&result.lte_snr_db) {
        println!("decision SNR {} dB needs LTE SNR {lte:.1} dB", row.snr_db);
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
