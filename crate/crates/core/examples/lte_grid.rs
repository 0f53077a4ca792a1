// Build a few subframes of the downlink grid, modulate them and check
// that demodulation returns the same grid.

use ambc::lte::{build_grid, crs_subcarriers, ofdm_demodulate, ofdm_modulate, CellConfig, CRS_SYMBOLS};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let config = CellConfig::with_pci(17);
    let grid = build_grid(&config, 4)?;
    println!(
        "{} subcarriers x {} symbols, {} samples per subframe at {} Hz",
        grid.n_subcarriers(),
        grid.n_symbols(),
        config.subframe_len(),
        config.sample_rate
    );
    for sym in CRS_SYMBOLS {
        let k = crs_subcarriers(&config, sym)?;
        println!("symbol {sym:2}: pilots at k = {}, {}, {} ... ({} total)", k[0], k[1], k[2], k.len());
    }
    let iq = ofdm_modulate(&grid);
    let back = ofdm_demodulate(&iq, 0, &config)?;
    let err = grid.relative_error(&back);
    println!("modulate/demodulate relative error {err:.2e}");
    if err > 1e-12 {
        return Err(format!("round trip error {err}").into());
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
