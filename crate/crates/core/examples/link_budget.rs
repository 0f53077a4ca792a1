// Free-space received powers, for one geometry and along a corridor.

use ambc::harness::{corridor_profile, link_budget, Corridor, LinkBudget};

pub fn run_example() -> Result<(), Box<dyn std::error::Error>> {
    let hop = LinkBudget {
        d_tx_bd: 1.0,
        d_bd_rx: 1.0,
        d_tx_rx: 2.0,
        ..LinkBudget::default()
    };
    let p = link_budget(&hop)?;
    println!(
        "1 m hops at 486 MHz, 15 dBm: direct {:.1} dBm, backscatter {:.1} dBm",
        p.direct_dbm, p.backscatter_dbm
    );

    let corridor = Corridor::default();
    println!("corridor, device at {:?}:", corridor.bd);
    let profile = corridor_profile(&LinkBudget::default(), &corridor)?;
    for pt in &profile {
        println!(
            "  point {:2}: direct {:6.1} dBm, backscatter {:6.1} dBm",
            pt.index, pt.powers.direct_dbm, pt.powers.backscatter_dbm
        );
    }
    let best = profile
        .iter()
        .max_by(|a, b| a.powers.backscatter_dbm.total_cmp(&b.powers.backscatter_dbm))
        .ok_or("empty corridor")?;
    println!("strongest backscatter at point {}, {:.1} m from the device", best.index, best.d_bd_rx);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn std::error::Error>> {
    run_example()
}
