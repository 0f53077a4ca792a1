use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use ambc::bd::{bits_from_u32, parse_payload_hex, payload_hex};
use ambc::harness::{
    corridor_profile, decode_capture, link_budget, run_sweep, scene_payloads, write_packet_row, write_sweep_csv,
    ExperimentConfig, Scene, CONFIG_ENV, PACKET_CSV_HEADER,
};
use ambc::rx::ber;
use clap::{Parser, Subcommand};
use rand::SeedableRng;

/// Ambient backscatter over LTE: simulate, decode and sweep.
#[derive(Parser)]
#[command(version)]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true, env = CONFIG_ENV)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set channel.snr_db=10`.
    #[arg(long = "set", global = true, value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write an IQ capture of the configured scene.
    Generate {
        /// Output capture, interleaved little-endian float32 I/Q.
        #[arg(long, short)]
        out: PathBuf,
        /// Packet payloads as 8 hex digits, one per packet.
        #[arg(long = "payload")]
        payloads: Vec<String>,
        /// Also write the ground truth as CSV.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Decode every packet in a capture to CSV.
    Decode {
        capture: PathBuf,
        #[arg(long, default_value = "capture")]
        capture_id: String,
        /// Expected payload, to fill in the BER column.
        #[arg(long)]
        payload: Option<String>,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// BER sweep over SNR.
    Sweep {
        /// Overrides `sweep.output`; stdout if neither is given.
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Direct and backscatter received power.
    Linkbudget {
        /// Profile along the corridor geometry instead, as CSV.
        #[arg(long)]
        corridor: bool,
    },
    /// Print the effective configuration.
    Config,
}

fn output(path: Option<&PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `Ok(true)` when the run found nothing to decode.
fn run(cli: Cli) -> Result<bool, Box<dyn std::error::Error>> {
    let cfg = ExperimentConfig::load(cli.config.as_deref(), &cli.overrides)?;
    match cli.command {
        Command::Generate { out, payloads, truth } => {
            let mut cfg = cfg;
            if !payloads.is_empty() {
                cfg.bd.packets = payloads.len();
            }
            let scene = Scene::new(&cfg)?;
            let payloads: Vec<u32> = if payloads.is_empty() {
                let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.channel.noise_seed);
                scene_payloads(&cfg, &mut rng)
            } else {
                payloads.iter().map(|p| parse_payload_hex(p)).collect::<Result<_, _>>()?
            };
            let capture = scene.render_default(&payloads)?;
            capture.iq.save(&out)?;
            let mut w = output(truth.as_ref())?;
            if truth.is_some() {
                writeln!(w, "packet,payload_hex,sample_start,frame_start")?;
                for (i, t) in capture.truth.iter().enumerate() {
                    writeln!(w, "{i},{},{},{}", payload_hex(t.payload), t.sample_start, t.tap_start)?;
                }
            }
            eprintln!(
                "wrote {} samples ({:.3} s) with {} packet(s) to {}",
                capture.iq.len(),
                capture.iq.duration(),
                capture.truth.len(),
                out.display()
            );
            Ok(false)
        }
        Command::Decode {
            capture,
            capture_id,
            payload,
            out,
        } => {
            let truth = payload.as_deref().map(parse_payload_hex).transpose()?;
            let packets = decode_capture(&capture, &cfg)?;
            let mut w = output(out.as_ref())?;
            writeln!(w, "{PACKET_CSV_HEADER}")?;
            for p in &packets {
                let b = truth.map(|t| ber(&p.payload_bits, &bits_from_u32(t))).transpose()?;
                write_packet_row(&mut w, &capture_id, p, b)?;
            }
            w.flush()?;
            Ok(packets.is_empty())
        }
        Command::Sweep { out } => {
            let result = run_sweep(&cfg)?;
            let path = out.or(cfg.sweep.output.clone());
            let mut w = output(path.as_ref())?;
            write_sweep_csv(&mut w, &result.rows)?;
            w.flush()?;
            Ok(result.rows.iter().all(|r| r.detected == 0))
        }
        Command::Linkbudget { corridor } => {
            let mut w = output(None)?;
            if corridor {
                writeln!(w, "index,x_m,y_m,d_tx_rx_m,d_bd_rx_m,direct_dbm,backscatter_dbm")?;
                for p in corridor_profile(&cfg.linkbudget, &cfg.corridor)? {
                    writeln!(
                        w,
                        "{},{},{},{},{},{},{}",
                        p.index,
                        p.position[0],
                        p.position[1],
                        p.d_tx_rx,
                        p.d_bd_rx,
                        p.powers.direct_dbm,
                        p.powers.backscatter_dbm
                    )?;
                }
            } else {
                let p = link_budget(&cfg.linkbudget)?;
                writeln!(w, "direct_dbm,backscatter_dbm")?;
                writeln!(w, "{},{}", p.direct_dbm, p.backscatter_dbm)?;
            }
            w.flush()?;
            Ok(false)
        }
        Command::Config => {
            print!("{}", cfg.to_toml_string()?);
            Ok(false)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("no packets decoded");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
