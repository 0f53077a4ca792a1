//! Monte Carlo BER sweeps over SNR.

use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::config::{ExperimentConfig, FrameSource, SnrKind, TimingSource};
use super::scene::{decode_iq, scene_payloads, PacketTruth, Reception, Scene};
use crate::bd::bits_from_u32;
use crate::error::Result;
use crate::lte::{CellConfig, CRS_SYMBOLS, SYMBOLS_PER_SUBFRAME};
use crate::rx::{ber, chip_samples, decision_noise_gain, DemodResult};

/// SplitMix64 output step.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one job, independent of execution order.
pub fn job_seed(master: u64, point: usize, capture: usize, stream: u64) -> u64 {
    let mut s = splitmix64(master);
    for v in [point as u64, capture as u64, stream] {
        s = splitmix64(s ^ v);
    }
    s
}

const NOISE_STREAM: u64 = 0;
const PAYLOAD_STREAM: u64 = 1;

/// Quantities linking decision SNR to receiver noise, measured on a
/// noiseless capture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecisionCalibration {
    /// Mean squared soft value.
    pub signal_power: f64,
    /// Mean tap power over the packet.
    pub tap_power: f64,
    /// Summed squared pilot weights of one soft value.
    pub noise_gain: f64,
    /// Pilots per estimate; the tap estimate noise is the per-sample
    /// noise variance over this.
    pub n_pilots: usize,
    /// Mean power of the direct path.
    pub direct_power: f64,
}

impl DecisionCalibration {
    /// Per-sample complex noise variance giving decision SNR `gamma_db`.
    ///
    /// A tap estimate carries noise of variance `sigma^2 / n_pilots`; in
    /// the tap power its dominant part is `2 Re{g* z}`, of variance
    /// `2 |g|^2 sigma^2 / n_pilots`, which the linear filter chain scales
    /// by `noise_gain`.
    pub fn noise_variance(&self, gamma_db: f64) -> f64 {
        let gamma = 10f64.powf(gamma_db / 10.0);
        self.signal_power * self.n_pilots as f64 / (gamma * 2.0 * self.tap_power * self.noise_gain)
    }

    /// Direct-path SNR at the receiver input for decision SNR `gamma_db`.
    pub fn lte_snr_db(&self, gamma_db: f64) -> f64 {
        if gamma_db == f64::INFINITY {
            return f64::INFINITY;
        }
        10.0 * (self.direct_power / self.noise_variance(gamma_db)).log10()
    }
}

/// Measure the calibration on a noiseless capture of `payloads`, with
/// known timing and packet starts.
pub fn calibrate(scene: &Scene, payloads: &[u32]) -> Result<DecisionCalibration> {
    let mut cfg = scene.config.clone();
    cfg.receiver.timing = TimingSource::Known;
    cfg.receiver.frame_sync = FrameSource::Known;
    cfg.channel.quantizer_bits = None;
    let truth = scene.truth(payloads)?;
    let iq = scene.render(payloads, f64::INFINITY, 0)?.iq;
    let rx_cfg = cfg.rx_config()?;
    let reception = decode_iq(&iq, &cfg, Some(&truth))?;
    let packet = &reception.packets[0];
    let signal_power = packet.soft_values.iter().map(|s| s * s).sum::<f64>() / packet.soft_values.len() as f64;

    let rate = reception.track.rate;
    let l = chip_samples(cfg.bd.chip_duration, rate)?;
    let start = truth[0].tap_start;
    let span = &reception.track.taps[start..start + crate::bd::FRAME_CHIPS * l];
    let tap_power = span.iter().map(|t| t.norm_sqr()).sum::<f64>() / span.len() as f64;

    let n_subframes = reception.track.taps.len() / SYMBOLS_PER_SUBFRAME;
    let pilots: Vec<usize> = (0..n_subframes)
        .flat_map(|s| CRS_SYMBOLS.iter().map(move |&p| s * SYMBOLS_PER_SUBFRAME + p))
        .collect();
    Ok(DecisionCalibration {
        signal_power,
        tap_power,
        noise_gain: decision_noise_gain(n_subframes, start, &rx_cfg, rate, &pilots)?,
        n_pilots: cfg.cell.n_pilots(),
        direct_power: scene.direct_power(),
    })
}

/// One sweep point, in the fixed CSV schema.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub packets: usize,
    pub detected: usize,
    /// Over detected packets.
    pub mean_ber: f64,
    pub mean_sync_metric: f64,
    pub mean_snr_est_db: f64,
}

/// Outcome of one simulated packet.
#[derive(Clone, Debug, PartialEq)]
pub struct PacketRecord {
    pub point: usize,
    pub packet: usize,
    pub payload: u32,
    pub noise_seed: u64,
    /// The decoded packet matched to this one, if detected.
    pub result: Option<DemodResult>,
    pub ber: Option<f64>,
    /// Receive-chain error for the capture, if any.
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub records: Vec<PacketRecord>,
    /// Direct-path SNR used at each point, dB.
    pub lte_snr_db: Vec<f64>,
    pub calibration: Option<DecisionCalibration>,
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        sum / n as f64
    }
}

/// Match decoded packets to the transmitted ones by start position.
fn match_packets(truth: &[PacketTruth], reception: &Reception, cell: &CellConfig, tolerance: usize) -> Vec<Option<DemodResult>> {
    truth
        .iter()
        .map(|t| {
            let start = reception.tap_index(t.sample_start, cell)?;
            reception
                .packets
                .iter()
                .filter(|r| r.frame_start.abs_diff(start) <= tolerance)
                .min_by_key(|r| r.frame_start.abs_diff(start))
                .cloned()
        })
        .collect()
}

/// Simulate every SNR point of the sweep.
///
/// The channel is fixed for the whole sweep; each capture gets its own
/// noise realisation and payloads from seeds derived from the master seed,
/// the point and the capture index.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let scene = Scene::new(cfg)?;
    let sw = &cfg.sweep;
    let needs_calibration = sw.snr_kind == SnrKind::Decision && sw.snr_db.iter().any(|s| s.is_finite());
    let calibration = if needs_calibration {
        let mut rng = ChaCha8Rng::seed_from_u64(job_seed(sw.seed, usize::MAX, 0, PAYLOAD_STREAM));
        Some(calibrate(&scene, &scene_payloads(cfg, &mut rng))?)
    } else {
        None
    };
    let chip_len = chip_samples(cfg.bd.chip_duration, cfg.cell.symbol_rate())?;
    let per_capture = cfg.bd.packets;

    let mut rows = Vec::new();
    let mut records = Vec::new();
    let mut lte_snr = Vec::new();
    for (point, &snr) in sw.snr_db.iter().enumerate() {
        let snr_in = match (sw.snr_kind, &calibration) {
            (SnrKind::Decision, Some(c)) => c.lte_snr_db(snr),
            _ => snr,
        };
        lte_snr.push(snr_in);
        let wanted = sw.packets_at(point);
        let mut point_records = Vec::with_capacity(wanted);
        for capture in 0..wanted.div_ceil(per_capture) {
            let mut rng = ChaCha8Rng::seed_from_u64(job_seed(sw.seed, point, capture, PAYLOAD_STREAM));
            let payloads = scene_payloads(cfg, &mut rng);
            let noise_seed = job_seed(sw.seed, point, capture, NOISE_STREAM);
            let outcome = scene
                .render(&payloads, snr_in, noise_seed)
                .and_then(|c| decode_iq(&c.iq, cfg, Some(&c.truth)).map(|r| (c.truth, r)));
            let truth = scene.truth(&payloads)?;
            let (matched, error) = match outcome {
                Ok((truth, r)) => (match_packets(&truth, &r, &cfg.cell, chip_len / 2), None),
                Err(e) => (vec![None; truth.len()], Some(e.to_string())),
            };
            for (k, (t, m)) in truth.iter().zip(matched).enumerate() {
                let packet = capture * per_capture + k;
                if packet >= wanted {
                    break;
                }
                let b = match &m {
                    Some(r) => Some(ber(&r.payload_bits, &bits_from_u32(t.payload))?),
                    None => None,
                };
                point_records.push(PacketRecord {
                    point,
                    packet,
                    payload: t.payload,
                    noise_seed,
                    result: m,
                    ber: b,
                    error: error.clone(),
                });
            }
        }
        let detected: Vec<&PacketRecord> = point_records.iter().filter(|r| r.result.is_some()).collect();
        rows.push(SweepRow {
            snr_db: snr,
            packets: point_records.len(),
            detected: detected.len(),
            mean_ber: mean(detected.iter().filter_map(|r| r.ber)),
            mean_sync_metric: mean(detected.iter().filter_map(|r| r.result.as_ref().map(|d| d.sync_metric))),
            mean_snr_est_db: mean(detected.iter().filter_map(|r| r.result.as_ref().map(|d| d.snr_est_db))),
        });
        records.extend(point_records);
    }
    Ok(SweepResult {
        rows,
        records,
        lte_snr_db: lte_snr,
        calibration,
    })
}

pub const SWEEP_CSV_HEADER: &str = "snr_db,packets,detected,mean_ber,mean_sync_metric,mean_snr_est_db";

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{SWEEP_CSV_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.snr_db, r.packets, r.detected, r.mean_ber, r.mean_sync_metric, r.mean_snr_est_db
        )?;
    }
    Ok(())
}
