//! Simulated captures of an LTE cell and a backscatter device, and the
//! receive chain applied to captures.

use std::io::Write;
use std::path::Path;

use super::config::{ExperimentConfig, FrameSource};
use crate::bd::{frame_from_u32, payload_hex, BdWaveform, FRAME_CHIPS};
use crate::channel::{impair, PreparedChannel};
use crate::csi::{resolve_timing, track_tap, SubframeTiming, TapTrack, TimingMode};
use crate::error::{Error, Result};
use crate::iq::IqStream;
use crate::lte::{build_grid, ofdm_modulate, CellConfig, SYMBOLS_PER_SUBFRAME};
use crate::rx::{decode_at, filter_chain, find_packets, sync_at, tap_power, DemodResult, RxConfig};

/// Where packets sit in a capture.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SceneLayout {
    /// Samples per subframe at the LTE rate.
    pub subframe_len: usize,
    pub lead_subframes: usize,
    pub gap_subframes: usize,
    pub packet_subframes: usize,
    pub packets: usize,
    pub n_subframes: usize,
}

impl SceneLayout {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self> {
        let ms = |t: f64| (t * 1000.0).round() as usize;
        let packet = FRAME_CHIPS as f64 * cfg.bd.chip_duration;
        let packet_subframes = ms(packet);
        if (packet * 1000.0 - packet_subframes as f64).abs() > 1e-6 {
            return Err(Error::Config(format!(
                "a packet of {packet} s is not a whole number of subframes"
            )));
        }
        let k = cfg.bd.packets;
        let lead = ms(cfg.bd.lead);
        let gap = ms(cfg.bd.gap);
        let body = lead + k * packet_subframes + (k - 1) * gap;
        Ok(Self {
            subframe_len: cfg.cell.subframe_len(),
            lead_subframes: lead,
            gap_subframes: gap,
            packet_subframes,
            packets: k,
            n_subframes: body + (cfg.bd.trail * 1000.0).ceil() as usize,
        })
    }

    /// First subframe of packet `i`.
    pub fn packet_subframe(&self, i: usize) -> usize {
        self.lead_subframes + i * (self.packet_subframes + self.gap_subframes)
    }

    pub fn sample_start(&self, i: usize) -> usize {
        self.packet_subframe(i) * self.subframe_len
    }

    /// Packet start on the tap series of a receiver aligned to the
    /// scene's first subframe.
    pub fn tap_start(&self, i: usize) -> usize {
        self.packet_subframe(i) * SYMBOLS_PER_SUBFRAME
    }

    pub fn samples(&self) -> usize {
        self.n_subframes * self.subframe_len
    }
}

/// Ground truth for one transmitted packet.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PacketTruth {
    pub payload: u32,
    /// LTE-rate sample of the first chip.
    pub sample_start: usize,
    /// Tap-series index of the first chip for a receiver timed to the
    /// scene's first subframe.
    pub tap_start: usize,
}

#[derive(Clone, Debug)]
pub struct Capture {
    pub iq: IqStream,
    pub truth: Vec<PacketTruth>,
}

/// A cell, channel and packet layout, with the payload-independent part
/// of the received signal computed once.
#[derive(Clone, Debug)]
pub struct Scene {
    pub config: ExperimentConfig,
    pub layout: SceneLayout,
    channel: PreparedChannel,
}

impl Scene {
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let layout = SceneLayout::new(config)?;
        let lte = ofdm_modulate(&build_grid(&config.cell, layout.n_subframes)?);
        let channel = PreparedChannel::new(&lte, &config.channel_spec(None)?)?;
        Ok(Self {
            config: config.clone(),
            layout,
            channel,
        })
    }

    /// Mean power of the transmitted LTE signal.
    pub fn input_power(&self) -> f64 {
        self.channel.input_power()
    }

    /// Mean received power of the direct path, the noise reference.
    pub fn direct_power(&self) -> f64 {
        self.config.paths[0].gain().norm_sqr() * self.input_power()
    }

    pub fn truth(&self, payloads: &[u32]) -> Result<Vec<PacketTruth>> {
        if payloads.len() != self.layout.packets {
            return Err(Error::LengthMismatch(payloads.len(), self.layout.packets));
        }
        Ok(payloads
            .iter()
            .enumerate()
            .map(|(i, &payload)| PacketTruth {
                payload,
                sample_start: self.layout.sample_start(i),
                tap_start: self.layout.tap_start(i),
            })
            .collect())
    }

    pub fn waveform(&self, payloads: &[u32]) -> Result<BdWaveform> {
        let mut w = BdWaveform::empty(self.config.bd.chip_duration, self.config.cell.sample_rate, self.layout.samples())?;
        for t in self.truth(payloads)? {
            w.add_burst(t.sample_start, frame_from_u32(t.payload).chips())?;
        }
        Ok(w)
    }

    /// Received capture with noise at `snr_db` below the direct path.
    pub fn render(&self, payloads: &[u32], snr_db: f64, noise_seed: u64) -> Result<Capture> {
        let clean = self.channel.render(Some(&self.waveform(payloads)?))?;
        let mut spec = self.config.channel_spec(None)?;
        spec.snr_db = snr_db;
        Ok(Capture {
            iq: impair(clean, &spec, self.direct_power(), noise_seed)?,
            truth: self.truth(payloads)?,
        })
    }

    /// Capture at the configured channel SNR and noise seed.
    pub fn render_default(&self, payloads: &[u32]) -> Result<Capture> {
        self.render(payloads, self.config.channel.snr_db, self.config.channel.noise_seed)
    }
}

/// Payloads of a capture: the configured one, or random ones.
pub fn scene_payloads(cfg: &ExperimentConfig, rng: &mut impl rand::Rng) -> Vec<u32> {
    (0..cfg.bd.packets)
        .map(|_| cfg.payload().unwrap_or_else(|| rng.gen()))
        .collect()
}

/// Everything the receive chain produced for one capture.
#[derive(Clone, Debug)]
pub struct Reception {
    pub timing: SubframeTiming,
    pub track: TapTrack,
    pub packets: Vec<DemodResult>,
}

/// Full receive chain. PSS timing is moved `backoff` samples early.
/// `known_starts` (stream samples of packet starts) skips the header
/// search.
pub fn receive_iq(
    iq: &IqStream,
    cell: &CellConfig,
    rx: &RxConfig,
    timing: TimingMode,
    backoff: usize,
    l0: Option<usize>,
    known_starts: Option<&[usize]>,
) -> Result<Reception> {
    let timing = match timing {
        TimingMode::Pss => resolve_timing(iq, cell, timing)?.backed_off(backoff, cell),
        TimingMode::Known(t) => t,
    };
    let track = track_tap(iq, cell, timing, l0)?;
    let power = tap_power(&track.taps, track.rate);
    let (filtered, mf) = filter_chain(&power, rx)?;
    let mut syncs = match known_starts {
        Some(starts) => {
            let taps = starts
                .iter()
                .map(|&s| {
                    timing.tap_index(s, cell).ok_or(Error::StreamTooShort {
                        needed: timing.start,
                        available: s,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            sync_at(&mf, &taps, rx.chip_duration, rx.sync)?
        }
        None => find_packets(&filtered, &mf, rx.chip_duration, rx.sync)?.0,
    };
    syncs.sort_by_key(|s| s.frame_start);
    let packets = decode_at(&mf, &syncs, rx)?;
    Ok(Reception { timing, track, packets })
}

impl Reception {
    /// Tap-series index of a stream sample.
    pub fn tap_index(&self, sample: usize, cell: &CellConfig) -> Option<usize> {
        self.timing.tap_index(sample, cell)
    }
}

/// Receive chain configured by `cfg`. Known frame sync takes the packet
/// starts from `truth`.
pub fn decode_iq(iq: &IqStream, cfg: &ExperimentConfig, truth: Option<&[PacketTruth]>) -> Result<Reception> {
    let starts: Option<Vec<usize>> = match (cfg.receiver.frame_sync, truth) {
        (FrameSource::Known, Some(t)) => Some(t.iter().map(|p| p.sample_start).collect()),
        (FrameSource::Known, None) => {
            return Err(Error::Config("receiver.frame_sync = \"known\" needs ground truth".into()))
        }
        (FrameSource::Search, _) => None,
    };
    receive_iq(
        iq,
        &cfg.cell,
        &cfg.rx_config()?,
        cfg.timing_mode(),
        cfg.receiver.timing_backoff,
        cfg.receiver.l0,
        starts.as_deref(),
    )
}

/// Read a capture file in the interleaved little-endian float32 format.
pub fn ingest_iq(path: impl AsRef<Path>, cell: &CellConfig) -> Result<IqStream> {
    IqStream::load(path, cell.sample_rate)
}

/// Decode every packet in a capture file. Failing LTE timing or finding no
/// header gives an empty list; a capture shorter than one packet is an
/// error.
pub fn decode_capture(path: impl AsRef<Path>, cfg: &ExperimentConfig) -> Result<Vec<DemodResult>> {
    let iq = ingest_iq(path, &cfg.cell)?;
    let needed = (FRAME_CHIPS as f64 * cfg.bd.chip_duration * cfg.cell.sample_rate).round() as usize;
    if iq.len() < needed {
        return Err(Error::StreamTooShort {
            needed,
            available: iq.len(),
        });
    }
    let mut cfg = cfg.clone();
    cfg.receiver.frame_sync = FrameSource::Search;
    match decode_iq(&iq, &cfg, None) {
        Ok(r) => Ok(r.packets),
        Err(Error::SyncFailure { .. }) | Err(Error::NoPacket { .. }) => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

/// Header of the per-packet CSV.
pub const PACKET_CSV_HEADER: &str = "capture_id,frame_start,sync_metric,snr_est_db,payload_hex,ber";

/// One row per packet; `ber` is left empty without ground truth.
pub fn write_packet_row<W: Write>(mut w: W, capture_id: &str, r: &DemodResult, ber: Option<f64>) -> Result<()> {
    let ber = ber.map(|b| format!("{b}")).unwrap_or_default();
    writeln!(
        w,
        "{capture_id},{},{},{},{},{ber}",
        r.frame_start,
        r.sync_metric,
        r.snr_est_db,
        payload_hex(r.payload())
    )?;
    Ok(())
}
