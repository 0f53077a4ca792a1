//! Experiment configuration: a sectioned TOML file plus `section.key=value`
//! overrides.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::linkbudget::{Corridor, LinkBudget};
use crate::bd::{parse_payload_hex, BdWaveform, DEFAULT_CHIP_DURATION};
use crate::channel::{BdPathSpec, ChannelSpec, PathSpec};
use crate::csi::{SubframeTiming, TimingMode};
use crate::error::{Error, Result};
use crate::lte::CellConfig;
use crate::rx::{RxConfig, DEFAULT_SYNC_THRESHOLD};

/// Default early opening of PSS-timed FFT windows, samples.
pub const DEFAULT_TIMING_BACKOFF: usize = 4;

/// Environment variable naming the default config file.
pub const CONFIG_ENV: &str = "AMBC_CONFIG";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BdSection {
    /// Eight hex digits. Unset draws a random payload per packet.
    pub payload: Option<String>,
    /// Seconds.
    pub chip_duration: f64,
    /// Seconds of silence before the first packet. Whole milliseconds.
    pub lead: f64,
    /// Seconds of silence after the last packet.
    pub trail: f64,
    /// Seconds between packets. Whole milliseconds.
    pub gap: f64,
    /// Packets per capture.
    pub packets: usize,
}

impl Default for BdSection {
    fn default() -> Self {
        Self {
            payload: None,
            chip_duration: DEFAULT_CHIP_DURATION,
            lead: 0.1,
            trail: 0.45,
            gap: 0.1,
            packets: 1,
        }
    }
}

/// One propagation path. Amplitude and phase give the complex gain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSection {
    /// Seconds.
    pub delay: f64,
    pub amplitude: f64,
    pub phase_deg: f64,
    /// Hz.
    pub doppler: f64,
}

impl Default for PathSection {
    fn default() -> Self {
        Self {
            delay: 0.0,
            amplitude: 1.0,
            phase_deg: 0.0,
            doppler: 0.0,
        }
    }
}

impl PathSection {
    pub fn gain(&self) -> Complex64 {
        Complex64::from_polar(self.amplitude, self.phase_deg.to_radians())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    /// Hz.
    pub cfo: f64,
    /// Direct-path SNR, dB; `inf` for none.
    pub snr_db: f64,
    pub noise_seed: u64,
    pub quantizer_bits: Option<u32>,
    pub full_scale: Option<f64>,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            cfo: 0.0,
            snr_db: f64::INFINITY,
            noise_seed: 1,
            quantizer_bits: None,
            full_scale: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimingSource {
    /// Primary synchronisation signal.
    #[default]
    Pss,
    /// The scene's own subframe boundaries.
    Known,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameSource {
    /// Header correlation search.
    #[default]
    Search,
    /// Packet starts from the scene layout.
    Known,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReceiverSection {
    pub timing: TimingSource,
    pub frame_sync: FrameSource,
    pub sync_threshold: f64,
    pub bypass_highpass: bool,
    /// Samples the PSS-derived FFT windows open early, inside the cyclic
    /// prefix, so paths arriving slightly before the correlation peak stay
    /// in the window.
    pub timing_backoff: usize,
    /// Tracked tap; unset picks the strongest.
    pub l0: Option<usize>,
}

impl Default for ReceiverSection {
    fn default() -> Self {
        Self {
            timing: TimingSource::Pss,
            frame_sync: FrameSource::Search,
            sync_threshold: DEFAULT_SYNC_THRESHOLD,
            bypass_highpass: false,
            timing_backoff: DEFAULT_TIMING_BACKOFF,
            l0: None,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SnrKind {
    /// SNR of the correlator decision variable.
    #[default]
    Decision,
    /// Direct-path SNR of the received LTE signal.
    Lte,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub snr_db: Vec<f64>,
    pub snr_kind: SnrKind,
    /// Packets per point.
    pub packets: usize,
    /// Per-point packet counts overriding `packets`; same length as `snr_db`.
    pub packets_per_point: Vec<usize>,
    pub seed: u64,
    pub output: Option<PathBuf>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            snr_db: vec![0.0, 2.0, 4.0, 6.0, 8.0, 10.0],
            snr_kind: SnrKind::Decision,
            packets: 20,
            packets_per_point: Vec::new(),
            seed: 1,
            output: None,
        }
    }
}

impl SweepSection {
    pub fn packets_at(&self, point: usize) -> usize {
        self.packets_per_point.get(point).copied().unwrap_or(self.packets)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub cell: CellConfig,
    pub bd: BdSection,
    /// Unmodulated paths; the first is the direct path.
    #[serde(rename = "path")]
    pub paths: Vec<PathSection>,
    pub bd_path: PathSection,
    pub channel: ChannelSection,
    pub receiver: ReceiverSection,
    pub sweep: SweepSection,
    pub linkbudget: LinkBudget,
    pub corridor: Corridor,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            cell: CellConfig::default(),
            bd: BdSection::default(),
            paths: vec![PathSection::default()],
            bd_path: PathSection {
                amplitude: 0.1,
                ..PathSection::default()
            },
            channel: ChannelSection::default(),
            receiver: ReceiverSection::default(),
            sweep: SweepSection::default(),
            linkbudget: LinkBudget::default(),
            corridor: Corridor::default(),
        }
    }
}

fn whole_ms(name: &str, t: f64) -> Result<()> {
    let ms = t * 1000.0;
    if !(t >= 0.0) || (ms - ms.round()).abs() > 1e-6 {
        return Err(Error::Config(format!("bd.{name} = {t} must be a non-negative whole number of milliseconds")));
    }
    Ok(())
}

impl ExperimentConfig {
    /// Parse TOML text, apply overrides, validate.
    pub fn from_toml_str(text: &str, overrides: &[String]) -> Result<Self> {
        let mut value: toml::Value = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        for o in overrides {
            apply_override(&mut value, o)?;
        }
        let cfg: Self = value.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Load `path`, or the file named by [`CONFIG_ENV`], or defaults.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let from_env = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
        let text = match path.map(Path::to_path_buf).or(from_env) {
            Some(p) => std::fs::read_to_string(&p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml_str(&text, overrides)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        self.cell.validate()?;
        if self.paths.is_empty() {
            return Err(Error::Config("at least one [[path]] is required".into()));
        }
        if let Some(p) = &self.bd.payload {
            parse_payload_hex(p)?;
        }
        if self.bd.packets == 0 {
            return Err(Error::Config("bd.packets must be at least 1".into()));
        }
        whole_ms("lead", self.bd.lead)?;
        whole_ms("gap", self.bd.gap)?;
        if !(self.bd.trail >= 0.0) {
            return Err(Error::Config("bd.trail must be non-negative".into()));
        }
        self.rx_config()?;
        if self.receiver.timing_backoff >= self.cell.cp_other {
            return Err(Error::Config(format!(
                "receiver.timing_backoff {} must be shorter than the cyclic prefix {}",
                self.receiver.timing_backoff, self.cell.cp_other
            )));
        }
        crate::bd::samples_per_chip(self.bd.chip_duration, self.cell.sample_rate)?;
        if self.sweep.snr_db.is_empty() {
            return Err(Error::Config("sweep.snr_db must not be empty".into()));
        }
        if self.sweep.packets == 0 || self.sweep.packets_per_point.contains(&0) {
            return Err(Error::Config("sweep packets must be at least 1".into()));
        }
        if !self.sweep.packets_per_point.is_empty() && self.sweep.packets_per_point.len() != self.sweep.snr_db.len() {
            return Err(Error::Config("sweep.packets_per_point must match sweep.snr_db in length".into()));
        }
        self.channel_spec(None)?.validate()
    }

    /// Fixed payload, if configured.
    pub fn payload(&self) -> Option<u32> {
        self.bd.payload.as_deref().map(|p| parse_payload_hex(p).expect("validated payload"))
    }

    /// Channel of the scene. Without a waveform the backscatter path is
    /// present but never reflects.
    pub fn channel_spec(&self, waveform: Option<BdWaveform>) -> Result<ChannelSpec> {
        let mut spec = ChannelSpec::new(
            self.paths
                .iter()
                .map(|p| PathSpec::new(p.delay, p.gain()).with_doppler(p.doppler))
                .collect(),
        );
        let waveform = match waveform {
            Some(w) => w,
            None => BdWaveform::empty(self.bd.chip_duration, self.cell.sample_rate, 0)?,
        };
        spec.bd = Some(BdPathSpec {
            delay: self.bd_path.delay,
            amplitude: self.bd_path.gain(),
            doppler: self.bd_path.doppler,
            waveform,
        });
        spec.cfo = self.channel.cfo;
        spec.snr_db = self.channel.snr_db;
        spec.quantizer_bits = self.channel.quantizer_bits;
        spec.full_scale = self.channel.full_scale;
        Ok(spec)
    }

    pub fn rx_config(&self) -> Result<RxConfig> {
        let mut rx = RxConfig::new(self.bd.chip_duration, self.cell.symbol_rate())?;
        rx.sync.threshold = self.receiver.sync_threshold;
        rx.bypass_highpass = self.receiver.bypass_highpass;
        Ok(rx)
    }

    /// LTE timing mode for a stream whose first sample starts subframe 0.
    pub fn timing_mode(&self) -> TimingMode {
        match self.receiver.timing {
            TimingSource::Pss => TimingMode::Pss,
            TimingSource::Known => TimingMode::Known(SubframeTiming { start: 0, subframe: 0 }),
        }
    }
}

/// Apply one `a.b.c=value` override. The value is read as a TOML value
/// when it parses as one and as a string otherwise. Numeric segments index
/// arrays, so `path.1.amplitude=0.3` edits the second `[[path]]`.
pub fn apply_override(root: &mut toml::Value, assignment: &str) -> Result<()> {
    let (key, raw) = assignment
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{assignment}` is not key=value")))?;
    let (key, raw) = (key.trim(), raw.trim());
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    let segments: Vec<&str> = key.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(Error::Config(format!("override key `{key}` has an empty segment")));
    }
    let mut node = root;
    for (i, seg) in segments.iter().enumerate() {
        let last = i + 1 == segments.len();
        node = match node {
            toml::Value::Table(t) => {
                if last {
                    t.insert(seg.to_string(), value);
                    return Ok(());
                }
                let next_is_index = segments[i + 1].parse::<usize>().is_ok();
                t.entry(seg.to_string()).or_insert_with(|| {
                    if next_is_index {
                        toml::Value::Array(Vec::new())
                    } else {
                        toml::Value::Table(toml::Table::new())
                    }
                })
            }
            toml::Value::Array(a) => {
                let idx: usize = seg
                    .parse()
                    .map_err(|_| Error::Config(format!("`{seg}` in `{key}` must be an array index")))?;
                if idx > a.len() {
                    return Err(Error::Config(format!("index {idx} in `{key}` skips entries (length {})", a.len())));
                }
                if idx == a.len() {
                    a.push(toml::Value::Table(toml::Table::new()));
                }
                if last {
                    a[idx] = value;
                    return Ok(());
                }
                &mut a[idx]
            }
            _ => return Err(Error::Config(format!("`{key}` descends into a non-table value"))),
        };
    }
    Ok(())
}
