//! Backscatter device framing and on/off chip waveform.
//!
//! A packet is two Barker-13 headers (26 chips, not Manchester coded)
//! followed by a 32-bit payload in Manchester code (64 chips). Chips are
//! reflection states: 1 reflects, 0 absorbs.

use crate::error::{invalid, Error, Result};

pub const BARKER13: [i8; 13] = [1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1];
pub const PAYLOAD_BITS: usize = 32;
pub const SYNC_CHIPS: usize = 26;
pub const DATA_CHIPS: usize = 2 * PAYLOAD_BITS;
pub const FRAME_CHIPS: usize = SYNC_CHIPS + DATA_CHIPS;
/// Seconds.
pub const DEFAULT_CHIP_DURATION: f64 = 0.010;

pub fn barker13() -> [i8; 13] {
    BARKER13
}

/// Aperiodic autocorrelation of a bipolar sequence at `lag`.
pub fn autocorrelation(seq: &[i8], lag: usize) -> i32 {
    seq.iter()
        .zip(seq.iter().skip(lag))
        .map(|(&a, &b)| a as i32 * b as i32)
        .sum()
}

/// Bit 0 becomes chips (0,1), bit 1 becomes (1,0).
pub fn manchester_encode(bits: &[u8]) -> Vec<u8> {
    bits.iter()
        .flat_map(|&b| if b != 0 { [1, 0] } else { [0, 1] })
        .collect()
}

/// Header chips: both Barker codes with +1 mapped to 1 and -1 to 0.
pub fn sync_chips() -> Vec<u8> {
    BARKER13
        .iter()
        .chain(BARKER13.iter())
        .map(|&c| u8::from(c > 0))
        .collect()
}

/// Header as a bipolar template, the form the receiver correlates with.
pub fn sync_template() -> Vec<f64> {
    BARKER13.iter().chain(BARKER13.iter()).map(|&c| c as f64).collect()
}

/// Most significant bit first.
pub fn bits_from_u32(v: u32) -> Vec<u8> {
    (0..32).rev().map(|i| ((v >> i) & 1) as u8).collect()
}

pub fn u32_from_bits(bits: &[u8]) -> Result<u32> {
    if bits.len() != PAYLOAD_BITS {
        return Err(invalid(format!("expected {PAYLOAD_BITS} bits, got {}", bits.len())));
    }
    Ok(bits.iter().fold(0u32, |acc, &b| (acc << 1) | u32::from(b != 0)))
}

/// Eight hex digits, optional `0x` prefix.
pub fn parse_payload_hex(s: &str) -> Result<u32> {
    let digits = s.trim().trim_start_matches("0x").trim_start_matches("0X");
    if digits.len() != 8 {
        return Err(invalid(format!("payload '{s}' is not 8 hex digits")));
    }
    u32::from_str_radix(digits, 16).map_err(|e| invalid(format!("payload '{s}': {e}")))
}

pub fn payload_hex(v: u32) -> String {
    format!("{v:08X}")
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BdFrame {
    pub sync_chips: Vec<u8>,
    pub data_chips: Vec<u8>,
    pub payload: Vec<u8>,
}

impl BdFrame {
    /// All 90 chips in transmission order.
    pub fn chips(&self) -> Vec<u8> {
        let mut c = self.sync_chips.clone();
        c.extend_from_slice(&self.data_chips);
        c
    }

    pub fn payload_u32(&self) -> u32 {
        u32_from_bits(&self.payload).expect("frame payload is always 32 bits")
    }
}

pub fn frame_build(payload: &[u8]) -> Result<BdFrame> {
    if payload.len() != PAYLOAD_BITS {
        return Err(invalid(format!(
            "payload must be {PAYLOAD_BITS} bits, got {}",
            payload.len()
        )));
    }
    let payload: Vec<u8> = payload.iter().map(|&b| u8::from(b != 0)).collect();
    Ok(BdFrame {
        sync_chips: sync_chips(),
        data_chips: manchester_encode(&payload),
        payload,
    })
}

pub fn frame_from_u32(v: u32) -> BdFrame {
    frame_build(&bits_from_u32(v)).expect("32 bits")
}

/// Whole samples per chip, or an error if `chip_duration * sample_rate` is
/// not an integer.
pub fn samples_per_chip(chip_duration: f64, sample_rate: f64) -> Result<usize> {
    let spc = chip_duration * sample_rate;
    let r = spc.round();
    if r < 1.0 || (spc - r).abs() > 1e-6 * spc.max(1.0) {
        return Err(invalid(format!(
            "chip duration {chip_duration} s at {sample_rate} Hz is {spc} samples, not a positive integer"
        )));
    }
    Ok(r as usize)
}

/// A run of chips starting at a sample offset.
#[derive(Clone, Debug, PartialEq)]
pub struct Burst {
    pub start: usize,
    pub chips: Vec<u8>,
}

/// Piecewise-constant reflection state held per chip, zero outside bursts.
///
/// Stored as bursts rather than expanded samples; a 0.9 s packet at
/// 7.68 MHz would otherwise take several million values.
#[derive(Clone, Debug, PartialEq)]
pub struct BdWaveform {
    pub chip_duration: f64,
    pub sample_rate: f64,
    pub samples_per_chip: usize,
    pub len: usize,
    pub bursts: Vec<Burst>,
}

impl BdWaveform {
    pub fn empty(chip_duration: f64, sample_rate: f64, len: usize) -> Result<Self> {
        Ok(Self {
            chip_duration,
            sample_rate,
            samples_per_chip: samples_per_chip(chip_duration, sample_rate)?,
            len,
            bursts: Vec::new(),
        })
    }

    /// Add a burst of chips at sample `start`, extending the length if needed.
    pub fn add_burst(&mut self, start: usize, chips: Vec<u8>) -> Result<()> {
        let end = start + chips.len() * self.samples_per_chip;
        if self
            .bursts
            .iter()
            .any(|b| start < b.start + b.chips.len() * self.samples_per_chip && b.start < end)
        {
            return Err(invalid(format!("burst at sample {start} overlaps another")));
        }
        self.len = self.len.max(end);
        self.bursts.push(Burst { start, chips });
        self.bursts.sort_by_key(|b| b.start);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Reflection state at sample `n`; zero past the end.
    pub fn value(&self, n: usize) -> f64 {
        let idx = self.bursts.partition_point(|b| b.start <= n);
        if idx == 0 {
            return 0.0;
        }
        let b = &self.bursts[idx - 1];
        let chip = (n - b.start) / self.samples_per_chip;
        b.chips.get(chip).map_or(0.0, |&c| c as f64)
    }

    /// Expanded sample sequence.
    pub fn samples(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.len];
        for b in &self.bursts {
            for (i, &c) in b.chips.iter().enumerate() {
                let s = b.start + i * self.samples_per_chip;
                out[s..s + self.samples_per_chip].fill(c as f64);
            }
        }
        out
    }

    /// Same chips on another sample-rate grid.
    pub fn resampled(&self, sample_rate: f64) -> Result<Self> {
        let spc = samples_per_chip(self.chip_duration, sample_rate)?;
        let scale = |n: usize| -> Result<usize> {
            let t = n as f64 * sample_rate / self.sample_rate;
            if (t - t.round()).abs() > 1e-6 {
                return Err(invalid(format!("burst start {n} does not land on a sample at {sample_rate} Hz")));
            }
            Ok(t.round() as usize)
        };
        let mut out = Self::empty(self.chip_duration, sample_rate, 0)?;
        out.samples_per_chip = spc;
        out.len = (self.len as f64 * sample_rate / self.sample_rate).round() as usize;
        for b in &self.bursts {
            out.bursts.push(Burst {
                start: scale(b.start)?,
                chips: b.chips.clone(),
            });
        }
        Ok(out)
    }
}

/// One packet with `guard` seconds of silence before and after.
pub fn bd_waveform(frame: &BdFrame, chip_duration: f64, sample_rate: f64, guard: f64) -> Result<BdWaveform> {
    bd_waveform_with_guards(frame, chip_duration, sample_rate, guard, guard)
}

/// One packet with separate leading and trailing silence, in seconds.
pub fn bd_waveform_with_guards(
    frame: &BdFrame,
    chip_duration: f64,
    sample_rate: f64,
    lead: f64,
    trail: f64,
) -> Result<BdWaveform> {
    if lead < 0.0 || trail < 0.0 {
        return Err(Error::InvalidParameter("guard intervals must be non-negative".into()));
    }
    let lead_n = (lead * sample_rate).round() as usize;
    let trail_n = (trail * sample_rate).round() as usize;
    let mut w = BdWaveform::empty(chip_duration, sample_rate, 0)?;
    w.add_burst(lead_n, frame.chips())?;
    w.len += trail_n;
    Ok(w)
}
