//! Complex baseband sample streams and the raw `cf32` capture format.
//!
//! Captures are stored as interleaved little-endian `f32` pairs (I then Q)
//! with no header. The sample rate travels out of band, in the experiment
//! configuration.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Bytes per complex sample record on disk.
pub const RECORD_BYTES: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct IqStream {
    pub samples: Vec<Complex64>,
    /// Hz
    pub sample_rate: f64,
    /// Time of the first sample, seconds.
    pub t0: f64,
}

impl IqStream {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64) -> Self {
        Self {
            samples,
            sample_rate,
            t0: 0.0,
        }
    }

    pub fn zeros(len: usize, sample_rate: f64) -> Self {
        Self::new(vec![Complex64::new(0.0, 0.0); len], sample_rate)
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Duration in seconds.
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Time of sample `n`, seconds.
    pub fn time_of(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.sample_rate
    }

    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Prepend `n` zero samples, moving `t0` back accordingly.
    pub fn pad_front(&mut self, n: usize) {
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        out.extend_from_slice(&self.samples);
        self.samples = out;
        self.t0 -= n as f64 / self.sample_rate;
    }

    pub fn write_cf32<W: Write>(&self, mut w: W) -> Result<()> {
        let mut buf = Vec::with_capacity(64 * 1024);
        for chunk in self.samples.chunks(8 * 1024) {
            buf.clear();
            for s in chunk {
                buf.extend_from_slice(&(s.re as f32).to_le_bytes());
                buf.extend_from_slice(&(s.im as f32).to_le_bytes());
            }
            w.write_all(&buf)?;
        }
        Ok(())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        self.write_cf32(&mut w)?;
        w.flush()?;
        Ok(())
    }

    /// Parse a `cf32` byte buffer. Fails if the length is not a whole
    /// number of sample records.
    pub fn from_cf32_bytes(bytes: &[u8], sample_rate: f64) -> std::result::Result<Self, u64> {
        if bytes.len() % RECORD_BYTES != 0 {
            return Err((bytes.len() - bytes.len() % RECORD_BYTES) as u64);
        }
        let samples = bytes
            .chunks_exact(RECORD_BYTES)
            .map(|rec| {
                let re = f32::from_le_bytes([rec[0], rec[1], rec[2], rec[3]]);
                let im = f32::from_le_bytes([rec[4], rec[5], rec[6], rec[7]]);
                Complex64::new(re as f64, im as f64)
            })
            .collect();
        Ok(Self::new(samples, sample_rate))
    }

    pub fn load(path: impl AsRef<Path>, sample_rate: f64) -> Result<Self> {
        let path = path.as_ref();
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        Self::from_cf32_bytes(&bytes, sample_rate).map_err(|offset| Error::MalformedIq {
            path: path.to_path_buf(),
            len: bytes.len() as u64,
            offset,
        })
    }
}
