use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::config::{CellConfig, SYMBOLS_PER_SLOT, SYMBOLS_PER_SUBFRAME};
use super::grid::ResourceGrid;
use crate::error::{Error, Result};
use crate::iq::IqStream;

/// Inverse-transform synthesiser with a cached plan. Unitary scaling.
pub struct OfdmModulator {
    config: CellConfig,
    ifft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    bins: Vec<usize>,
}

impl OfdmModulator {
    pub fn new(config: &CellConfig) -> Self {
        let ifft = FftPlanner::new().plan_fft_inverse(config.n_fft);
        let bins = (0..config.n_subcarriers()).map(|k| config.fft_bin(k)).collect();
        Self {
            config: config.clone(),
            ifft,
            buf: vec![Complex64::default(); config.n_fft],
            bins,
        }
    }

    /// Append one symbol (cyclic prefix then body) to `out`.
    pub fn push_symbol(&mut self, row: &[Complex64], symbol_in_slot: usize, out: &mut Vec<Complex64>) {
        let n = self.config.n_fft;
        self.buf.iter_mut().for_each(|b| *b = Complex64::default());
        for (&bin, &v) in self.bins.iter().zip(row) {
            self.buf[bin] = v;
        }
        self.ifft.process(&mut self.buf);
        let scale = 1.0 / (n as f64).sqrt();
        let cp = self.config.cp_len(symbol_in_slot);
        out.extend(self.buf[n - cp..].iter().map(|v| v * scale));
        out.extend(self.buf.iter().map(|v| v * scale));
    }

    /// Time-domain samples for every symbol of `grid`, appended to `out`.
    pub fn modulate_into(&mut self, grid: &ResourceGrid, out: &mut Vec<Complex64>) {
        out.reserve(grid.n_subframes() * self.config.subframe_len());
        for s in 0..grid.n_symbols() {
            self.push_symbol(grid.symbol(s), (s % SYMBOLS_PER_SUBFRAME) % SYMBOLS_PER_SLOT, out);
        }
    }
}

/// Forward-transform analyser with a cached plan. Unitary scaling.
pub struct OfdmDemodulator {
    config: CellConfig,
    fft: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    bins: Vec<usize>,
}

impl OfdmDemodulator {
    pub fn new(config: &CellConfig) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(config.n_fft);
        let bins = (0..config.n_subcarriers()).map(|k| config.fft_bin(k)).collect();
        Self {
            config: config.clone(),
            fft,
            buf: vec![Complex64::default(); config.n_fft],
            bins,
        }
    }

    /// Logical subcarriers of the transform window starting at `window_start`.
    pub fn window(&mut self, samples: &[Complex64], window_start: usize, out: &mut [Complex64]) -> Result<()> {
        let n = self.config.n_fft;
        let end = window_start + n;
        if end > samples.len() {
            return Err(Error::StreamTooShort {
                needed: end,
                available: samples.len(),
            });
        }
        self.buf.copy_from_slice(&samples[window_start..end]);
        self.fft.process(&mut self.buf);
        let scale = 1.0 / (n as f64).sqrt();
        for (o, &bin) in out.iter_mut().zip(&self.bins) {
            *o = self.buf[bin] * scale;
        }
        Ok(())
    }

    /// Subcarriers of subframe symbol `symbol` for a subframe starting at
    /// `subframe_start`.
    pub fn symbol(&mut self, samples: &[Complex64], subframe_start: usize, symbol: usize, out: &mut [Complex64]) -> Result<()> {
        let start = subframe_start + self.config.fft_window_start(symbol);
        self.window(samples, start, out)
    }
}

/// Synthesise a resource grid. The stream's `t0` reflects the grid's first
/// subframe.
pub fn ofdm_modulate(grid: &ResourceGrid) -> IqStream {
    let config = &grid.config;
    let mut samples = Vec::new();
    OfdmModulator::new(config).modulate_into(grid, &mut samples);
    let mut iq = IqStream::new(samples, config.sample_rate);
    iq.t0 = (grid.first_subframe * config.subframe_len()) as f64 / config.sample_rate;
    iq
}

/// Demodulate every whole subframe from `frame_start` onwards; the first
/// one is taken to be subframe 0 of a radio frame.
pub fn ofdm_demodulate(iq: &IqStream, frame_start: usize, config: &CellConfig) -> Result<ResourceGrid> {
    let sf_len = config.subframe_len();
    let available = iq.len().saturating_sub(frame_start);
    let n_subframes = available / sf_len;
    if n_subframes == 0 {
        return Err(Error::StreamTooShort {
            needed: frame_start + sf_len,
            available: iq.len(),
        });
    }
    let mut grid = ResourceGrid::zeros(config, 0, n_subframes);
    let mut demod = OfdmDemodulator::new(config);
    for s in 0..grid.n_symbols() {
        let sf_start = frame_start + (s / SYMBOLS_PER_SUBFRAME) * sf_len;
        demod.symbol(&iq.samples, sf_start, s % SYMBOLS_PER_SUBFRAME, grid.symbol_mut(s))?;
    }
    Ok(grid)
}
