use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::timing::SubframeTiming;
use crate::dsp::{convolve_same, lowpass_taps, Edge};
use crate::error::{invalid, Error, Result};
use crate::iq::IqStream;
use crate::lte::crs::comb_offset;
use crate::lte::{CellConfig, CrsTable, OfdmDemodulator, ResourceGrid, CRS_SYMBOLS, SYMBOLS_PER_SUBFRAME};

/// Taps of the pilot-to-symbol-rate interpolation filter.
pub const INTERP_TAPS: usize = 129;
/// Interpolation cutoff, Hz.
pub const INTERP_CUTOFF: f64 = 1000.0;

/// Least-squares channel at the pilots of one symbol.
#[derive(Clone, Debug, PartialEq)]
pub struct FreqEstimate {
    pub pilot_values: Vec<Complex64>,
    /// Logical subcarriers of the pilots.
    pub pilot_indices: Vec<usize>,
    /// Symbol index within the grid or stream the estimate came from.
    pub symbol_index: usize,
}

/// `received / transmitted` at each pilot.
pub fn ls_estimate(row: &[Complex64], pilots: &[Complex64], subcarriers: &[usize]) -> Vec<Complex64> {
    subcarriers.iter().zip(pilots).map(|(&k, &p)| row[k] / p).collect()
}

/// LS estimate for grid symbol `symbol`, which must carry pilots.
pub fn extract_crs_ls(grid: &ResourceGrid, symbol: usize) -> Result<FreqEstimate> {
    let (subframe, sym) = grid.locate(symbol);
    if !CRS_SYMBOLS.contains(&sym) {
        return Err(Error::NotPilotSymbol(sym));
    }
    let table = CrsTable::new(&grid.config)?;
    let idx = table.subcarriers(sym)?;
    Ok(FreqEstimate {
        pilot_values: ls_estimate(grid.symbol(symbol), table.values(subframe, sym)?, idx),
        pilot_indices: idx.to_vec(),
        symbol_index: symbol,
    })
}

/// Delay-domain taps of a pilot comb.
///
/// `h[l] = (1/N) sum_i H_i e^{j 2 pi (k_i - K/2) l / K}` with `K` the
/// occupied subcarrier count. A flat channel gives `h[0] = 1`, the taps'
/// energy equals the mean pilot power, and the comb offset is removed so
/// every pilot symbol class lands on the same delay grid. One bin spans
/// `1 / (6 * N * subcarrier_spacing)`.
pub fn cir_from_freq(est: &FreqEstimate, config: &CellConfig) -> Result<Vec<Complex64>> {
    let n = config.n_pilots();
    if est.pilot_values.len() != n || est.pilot_indices.len() != n {
        return Err(Error::IncompleteLattice {
            expected: n,
            found: est.pilot_values.len().min(est.pilot_indices.len()),
        });
    }
    let off = est.pilot_indices[0];
    if off >= 6 || est.pilot_indices.iter().enumerate().any(|(i, &k)| k != 6 * i + off) {
        return Err(Error::IncompleteLattice {
            expected: n,
            found: est
                .pilot_indices
                .iter()
                .enumerate()
                .take_while(|(i, &k)| k == 6 * i + off)
                .count(),
        });
    }
    Ok(CirTransform::new(config).apply(&est.pilot_values, off))
}

/// Reusable pilot-comb transform.
pub struct CirTransform {
    n: usize,
    half: f64,
    k_total: f64,
    ifft: std::sync::Arc<dyn rustfft::Fft<f64>>,
}

impl CirTransform {
    pub fn new(config: &CellConfig) -> Self {
        let n = config.n_pilots();
        Self {
            n,
            half: (config.n_subcarriers() / 2) as f64,
            k_total: config.n_subcarriers() as f64,
            ifft: FftPlanner::new().plan_fft_inverse(n),
        }
    }

    pub fn apply(&self, pilots: &[Complex64], comb_offset: usize) -> Vec<Complex64> {
        let mut buf = pilots.to_vec();
        self.ifft.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        let shift = comb_offset as f64 - self.half;
        buf.iter_mut().enumerate().for_each(|(l, v)| {
            *v *= Complex64::from_polar(scale, 2.0 * PI * shift * l as f64 / self.k_total);
        });
        buf
    }
}

/// Per-pilot-symbol channel taps over a run of whole subframes.
#[derive(Clone, Debug, PartialEq)]
pub struct CirSeries {
    /// `taps[j][l]`: bin `l` of estimate `j`.
    pub taps: Vec<Vec<Complex64>>,
    /// Symbol index of each estimate, counted from the first subframe.
    pub symbol_indices: Vec<usize>,
    /// Seconds, start of each estimate's symbol.
    pub symbol_times: Vec<f64>,
    pub n_subframes: usize,
    /// Symbol rate the series is interpolated to, Hz.
    pub rate: f64,
    /// Seconds, start of the first subframe.
    pub t0: f64,
}

impl CirSeries {
    pub fn n_bins(&self) -> usize {
        self.taps.first().map_or(0, Vec::len)
    }

    /// Raw estimates of bin `l`.
    pub fn bin(&self, l: usize) -> Vec<Complex64> {
        self.taps.iter().map(|t| t[l]).collect()
    }
}

/// Bin with the largest mean power; ties go to the smaller index.
pub fn tap_select(series: &CirSeries) -> Result<usize> {
    if series.taps.is_empty() {
        return Err(invalid("empty tap series"));
    }
    let nb = series.n_bins();
    let mut power = vec![0.0; nb];
    for t in &series.taps {
        for (p, v) in power.iter_mut().zip(t) {
            *p += v.norm_sqr();
        }
    }
    let mut best = 0;
    for l in 1..nb {
        if power[l] > power[best] {
            best = l;
        }
    }
    Ok(best)
}

/// Uniform symbol-rate series of bin `l0`.
///
/// Every symbol takes the nearest pilot estimate (ties to the earlier
/// one), then a linear-phase low-pass smooths the steps. Output length is
/// 14 per subframe.
pub fn interpolate_taps(series: &CirSeries, l0: usize) -> Result<Vec<Complex64>> {
    if series.n_subframes < 2 {
        return Err(invalid(format!(
            "interpolation needs at least 2 subframes, got {}",
            series.n_subframes
        )));
    }
    if l0 >= series.n_bins() {
        return Err(invalid(format!("bin {l0} outside 0..{}", series.n_bins())));
    }
    let n_out = series.n_subframes * SYMBOLS_PER_SUBFRAME;
    let raw = series.bin(l0);
    let pos = &series.symbol_indices;
    let mut held = Vec::with_capacity(n_out);
    let mut j = 0;
    for s in 0..n_out {
        while j + 1 < pos.len() && pos[j + 1] <= s {
            j += 1;
        }
        // pos[j] <= s < pos[j + 1], except before the first estimate
        let pick = if pos[j] <= s && j + 1 < pos.len() && pos[j + 1] - s < s - pos[j] {
            j + 1
        } else {
            j
        };
        held.push(raw[pick]);
    }
    let taps = lowpass_taps(INTERP_TAPS, INTERP_CUTOFF / series.rate);
    Ok(convolve_same(&held, &taps, Edge::Replicate))
}

/// Pilot-symbol taps for every whole subframe from `timing` onwards.
pub fn estimate_cir_series(iq: &IqStream, config: &CellConfig, timing: SubframeTiming) -> Result<CirSeries> {
    config.validate()?;
    let sf_len = config.subframe_len();
    let n_subframes = iq.len().saturating_sub(timing.start) / sf_len;
    if n_subframes == 0 {
        return Err(Error::StreamTooShort {
            needed: timing.start + sf_len,
            available: iq.len(),
        });
    }
    let table = CrsTable::new(config)?;
    let transform = CirTransform::new(config);
    let mut demod = OfdmDemodulator::new(config);
    let mut row = vec![Complex64::default(); config.n_subcarriers()];
    let mut series = CirSeries {
        taps: Vec::with_capacity(4 * n_subframes),
        symbol_indices: Vec::with_capacity(4 * n_subframes),
        symbol_times: Vec::with_capacity(4 * n_subframes),
        n_subframes,
        rate: config.symbol_rate(),
        t0: iq.time_of(timing.start),
    };
    for s in 0..n_subframes {
        let start = timing.start + s * sf_len;
        let subframe = timing.subframe + s;
        for &sym in &CRS_SYMBOLS {
            demod.symbol(&iq.samples, start, sym, &mut row)?;
            let h = ls_estimate(&row, table.values(subframe, sym)?, table.subcarriers(sym)?);
            series.taps.push(transform.apply(&h, comb_offset(config, sym)?));
            series.symbol_indices.push(s * SYMBOLS_PER_SUBFRAME + sym);
            series.symbol_times.push(iq.time_of(start + config.symbol_start(sym)));
        }
    }
    Ok(series)
}

/// Interpolated series of one tap.
#[derive(Clone, Debug, PartialEq)]
pub struct TapTrack {
    pub l0: usize,
    pub taps: Vec<Complex64>,
    /// Hz.
    pub rate: f64,
    /// Seconds, time of `taps[0]`.
    pub t0: f64,
}

impl TapTrack {
    pub fn time_of(&self, n: usize) -> f64 {
        self.t0 + n as f64 / self.rate
    }

    /// `time_s,re,im` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "time_s,re,im")?;
        for (n, v) in self.taps.iter().enumerate() {
            writeln!(w, "{:.9},{:e},{:e}", self.time_of(n), v.re, v.im)?;
        }
        Ok(())
    }
}

/// Estimate, pick the strongest bin (or `l0` if given) and interpolate it.
pub fn track_tap(iq: &IqStream, config: &CellConfig, timing: SubframeTiming, l0: Option<usize>) -> Result<TapTrack> {
    let series = estimate_cir_series(iq, config, timing)?;
    let l0 = match l0 {
        Some(l) => l,
        None => tap_select(&series)?,
    };
    Ok(TapTrack {
        l0,
        taps: interpolate_taps(&series, l0)?,
        rate: series.rate,
        t0: series.t0,
    })
}
