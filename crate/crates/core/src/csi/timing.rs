use num_complex::Complex64;
use rustfft::FftPlanner;

use super::estimate::ls_estimate;
use crate::error::{Error, Result};
use crate::iq::IqStream;
use crate::lte::pss::{pss_first_subcarrier, pss_generate, PSS_SYMBOL};
use crate::lte::{CellConfig, CrsTable, OfdmDemodulator, OfdmModulator, CRS_SYMBOLS};

/// Minimum peak-to-median ratio of the folded PSS correlation.
pub const SYNC_RATIO_THRESHOLD: f64 = 15.0;
/// Subframes used to tell subframe 0 from subframe 5.
const HYPOTHESIS_SUBFRAMES: usize = 5;
/// Radio frames of PSS correlation folded together.
const SYNC_FRAMES: usize = 2;

/// A subframe boundary in a stream and the subframe number (0..10) that
/// starts there.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SubframeTiming {
    pub start: usize,
    pub subframe: usize,
}

impl SubframeTiming {
    /// The same boundary moved `samples` earlier, into the cyclic prefix.
    /// When that would fall before the stream, the next subframe is used.
    pub fn backed_off(self, samples: usize, config: &CellConfig) -> Self {
        if samples <= self.start {
            Self {
                start: self.start - samples,
                ..self
            }
        } else {
            Self {
                start: self.start + config.subframe_len() - samples,
                subframe: (self.subframe + 1) % 10,
            }
        }
    }

    /// Tap-series index of stream sample `sample`, for a series that starts
    /// at this boundary with one value per symbol.
    pub fn tap_index(&self, sample: usize, config: &CellConfig) -> Option<usize> {
        let offset = sample.checked_sub(self.start)? as f64;
        Some((offset / config.subframe_len() as f64 * crate::lte::SYMBOLS_PER_SUBFRAME as f64).round() as usize)
    }
}

/// How the receiver finds LTE timing.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TimingMode {
    #[default]
    Pss,
    /// Timing supplied by the caller, used unchanged.
    Known(SubframeTiming),
}

pub fn resolve_timing(iq: &IqStream, config: &CellConfig, mode: TimingMode) -> Result<SubframeTiming> {
    match mode {
        TimingMode::Pss => timing_sync(iq, config),
        TimingMode::Known(t) => Ok(t),
    }
}

/// Useful part (no cyclic prefix) of the PSS symbol for the cell's sector.
pub fn pss_replica(config: &CellConfig) -> Result<Vec<Complex64>> {
    let mut row = vec![Complex64::default(); config.n_subcarriers()];
    let k0 = pss_first_subcarrier(config);
    let pss = pss_generate(config.nid2())?;
    row[k0..k0 + pss.len()].copy_from_slice(&pss);
    let mut out = Vec::new();
    // symbol 1 of a slot: short prefix, dropped below
    OfdmModulator::new(config).push_symbol(&row, 1, &mut out);
    Ok(out.split_off(config.cp_other))
}

/// `|sum_n x[d + n] p*[n]|^2` for `d` in `0..lags`.
pub fn pss_correlation(samples: &[Complex64], replica: &[Complex64], lags: usize) -> Vec<f64> {
    let needed = lags + replica.len() - 1;
    let size = needed.next_power_of_two();
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    let mut x = vec![Complex64::default(); size];
    x[..needed].copy_from_slice(&samples[..needed]);
    let mut p = vec![Complex64::default(); size];
    p[..replica.len()].copy_from_slice(replica);
    fwd.process(&mut x);
    fwd.process(&mut p);
    for (a, b) in x.iter_mut().zip(&p) {
        *a *= b.conj();
    }
    inv.process(&mut x);
    let scale = 1.0 / size as f64;
    x[..lags].iter().map(|v| (v * scale).norm_sqr()).collect()
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    let mid = s.len() / 2;
    *s.select_nth_unstable_by(mid, |a, b| a.total_cmp(b)).1
}

/// Locate the earliest whole subframe boundary from the PSS.
///
/// The PSS correlation over the first two radio frames is folded modulo a half
/// frame so repeated occurrences reinforce. The half-frame ambiguity
/// (subframe 0 or 5) is resolved by which hypothesis makes the reference
/// signal estimates smooth across frequency.
pub fn timing_sync(iq: &IqStream, config: &CellConfig) -> Result<SubframeTiming> {
    config.validate()?;
    if !config.with_pss {
        return Err(Error::InvalidParameter("timing sync needs a cell transmitting PSS".into()));
    }
    let n = config.n_fft;
    let sf_len = config.subframe_len();
    let half_frame = 5 * sf_len;
    if iq.len() < n + sf_len {
        return Err(Error::StreamTooShort {
            needed: n + sf_len,
            available: iq.len(),
        });
    }
    let lags = (iq.len() - n + 1).min(2 * SYNC_FRAMES * half_frame);
    let corr = pss_correlation(&iq.samples, &pss_replica(config)?, lags);

    let width = lags.min(half_frame);
    let mut fold = vec![0.0; width];
    let mut count = vec![0usize; width];
    for (d, &r) in corr.iter().enumerate() {
        fold[d % half_frame % width] += r;
        count[d % half_frame % width] += 1;
    }
    fold.iter_mut().zip(&count).for_each(|(f, &c)| *f /= c as f64);
    let (peak_at, peak) = fold
        .iter()
        .enumerate()
        .fold((0, f64::MIN), |best, (i, &v)| if v > best.1 { (i, v) } else { best });
    let med = median(&fold);
    let ratio = if med > 0.0 { peak / med } else { 0.0 };
    if !(ratio >= SYNC_RATIO_THRESHOLD) {
        return Err(Error::SyncFailure {
            ratio,
            threshold: SYNC_RATIO_THRESHOLD,
        });
    }

    // subframe holding this PSS starts here (possibly before the stream)
    let pss_subframe_start = peak_at as isize - config.fft_window_start(PSS_SYMBOL) as isize;
    let start = pss_subframe_start.rem_euclid(sf_len as isize);
    let steps = ((start - pss_subframe_start) / sf_len as isize).rem_euclid(10) as usize;
    let candidates = [steps % 10, (5 + steps) % 10];
    let available = (iq.len() - start as usize) / sf_len;
    let use_subframes = available.min(HYPOTHESIS_SUBFRAMES);
    if use_subframes == 0 {
        return Err(Error::StreamTooShort {
            needed: start as usize + sf_len,
            available: iq.len(),
        });
    }
    let table = CrsTable::new(config)?;
    let mut demod = OfdmDemodulator::new(config);
    let mut row = vec![Complex64::default(); config.n_subcarriers()];
    let mut score = [0.0f64; 2];
    for s in 0..use_subframes {
        let sf_start = start as usize + s * sf_len;
        for &sym in &CRS_SYMBOLS {
            demod.symbol(&iq.samples, sf_start, sym, &mut row)?;
            for (h, &cand) in candidates.iter().enumerate() {
                let est = ls_estimate(&row, table.values(cand + s, sym)?, table.subcarriers(sym)?);
                let cross: Complex64 = est.windows(2).map(|w| w[0] * w[1].conj()).sum();
                let energy: f64 = est.iter().map(|v| v.norm_sqr()).sum();
                if energy > 0.0 {
                    score[h] += cross.norm() / energy;
                }
            }
        }
    }
    Ok(SubframeTiming {
        start: start as usize,
        subframe: if score[1] > score[0] { candidates[1] } else { candidates[0] },
    })
}
