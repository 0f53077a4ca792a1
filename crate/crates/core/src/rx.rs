//! Backscatter receiver on the tracked tap: power, high-pass, matched
//! filter, header sync and Manchester correlation.

use num_complex::Complex64;

use crate::bd::{sync_template, u32_from_bits, DATA_CHIPS, FRAME_CHIPS, PAYLOAD_BITS, SYNC_CHIPS};
use crate::dsp::{centred_boxcar, convolve_same, highpass_taps, Edge, StreamingFir};
use crate::error::{invalid, Error, Result};

pub const HIGHPASS_TAPS: usize = 513;
/// Hz.
pub const HIGHPASS_CUTOFF: f64 = 20.0;
/// Default minimum sync metric for declaring a packet.
pub const DEFAULT_SYNC_THRESHOLD: f64 = 8.0;
/// Off-footprint delays, in chips, needed before the footprint reference
/// is trusted; shorter captures fall back to all delays away from the peak.
pub const MIN_REFERENCE_CHIPS: usize = 12;
/// Distinct correlation peaks considered as packet starts.
pub const MAX_PEAKS: usize = 16;

/// Real series at the tap rate.
#[derive(Clone, Debug, PartialEq)]
pub struct TapPowerSeries {
    pub values: Vec<f64>,
    /// Hz.
    pub rate: f64,
}

impl TapPowerSeries {
    pub fn new(values: Vec<f64>, rate: f64) -> Self {
        Self { values, rate }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn negated(&self) -> Self {
        Self::new(self.values.iter().map(|v| -v).collect(), self.rate)
    }
}

pub fn tap_power(taps: &[Complex64], rate: f64) -> TapPowerSeries {
    TapPowerSeries::new(taps.iter().map(|t| t.norm_sqr()).collect(), rate)
}

pub fn highpass_kernel(rate: f64) -> Vec<f64> {
    highpass_taps(HIGHPASS_TAPS, HIGHPASS_CUTOFF / rate)
}

/// Linear-phase high-pass, delay compensated, edges extended by point
/// reflection so constant and linear trends give no edge transient.
pub fn highpass(series: &TapPowerSeries) -> TapPowerSeries {
    TapPowerSeries::new(
        convolve_same(&series.values, &highpass_kernel(series.rate), Edge::OddReflect),
        series.rate,
    )
}

/// Chunked high-pass with carried state. Output lags the centred form by
/// `HIGHPASS_TAPS / 2` samples and starts from zero history.
pub fn highpass_streaming(rate: f64) -> StreamingFir<f64> {
    StreamingFir::new(highpass_kernel(rate))
}

/// Samples per chip at the series rate.
pub fn chip_samples(chip_duration: f64, rate: f64) -> Result<usize> {
    let l = chip_duration * rate;
    let r = l.round();
    if r < 1.0 || (l - r).abs() > 1e-9 * l.max(1.0) {
        return Err(invalid(format!(
            "chip duration {chip_duration} s is {l} samples at {rate} Hz, not a positive integer"
        )));
    }
    Ok(r as usize)
}

/// Centred moving average over one chip. Sample `n` averages inputs
/// `n - L/2 .. n + L/2`, so a chip's mean appears at its centre.
pub fn matched_filter(series: &TapPowerSeries, chip_duration: f64) -> Result<TapPowerSeries> {
    let l = chip_samples(chip_duration, series.rate)?;
    Ok(TapPowerSeries::new(centred_boxcar(&series.values, l), series.rate))
}

/// Outcome of header detection.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyncResult {
    /// Series index where the first header chip begins.
    pub frame_start: usize,
    pub phase_sign: f64,
    pub sync_metric: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SyncParams {
    pub threshold: f64,
    /// Samples either side of a packet treated as its footprint on top of
    /// the packet itself; covers filter ringing.
    pub margin: usize,
}

impl SyncParams {
    /// Margin spanning the high-pass and matched-filter memory.
    pub fn for_chip(chip_len: usize) -> Self {
        Self {
            threshold: DEFAULT_SYNC_THRESHOLD,
            margin: HIGHPASS_TAPS / 2 + chip_len + 16,
        }
    }
}

/// Correlation of a series with the chip-expanded bipolar header at every
/// delay where the header fits.
pub fn header_correlation(mf: &[f64], chip_len: usize) -> Vec<f64> {
    let span = SYNC_CHIPS * chip_len;
    if mf.len() < span {
        return Vec::new();
    }
    let mut prefix = Vec::with_capacity(mf.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in mf {
        acc += v;
        prefix.push(acc);
    }
    let window = |d: usize| prefix[d + chip_len] - prefix[d];
    let template = sync_template();
    (0..=mf.len() - span)
        .map(|d| {
            template
                .iter()
                .enumerate()
                .map(|(c, &t)| t * window(d + c * chip_len))
                .sum::<f64>()
                / span as f64
        })
        .collect()
}

/// Header start nearest `coarse` maximising the correlation of the
/// unsmoothed series with the chip-expanded header.
///
/// The matched-filtered correlation has a broad, flat top that the chips
/// next to the header tilt by a few samples; the unsmoothed one peaks
/// sharply at the chip boundary.
pub fn refine_start(filtered: &[f64], coarse: usize, chip_len: usize, phase_sign: f64, last_start: usize) -> usize {
    let template = sync_template();
    let span = SYNC_CHIPS * chip_len;
    let lo = coarse.saturating_sub(chip_len / 2);
    let hi = (coarse + chip_len / 2).min(last_start).min(filtered.len().saturating_sub(span));
    let score = |d: usize| -> f64 {
        template
            .iter()
            .enumerate()
            .map(|(c, &t)| t * filtered[d + c * chip_len..d + (c + 1) * chip_len].iter().sum::<f64>())
            .sum::<f64>()
            * phase_sign
    };
    (lo..=hi).fold((coarse, f64::MIN), |best, d| {
        let v = score(d);
        if v > best.1 {
            (d, v)
        } else {
            best
        }
    })
    .0
}

/// Detect packet headers.
///
/// `filtered` is the high-passed tap power and `mf` its matched-filtered
/// form; detection and scoring use `mf`, the start index is then refined
/// on `filtered`.
///
/// The strongest distinct correlation peaks are the candidates. They are
/// taken best score first, each claiming its footprint (header reach
/// before, packet and filter ringing after), until no candidate outside
/// the claimed footprints is left or the remaining reference becomes too
/// short. Candidate `i` is scored against the RMS correlation outside the
/// footprints of candidates `0..=i`, so neither its own data chips nor
/// stronger packets inflate the reference. Scoring rather than raw peak
/// height decides the order, so a header-like run of data chips, whose
/// reference still holds its own packet, loses to the true header. Every
/// candidate up to the last one reaching the threshold is accepted, and
/// accepted packets are rescored against a reference free of all of
/// them. The second element is the best score when nothing is accepted,
/// else 0.
pub fn find_packets(
    filtered: &TapPowerSeries,
    mf: &TapPowerSeries,
    chip_duration: f64,
    params: SyncParams,
) -> Result<(Vec<SyncResult>, f64)> {
    let l = chip_samples(chip_duration, mf.rate)?;
    if filtered.len() != mf.len() {
        return Err(Error::LengthMismatch(filtered.len(), mf.len()));
    }
    let corr = header_correlation(&mf.values, l);
    let packet = FRAME_CHIPS * l;
    let header = SYNC_CHIPS * l;
    if mf.len() < packet {
        return Err(Error::PacketTruncated {
            needed: packet,
            available: mf.len(),
        });
    }
    // a detected packet may not start where it would run off the end
    let last_start = mf.len() - packet;
    let footprint = |p: usize| p.saturating_sub(header + params.margin)..(p + packet + params.margin).min(corr.len());

    let claims = |cands: &[usize]| {
        let mut claimed = vec![false; corr.len()];
        for &q in cands {
            claimed[footprint(q)].iter_mut().for_each(|c| *c = true);
        }
        claimed
    };

    // strongest distinct peaks
    let mut peaks = Vec::with_capacity(MAX_PEAKS);
    let mut taken = vec![false; corr.len()];
    while peaks.len() < MAX_PEAKS {
        let Some(p) = (0..=last_start)
            .filter(|&d| !taken[d])
            .max_by(|&a, &b| corr[a].abs().total_cmp(&corr[b].abs()))
        else {
            break;
        };
        peaks.push(p);
        taken[p.saturating_sub(l)..(p + l + 1).min(corr.len())]
            .iter_mut()
            .for_each(|t| *t = true);
    }

    // best-scoring peak first; each later one scored with the earlier
    // footprints removed from its reference
    let mut candidates: Vec<usize> = Vec::new();
    let mut scores: Vec<f64> = Vec::new();
    loop {
        let claimed = claims(&candidates);
        let best = peaks
            .iter()
            .filter(|&&q| !claimed[q] && candidates.iter().all(|c| c.abs_diff(q) >= packet))
            .filter(|&&q| candidates.is_empty() || footprint_reference(&corr, &claimed, &footprint(q), l).is_some())
            .map(|&q| (q, peak_metric(&corr, &claimed, q, footprint(q), l)))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((q, m)) = best else { break };
        candidates.push(q);
        scores.push(m);
    }
    let Some(accepted) = scores.iter().rposition(|&m| m >= params.threshold).map(|i| i + 1) else {
        return Ok((Vec::new(), scores.iter().copied().fold(0.0, f64::max)));
    };

    let mut claimed = vec![false; corr.len()];
    for &p in &candidates[..accepted] {
        claimed[footprint(p)].iter_mut().for_each(|c| *c = true);
    }
    let found = candidates[..accepted]
        .iter()
        .map(|&p| {
            let mut others = claimed.clone();
            others[footprint(p)].iter_mut().for_each(|c| *c = false);
            for &q in &candidates[..accepted] {
                if q != p {
                    others[footprint(q)].iter_mut().for_each(|c| *c = true);
                }
            }
            let phase_sign = if corr[p] >= 0.0 { 1.0 } else { -1.0 };
            SyncResult {
                frame_start: refine_start(&filtered.values, p, l, phase_sign, last_start),
                phase_sign,
                sync_metric: peak_metric(&corr, &others, p, footprint(p), l),
            }
        })
        .collect();
    Ok((found, 0.0))
}

/// Unclaimed correlations outside `footprint`, if there are enough of
/// them to serve as a noise reference.
fn footprint_reference(corr: &[f64], claimed: &[bool], footprint: &std::ops::Range<usize>, l: usize) -> Option<Vec<f64>> {
    let reference: Vec<f64> = (0..corr.len())
        .filter(|&d| !claimed[d] && !footprint.contains(&d))
        .map(|d| corr[d])
        .collect();
    (reference.len() >= MIN_REFERENCE_CHIPS * l).then_some(reference)
}

/// `|corr[p]|` over the RMS of unclaimed correlations outside `footprint`,
/// or at least one chip from `p` when the footprint leaves too few.
fn peak_metric(corr: &[f64], claimed: &[bool], p: usize, footprint: std::ops::Range<usize>, l: usize) -> f64 {
    let reference = footprint_reference(corr, claimed, &footprint, l).unwrap_or_else(|| {
        (0..corr.len())
            .filter(|&d| !claimed[d] && d.abs_diff(p) >= l)
            .map(|d| corr[d])
            .collect()
    });
    let rms = (reference.iter().map(|v| v * v).sum::<f64>() / reference.len().max(1) as f64).sqrt();
    if rms > 0.0 {
        corr[p].abs() / rms
    } else if corr[p] != 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// Header sign and score at known packet starts, without searching.
/// Each packet is scored with the others' footprints excluded.
pub fn sync_at(mf: &TapPowerSeries, starts: &[usize], chip_duration: f64, params: SyncParams) -> Result<Vec<SyncResult>> {
    let l = chip_samples(chip_duration, mf.rate)?;
    let corr = header_correlation(&mf.values, l);
    let packet = FRAME_CHIPS * l;
    let header = SYNC_CHIPS * l;
    let footprint = |p: usize| p.saturating_sub(header + params.margin)..(p + packet + params.margin).min(corr.len());
    let mut claimed = vec![false; corr.len()];
    for &p in starts {
        if p + packet > mf.len() {
            return Err(Error::PacketTruncated {
                needed: p + packet,
                available: mf.len(),
            });
        }
        claimed[footprint(p)].iter_mut().for_each(|c| *c = true);
    }
    Ok(starts
        .iter()
        .map(|&p| {
            let mut mine = claimed.clone();
            mine[footprint(p)].iter_mut().for_each(|c| *c = false);
            SyncResult {
                frame_start: p,
                phase_sign: if corr[p] >= 0.0 { 1.0 } else { -1.0 },
                sync_metric: peak_metric(&corr, &mine, p, footprint(p), l),
            }
        })
        .collect())
}

/// Strongest header in the series, or a no-packet error.
pub fn frame_sync(filtered: &TapPowerSeries, mf: &TapPowerSeries, chip_duration: f64, params: SyncParams) -> Result<SyncResult> {
    let (found, metric) = find_packets(filtered, mf, chip_duration, params)?;
    found.first().copied().ok_or(Error::NoPacket {
        metric,
        threshold: params.threshold,
    })
}

/// Payload decisions from a matched-filtered series.
#[derive(Clone, Debug, PartialEq)]
pub struct BitDecisions {
    pub bits: Vec<u8>,
    pub soft: Vec<f64>,
}

/// Index of the centre of data chip `chip` (0..64) of a packet.
pub fn data_chip_centre(frame_start: usize, chip: usize, chip_len: usize) -> usize {
    frame_start + (SYNC_CHIPS + chip) * chip_len + chip_len / 2
}

/// Correlate each bit's chip pair with the two Manchester templates.
/// Bit 1 (template `(+1, -1)`) wins on a positive soft value; ties give 0.
pub fn demodulate(mf: &TapPowerSeries, frame_start: usize, phase_sign: f64, chip_duration: f64) -> Result<BitDecisions> {
    let l = chip_samples(chip_duration, mf.rate)?;
    let needed = frame_start + FRAME_CHIPS * l;
    if needed > mf.len() {
        return Err(Error::PacketTruncated {
            needed,
            available: mf.len(),
        });
    }
    let soft: Vec<f64> = (0..PAYLOAD_BITS)
        .map(|b| {
            let c1 = data_chip_centre(frame_start, 2 * b, l);
            phase_sign * (mf.values[c1] - mf.values[c1 + l])
        })
        .collect();
    let bits = soft.iter().map(|&s| u8::from(s > 0.0)).collect();
    Ok(BitDecisions { bits, soft })
}

/// Fraction of differing bits.
pub fn ber(decoded: &[u8], truth: &[u8]) -> Result<f64> {
    if decoded.len() != truth.len() {
        return Err(Error::LengthMismatch(decoded.len(), truth.len()));
    }
    if truth.is_empty() {
        return Ok(0.0);
    }
    let errors = decoded.iter().zip(truth).filter(|(a, b)| (**a != 0) != (**b != 0)).count();
    Ok(errors as f64 / truth.len() as f64)
}

/// Decision SNR in dB from the soft values and the off-packet residual.
///
/// Noise is the mean of `(mf[n] - mf[n + L])^2` over samples whose pair
/// lies outside every packet footprint and clear of the filter edges; it
/// is the variance of one soft value under noise alone.
pub fn snr_estimate(mf: &TapPowerSeries, packets: &[usize], soft: &[f64], chip_duration: f64, margin: usize) -> Result<f64> {
    let l = chip_samples(chip_duration, mf.rate)?;
    let n = mf.len();
    let packet = FRAME_CHIPS * l;
    let mut usable = vec![true; n];
    let edge = (HIGHPASS_TAPS / 2 + l).min(n);
    usable[..edge].iter_mut().for_each(|u| *u = false);
    usable[n - edge..].iter_mut().for_each(|u| *u = false);
    for &p in packets {
        let lo = p.saturating_sub(margin);
        let hi = (p + packet + margin).min(n);
        usable[lo..hi].iter_mut().for_each(|u| *u = false);
    }
    let diffs: Vec<f64> = (0..n.saturating_sub(l))
        .filter(|&i| usable[i] && usable[i + l])
        .map(|i| (mf.values[i] - mf.values[i + l]).powi(2))
        .collect();
    if diffs.is_empty() {
        return Err(Error::NoNoiseReference);
    }
    let noise = diffs.iter().sum::<f64>() / diffs.len() as f64;
    let total = soft.iter().map(|s| s * s).sum::<f64>() / soft.len().max(1) as f64;
    if noise <= 1e-12 * total {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * ((total - noise).max(0.0) / noise).log10())
}

/// One decoded packet.
#[derive(Clone, Debug, PartialEq)]
pub struct DemodResult {
    pub frame_start: usize,
    pub sync_metric: f64,
    pub phase_sign: f64,
    pub payload_bits: Vec<u8>,
    pub soft_values: Vec<f64>,
    pub snr_est_db: f64,
}

impl DemodResult {
    pub fn payload(&self) -> u32 {
        u32_from_bits(&self.payload_bits).expect("32 payload bits")
    }
}

/// Receiver settings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RxConfig {
    /// Seconds.
    pub chip_duration: f64,
    pub sync: SyncParams,
    /// Skip direct-path and Doppler removal.
    pub bypass_highpass: bool,
}

impl RxConfig {
    pub fn new(chip_duration: f64, rate: f64) -> Result<Self> {
        Ok(Self {
            chip_duration,
            sync: SyncParams::for_chip(chip_samples(chip_duration, rate)?),
            bypass_highpass: false,
        })
    }
}

/// Tap power after the high-pass (`.0`) and after the matched filter (`.1`).
pub fn filter_chain(power: &TapPowerSeries, cfg: &RxConfig) -> Result<(TapPowerSeries, TapPowerSeries)> {
    let filtered = if cfg.bypass_highpass {
        power.clone()
    } else {
        highpass(power)
    };
    let mf = matched_filter(&filtered, cfg.chip_duration)?;
    Ok((filtered, mf))
}

/// Header sync and demodulation of every packet in a tap power series.
/// Packets are returned in time order.
pub fn receive(power: &TapPowerSeries, cfg: &RxConfig) -> Result<Vec<DemodResult>> {
    let (filtered, mf) = filter_chain(power, cfg)?;
    let (mut found, _) = find_packets(&filtered, &mf, cfg.chip_duration, cfg.sync)?;
    found.sort_by_key(|s| s.frame_start);
    decode_at(&mf, &found, cfg)
}

/// Demodulate packets at known header positions of a matched-filtered series.
pub fn decode_at(mf: &TapPowerSeries, syncs: &[SyncResult], cfg: &RxConfig) -> Result<Vec<DemodResult>> {
    let starts: Vec<usize> = syncs.iter().map(|s| s.frame_start).collect();
    syncs
        .iter()
        .map(|s| {
            let d = demodulate(mf, s.frame_start, s.phase_sign, cfg.chip_duration)?;
            let snr = snr_estimate(mf, &starts, &d.soft, cfg.chip_duration, cfg.sync.margin).unwrap_or(f64::NAN);
            Ok(DemodResult {
                frame_start: s.frame_start,
                sync_metric: s.sync_metric,
                phase_sign: s.phase_sign,
                payload_bits: d.bits,
                soft_values: d.soft,
                snr_est_db: snr,
            })
        })
        .collect()
}

/// Sum of squared responses of the mean soft value's noise to unit noise
/// on each tap estimate.
///
/// Pilot estimates are held to the nearest symbol, low-pass smoothed,
/// high-pass filtered and matched filtered before the soft value of a bit
/// is read. This traces one bit's decision back through those linear
/// stages (the adjoint) to the pilot positions. Returns the mean over the
/// packet's bits of the summed squared pilot weights.
pub fn decision_noise_gain(
    n_subframes: usize,
    frame_start: usize,
    cfg: &RxConfig,
    rate: f64,
    pilot_symbols: &[usize],
) -> Result<f64> {
    let n = n_subframes * crate::lte::SYMBOLS_PER_SUBFRAME;
    let l = chip_samples(cfg.chip_duration, rate)?;
    if frame_start + FRAME_CHIPS * l > n {
        return Err(Error::PacketTruncated {
            needed: frame_start + FRAME_CHIPS * l,
            available: n,
        });
    }
    let lp = crate::dsp::lowpass_taps(crate::csi::estimate::INTERP_TAPS, crate::csi::estimate::INTERP_CUTOFF / rate);
    let hp = highpass_kernel(rate);
    // owner pilot of every symbol, as in the hold stage
    let owner: Vec<usize> = (0..n)
        .map(|s| {
            let j = pilot_symbols.partition_point(|&p| p <= s).saturating_sub(1);
            if pilot_symbols[j] <= s && j + 1 < pilot_symbols.len() && pilot_symbols[j + 1] - s < s - pilot_symbols[j] {
                j + 1
            } else {
                j
            }
        })
        .collect();
    let mut total = 0.0;
    for b in 0..DATA_CHIPS / 2 {
        let c1 = data_chip_centre(frame_start, 2 * b, l);
        let mut d = vec![0.0; n];
        // adjoint of the centred boxcar: out[n] reads in[n - L/2 .. n - L/2 + L]
        for (c, sign) in [(c1, 1.0), (c1 + l, -1.0)] {
            let lo = c.saturating_sub(l / 2);
            for v in d.iter_mut().skip(lo).take(l) {
                *v += sign / l as f64;
            }
        }
        let d = convolve_same(&d, &hp, Edge::Zero);
        let e = convolve_same(&d, &lp, Edge::Zero);
        let mut c = vec![0.0; pilot_symbols.len()];
        for (s, &o) in owner.iter().enumerate() {
            c[o] += e[s];
        }
        total += c.iter().map(|v| v * v).sum::<f64>();
    }
    Ok(total / (DATA_CHIPS / 2) as f64)
}
