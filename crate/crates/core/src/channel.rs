//! Time-varying multipath channel with a modulated backscatter path, noise,
//! carrier offset and ADC quantisation.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::bd::BdWaveform;
use crate::dsp::{blackman_at, sinc};
use crate::error::{invalid, Result};
use crate::iq::IqStream;
use crate::lte::CellConfig;

/// Taps of the windowed-sinc fractional delay.
pub const FRACTIONAL_DELAY_TAPS: usize = 65;
/// Largest Doppler shift accepted, Hz.
pub const MAX_DOPPLER: f64 = 500.0;
// phasor recurrences are re-anchored this often to bound rounding drift
const PHASOR_RESYNC: usize = 1024;

/// Unmodulated propagation path.
#[derive(Clone, Debug, PartialEq)]
pub struct PathSpec {
    /// Seconds.
    pub delay: f64,
    /// Complex baseband gain, carrier phase folded in.
    pub amplitude: Complex64,
    /// Hz.
    pub doppler: f64,
}

impl PathSpec {
    pub fn new(delay: f64, amplitude: Complex64) -> Self {
        Self {
            delay,
            amplitude,
            doppler: 0.0,
        }
    }

    pub fn with_doppler(mut self, doppler: f64) -> Self {
        self.doppler = doppler;
        self
    }
}

/// Path via the backscatter device, gated by its reflection state.
#[derive(Clone, Debug, PartialEq)]
pub struct BdPathSpec {
    pub delay: f64,
    pub amplitude: Complex64,
    /// Hz. Lets the reflected path rotate with a moving receiver.
    pub doppler: f64,
    /// Reflection state; sample 0 is aligned with stream sample 0.
    pub waveform: BdWaveform,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChannelSpec {
    /// First entry is the direct path.
    pub paths: Vec<PathSpec>,
    pub bd: Option<BdPathSpec>,
    /// Carrier frequency offset, Hz.
    pub cfo: f64,
    /// Direct-path power over noise power, dB. Infinite disables noise.
    pub snr_db: f64,
    pub quantizer_bits: Option<u32>,
    /// Quantiser clip level per component. `None` uses the signal peak.
    pub full_scale: Option<f64>,
}

impl ChannelSpec {
    pub fn new(paths: Vec<PathSpec>) -> Self {
        Self {
            paths,
            bd: None,
            cfo: 0.0,
            snr_db: f64::INFINITY,
            quantizer_bits: None,
            full_scale: None,
        }
    }

    /// Single path, unit gain, no delay.
    pub fn identity() -> Self {
        Self::new(vec![PathSpec::new(0.0, Complex64::new(1.0, 0.0))])
    }

    pub fn with_bd(mut self, bd: BdPathSpec) -> Self {
        self.bd = Some(bd);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return Err(invalid("channel needs at least one unmodulated path"));
        }
        let check = |delay: f64, doppler: f64| -> Result<()> {
            if !(delay >= 0.0) || !delay.is_finite() {
                return Err(invalid(format!("path delay {delay} must be finite and non-negative")));
            }
            if !(doppler.abs() < MAX_DOPPLER) {
                return Err(invalid(format!("doppler {doppler} Hz outside +/-{MAX_DOPPLER}")));
            }
            Ok(())
        };
        for p in &self.paths {
            check(p.delay, p.doppler)?;
        }
        if let Some(bd) = &self.bd {
            check(bd.delay, bd.doppler)?;
        }
        if let Some(bits) = self.quantizer_bits {
            if !(4..=16).contains(&bits) {
                return Err(invalid(format!("quantizer bits {bits} outside 4..=16")));
            }
        }
        Ok(())
    }

    /// Mean power of the direct-path component for an input of power `input_power`.
    pub fn direct_power(&self, input_power: f64) -> f64 {
        self.paths[0].amplitude.norm_sqr() * input_power
    }

    /// Mean power of the backscatter component while reflecting.
    pub fn backscatter_power(&self, input_power: f64) -> f64 {
        self.bd.as_ref().map_or(0.0, |b| b.amplitude.norm_sqr() * input_power)
    }
}

/// `x` delayed by `delay` samples. Whole-sample delays are exact shifts;
/// others use a Blackman-windowed sinc. Samples before the start are zero.
pub fn delay_samples(x: &[Complex64], delay: f64) -> Vec<Complex64> {
    let n = x.len();
    let whole = delay.round();
    if (delay - whole).abs() < 1e-9 {
        let d = (whole as usize).min(n);
        let mut out = vec![Complex64::default(); d];
        out.extend_from_slice(&x[..n - d]);
        return out;
    }
    let d0 = delay.floor() as isize;
    let frac = delay - d0 as f64;
    let half = (FRACTIONAL_DELAY_TAPS / 2) as isize;
    let window_half = half as f64 + 1.0;
    let taps: Vec<(isize, f64)> = (-half..=half)
        .map(|m| {
            let u = m as f64 - frac;
            (m, sinc(u) * blackman_at(u, window_half))
        })
        .collect();
    (0..n as isize)
        .map(|i| {
            let mut acc = Complex64::default();
            for &(m, h) in &taps {
                let j = i - d0 - m;
                if j >= 0 && (j as usize) < n {
                    acc += x[j as usize] * h;
                }
            }
            acc
        })
        .collect()
}

/// `e^{j 2 pi f t_n}` for `t_n = t0 + n / fs`, n in 0..len.
pub fn rotation(freq: f64, t0: f64, fs: f64, len: usize) -> Vec<Complex64> {
    let step = Complex64::from_polar(1.0, 2.0 * PI * freq / fs);
    let mut out = Vec::with_capacity(len);
    let mut ph = Complex64::new(1.0, 0.0);
    for n in 0..len {
        if n % PHASOR_RESYNC == 0 {
            ph = Complex64::from_polar(1.0, 2.0 * PI * freq * (t0 + n as f64 / fs));
        }
        out.push(ph);
        ph *= step;
    }
    out
}

/// Payload-independent part of a channel applied to one input: the sum of
/// the unmodulated paths and the always-reflecting backscatter path, each
/// with Doppler and carrier offset applied.
#[derive(Clone, Debug)]
pub struct PreparedChannel {
    direct: Vec<Complex64>,
    backscatter: Option<Vec<Complex64>>,
    bd_template: Option<BdPathSpec>,
    input_power: f64,
    pub sample_rate: f64,
    pub t0: f64,
}

impl PreparedChannel {
    /// The backscatter waveform in `spec` is ignored here; it is supplied
    /// per render.
    pub fn new(iq: &IqStream, spec: &ChannelSpec) -> Result<Self> {
        spec.validate()?;
        let fs = iq.sample_rate;
        let n = iq.len();
        let mut delayed: Vec<(f64, Vec<Complex64>)> = Vec::new();
        let mut delayed_by = |delay: f64| -> usize {
            let d = delay * fs;
            if let Some(i) = delayed.iter().position(|(k, _)| *k == d) {
                return i;
            }
            delayed.push((d, delay_samples(&iq.samples, d)));
            delayed.len() - 1
        };
        let path_ids: Vec<usize> = spec.paths.iter().map(|p| delayed_by(p.delay)).collect();
        let bd_id = spec.bd.as_ref().map(|b| delayed_by(b.delay));

        let cfo = (spec.cfo != 0.0).then(|| rotation(spec.cfo, iq.t0, fs, n));
        let path = |src: &[Complex64], amp: Complex64, doppler: f64| -> Vec<Complex64> {
            let mut out: Vec<Complex64> = src.iter().map(|v| v * amp).collect();
            if doppler != 0.0 {
                for (o, r) in out.iter_mut().zip(rotation(doppler, iq.t0, fs, n)) {
                    *o *= r;
                }
            }
            if let Some(c) = &cfo {
                for (o, r) in out.iter_mut().zip(c) {
                    *o *= r;
                }
            }
            out
        };

        let mut direct = vec![Complex64::default(); n];
        for (p, &id) in spec.paths.iter().zip(&path_ids) {
            for (d, v) in direct.iter_mut().zip(path(&delayed[id].1, p.amplitude, p.doppler)) {
                *d += v;
            }
        }
        let backscatter = match (&spec.bd, bd_id) {
            (Some(bd), Some(id)) => Some(path(&delayed[id].1, bd.amplitude, bd.doppler)),
            _ => None,
        };
        Ok(Self {
            direct,
            backscatter,
            bd_template: spec.bd.clone(),
            input_power: iq.mean_power(),
            sample_rate: fs,
            t0: iq.t0,
        })
    }

    pub fn len(&self) -> usize {
        self.direct.len()
    }

    pub fn is_empty(&self) -> bool {
        self.direct.is_empty()
    }

    /// Mean input power the channel was prepared with.
    pub fn input_power(&self) -> f64 {
        self.input_power
    }

    /// Noiseless output for a reflection-state waveform. `None` uses the
    /// waveform of the spec the channel was prepared from.
    pub fn render(&self, waveform: Option<&BdWaveform>) -> Result<IqStream> {
        let n = self.len();
        let mut out = self.direct.clone();
        let waveform = waveform.or(self.bd_template.as_ref().map(|b| &b.waveform));
        if let (Some(b), Some(w)) = (&self.backscatter, waveform) {
            let w = if (w.sample_rate - self.sample_rate).abs() > 1e-9 * self.sample_rate {
                w.resampled(self.sample_rate)?
            } else {
                w.clone()
            };
            // only the reflecting chips contribute
            for burst in &w.bursts {
                for (c, &chip) in burst.chips.iter().enumerate() {
                    if chip == 0 {
                        continue;
                    }
                    let s = (burst.start + c * w.samples_per_chip).min(n);
                    let e = (s + w.samples_per_chip).min(n);
                    for i in s..e {
                        out[i] += b[i];
                    }
                }
            }
        }
        Ok(IqStream {
            samples: out,
            sample_rate: self.sample_rate,
            t0: self.t0,
        })
    }
}

/// Deterministic part of the channel: paths, backscatter and carrier offset.
pub fn apply_channel(iq: &IqStream, spec: &ChannelSpec) -> Result<IqStream> {
    PreparedChannel::new(iq, spec)?.render(None)
}

/// Add circular complex Gaussian noise of variance
/// `reference_power / 10^(snr_db / 10)`. Infinite SNR returns the input.
pub fn awgn(iq: &IqStream, snr_db: f64, reference_power: f64, seed: u64) -> Result<IqStream> {
    if !(reference_power > 0.0) {
        return Err(invalid(format!("reference power {reference_power} must be positive")));
    }
    if snr_db == f64::INFINITY {
        return Ok(iq.clone());
    }
    if snr_db.is_nan() {
        return Err(invalid("snr_db is NaN"));
    }
    let mut out = iq.clone();
    add_noise(&mut out.samples, reference_power / 10f64.powf(snr_db / 10.0), seed);
    Ok(out)
}

/// Add circular complex Gaussian noise of total variance `variance` in place.
pub fn add_noise(samples: &mut [Complex64], variance: f64, seed: u64) {
    let sigma = (variance / 2.0).sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for s in samples {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *s += Complex64::new(re, im) * sigma;
    }
}

/// Uniform mid-rise quantiser on I and Q with step `2 * full_scale / 2^bits`,
/// clipping to the outermost levels.
pub fn quantize(iq: &IqStream, bits: u32, full_scale: f64) -> Result<IqStream> {
    if !(4..=16).contains(&bits) {
        return Err(invalid(format!("quantizer bits {bits} outside 4..=16")));
    }
    if !(full_scale > 0.0) {
        return Err(invalid("full scale must be positive"));
    }
    let levels = 1i64 << bits;
    let step = 2.0 * full_scale / levels as f64;
    let q = |v: f64| -> f64 {
        let idx = ((v / step).floor() as i64).clamp(-levels / 2, levels / 2 - 1);
        (idx as f64 + 0.5) * step
    };
    Ok(IqStream {
        samples: iq.samples.iter().map(|s| Complex64::new(q(s.re), q(s.im))).collect(),
        sample_rate: iq.sample_rate,
        t0: iq.t0,
    })
}

/// Largest absolute I or Q component.
pub fn peak_component(iq: &IqStream) -> f64 {
    iq.samples.iter().fold(0.0, |m, s| m.max(s.re.abs()).max(s.im.abs()))
}

/// Full channel: paths, backscatter, carrier offset, noise referenced to
/// the direct path, then quantisation.
pub fn simulate(iq: &IqStream, spec: &ChannelSpec, noise_seed: u64) -> Result<IqStream> {
    let out = apply_channel(iq, spec)?;
    impair(out, spec, spec.direct_power(iq.mean_power()), noise_seed)
}

/// Receiver impairments of `spec` (noise at `spec.snr_db` below
/// `reference_power`, then quantisation) applied to a noiseless signal.
pub fn impair(mut out: IqStream, spec: &ChannelSpec, reference_power: f64, noise_seed: u64) -> Result<IqStream> {
    if spec.snr_db.is_nan() {
        return Err(invalid("snr_db is NaN"));
    }
    if spec.snr_db.is_finite() {
        if !(reference_power > 0.0) {
            return Err(invalid(format!("reference power {reference_power} must be positive")));
        }
        add_noise(&mut out.samples, reference_power / 10f64.powf(spec.snr_db / 10.0), noise_seed);
    }
    if let Some(bits) = spec.quantizer_bits {
        let fs = spec.full_scale.unwrap_or_else(|| peak_component(&out));
        if fs > 0.0 {
            out = quantize(&out, bits, fs)?;
        }
    }
    Ok(out)
}

/// Composite gains of the tracked tap: `g1` from unmodulated paths and
/// `g0` from the backscatter path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TapModel {
    pub g0: Complex64,
    pub g1: Complex64,
    /// `|g1|^2`, the tap power with the device absorbing.
    pub alpha: f64,
    /// Power step when the device reflects: `|g0|^2 + 2 Re{g1* g0}`.
    pub beta: f64,
}

impl TapModel {
    pub fn from_gains(g0: Complex64, g1: Complex64) -> Self {
        Self {
            g0,
            g1,
            alpha: g1.norm_sqr(),
            beta: g0.norm_sqr() + 2.0 * (g1.conj() * g0).re,
        }
    }

    /// Tap value for reflection state `x`.
    pub fn tap(&self, x: f64) -> Complex64 {
        self.g1 + self.g0 * x
    }
}

/// Analytic tap `l0` of the pilot-comb impulse response for a static
/// channel, from the sinc leakage of each path into the bin.
pub fn expected_tap_model(spec: &ChannelSpec, config: &CellConfig, l0: usize) -> Result<TapModel> {
    spec.validate()?;
    let w = config.pilot_bandwidth();
    let alias = config.n_pilots() as f64;
    let weight = |delay: f64| -> Result<f64> {
        let bins = delay * w;
        if bins >= alias {
            return Err(invalid(format!(
                "path delay {delay} s is {bins:.2} bins, beyond the {alias} bin alias range"
            )));
        }
        Ok(sinc(l0 as f64 - bins))
    };
    let mut g1 = Complex64::default();
    for p in &spec.paths {
        g1 += p.amplitude * weight(p.delay)?;
    }
    let g0 = match &spec.bd {
        Some(b) => b.amplitude * weight(b.delay)?,
        None => Complex64::default(),
    };
    Ok(TapModel::from_gains(g0, g1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bd::BdWaveform;

    fn tone(n: usize) -> IqStream {
        IqStream::new(
            (0..n).map(|i| Complex64::from_polar(1.0, 0.37 * i as f64)).collect(),
            1000.0,
        )
    }

    fn constant_bd(len: usize, fs: f64) -> BdWaveform {
        let mut w = BdWaveform::empty(0.01, fs, 0).unwrap();
        let chips = len / w.samples_per_chip;
        w.add_burst(0, vec![1; chips]).unwrap();
        w
    }

    #[test]
    fn identity_channel() {
        let x = tone(300);
        assert_eq!(apply_channel(&x, &ChannelSpec::identity()).unwrap(), x);
    }

    #[test]
    fn superposition_with_bd() {
        let x = tone(300);
        let spec = ChannelSpec::identity().with_bd(BdPathSpec {
            delay: 0.0,
            amplitude: Complex64::new(0.1, 0.0),
            doppler: 0.0,
            waveform: constant_bd(300, 1000.0),
        });
        let y = apply_channel(&x, &spec).unwrap();
        for (a, b) in y.samples.iter().zip(&x.samples) {
            assert!((a - b * 1.1).norm() < 1e-12);
        }
    }

    #[test]
    fn doppler_phase_advance() {
        let fs = 1000.0;
        let x = IqStream::new(vec![Complex64::new(1.0, 0.0); 1001], fs);
        let spec = ChannelSpec::new(vec![PathSpec::new(0.0, Complex64::new(1.0, 0.0)).with_doppler(2.0)]);
        let y = apply_channel(&x, &spec).unwrap();
        // unwrap the phase across the second
        let mut total = 0.0;
        for w in y.samples.windows(2) {
            total += (w[1] / w[0]).arg();
        }
        assert!((total - 4.0 * PI).abs() < 1e-9);
    }

    #[test]
    fn fractional_delay_of_a_slow_tone() {
        let fs = 1.0;
        let f = 0.01;
        let x = IqStream::new((0..400).map(|i| Complex64::from_polar(1.0, 2.0 * PI * f * i as f64)).collect(), fs);
        let y = delay_samples(&x.samples, 3.3);
        for n in 100..300 {
            let want = Complex64::from_polar(1.0, 2.0 * PI * f * (n as f64 - 3.3));
            assert!((y[n] - want).norm() < 1e-5);
        }
        let z = delay_samples(&x.samples, 4.0);
        assert_eq!(z[10], x.samples[6]);
    }

    #[test]
    fn awgn_variance_and_determinism() {
        let x = IqStream::zeros(1_000_000, 1.0);
        let y = awgn(&x, 0.0, 1.0, 7).unwrap();
        let p = y.mean_power();
        assert!((p - 1.0).abs() < 0.05);
        assert_eq!(awgn(&x, 0.0, 1.0, 7).unwrap(), y);
        assert_eq!(awgn(&x, f64::INFINITY, 1.0, 7).unwrap(), x);
    }

    #[test]
    fn quantizer_bounds() {
        let x = IqStream::new(vec![Complex64::new(0.3, -0.71), Complex64::new(5.0, -5.0), Complex64::default()], 1.0);
        let y = quantize(&x, 16, 1.0).unwrap();
        assert!((y.samples[0] - x.samples[0]).norm() < 2f64.powi(-15) * 2f64.sqrt());
        let lsb = 2.0 / 65536.0;
        assert!((y.samples[1].re - (1.0 - lsb / 2.0)).abs() < 1e-15);
        assert!((y.samples[1].im + (1.0 - lsb / 2.0)).abs() < 1e-15);
        assert!(y.samples[2].norm() <= lsb);
        assert!(quantize(&x, 3, 1.0).is_err());
    }

    #[test]
    fn tap_model_examples() {
        let c = CellConfig::default();
        let bin = 1.0 / c.pilot_bandwidth();
        let direct = ChannelSpec::new(vec![PathSpec::new(0.0, Complex64::new(1.0, 0.0))]);
        let m = expected_tap_model(&direct, &c, 0).unwrap();
        assert_eq!((m.g1, m.g0, m.alpha, m.beta), (Complex64::new(1.0, 0.0), Complex64::default(), 1.0, 0.0));

        let with_bd = |amp: Complex64| {
            direct.clone().with_bd(BdPathSpec {
                delay: 0.0,
                amplitude: amp,
                doppler: 0.0,
                waveform: constant_bd(10, 1000.0),
            })
        };
        let m = expected_tap_model(&with_bd(Complex64::new(0.1, 0.0)), &c, 0).unwrap();
        assert!((m.beta - 0.21).abs() < 1e-12);
        let m = expected_tap_model(&with_bd(Complex64::new(0.0, 0.1)), &c, 0).unwrap();
        assert!((m.beta - 0.01).abs() < 1e-12);

        let far = ChannelSpec::new(vec![PathSpec::new(60.0 * bin, Complex64::new(1.0, 0.0))]);
        assert!(expected_tap_model(&far, &c, 0).is_err());
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(ChannelSpec::new(vec![]).validate().is_err());
        let fast = ChannelSpec::new(vec![PathSpec::new(0.0, Complex64::new(1.0, 0.0)).with_doppler(600.0)]);
        assert!(fast.validate().is_err());
        let neg = ChannelSpec::new(vec![PathSpec::new(-1e-6, Complex64::new(1.0, 0.0))]);
        assert!(neg.validate().is_err());
    }
}
