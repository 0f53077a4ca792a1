//! FIR design and filtering helpers shared by the channel and receiver.

use std::f64::consts::PI;
use std::ops::{AddAssign, Mul};

use num_complex::Complex64;

/// Anything a real-valued FIR can run over.
pub trait Sample: Copy + Default + AddAssign + Mul<f64, Output = Self> {}
impl Sample for f64 {}
impl Sample for Complex64 {}

/// Normalised sinc, `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-12 {
        1.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Blackman window evaluated at offset `x` from the centre of a window
/// spanning `[-half, half]`. Zero outside.
pub fn blackman_at(x: f64, half: f64) -> f64 {
    let t = x / half;
    if t.abs() >= 1.0 {
        return 0.0;
    }
    0.42 + 0.5 * (PI * t).cos() + 0.08 * (2.0 * PI * t).cos()
}

/// Linear-phase Blackman-windowed sinc low-pass with unit DC gain.
///
/// `cutoff` is in cycles per sample (0..0.5). `ntaps` must be odd so the
/// group delay is a whole number of samples.
pub fn lowpass_taps(ntaps: usize, cutoff: f64) -> Vec<f64> {
    assert!(ntaps % 2 == 1, "linear-phase design needs an odd tap count");
    let centre = (ntaps / 2) as f64;
    let half = centre + 1.0;
    let mut taps: Vec<f64> = (0..ntaps)
        .map(|n| {
            let x = n as f64 - centre;
            2.0 * cutoff * sinc(2.0 * cutoff * x) * blackman_at(x, half)
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Spectral inversion of [`lowpass_taps`]: `delta - lowpass`, zero DC gain.
pub fn highpass_taps(ntaps: usize, cutoff: f64) -> Vec<f64> {
    let mut taps = lowpass_taps(ntaps, cutoff);
    taps.iter_mut().for_each(|t| *t = -*t);
    taps[ntaps / 2] += 1.0;
    taps
}

/// Magnitude of the frequency response of real `taps` at `freq` cycles/sample.
pub fn magnitude_response(taps: &[f64], freq: f64) -> f64 {
    let (mut re, mut im) = (0.0, 0.0);
    for (n, &t) in taps.iter().enumerate() {
        let w = -2.0 * PI * freq * n as f64;
        re += t * w.cos();
        im += t * w.sin();
    }
    re.hypot(im)
}

/// How samples beyond the ends of a finite series are supplied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Edge {
    Zero,
    /// Repeat the first/last sample.
    Replicate,
    /// Point reflection about the end sample, `2 x[0] - x[k]`, which keeps
    /// both level and slope continuous. Short series fall back to
    /// [`Edge::Replicate`].
    OddReflect,
}

/// Centred ("same"-length) convolution with an odd-length kernel; output
/// sample `n` is aligned with input sample `n`, so the group delay of a
/// linear-phase kernel is compensated.
pub fn convolve_same<T: Sample>(x: &[T], taps: &[f64], edge: Edge) -> Vec<T> {
    assert!(taps.len() % 2 == 1);
    if x.is_empty() {
        return Vec::new();
    }
    let half = taps.len() / 2;
    let n = x.len();
    let mut padded = Vec::with_capacity(n + 2 * half);
    match edge {
        Edge::OddReflect if n > half => {
            padded.extend((1..=half).rev().map(|k| {
                let mut v = x[0] * 2.0;
                v += x[k] * -1.0;
                v
            }));
            padded.extend_from_slice(x);
            padded.extend((1..=half).map(|k| {
                let mut v = x[n - 1] * 2.0;
                v += x[n - 1 - k] * -1.0;
                v
            }));
        }
        _ => {
            let (head, tail) = match edge {
                Edge::Zero => (T::default(), T::default()),
                _ => (x[0], x[n - 1]),
            };
            padded.extend(std::iter::repeat(head).take(half));
            padded.extend_from_slice(x);
            padded.extend(std::iter::repeat(tail).take(half));
        }
    }

    // taps are applied reversed; kernels used here are symmetric but keep
    // the general definition
    let rev: Vec<f64> = taps.iter().rev().copied().collect();
    (0..x.len())
        .map(|n| {
            let mut acc = T::default();
            for (s, &t) in padded[n..n + taps.len()].iter().zip(&rev) {
                acc += *s * t;
            }
            acc
        })
        .collect()
}

/// Centred moving average of length `len`: output `n` is the mean of
/// inputs `n - len/2 .. n - len/2 + len`. Zero beyond the ends.
pub fn centred_boxcar(x: &[f64], len: usize) -> Vec<f64> {
    assert!(len > 0);
    let mut prefix = Vec::with_capacity(x.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for &v in x {
        acc += v;
        prefix.push(acc);
    }
    let n = x.len() as isize;
    let lead = (len / 2) as isize;
    (0..n)
        .map(|i| {
            let lo = (i - lead).clamp(0, n) as usize;
            let hi = (i - lead + len as isize).clamp(0, n) as usize;
            (prefix[hi] - prefix[lo]) / len as f64
        })
        .collect()
}

/// Causal FIR with carried history, for chunked processing.
///
/// Feeding a series in arbitrary chunks produces exactly the output of
/// one call over the whole series. Relative to [`convolve_same`] with
/// [`Edge::Zero`] the output lags by `taps.len() / 2` samples.
#[derive(Clone, Debug)]
pub struct StreamingFir<T> {
    taps: Vec<f64>,
    history: Vec<T>,
}

impl<T: Sample> StreamingFir<T> {
    pub fn new(taps: Vec<f64>) -> Self {
        let history = vec![T::default(); taps.len().saturating_sub(1)];
        Self { taps, history }
    }

    pub fn group_delay(&self) -> usize {
        self.taps.len() / 2
    }

    pub fn reset(&mut self) {
        self.history.iter_mut().for_each(|h| *h = T::default());
    }

    pub fn process(&mut self, chunk: &[T]) -> Vec<T> {
        let keep = self.history.len();
        let mut buf = std::mem::take(&mut self.history);
        buf.extend_from_slice(chunk);
        let out = (0..chunk.len())
            .map(|n| {
                let mut acc = T::default();
                // buf[n + keep] is the newest sample for output n
                for (k, &t) in self.taps.iter().enumerate() {
                    acc += buf[n + keep - k] * t;
                }
                acc
            })
            .collect();
        self.history = buf.split_off(buf.len() - keep);
        out
    }
}
