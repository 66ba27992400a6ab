//! Short-time Fourier analysis and overlap-add synthesis.
//!
//! Frames start at sample 0 with no centering or padding, so a signal of
//! `len` samples yields `1 + (len - window_len) / hop` frames. Only the
//! non-redundant half spectrum (`window_len / 2 + 1` bins) is kept.

use std::f64::consts::PI;

pub use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMatrix};

/// Synthesis normalization never divides by less than this accumulated
/// squared-window weight. Interior samples at 50% Hann overlap accumulate at
/// least 0.5, so only the first and last half-window are affected.
const SYNTHESIS_FLOOR: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WindowKind {
    /// Periodic Hann, `0.5 - 0.5 cos(2 pi n / N)`.
    Hann,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StftConfig {
    pub window_len: usize,
    pub hop: usize,
    pub window: WindowKind,
}

impl Default for StftConfig {
    fn default() -> Self {
        Self {
            window_len: 1024,
            hop: 512,
            window: WindowKind::Hann,
        }
    }
}

impl StftConfig {
    pub fn new(window_len: usize, hop: usize) -> Result<Self> {
        let config = Self {
            window_len,
            hop,
            window: WindowKind::Hann,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 || !self.window_len.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "window length must be even and positive, got {}",
                self.window_len
            )));
        }
        if self.hop == 0 || self.hop > self.window_len {
            return Err(Error::InvalidParameter(format!(
                "hop must be in 1..={}, got {}",
                self.window_len, self.hop
            )));
        }
        Ok(())
    }

    /// Number of non-redundant frequency bins, `F`.
    pub fn n_bins(&self) -> usize {
        self.window_len / 2 + 1
    }

    /// Frame count for a signal of `len` samples, or `None` if shorter
    /// than one window.
    pub fn frame_count(&self, len: usize) -> Option<usize> {
        (len >= self.window_len).then(|| 1 + (len - self.window_len) / self.hop)
    }

    pub fn window(&self) -> Vec<f64> {
        match self.window {
            WindowKind::Hann => (0..self.window_len)
                .map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / self.window_len as f64).cos())
                .collect(),
        }
    }
}

/// `T x F` complex STFT coefficients, stored row-major by frame.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSpectrogram {
    data: Vec<Complex64>,
    n_frames: usize,
    config: StftConfig,
    sample_rate: u32,
    signal_len: usize,
}

impl ComplexSpectrogram {
    /// Assemble a spectrogram from raw frames. `signal_len` is the length of
    /// the time signal that `istft` should return.
    pub fn from_frames(
        config: StftConfig,
        sample_rate: u32,
        signal_len: usize,
        frames: Vec<Vec<Complex64>>,
    ) -> Result<Self> {
        config.validate()?;
        let f = config.n_bins();
        let mut data = Vec::with_capacity(frames.len() * f);
        for frame in &frames {
            if frame.len() != f {
                return Err(Error::DimensionMismatch {
                    what: "spectrogram frame",
                    expected: f,
                    got: frame.len(),
                });
            }
            data.extend_from_slice(frame);
        }
        Self::from_flat(config, sample_rate, signal_len, frames.len(), data)
    }

    fn from_flat(
        config: StftConfig,
        sample_rate: u32,
        signal_len: usize,
        n_frames: usize,
        data: Vec<Complex64>,
    ) -> Result<Self> {
        if data.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFinite("spectrogram"));
        }
        let covered = if n_frames == 0 {
            0
        } else {
            config.window_len + (n_frames - 1) * config.hop
        };
        if signal_len < covered {
            return Err(Error::InvalidParameter(format!(
                "signal length {signal_len} shorter than the {covered} samples covered by {n_frames} frames"
            )));
        }
        Ok(Self {
            data,
            n_frames,
            config,
            sample_rate,
            signal_len,
        })
    }

    /// A zero spectrogram with the same shape and metadata.
    pub fn zeros_like(&self) -> Self {
        Self {
            data: vec![Complex64::new(0.0, 0.0); self.data.len()],
            ..*self
        }
    }

    pub fn n_frames(&self) -> usize {
        self.n_frames
    }

    pub fn n_bins(&self) -> usize {
        self.config.n_bins()
    }

    pub fn config(&self) -> &StftConfig {
        &self.config
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    pub fn frame(&self, t: usize) -> &[Complex64] {
        let f = self.n_bins();
        &self.data[t * f..(t + 1) * f]
    }

    pub fn frame_mut(&mut self, t: usize) -> &mut [Complex64] {
        let f = self.n_bins();
        &mut self.data[t * f..(t + 1) * f]
    }

    pub fn frames(&self) -> impl ExactSizeIterator<Item = &[Complex64]> {
        self.data.chunks_exact(self.n_bins())
    }

    /// Replace frame `t`, checking the bin count.
    pub fn set_frame(&mut self, t: usize, frame: &[Complex64]) -> Result<()> {
        if frame.len() != self.n_bins() {
            return Err(Error::DimensionMismatch {
                what: "spectrogram frame",
                expected: self.n_bins(),
                got: frame.len(),
            });
        }
        self.frame_mut(t).copy_from_slice(frame);
        Ok(())
    }

    /// Sum of squared magnitudes over the full (two-sided) spectrum, divided
    /// by the DFT length. Equals the windowed-signal energy by Parseval.
    pub fn energy(&self) -> f64 {
        let n = self.config.window_len;
        let f = self.n_bins();
        self.frames()
            .map(|frame| {
                frame
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        let w = if k == 0 || k == f - 1 { 1.0 } else { 2.0 };
                        w * c.norm_sqr()
                    })
                    .sum::<f64>()
            })
            .sum::<f64>()
            / n as f64
    }
}

/// Forward STFT with the configured analysis window.
pub fn stft(audio: &AudioBuffer, config: &StftConfig) -> Result<ComplexSpectrogram> {
    config.validate()?;
    let n = config.window_len;
    let n_frames = config
        .frame_count(audio.len())
        .ok_or(Error::InsufficientSamples {
            needed: n,
            got: audio.len(),
        })?;
    let f = config.n_bins();
    let window = config.window();
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut data = Vec::with_capacity(n_frames * f);
    let samples = audio.samples();
    for t in 0..n_frames {
        let start = t * config.hop;
        for (b, (&x, &w)) in buf
            .iter_mut()
            .zip(samples[start..start + n].iter().zip(&window))
        {
            *b = Complex64::new(x * w, 0.0);
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        data.extend_from_slice(&buf[..f]);
    }
    ComplexSpectrogram::from_flat(*config, audio.sample_rate(), audio.len(), n_frames, data)
}

/// Weighted overlap-add synthesis.
///
/// Each frame is inverted, multiplied by the synthesis window and summed;
/// the sum is divided by the accumulated squared window (never less than
/// an internal floor). Samples not covered by any frame are zero. The
/// output has the length of the signal the spectrogram was computed from.
pub fn istft(spec: &ComplexSpectrogram) -> AudioBuffer {
    let config = spec.config();
    let n = config.window_len;
    let f = spec.n_bins();
    let window = config.window();
    let ifft = FftPlanner::<f64>::new().plan_fft_inverse(n);
    let mut scratch = vec![Complex64::new(0.0, 0.0); ifft.get_inplace_scratch_len()];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    let mut out = vec![0.0; spec.signal_len()];
    let mut weight = vec![0.0; spec.signal_len()];
    let scale = 1.0 / n as f64;

    for (t, frame) in spec.frames().enumerate() {
        buf[..f].copy_from_slice(frame);
        buf[0].im = 0.0;
        buf[f - 1].im = 0.0;
        for k in 1..f - 1 {
            buf[n - k] = frame[k].conj();
        }
        ifft.process_with_scratch(&mut buf, &mut scratch);
        let start = t * config.hop;
        for j in 0..n {
            out[start + j] += buf[j].re * scale * window[j];
            weight[start + j] += window[j] * window[j];
        }
    }
    for (o, w) in out.iter_mut().zip(&weight) {
        if *w > 0.0 {
            *o /= w.max(SYNTHESIS_FLOOR);
        }
    }
    AudioBuffer::new(out, spec.sample_rate()).expect("finite synthesis of finite spectrogram")
}

/// Element-wise modulus as a `T x F` magnitude feature matrix.
pub fn magnitude(spec: &ComplexSpectrogram) -> FeatureMatrix {
    let data: Vec<f32> = spec.data.iter().map(|c| c.norm() as f32).collect();
    FeatureMatrix::new(spec.n_frames(), spec.n_bins(), data, FeatureKind::Magnitude)
        .expect("modulus of finite coefficients is finite and nonnegative")
}
