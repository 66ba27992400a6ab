//! Deterministic synthetic signals for demos and tests: voiced
//! "speech" made of harmonic syllables, and amplitude-modulated band noise.

use std::f64::consts::PI;

use crate::audio::AudioBuffer;
use crate::rng::SeededRng;

/// Harmonic syllable generator settings.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeechProfile {
    pub f0_hz: (f64, f64),
    pub syllable_secs: (f64, f64),
    pub gap_secs: (f64, f64),
    pub first_formant_hz: (f64, f64),
    pub second_formant_hz: (f64, f64),
    pub max_harmonic_hz: f64,
}

impl Default for SpeechProfile {
    fn default() -> Self {
        Self {
            f0_hz: (100.0, 220.0),
            syllable_secs: (0.12, 0.30),
            gap_secs: (0.02, 0.12),
            first_formant_hz: (300.0, 900.0),
            second_formant_hz: (900.0, 2500.0),
            max_harmonic_hz: 4000.0,
        }
    }
}

/// Band-pass noise with slow amplitude modulation.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseProfile {
    pub center_hz: f64,
    pub q: f64,
    /// Share of unfiltered white noise mixed into the band.
    pub broadband: f64,
    pub mod_rate_hz: (f64, f64),
    pub mod_depth: f64,
}

impl Default for NoiseProfile {
    fn default() -> Self {
        Self {
            center_hz: 2500.0,
            q: 1.5,
            broadband: 0.15,
            mod_rate_hz: (2.0, 6.0),
            mod_depth: 0.8,
        }
    }
}

fn resonance(f: f64, center: f64, bandwidth: f64) -> f64 {
    let x = (f - center) / bandwidth;
    1.0 / (1.0 + x * x)
}

fn normalize_peak(mut samples: Vec<f64>, peak: f64) -> Vec<f64> {
    let max = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if max > 0.0 {
        for s in &mut samples {
            *s *= peak / max;
        }
    }
    samples
}

/// `len` samples of syllabic harmonic speech, peak-normalized to 0.5.
pub fn speech(seed: u64, len: usize, sample_rate: u32, profile: &SpeechProfile) -> AudioBuffer {
    let mut rng = SeededRng::new(seed);
    let sr = sample_rate as f64;
    let nyquist = sr / 2.0;
    let mut out = vec![0.0; len];
    let mut pos = (rng.uniform_range(profile.gap_secs.0, profile.gap_secs.1) * sr) as usize;
    while pos < len {
        let dur =
            (rng.uniform_range(profile.syllable_secs.0, profile.syllable_secs.1) * sr) as usize;
        let f0_start = rng.uniform_range(profile.f0_hz.0, profile.f0_hz.1);
        let f0_end =
            (f0_start * rng.uniform_range(0.85, 1.15)).clamp(profile.f0_hz.0, profile.f0_hz.1);
        let f1 = rng.uniform_range(profile.first_formant_hz.0, profile.first_formant_hz.1);
        let f2 = rng.uniform_range(profile.second_formant_hz.0, profile.second_formant_hz.1);
        let level = rng.uniform_range(0.5, 1.0);
        let n_harm = (profile.max_harmonic_hz.min(nyquist) / profile.f0_hz.0) as usize;
        let mut phases: Vec<f64> = (0..n_harm)
            .map(|_| rng.uniform_range(0.0, 2.0 * PI))
            .collect();
        let end = (pos + dur).min(len);
        for (n, sample) in out.iter_mut().enumerate().take(end).skip(pos) {
            let progress = (n - pos) as f64 / dur as f64;
            let f0 = f0_start + (f0_end - f0_start) * progress;
            let env = (PI * progress).sin().powi(2) * level;
            let mut acc = 0.0;
            for (h, phase) in phases.iter_mut().enumerate() {
                let f = f0 * (h + 1) as f64;
                *phase += 2.0 * PI * f / sr;
                if f >= profile.max_harmonic_hz.min(nyquist) {
                    continue;
                }
                let amp = (resonance(f, f1, 120.0) + 0.6 * resonance(f, f2, 200.0) + 0.02)
                    / ((h + 1) as f64).sqrt();
                acc += amp * phase.sin();
            }
            *sample += env * acc;
        }
        let gap = (rng.uniform_range(profile.gap_secs.0, profile.gap_secs.1) * sr) as usize;
        pos = end + gap;
    }
    AudioBuffer::new(normalize_peak(out, 0.5), sample_rate).expect("finite synthesis")
}

/// `len` samples of modulated band noise, peak-normalized to 0.5.
pub fn noise(seed: u64, len: usize, sample_rate: u32, profile: &NoiseProfile) -> AudioBuffer {
    let mut rng = SeededRng::new(seed);
    let sr = sample_rate as f64;
    // RBJ band-pass, 0 dB peak gain
    let w0 = 2.0 * PI * profile.center_hz.min(0.45 * sr) / sr;
    let alpha = w0.sin() / (2.0 * profile.q);
    let a0 = 1.0 + alpha;
    let (b0, b2) = (alpha / a0, -alpha / a0);
    let (a1, a2) = (-2.0 * w0.cos() / a0, (1.0 - alpha) / a0);
    let rate = rng.uniform_range(profile.mod_rate_hz.0, profile.mod_rate_hz.1);
    let phase = rng.uniform_range(0.0, 2.0 * PI);

    let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
    let out = (0..len)
        .map(|n| {
            let x = rng.uniform_range(-1.0, 1.0);
            let y = b0 * x + b2 * x2 - a1 * y1 - a2 * y2;
            (x2, x1) = (x1, x);
            (y2, y1) = (y1, y);
            let t = n as f64 / sr;
            let am = 1.0 - profile.mod_depth * 0.5 * (1.0 + (2.0 * PI * rate * t + phase).sin());
            am * (y + profile.broadband * x)
        })
        .collect();
    AudioBuffer::new(normalize_peak(out, 0.5), sample_rate).expect("finite synthesis")
}
