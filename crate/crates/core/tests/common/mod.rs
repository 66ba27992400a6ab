#![allow(dead_code)]

use wtasep::dictionary::{mix_at_snr, Mixture};
use wtasep::synth::{self, NoiseProfile, SpeechProfile};
use wtasep::{AudioBuffer, MixSpec};

pub const SR: u32 = 16_000;

/// Samples needed for exactly `frames` frames at 1024 / 512.
pub fn len_for_frames(frames: usize) -> usize {
    1024 + (frames - 1) * 512
}

/// Speech/noise pairs at 0 dB. Training and test sets use disjoint seeds.
pub fn pairs(first_seed: u64, count: usize, frames: usize) -> Vec<MixSpec> {
    let len = len_for_frames(frames);
    (0..count as u64)
        .map(|i| {
            let seed = first_seed + i;
            MixSpec::new(
                synth::speech(seed, len, SR, &SpeechProfile::default()),
                synth::noise(seed ^ 0x9e37_79b9, len, SR, &NoiseProfile::default()),
            )
        })
        .collect()
}

pub struct TestMixture {
    pub speech: AudioBuffer,
    pub mix: Mixture,
}

pub fn test_mixtures(first_seed: u64, count: usize, frames: usize) -> Vec<TestMixture> {
    pairs(first_seed, count, frames)
        .into_iter()
        .map(|p| TestMixture {
            mix: mix_at_snr(&p).unwrap(),
            speech: p.speech,
        })
        .collect()
}

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}
