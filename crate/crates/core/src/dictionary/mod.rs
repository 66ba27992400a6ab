//! Training dictionaries: mixture features paired with ideal binary masks.

pub mod format;

pub use format::{FormatError, MAGIC, VERSION};

use rayon::prelude::*;

use crate::audio::AudioBuffer;
use crate::error::{Error, Result};
use crate::features::{FeatureExtractor, FeatureKind, FeatureMatrix};
use crate::mask::IbmMatrix;
use crate::stft::{stft, ComplexSpectrogram, StftConfig};
use crate::wta::{generate_permutations, hash_matrix, HashCodes, PermutationTable};

/// A clean speech / noise pair to be mixed at `snr_db`.
#[derive(Clone, Debug)]
pub struct MixSpec {
    pub speech: AudioBuffer,
    pub noise: AudioBuffer,
    pub snr_db: f64,
}

impl MixSpec {
    pub fn new(speech: AudioBuffer, noise: AudioBuffer) -> Self {
        Self {
            speech,
            noise,
            snr_db: 0.0,
        }
    }

    pub fn with_snr(mut self, snr_db: f64) -> Self {
        self.snr_db = snr_db;
        self
    }
}

/// Output of [`mix_at_snr`].
#[derive(Clone, Debug)]
pub struct Mixture {
    pub mixture: AudioBuffer,
    pub scaled_noise: AudioBuffer,
}

/// Scale the noise so that speech-to-noise energy is `snr_db`, then add.
///
/// Noise longer than the speech is cut to the speech length (keeping its
/// start); shorter noise is an error.
pub fn mix_at_snr(spec: &MixSpec) -> Result<Mixture> {
    let (speech, noise) = (&spec.speech, &spec.noise);
    if speech.sample_rate() != noise.sample_rate() {
        return Err(Error::SampleRateMismatch {
            expected: speech.sample_rate(),
            got: noise.sample_rate(),
        });
    }
    if !spec.snr_db.is_finite() {
        return Err(Error::InvalidParameter(format!("SNR {} dB", spec.snr_db)));
    }
    if noise.len() < speech.len() {
        return Err(Error::InsufficientSamples {
            needed: speech.len(),
            got: noise.len(),
        });
    }
    let noise = noise.truncated(speech.len());
    let (es, en) = (speech.energy(), noise.energy());
    if es == 0.0 {
        return Err(Error::ZeroEnergy("speech"));
    }
    if en == 0.0 {
        return Err(Error::ZeroEnergy("noise"));
    }
    let gain = (es / en).sqrt() * 10f64.powf(-spec.snr_db / 20.0);
    let scaled_noise = noise.scaled(gain);
    let mixture = speech.add(&scaled_noise)?;
    Ok(Mixture {
        mixture,
        scaled_noise,
    })
}

fn check_same_shape(a: &ComplexSpectrogram, b: &ComplexSpectrogram) -> Result<()> {
    if a.n_bins() != b.n_bins() {
        return Err(Error::DimensionMismatch {
            what: "spectrogram bins",
            expected: a.n_bins(),
            got: b.n_bins(),
        });
    }
    if a.n_frames() != b.n_frames() {
        return Err(Error::DimensionMismatch {
            what: "spectrogram frames",
            expected: a.n_frames(),
            got: b.n_frames(),
        });
    }
    Ok(())
}

/// 1 where the speech magnitude strictly exceeds the noise magnitude.
pub fn compute_ibm(speech: &ComplexSpectrogram, noise: &ComplexSpectrogram) -> Result<IbmMatrix> {
    check_same_shape(speech, noise)?;
    let mut ibm = IbmMatrix::zeros(speech.n_frames(), speech.n_bins());
    for (t, (s, n)) in speech.frames().zip(noise.frames()).enumerate() {
        for (f, (a, b)) in s.iter().zip(n).enumerate() {
            if a.norm() > b.norm() {
                ibm.set(t, f, true);
            }
        }
    }
    Ok(ibm)
}

/// Dense `T x F` real mask.
#[derive(Clone, Debug, PartialEq)]
pub struct RatioMask {
    rows: usize,
    bins: usize,
    values: Vec<f64>,
}

impl RatioMask {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.values[t * self.bins..(t + 1) * self.bins]
    }

    /// Apply to every frame of a spectrogram of the same shape.
    pub fn apply(&self, spec: &ComplexSpectrogram) -> Result<ComplexSpectrogram> {
        if spec.n_frames() != self.rows || spec.n_bins() != self.bins {
            return Err(Error::DimensionMismatch {
                what: "ratio mask shape",
                expected: self.rows * self.bins,
                got: spec.n_frames() * spec.n_bins(),
            });
        }
        let mut out = spec.clone();
        for t in 0..self.rows {
            for (c, m) in out.frame_mut(t).iter_mut().zip(self.row(t)) {
                *c *= *m;
            }
        }
        Ok(out)
    }
}

/// `|s| / (|s| + |n|)`, with `0 / 0` taken as 0.
pub fn compute_irm(speech: &ComplexSpectrogram, noise: &ComplexSpectrogram) -> Result<RatioMask> {
    check_same_shape(speech, noise)?;
    let values = speech
        .frames()
        .zip(noise.frames())
        .flat_map(|(s, n)| s.iter().zip(n))
        .map(|(a, b)| {
            let (a, b) = (a.norm(), b.norm());
            if a + b == 0.0 {
                0.0
            } else {
                a / (a + b)
            }
        })
        .collect();
    Ok(RatioMask {
        rows: speech.n_frames(),
        bins: speech.n_bins(),
        values,
    })
}

/// Packed WTA codes of every dictionary row under one seeded table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DictionaryCodes {
    pub seed: u64,
    pub codes: HashCodes,
}

impl DictionaryCodes {
    pub fn l(&self) -> usize {
        self.codes.layout().l()
    }

    pub fn m(&self) -> usize {
        self.codes.layout().m()
    }
}

/// Mixture features `H` (`T x D`), binary masks `Y` (`T x F`) and, once
/// hashed, the packed codes of `H`.
#[derive(Clone, Debug, PartialEq)]
pub struct SeparationDictionary {
    sample_rate: u32,
    stft: StftConfig,
    features: FeatureMatrix,
    ibm: IbmMatrix,
    codes: Option<DictionaryCodes>,
}

impl SeparationDictionary {
    pub fn new(
        sample_rate: u32,
        stft: StftConfig,
        features: FeatureMatrix,
        ibm: IbmMatrix,
    ) -> Result<Self> {
        stft.validate()?;
        if features.rows() != ibm.rows() {
            return Err(Error::DimensionMismatch {
                what: "dictionary rows (features vs masks)",
                expected: features.rows(),
                got: ibm.rows(),
            });
        }
        if ibm.bins() != stft.n_bins() {
            return Err(Error::DimensionMismatch {
                what: "mask bins",
                expected: stft.n_bins(),
                got: ibm.bins(),
            });
        }
        let expected_dim = features.kind().dim(stft.n_bins());
        if features.dim() != expected_dim {
            return Err(Error::DimensionMismatch {
                what: "feature dimension",
                expected: expected_dim,
                got: features.dim(),
            });
        }
        Ok(Self {
            sample_rate,
            stft,
            features,
            ibm,
            codes: None,
        })
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn stft_config(&self) -> &StftConfig {
        &self.stft
    }

    pub fn features(&self) -> &FeatureMatrix {
        &self.features
    }

    pub fn feature_kind(&self) -> &FeatureKind {
        self.features.kind()
    }

    pub fn ibm(&self) -> &IbmMatrix {
        &self.ibm
    }

    pub fn codes(&self) -> Option<&DictionaryCodes> {
        self.codes.as_ref()
    }

    /// Frame count `T`.
    pub fn len(&self) -> usize {
        self.features.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.rows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.dim()
    }

    pub fn n_bins(&self) -> usize {
        self.stft.n_bins()
    }

    /// Table the stored codes were produced with, regenerated from its seed.
    pub fn permutation_table(&self) -> Option<Result<PermutationTable>> {
        self.codes
            .as_ref()
            .map(|c| generate_permutations(c.seed, c.l(), c.m(), self.dim()))
    }

    /// Hash every feature row with a seeded `(L, M)` table and keep the
    /// codes alongside the features.
    pub fn attach_codes(&mut self, seed: u64, l: usize, m: usize) -> Result<()> {
        let table = generate_permutations(seed, l, m, self.dim())?;
        let codes = hash_matrix(&self.features, &table)?;
        self.codes = Some(DictionaryCodes { seed, codes });
        Ok(())
    }

    pub fn set_codes(&mut self, codes: Option<DictionaryCodes>) -> Result<()> {
        if let Some(c) = &codes {
            if c.codes.len() != self.len() {
                return Err(Error::DimensionMismatch {
                    what: "code rows",
                    expected: self.len(),
                    got: c.codes.len(),
                });
            }
        }
        self.codes = codes;
        Ok(())
    }

    /// Packed code bytes per frame, when codes are present.
    pub fn code_bytes_per_frame(&self) -> Option<usize> {
        self.codes
            .as_ref()
            .map(|c| c.codes.layout().bytes_per_frame())
    }

    /// Bytes per frame of the `f32` feature rows.
    pub fn feature_bytes_per_frame(&self) -> usize {
        4 * self.dim()
    }
}

/// Analysis settings shared by dictionary building and separation.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontendConfig {
    pub stft: StftConfig,
    pub features: FeatureKind,
}

impl Default for FrontendConfig {
    fn default() -> Self {
        Self {
            stft: StftConfig::default(),
            features: FeatureKind::mel(40),
        }
    }
}

/// Spectrograms of one mixed training pair.
#[derive(Clone, Debug)]
pub struct PairAnalysis {
    pub mixture: ComplexSpectrogram,
    pub speech: ComplexSpectrogram,
    pub noise: ComplexSpectrogram,
}

/// Mix a pair and take the STFT of mixture, speech and scaled noise.
pub fn analyze_pair(spec: &MixSpec, config: &StftConfig) -> Result<(Mixture, PairAnalysis)> {
    let mix = mix_at_snr(spec)?;
    let analysis = PairAnalysis {
        mixture: stft(&mix.mixture, config)?,
        speech: stft(&spec.speech, config)?,
        noise: stft(&mix.scaled_noise, config)?,
    };
    Ok((mix, analysis))
}

/// Build `(H, Y)` from training pairs. Rows follow input order.
pub fn build_dictionary(
    pairs: &[MixSpec],
    config: &FrontendConfig,
) -> Result<SeparationDictionary> {
    let first = pairs.first().ok_or(Error::EmptyInput("training pairs"))?;
    let sample_rate = first.speech.sample_rate();
    for p in pairs {
        for rate in [p.speech.sample_rate(), p.noise.sample_rate()] {
            if rate != sample_rate {
                return Err(Error::SampleRateMismatch {
                    expected: sample_rate,
                    got: rate,
                });
            }
        }
    }
    config.stft.validate()?;
    let extractor = FeatureExtractor::new(&config.features, &config.stft, sample_rate)?;

    let parts = pairs
        .par_iter()
        .map(|pair| {
            let (_, a) = analyze_pair(pair, &config.stft)?;
            Ok((
                extractor.extract(&a.mixture)?,
                compute_ibm(&a.speech, &a.noise)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let (feats, masks): (Vec<_>, Vec<_>) = parts.into_iter().unzip();
    SeparationDictionary::new(
        sample_rate,
        config.stft,
        FeatureMatrix::concat(&feats)?,
        IbmMatrix::concat(&masks)?,
    )
}
