//! End-to-end separation: features, optional hashing, neighbor search, mask
//! averaging and overlap-add resynthesis.

use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::audio::AudioBuffer;
use crate::dictionary::{compute_irm, SeparationDictionary};
use crate::error::{Error, Result};
use crate::features::FeatureExtractor;
use crate::knn::{knn_hamming, CosineIndex, NeighborSet};
use crate::mask::{apply_mask, estimate_mask, MaskEstimate};
use crate::stft::{istft, stft, ComplexSpectrogram, StftConfig};
use crate::wta::{generate_permutations, hash_matrix, HashCodes, PermutationTable};

/// Similarity used for the neighbor search.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SearchMode {
    /// Cosine similarity on the raw feature rows.
    Cosine,
    /// Hamming similarity on packed WTA codes.
    #[default]
    Hamming,
}

impl fmt::Display for SearchMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Cosine => "cosine",
            Self::Hamming => "hamming",
        })
    }
}

impl FromStr for SearchMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(Self::Cosine),
            "hamming" => Ok(Self::Hamming),
            other => Err(Error::InvalidParameter(format!(
                "unknown mode {other:?} (expected cosine or hamming)"
            ))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SeparatorParams {
    /// Neighbors averaged per frame.
    pub k: usize,
    /// WTA subsample size.
    pub m: usize,
    /// WTA code length.
    pub l: usize,
    /// Independent permutation tables whose masks are averaged.
    pub tables: usize,
    /// Seed of the first table; table `i` uses `seed + i` (wrapping).
    pub seed: u64,
    pub mode: SearchMode,
}

impl Default for SeparatorParams {
    fn default() -> Self {
        Self {
            k: 5,
            m: 6,
            l: 100,
            tables: 1,
            seed: 0,
            mode: SearchMode::Hamming,
        }
    }
}

impl SeparatorParams {
    pub fn cosine(k: usize) -> Self {
        Self {
            k,
            mode: SearchMode::Cosine,
            ..Self::default()
        }
    }

    pub fn table_seeds(&self) -> Vec<u64> {
        (0..self.tables as u64)
            .map(|i| self.seed.wrapping_add(i))
            .collect()
    }

    pub fn validate(&self, dict: &SeparationDictionary) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidParameter("K must be at least 1".into()));
        }
        if dict.len() < self.k {
            return Err(Error::DictionaryTooSmall {
                frames: dict.len(),
                k: self.k,
            });
        }
        if self.mode == SearchMode::Hamming {
            if self.tables == 0 {
                return Err(Error::InvalidParameter(
                    "at least one table is required".into(),
                ));
            }
            if self.l == 0 || self.m < 2 || self.m > dict.dim() {
                return Err(Error::InvalidParameter(format!(
                    "need L >= 1 and 2 <= M <= D (L = {}, M = {}, D = {})",
                    self.l,
                    self.m,
                    dict.dim()
                )));
            }
        }
        Ok(())
    }
}

/// Where the time went, and how much hashing happened.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SeparationReport {
    pub frames: usize,
    pub tables: usize,
    /// Query frames hashed, summed over tables. Zero in cosine mode.
    pub hashed_frames: usize,
    pub feature_time: Duration,
    pub hash_time: Duration,
    pub search_time: Duration,
    pub reconstruct_time: Duration,
}

#[derive(Clone, Debug)]
pub struct Separation {
    pub audio: AudioBuffer,
    pub report: SeparationReport,
}

enum Backend<'d> {
    Cosine(CosineIndex<'d>),
    Hamming(Vec<(PermutationTable, Cow<'d, HashCodes>)>),
}

/// A dictionary prepared for repeated separation with fixed parameters.
pub struct Separator<'d> {
    dict: &'d SeparationDictionary,
    k: usize,
    extractor: FeatureExtractor,
    backend: Backend<'d>,
}

impl<'d> Separator<'d> {
    pub fn new(dict: &'d SeparationDictionary, params: &SeparatorParams) -> Result<Self> {
        params.validate(dict)?;
        let backend = match params.mode {
            SearchMode::Cosine => Backend::Cosine(CosineIndex::new(dict.features())),
            SearchMode::Hamming => {
                let mut hashed = Vec::with_capacity(params.tables);
                for seed in params.table_seeds() {
                    let table = generate_permutations(seed, params.l, params.m, dict.dim())?;
                    let codes = match dict.codes() {
                        Some(c) if c.seed == seed && c.l() == params.l && c.m() == params.m => {
                            Cow::Borrowed(&c.codes)
                        }
                        _ => Cow::Owned(hash_matrix(dict.features(), &table)?),
                    };
                    hashed.push((table, codes));
                }
                Backend::Hamming(hashed)
            }
        };
        Ok(Self {
            dict,
            k: params.k,
            extractor: Self::extractor(dict)?,
            backend,
        })
    }

    /// Hamming-mode separator with explicitly supplied tables.
    pub fn with_tables(
        dict: &'d SeparationDictionary,
        k: usize,
        tables: Vec<PermutationTable>,
    ) -> Result<Self> {
        if tables.is_empty() {
            return Err(Error::InvalidParameter(
                "at least one table is required".into(),
            ));
        }
        if k == 0 || dict.len() < k {
            return Err(Error::DictionaryTooSmall {
                frames: dict.len(),
                k,
            });
        }
        let hashed = tables
            .into_iter()
            .map(|t| {
                let codes = hash_matrix(dict.features(), &t)?;
                Ok((t, Cow::Owned(codes)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            dict,
            k,
            extractor: Self::extractor(dict)?,
            backend: Backend::Hamming(hashed),
        })
    }

    fn extractor(dict: &SeparationDictionary) -> Result<FeatureExtractor> {
        FeatureExtractor::new(dict.feature_kind(), dict.stft_config(), dict.sample_rate())
    }

    pub fn dictionary(&self) -> &SeparationDictionary {
        self.dict
    }

    pub fn mode(&self) -> SearchMode {
        match self.backend {
            Backend::Cosine(_) => SearchMode::Cosine,
            Backend::Hamming(_) => SearchMode::Hamming,
        }
    }

    fn check_spectrogram(&self, spec: &ComplexSpectrogram) -> Result<()> {
        if spec.sample_rate() != self.dict.sample_rate() {
            return Err(Error::SampleRateMismatch {
                expected: self.dict.sample_rate(),
                got: spec.sample_rate(),
            });
        }
        if spec.config() != self.dict.stft_config() {
            return Err(Error::InvalidParameter(
                "spectrogram STFT settings differ from the dictionary's".into(),
            ));
        }
        Ok(())
    }

    /// Neighbor sets of every frame, one list per table (a single list in
    /// cosine mode).
    pub fn neighbors(
        &self,
        spec: &ComplexSpectrogram,
    ) -> Result<(Vec<Vec<NeighborSet>>, SeparationReport)> {
        self.check_spectrogram(spec)?;
        let mut report = SeparationReport {
            frames: spec.n_frames(),
            ..Default::default()
        };
        let clock = Instant::now();
        let feats = self.extractor.extract(spec)?;
        report.feature_time = clock.elapsed();

        let per_table = match &self.backend {
            Backend::Cosine(index) => {
                report.tables = 1;
                let clock = Instant::now();
                let sets = (0..feats.rows())
                    .into_par_iter()
                    .map(|t| index.search(feats.row(t), self.k))
                    .collect::<Result<Vec<_>>>()?;
                report.search_time = clock.elapsed();
                vec![sets]
            }
            Backend::Hamming(hashed) => {
                report.tables = hashed.len();
                let clock = Instant::now();
                let queries = hashed
                    .iter()
                    .map(|(table, _)| hash_matrix(&feats, table))
                    .collect::<Result<Vec<_>>>()?;
                report.hash_time = clock.elapsed();
                report.hashed_frames = queries.iter().map(HashCodes::len).sum();

                let clock = Instant::now();
                let sets = hashed
                    .iter()
                    .zip(&queries)
                    .map(|((_, dict_codes), q)| {
                        (0..q.len())
                            .into_par_iter()
                            .map(|t| knn_hamming(q.row(t), dict_codes, self.k))
                            .collect::<Result<Vec<_>>>()
                    })
                    .collect::<Result<Vec<_>>>()?;
                report.search_time = clock.elapsed();
                sets
            }
        };
        Ok((per_table, report))
    }

    /// Per-frame masks, averaged across tables in mask space.
    pub fn estimate_masks(
        &self,
        spec: &ComplexSpectrogram,
    ) -> Result<(Vec<MaskEstimate>, SeparationReport)> {
        let (per_table, mut report) = self.neighbors(spec)?;
        let clock = Instant::now();
        let ibm = self.dict.ibm();
        let masks = (0..spec.n_frames())
            .into_par_iter()
            .map(|t| {
                let masks = per_table
                    .iter()
                    .map(|sets| estimate_mask(&sets[t], ibm))
                    .collect::<Result<Vec<_>>>()?;
                MaskEstimate::average(&masks)
            })
            .collect::<Result<Vec<_>>>()?;
        report.search_time += clock.elapsed();
        Ok((masks, report))
    }

    /// Mask every frame of a mixture spectrogram.
    pub fn separate_spectrogram(
        &self,
        spec: &ComplexSpectrogram,
    ) -> Result<(ComplexSpectrogram, SeparationReport)> {
        let (masks, mut report) = self.estimate_masks(spec)?;
        let clock = Instant::now();
        let mut out = spec.clone();
        for (t, mask) in masks.iter().enumerate() {
            let masked = apply_mask(mask, spec.frame(t))?;
            out.set_frame(t, &masked)?;
        }
        report.reconstruct_time = clock.elapsed();
        Ok((out, report))
    }

    pub fn separate(&self, mixture: &AudioBuffer) -> Result<Separation> {
        if mixture.sample_rate() != self.dict.sample_rate() {
            return Err(Error::SampleRateMismatch {
                expected: self.dict.sample_rate(),
                got: mixture.sample_rate(),
            });
        }
        let clock = Instant::now();
        let spec = stft(mixture, self.dict.stft_config())?;
        let analysis = clock.elapsed();
        let (masked, mut report) = self.separate_spectrogram(&spec)?;
        let clock = Instant::now();
        let audio = istft(&masked);
        report.feature_time += analysis;
        report.reconstruct_time += clock.elapsed();
        Ok(Separation { audio, report })
    }
}

/// Separate one mixture with a freshly prepared [`Separator`].
pub fn separate(
    mixture: &AudioBuffer,
    dict: &SeparationDictionary,
    params: &SeparatorParams,
) -> Result<AudioBuffer> {
    Ok(Separator::new(dict, params)?.separate(mixture)?.audio)
}

/// Upper-bound reference: mask the mixture with the ideal ratio mask
/// computed from the true sources.
pub fn oracle_irm(
    mixture: &AudioBuffer,
    speech: &AudioBuffer,
    noise: &AudioBuffer,
    config: &StftConfig,
) -> Result<AudioBuffer> {
    let irm = compute_irm(&stft(speech, config)?, &stft(noise, config)?)?;
    Ok(istft(&irm.apply(&stft(mixture, config)?)?))
}
