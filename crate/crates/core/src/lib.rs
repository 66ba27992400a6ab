//! Iteration-free single-channel source separation with Winner-Take-All
//! (WTA) hash codes.
//!
//! A dictionary pairs the feature vectors of training mixture frames with
//! the ideal binary masks of those frames. To denoise a new mixture, each of
//! its frames is compared against every dictionary frame, the `K` most
//! similar frames vote, and the mean of their binary masks becomes a soft
//! mask for the frame's complex spectrum. Comparing frames through WTA codes
//! turns the search into XOR and popcount over a few machine words per
//! frame.
//!
//! ```
//! use wtasep::{synth, build_dictionary, FrontendConfig, MixSpec, Separator, SeparatorParams};
//!
//! let sr = 16_000;
//! let pairs: Vec<MixSpec> = (0..4)
//!     .map(|i| MixSpec::new(
//!         synth::speech(i, sr as usize, sr, &Default::default()),
//!         synth::noise(100 + i, sr as usize, sr, &Default::default()),
//!     ))
//!     .collect();
//! let dict = build_dictionary(&pairs, &FrontendConfig::default())?;
//!
//! let separator = Separator::new(&dict, &SeparatorParams::default())?;
//! let noisy = wtasep::mix_at_snr(&MixSpec::new(
//!     synth::speech(7, sr as usize, sr, &Default::default()),
//!     synth::noise(107, sr as usize, sr, &Default::default()),
//! ))?;
//! let enhanced = separator.separate(&noisy.mixture)?;
//! assert_eq!(enhanced.audio.len(), noisy.mixture.len());
//! # Ok::<(), wtasep::Error>(())
//! ```

pub mod affinity;
pub mod audio;
pub mod dictionary;
mod error;
pub mod eval;
pub mod features;
pub mod knn;
pub mod mask;
pub mod mel;
pub mod rng;
pub mod separator;
pub mod stft;
pub mod synth;
pub mod wta;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/frontend.md")]
    mod frontend {}
    #[doc = include_str!("../../../book/src/wta-hashing.md")]
    mod wta_hashing {}
    #[doc = include_str!("../../../book/src/separation.md")]
    mod separation {}
    #[doc = include_str!("../../../book/src/dictionary.md")]
    mod dictionary {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

pub use audio::{read_wav, write_wav, AudioBuffer, WavEncoding};
pub use dictionary::{
    build_dictionary, compute_ibm, compute_irm, mix_at_snr, FormatError, FrontendConfig, MixSpec,
    SeparationDictionary,
};
pub use error::{Error, Result};
pub use eval::{bss_eval, sdr_improvement, BssScores};
pub use features::{FeatureKind, FeatureMatrix, MelSpec};
pub use knn::{cosine_similarity, knn_cosine, knn_hamming, NeighborSet};
pub use mask::{apply_mask, estimate_mask, IbmMatrix, MaskEstimate};
pub use separator::{separate, SearchMode, Separator, SeparatorParams};
pub use stft::{istft, magnitude, stft, Complex64, ComplexSpectrogram, StftConfig};
pub use wta::{
    generate_permutations, hamming_similarity, hash_matrix, hash_vector, HashCodes,
    PermutationTable,
};
