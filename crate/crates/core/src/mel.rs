//! Triangular mel filterbanks on the HTK mel scale.

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMatrix, MelSpec};

pub fn hz_to_mel(hz: f64) -> f64 {
    2595.0 * (1.0 + hz / 700.0).log10()
}

pub fn mel_to_hz(mel: f64) -> f64 {
    700.0 * (10f64.powf(mel / 2595.0) - 1.0)
}

/// `bands x F` nonnegative weights. Each row has at least one positive
/// entry.
#[derive(Clone, Debug, PartialEq)]
pub struct MelFilterbank {
    weights: Vec<f64>,
    bands: usize,
    n_bins: usize,
    f_min: f64,
    f_max: f64,
}

impl MelFilterbank {
    /// Triangles with unit peaks, centers equally spaced in mel between
    /// `f_min` and `f_max`. Bin `k` sits at `k * sample_rate / (2 (n_bins - 1))`.
    pub fn new(
        bands: usize,
        n_bins: usize,
        sample_rate: u32,
        f_min: f64,
        f_max: f64,
    ) -> Result<Self> {
        let nyquist = sample_rate as f64 / 2.0;
        if bands == 0 || n_bins < 2 {
            return Err(Error::InvalidParameter(format!(
                "mel filterbank needs bands >= 1 and at least 2 bins (got {bands}, {n_bins})"
            )));
        }
        if !(0.0..nyquist).contains(&f_min) || f_max <= f_min || f_max > nyquist {
            return Err(Error::InvalidParameter(format!(
                "mel range must satisfy 0 <= f_min < f_max <= {nyquist}, got [{f_min}, {f_max}]"
            )));
        }
        let (mel_lo, mel_hi) = (hz_to_mel(f_min), hz_to_mel(f_max));
        let edges: Vec<f64> = (0..bands + 2)
            .map(|i| mel_to_hz(mel_lo + (mel_hi - mel_lo) * i as f64 / (bands + 1) as f64))
            .collect();
        let bin_hz = nyquist / (n_bins - 1) as f64;

        let mut weights = vec![0.0; bands * n_bins];
        for b in 0..bands {
            let (lo, center, hi) = (edges[b], edges[b + 1], edges[b + 2]);
            let row = &mut weights[b * n_bins..(b + 1) * n_bins];
            for (k, w) in row.iter_mut().enumerate() {
                let f = k as f64 * bin_hz;
                let rise = (f - lo) / (center - lo);
                let fall = (hi - f) / (hi - center);
                *w = rise.min(fall).max(0.0);
            }
            if row.iter().all(|&w| w == 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "mel band {b} ({lo:.1}-{hi:.1} Hz) covers no frequency bin; use fewer bands or a longer window"
                )));
            }
        }
        Ok(Self {
            weights,
            bands,
            n_bins,
            f_min,
            f_max,
        })
    }

    pub fn from_spec(spec: &MelSpec, n_bins: usize, sample_rate: u32) -> Result<Self> {
        let spec = spec.resolved(sample_rate);
        Self::new(
            spec.bands,
            n_bins,
            sample_rate,
            spec.f_min,
            spec.f_max.expect("resolved"),
        )
    }

    /// Arbitrary weights; every row must be nonnegative with a positive entry.
    pub fn from_weights(bands: usize, n_bins: usize, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != bands * n_bins {
            return Err(Error::DimensionMismatch {
                what: "filterbank weights",
                expected: bands * n_bins,
                got: weights.len(),
            });
        }
        for row in weights.chunks_exact(n_bins.max(1)) {
            if row.iter().any(|w| !w.is_finite() || *w < 0.0) || !row.iter().any(|&w| w > 0.0) {
                return Err(Error::InvalidParameter(
                    "filterbank rows must be nonnegative with a positive entry".into(),
                ));
            }
        }
        Ok(Self {
            weights,
            bands,
            n_bins,
            f_min: f64::NAN,
            f_max: f64::NAN,
        })
    }

    pub fn bands(&self) -> usize {
        self.bands
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn f_min(&self) -> f64 {
        self.f_min
    }

    pub fn f_max(&self) -> f64 {
        self.f_max
    }

    pub fn band(&self, b: usize) -> &[f64] {
        &self.weights[b * self.n_bins..(b + 1) * self.n_bins]
    }
}

/// Project magnitude rows onto the filterbank: `mel = mag * fb^T`.
pub fn to_mel(mag: &FeatureMatrix, fb: &MelFilterbank) -> Result<FeatureMatrix> {
    if mag.kind() != &FeatureKind::Magnitude {
        return Err(Error::InvalidParameter(
            "mel projection expects STFT magnitude features".into(),
        ));
    }
    if mag.dim() != fb.n_bins {
        return Err(Error::DimensionMismatch {
            what: "filterbank bins",
            expected: fb.n_bins,
            got: mag.dim(),
        });
    }
    let mut data = Vec::with_capacity(mag.rows() * fb.bands);
    for row in mag.iter_rows() {
        for b in 0..fb.bands {
            let acc: f64 = fb.band(b).iter().zip(row).map(|(w, &x)| w * x as f64).sum();
            data.push(acc as f32);
        }
    }
    let kind = FeatureKind::Mel(MelSpec {
        bands: fb.bands,
        f_min: fb.f_min,
        f_max: Some(fb.f_max),
    });
    FeatureMatrix::new(mag.rows(), fb.bands, data, kind)
}
