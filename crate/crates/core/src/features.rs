//! Nonnegative feature matrices derived from spectrograms.

use crate::error::{Error, Result};
use crate::mel::{to_mel, MelFilterbank};
use crate::stft::{magnitude, ComplexSpectrogram, StftConfig};

/// What a feature row represents.
#[derive(Clone, Debug, PartialEq)]
pub enum FeatureKind {
    /// Linear STFT magnitudes, `D = F`.
    Magnitude,
    /// Linear-magnitude mel bands, `D = bands`.
    Mel(MelSpec),
}

/// Triangular HTK-scale mel filterbank parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct MelSpec {
    pub bands: usize,
    pub f_min: f64,
    /// Upper edge in Hz; `None` means the Nyquist frequency.
    pub f_max: Option<f64>,
}

impl Default for MelSpec {
    fn default() -> Self {
        Self {
            bands: 40,
            f_min: 0.0,
            f_max: None,
        }
    }
}

impl MelSpec {
    pub fn with_bands(bands: usize) -> Self {
        Self {
            bands,
            ..Self::default()
        }
    }

    /// Copy with `f_max` pinned to a concrete frequency.
    pub fn resolved(&self, sample_rate: u32) -> Self {
        Self {
            f_max: Some(self.f_max.unwrap_or(sample_rate as f64 / 2.0)),
            ..self.clone()
        }
    }
}

impl FeatureKind {
    pub fn mel(bands: usize) -> Self {
        Self::Mel(MelSpec::with_bands(bands))
    }

    pub fn is_mel(&self) -> bool {
        matches!(self, Self::Mel(_))
    }

    /// Feature dimensionality `D` under an STFT with `n_bins` bins.
    pub fn dim(&self, n_bins: usize) -> usize {
        match self {
            Self::Magnitude => n_bins,
            Self::Mel(spec) => spec.bands,
        }
    }
}

/// `T x D` nonnegative finite features, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    data: Vec<f32>,
    rows: usize,
    dim: usize,
    kind: FeatureKind,
}

impl FeatureMatrix {
    pub fn new(rows: usize, dim: usize, data: Vec<f32>, kind: FeatureKind) -> Result<Self> {
        if data.len() != rows * dim {
            return Err(Error::DimensionMismatch {
                what: "feature matrix",
                expected: rows * dim,
                got: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::NonFinite(
                "feature matrix (entries must be finite and >= 0)",
            ));
        }
        Ok(Self {
            data,
            rows,
            dim,
            kind,
        })
    }

    pub fn from_rows(rows: &[Vec<f32>], kind: FeatureKind) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch {
                what: "feature row",
                expected: dim,
                got: bad.len(),
            });
        }
        Self::new(rows.len(), dim, rows.concat(), kind)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &FeatureKind {
        &self.kind
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f32]> {
        // chunks_exact panics on a zero chunk size
        self.data.chunks_exact(self.dim.max(1)).take(self.rows)
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Row-wise concatenation. All parts must share `dim` and `kind`.
    pub fn concat(parts: &[FeatureMatrix]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyInput("feature matrices"))?;
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.data.len()).sum());
        for p in parts {
            if p.dim != first.dim {
                return Err(Error::DimensionMismatch {
                    what: "feature dimension",
                    expected: first.dim,
                    got: p.dim,
                });
            }
            if p.kind != first.kind {
                return Err(Error::InvalidParameter("mixed feature kinds".into()));
            }
            data.extend_from_slice(&p.data);
        }
        let rows = parts.iter().map(|p| p.rows).sum();
        Self::new(rows, first.dim, data, first.kind.clone())
    }
}

/// Turns spectrograms into features of one kind. Holds the mel filterbank
/// so repeated calls do not rebuild it.
#[derive(Clone, Debug)]
pub struct FeatureExtractor {
    kind: FeatureKind,
    filterbank: Option<MelFilterbank>,
}

impl FeatureExtractor {
    pub fn new(kind: &FeatureKind, config: &StftConfig, sample_rate: u32) -> Result<Self> {
        match kind {
            FeatureKind::Magnitude => Ok(Self {
                kind: FeatureKind::Magnitude,
                filterbank: None,
            }),
            FeatureKind::Mel(spec) => {
                let spec = spec.resolved(sample_rate);
                let fb = MelFilterbank::new(
                    spec.bands,
                    config.n_bins(),
                    sample_rate,
                    spec.f_min,
                    spec.f_max.expect("resolved"),
                )?;
                Ok(Self {
                    kind: FeatureKind::Mel(spec),
                    filterbank: Some(fb),
                })
            }
        }
    }

    /// The kind with any defaults resolved against the sample rate.
    pub fn kind(&self) -> &FeatureKind {
        &self.kind
    }

    pub fn dim(&self, n_bins: usize) -> usize {
        self.kind.dim(n_bins)
    }

    pub fn extract(&self, spec: &ComplexSpectrogram) -> Result<FeatureMatrix> {
        let mag = magnitude(spec);
        match &self.filterbank {
            None => Ok(mag),
            Some(fb) => {
                let mut mel = to_mel(&mag, fb)?;
                mel.kind = self.kind.clone();
                Ok(mel)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_negative_and_nan() {
        assert!(FeatureMatrix::new(1, 2, vec![1.0, -0.5], FeatureKind::Magnitude).is_err());
        assert!(FeatureMatrix::new(1, 2, vec![1.0, f32::NAN], FeatureKind::Magnitude).is_err());
        assert!(FeatureMatrix::new(1, 3, vec![1.0, 2.0], FeatureKind::Magnitude).is_err());
    }

    #[test]
    fn concat_keeps_row_order() {
        let a = FeatureMatrix::from_rows(&[vec![1.0, 2.0]], FeatureKind::Magnitude).unwrap();
        let b = FeatureMatrix::from_rows(&[vec![3.0, 4.0], vec![5.0, 6.0]], FeatureKind::Magnitude)
            .unwrap();
        let c = FeatureMatrix::concat(&[a, b]).unwrap();
        assert_eq!(c.rows(), 3);
        assert_eq!(c.row(2), &[5.0, 6.0]);
    }

    #[test]
    fn mel_spec_resolves_nyquist() {
        let spec = MelSpec::default().resolved(16000);
        assert_eq!(spec.f_max, Some(8000.0));
        assert_eq!(FeatureKind::Mel(spec).dim(513), 40);
    }
}
