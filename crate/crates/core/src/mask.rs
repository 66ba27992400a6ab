//! Time-frequency masks: bit-packed ideal binary masks and real-valued
//! per-frame estimates.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::knn::NeighborSet;

/// `T x F` binary matrix, one bit per bin, rows padded to whole words.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IbmMatrix {
    rows: usize,
    bins: usize,
    words: Vec<u64>,
}

impl IbmMatrix {
    pub fn zeros(rows: usize, bins: usize) -> Self {
        Self {
            rows,
            bins,
            words: vec![0; rows * bins.div_ceil(64)],
        }
    }

    pub fn from_rows(rows: &[Vec<bool>]) -> Result<Self> {
        let bins = rows.first().map_or(0, Vec::len);
        let mut out = Self::zeros(rows.len(), bins);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != bins {
                return Err(Error::DimensionMismatch {
                    what: "mask row",
                    expected: bins,
                    got: row.len(),
                });
            }
            for (f, &v) in row.iter().enumerate() {
                out.set(t, f, v);
            }
        }
        Ok(out)
    }

    /// Wrap raw words; padding bits past `bins` in each row must be zero.
    pub fn from_words(rows: usize, bins: usize, words: Vec<u64>) -> Result<Self> {
        let wpr = bins.div_ceil(64);
        if words.len() != rows * wpr {
            return Err(Error::DimensionMismatch {
                what: "mask words",
                expected: rows * wpr,
                got: words.len(),
            });
        }
        if !bins.is_multiple_of(64) && wpr > 0 {
            let pad = !0u64 << (bins % 64);
            if words.chunks_exact(wpr).any(|row| row[wpr - 1] & pad != 0) {
                return Err(Error::InvalidParameter(
                    "nonzero padding bits in mask row".into(),
                ));
            }
        }
        Ok(Self { rows, bins, words })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn bins(&self) -> usize {
        self.bins
    }

    pub fn words_per_row(&self) -> usize {
        self.bins.div_ceil(64)
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn row_words(&self, t: usize) -> &[u64] {
        let w = self.words_per_row();
        &self.words[t * w..(t + 1) * w]
    }

    pub fn get(&self, t: usize, f: usize) -> bool {
        self.row_words(t)[f / 64] >> (f % 64) & 1 == 1
    }

    pub fn set(&mut self, t: usize, f: usize, value: bool) {
        let w = self.words_per_row();
        let word = &mut self.words[t * w + f / 64];
        if value {
            *word |= 1 << (f % 64);
        } else {
            *word &= !(1 << (f % 64));
        }
    }

    pub fn row(&self, t: usize) -> Vec<bool> {
        (0..self.bins).map(|f| self.get(t, f)).collect()
    }

    pub fn concat(parts: &[IbmMatrix]) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptyInput("masks"))?;
        let mut words = Vec::new();
        for p in parts {
            if p.bins != first.bins {
                return Err(Error::DimensionMismatch {
                    what: "mask bins",
                    expected: first.bins,
                    got: p.bins,
                });
            }
            words.extend_from_slice(&p.words);
        }
        Ok(Self {
            rows: parts.iter().map(|p| p.rows).sum(),
            bins: first.bins,
            words,
        })
    }
}

/// Per-frame soft mask with entries in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaskEstimate {
    values: Vec<f64>,
}

impl MaskEstimate {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidParameter(
                "mask values must lie in [0, 1]".into(),
            ));
        }
        Ok(Self { values })
    }

    pub fn ones(bins: usize) -> Self {
        Self {
            values: vec![1.0; bins],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Element-wise mean of several masks of equal length.
    pub fn average(masks: &[MaskEstimate]) -> Result<Self> {
        let first = masks.first().ok_or(Error::EmptyInput("masks to average"))?;
        if masks.len() == 1 {
            return Ok(first.clone());
        }
        let mut acc = vec![0.0; first.len()];
        for m in masks {
            if m.len() != acc.len() {
                return Err(Error::DimensionMismatch {
                    what: "mask length",
                    expected: acc.len(),
                    got: m.len(),
                });
            }
            for (a, v) in acc.iter_mut().zip(&m.values) {
                *a += v;
            }
        }
        let n = masks.len() as f64;
        Ok(Self {
            values: acc.into_iter().map(|a| (a / n).clamp(0.0, 1.0)).collect(),
        })
    }
}

/// Mean of the IBM rows of the neighbors. Entries are exact multiples of
/// `1 / K`.
pub fn estimate_mask(neighbors: &NeighborSet, ibm: &IbmMatrix) -> Result<MaskEstimate> {
    let k = neighbors.len();
    if k == 0 {
        return Err(Error::EmptyInput("neighbor set"));
    }
    let mut counts = vec![0u32; ibm.bins()];
    for &idx in neighbors.indices() {
        if idx >= ibm.rows() {
            return Err(Error::InvalidParameter(format!(
                "neighbor index {idx} outside dictionary of {} rows",
                ibm.rows()
            )));
        }
        for (w, &word) in ibm.row_words(idx).iter().enumerate() {
            let mut bits = word;
            while bits != 0 {
                let f = w * 64 + bits.trailing_zeros() as usize;
                counts[f] += 1;
                bits &= bits - 1;
            }
        }
    }
    Ok(MaskEstimate {
        values: counts.into_iter().map(|c| c as f64 / k as f64).collect(),
    })
}

/// Scale each complex coefficient by the real mask value.
pub fn apply_mask(mask: &MaskEstimate, frame: &[Complex64]) -> Result<Vec<Complex64>> {
    if mask.len() != frame.len() {
        return Err(Error::DimensionMismatch {
            what: "masked frame",
            expected: mask.len(),
            got: frame.len(),
        });
    }
    Ok(frame
        .iter()
        .zip(&mask.values)
        .map(|(c, &m)| c * m)
        .collect())
}
